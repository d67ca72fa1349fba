"""Placeholder; real implementation pending."""
main = None
