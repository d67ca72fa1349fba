"""Placeholder; real implementation pending."""
GalerkinField = None
IndefiniteFormError = None
galerkin_v = None
