"""Placeholder; real implementation pending."""
CriterionVerdict = None
LandscapeResult = None
NoRootInBracketError = None
RateSolution = None
ReducedState = None
criteria = None
landscape_scan = None
solve_E_lambda = None
t0 = None
