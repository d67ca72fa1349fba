"""Placeholder; real implementation pending."""
BranchPoint = None
NewtonDivergenceError = None
NoClearPeakError = None
RadialSolution = None
continue_branch = None
extract_bubble = None
solve_bvp = None
