"""Numerical toolkit for bubble concentration in the critical biharmonic
problem Delta^2 u = K u^((n+4)/(n-4)-eps) with Navier conditions (u = Delta u = 0)
on the unit ball.

The library evaluates the standard entire-space bubble profile and its
projection onto the ball, the universal constants of the problem, the
Green's function regular part H of the bilaplacian, closed-form asymptotic
expansions of the Rayleigh-type energy and its rate gradient together with
their direct-quadrature counterparts, the reduced scalar balance fixing the
concentration rate, existence/nonexistence sign criteria, and a radial
collocation solver that continues the solution branch toward the critical
exponent.
"""

from .bubble import (
    Bubble,
    Dimension,
    ProjectedBubble,
    StencilUnderflowError,
    eval_delta,
    eval_delta_derivs,
    eval_proj_delta,
    verify_entire_equation,
)
from .constants import (
    QuadratureNonconvergenceError,
    UniversalConstants,
    closed_form_constants,
    quadrature_constants,
    sobolev_quotient_check,
)
from .quadrature import IntegralResult, QuadratureSpec, integrate_ball, integrate_radial, integrate_zonal
from .ball_green import BallGreen, CorrectionField
from .kfield import KField, KFieldParseError, KPositivityError, parse_k_descriptor
from .expansions import (
    ExpansionReport,
    FunctionalContext,
    appendix_integral_checks,
    energy_direct,
    energy_expansion,
    grad_lambda_check,
    l_eps_expansion_check,
    v_pairing_bound_check,
)
from .reduced import (
    CriterionVerdict,
    LandscapeResult,
    NoRootInBracketError,
    RateSolution,
    ReducedState,
    criteria,
    landscape_scan,
    solve_E_lambda,
    t0,
)
from .galerkin import GalerkinField, IndefiniteFormError, galerkin_v
from .radial_pde import (
    BranchPoint,
    NewtonDivergenceError,
    NoClearPeakError,
    RadialSolution,
    continue_branch,
    extract_bubble,
    solve_bvp,
)

__version__ = "0.1.0"

__all__ = [
    "Bubble",
    "Dimension",
    "ProjectedBubble",
    "StencilUnderflowError",
    "eval_delta",
    "eval_delta_derivs",
    "eval_proj_delta",
    "verify_entire_equation",
    "UniversalConstants",
    "QuadratureNonconvergenceError",
    "closed_form_constants",
    "quadrature_constants",
    "sobolev_quotient_check",
    "QuadratureSpec",
    "IntegralResult",
    "integrate_ball",
    "integrate_radial",
    "integrate_zonal",
    "BallGreen",
    "CorrectionField",
    "KField",
    "KFieldParseError",
    "KPositivityError",
    "parse_k_descriptor",
    "FunctionalContext",
    "ExpansionReport",
    "energy_direct",
    "energy_expansion",
    "l_eps_expansion_check",
    "grad_lambda_check",
    "appendix_integral_checks",
    "v_pairing_bound_check",
    "ReducedState",
    "RateSolution",
    "CriterionVerdict",
    "LandscapeResult",
    "NoRootInBracketError",
    "t0",
    "solve_E_lambda",
    "landscape_scan",
    "criteria",
    "GalerkinField",
    "IndefiniteFormError",
    "galerkin_v",
    "RadialSolution",
    "BranchPoint",
    "NewtonDivergenceError",
    "NoClearPeakError",
    "solve_bvp",
    "continue_branch",
    "extract_bubble",
]
