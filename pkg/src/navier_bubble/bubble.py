"""Standard bubble profile and its projection onto the unit ball.

The bubble with center ``x`` and rate ``lam`` is

    delta(y) = c0 * lam^((n-4)/2) / (1 + lam^2 |y-x|^2)^((n-4)/2),
    c0 = [(n-4)(n-2)n(n+2)]^((n-4)/8),

the entire positive solution of Delta^2 u = u^((n+4)/(n-4)) on R^n that
concentrates at x as lam grows.  This module provides the profile, its
analytic rate- and center-derivatives, its Laplacian, and the projected
profile P_delta = delta - phi where the correction phi is the biharmonic
field matching delta and Delta delta on the boundary sphere (supplied by
:mod:`navier_bubble.ball_green`).

All evaluators accept either a single point of shape (n,) or a batch of
points of shape (m, n) and are pure; ``Bubble`` values are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "Dimension",
    "Bubble",
    "ProjectedBubble",
    "StencilUnderflowError",
    "eval_delta",
    "eval_delta_derivs",
    "eval_proj_delta",
    "verify_entire_equation",
]

# switch to log-space evaluation beyond this value of lam*|y-x| to avoid
# overflow of (lam*s)^2 intermediates in long scans
_LOG_SPACE_THRESHOLD = 1e6


class StencilUnderflowError(ValueError):
    """Finite-difference step too small relative to machine precision."""


@dataclass(frozen=True)
class Dimension:
    """Space dimension n >= 5 with the derived critical exponents.

    The critical exponent is p = (n+4)/(n-4); the conjugate power
    p + 1 = 2n/(n-4) is kept as an exact rational so that the identity
    (p+1)(n-4) = 2n holds without rounding.
    """

    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 5:
            raise ValueError(f"dimension must be an integer >= 5, got {self.n!r}")

    @property
    def p_exact(self) -> Fraction:
        return Fraction(self.n + 4, self.n - 4)

    @property
    def p_plus_1_exact(self) -> Fraction:
        return Fraction(2 * self.n, self.n - 4)

    @property
    def p(self) -> float:
        return float(self.p_exact)

    @property
    def p_plus_1(self) -> float:
        return float(self.p_plus_1_exact)

    @property
    def mu(self) -> float:
        """Decay exponent (n-4)/2 of the bubble profile."""
        return 0.5 * (self.n - 4)

    @property
    def c0(self) -> float:
        n = self.n
        return float((n - 4) * (n - 2) * n * (n + 2)) ** ((n - 4) / 8.0)

    @property
    def k_envelope(self) -> int:
        """Largest integer k with k <= (n-4)/2 (0 for n = 5, meaning the
        derivative sums in the error envelopes are empty)."""
        return (self.n - 4) // 2


@dataclass(frozen=True, eq=False)
class Bubble:
    """Concentration profile delta_{x,lam} on R^n."""

    dim: Dimension
    center: np.ndarray
    rate: float

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if center.shape != (self.dim.n,):
            raise ValueError(f"center must have shape ({self.dim.n},), got {center.shape}")
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "rate", float(self.rate))
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    # -- geometry helpers -------------------------------------------------
    def _sq_dist(self, y):
        y = np.asarray(y, dtype=float)
        d = y - self.center
        return np.sum(d * d, axis=-1), d

    # -- profile -----------------------------------------------------------
    def log_value(self, y):
        """log(delta(y)), stable for arbitrarily large lam*|y-x|."""
        s2, _ = self._sq_dist(y)
        lam, mu = self.rate, self.dim.mu
        ls2 = (lam * lam) * s2
        big = ls2 > _LOG_SPACE_THRESHOLD**2
        out = np.where(
            big,
            # log(1 + (lam s)^2) = 2 log(lam s) + log1p(1/(lam s)^2)
            2.0 * np.log(np.maximum(lam * np.sqrt(s2), 1.0)) + np.log1p(1.0 / np.maximum(ls2, 1.0)),
            np.log1p(np.minimum(ls2, _LOG_SPACE_THRESHOLD**2)),
        )
        return np.log(self.dim.c0) + mu * np.log(lam) - mu * out

    def value(self, y):
        """delta(y); strictly positive and radially decreasing about the center."""
        return np.exp(self.log_value(y))

    def value_radial(self, s):
        """delta as a function of the distance s = |y - x| from the center."""
        s = np.asarray(s, dtype=float)
        lam, mu = self.rate, self.dim.mu
        return self.dim.c0 * lam**mu * np.exp(-mu * np.log1p((lam * s) ** 2))

    def d_rate(self, y):
        """Analytic partial derivative of delta with respect to the rate."""
        s2, _ = self._sq_dist(y)
        lam, mu = self.rate, self.dim.mu
        ls2 = (lam * lam) * s2
        base = self.dim.c0 * mu * lam ** (mu - 1.0)
        return base * (1.0 - ls2) * np.exp(-(mu + 1.0) * np.log1p(ls2))

    def d_center(self, y):
        """Analytic gradient of delta with respect to the center coordinates."""
        s2, d = self._sq_dist(y)
        lam, mu, n = self.rate, self.dim.mu, self.dim.n
        ls2 = (lam * lam) * s2
        fac = (n - 4) * self.dim.c0 * lam ** (mu + 2.0) * np.exp(-(mu + 1.0) * np.log1p(ls2))
        return fac[..., None] * d if d.ndim > 1 else fac * d

    def laplacian_radial(self, s):
        """Delta delta as a function of the distance from the center."""
        s = np.asarray(s, dtype=float)
        lam, mu, n = self.rate, self.dim.mu, self.dim.n
        ls2 = (lam * s) ** 2
        pref = -(n - 4) * self.dim.c0 * lam ** (mu + 2.0)
        return pref * (n + 2.0 * ls2) * np.exp(-(mu + 2.0) * np.log1p(ls2))

    def laplacian(self, y):
        s2, _ = self._sq_dist(y)
        return self.laplacian_radial(np.sqrt(s2))

    def d_rate_laplacian_radial(self, s):
        """d/d(rate) of Delta delta, as a radial profile."""
        s = np.asarray(s, dtype=float)
        lam, mu, n = self.rate, self.dim.mu, self.dim.n
        ls2 = (lam * s) ** 2
        one = 1.0 + ls2
        bracket = (mu + 2.0) * (n + 2.0 * ls2) * one + 4.0 * ls2 * one - 2.0 * (mu + 2.0) * ls2 * (n + 2.0 * ls2)
        return -(n - 4) * self.dim.c0 * lam ** (mu + 1.0) * bracket * np.exp(-(mu + 3.0) * np.log1p(ls2))

    def nonlinearity_radial(self, s):
        """delta^p as a radial profile (the right-hand side of the entire equation)."""
        s = np.asarray(s, dtype=float)
        lam, n = self.rate, self.dim.n
        logd = (
            np.log(self.dim.c0) + self.dim.mu * np.log(lam) - self.dim.mu * np.log1p((lam * s) ** 2)
        )
        return np.exp(self.dim.p * logd)

    def peak_value(self) -> float:
        return self.dim.c0 * self.rate**self.dim.mu


@dataclass(frozen=True, eq=False)
class ProjectedBubble:
    """Bubble corrected to satisfy the Navier conditions on the unit ball.

    The correction must come from a ball Green's-function solve; it carries
    the biharmonic field phi with boundary traces phi = delta and
    Delta phi = Delta delta on the sphere, so P_delta = delta - phi vanishes
    there together with its Laplacian.
    """

    bubble: Bubble
    correction: "object" = field(default=None)  # CorrectionField, set by ball_green

    def value(self, y):
        if self.correction is None:
            raise ValueError("correction field not initialized; build it via BallGreen.correction_field")
        return self.bubble.value(y) - self.correction.phi(y)


# ---------------------------------------------------------------------------
# module-level operation surface
# ---------------------------------------------------------------------------

def eval_delta(b: Bubble, y) -> float | np.ndarray:
    """Value of the bubble profile at y."""
    return b.value(y)


def eval_delta_derivs(b: Bubble, y):
    """(d/d rate, d/d center) of the bubble at y, both analytic."""
    return b.d_rate(y), b.d_center(y)


def eval_proj_delta(pb: ProjectedBubble, y):
    """Value of the projected bubble delta - phi at y (y in the closed ball)."""
    return pb.value(y)


@lru_cache(maxsize=32)
def _biharmonic_stencil(n: int):
    """Offsets and coefficients of the fourth-order Laplacian stencil composed
    with itself.  Offsets are in units of the step h; coefficients carry a
    1/h^4 scaling applied by the caller."""
    # one-dimensional fourth-order second-derivative weights at offsets -2..2
    w = {-2: -1.0 / 12.0, -1: 16.0 / 12.0, 0: -30.0 / 12.0, 1: 16.0 / 12.0, 2: -1.0 / 12.0}
    lap = {}
    for axis in range(n):
        for off, c in w.items():
            key = tuple(off if a == axis else 0 for a in range(n))
            lap[key] = lap.get(key, 0.0) + c
    # compose: (L o L)[f](0) = sum_{a,b} lap[a] lap[b] f(a+b)
    comp = {}
    for ka, ca in lap.items():
        for kb, cb in lap.items():
            key = tuple(ka[i] + kb[i] for i in range(n))
            comp[key] = comp.get(key, 0.0) + ca * cb
    offsets = np.array(sorted(comp.keys()), dtype=float)
    coeffs = np.array([comp[tuple(int(v) for v in o)] for o in offsets])
    keep = np.abs(coeffs) > 1e-14
    return offsets[keep], coeffs[keep]


def verify_entire_equation(b: Bubble, sample_points, h: float | None = None) -> float:
    """Max over the samples of |Delta^2 delta - delta^p| with Delta^2 taken as
    the fourth-order Laplacian stencil applied twice to :func:`eval_delta`.

    The default step h = 1e-2 / rate keeps the truncation error of the nested
    stencil at the same relative level across rates.  Raises
    :class:`StencilUnderflowError` once the step is too small for double
    precision (rate beyond ~1e7 with the default step).
    """
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if h is None:
        h = 1e-2 / b.rate
    if h < 1e-9:
        raise StencilUnderflowError(
            f"step {h:.3e} underflows the nested stencil; reduce the rate or supply h"
        )
    offsets, coeffs = _biharmonic_stencil(b.dim.n)
    # (m, K, n) evaluation cloud
    cloud = pts[:, None, :] + h * offsets[None, :, :]
    vals = b.value(cloud.reshape(-1, b.dim.n)).reshape(pts.shape[0], -1)
    bilap = vals @ coeffs / h**4
    rhs = np.exp(b.dim.p * b.log_value(pts))
    return float(np.max(np.abs(bilap - rhs)))
