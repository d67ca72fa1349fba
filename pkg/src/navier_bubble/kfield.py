"""Smooth positive coefficient fields K on the closed unit ball.

Four analytic radial families cover the verification campaigns:

    const:c        K = c
    quad:a,b       K = a + b |y|^2
    gauss:A,s      K = 1 + A exp(-|y|^2 / s^2)
    poly:c0,c1,... K = sum_k c_k |y|^(2k)

Each family carries closed-form gradient and Laplacian plus radial
derivative magnitudes of every order (used as envelope sizes in remainder
fits).  Positivity on the closed ball is enforced at parse time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["KField", "KFieldParseError", "KPositivityError", "parse_k_descriptor", "k_constant", "k_quadratic", "k_gaussian", "k_polynomial"]


class KFieldParseError(ValueError):
    """Descriptor string does not match the grammar; carries the position."""

    def __init__(self, message: str, position: int = 0):
        super().__init__(message)
        self.position = position


class KPositivityError(ValueError):
    """The requested field is not strictly positive on the closed ball."""


@dataclass(frozen=True)
class KField:
    """Radial coefficient field with analytic derivatives.

    ``profile(r)`` evaluates K on |y| = r; ``profile_deriv(r, j)`` is the
    j-th radial derivative, used both for derivative-magnitude envelopes and
    finite-difference cross-checks.  ``laplacian(y)`` is exact per family.
    """

    descriptor: str
    tag: str
    profile: Callable
    profile_deriv: Callable
    laplacian_profile: Callable

    def __call__(self, y):
        return self.value(y)

    def value(self, y):
        y = np.asarray(y, dtype=float)
        r = np.linalg.norm(np.atleast_2d(y), axis=-1) if y.ndim > 1 else np.linalg.norm(y)
        return self.profile(r)

    def value_radial(self, r):
        return self.profile(np.asarray(r, dtype=float))

    def gradient(self, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        r = np.linalg.norm(y, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            fac = np.where(r > 1e-14, self.profile_deriv(r, 1) / np.where(r > 1e-14, r, 1.0), 0.0)
        out = fac[:, None] * y
        return out[0] if out.shape[0] == 1 else out

    def laplacian(self, y):
        y = np.asarray(y, dtype=float)
        r = np.linalg.norm(np.atleast_2d(y), axis=-1) if y.ndim > 1 else np.linalg.norm(y)
        return self.laplacian_profile(r)

    def laplacian_radial(self, r):
        return self.laplacian_profile(np.asarray(r, dtype=float))

    def deriv_norm(self, y, j: int) -> float:
        """Magnitude proxy |D^j K| at y: the j-th radial profile derivative.

        Remainder envelopes only need the size of the derivative tensor, and
        for these radial families the radial derivative sets that scale.
        """
        r = float(np.linalg.norm(np.asarray(y, dtype=float)))
        return float(abs(self.profile_deriv(r, j)))

    @property
    def is_constant(self) -> bool:
        return self.tag == "constant"


def _check_positive(profile, descriptor: str):
    r = np.linspace(0.0, 1.0, 4001)
    vals = profile(r)
    if np.min(vals) <= 0.0:
        bad = float(r[int(np.argmin(vals))])
        raise KPositivityError(
            f"field {descriptor!r} is not strictly positive on the closed ball "
            f"(minimum {np.min(vals):.6g} near |y| = {bad:.3f})"
        )


def k_constant(c: float, n: int) -> KField:
    if c <= 0:
        raise KPositivityError(f"constant field must be positive, got {c}")

    def deriv(r, j):
        r = np.asarray(r, dtype=float)
        return c * np.ones_like(r) if j == 0 else np.zeros_like(r)

    return KField(
        descriptor=f"const:{c:g}",
        tag="constant",
        profile=lambda r: c * np.ones_like(np.asarray(r, dtype=float)),
        profile_deriv=deriv,
        laplacian_profile=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
    )


def k_quadratic(a: float, b: float, n: int) -> KField:
    desc = f"quad:{a:g},{b:g}"

    def profile(r):
        r = np.asarray(r, dtype=float)
        return a + b * r * r

    _check_positive(profile, desc)

    def deriv(r, j):
        r = np.asarray(r, dtype=float)
        if j == 0:
            return profile(r)
        if j == 1:
            return 2.0 * b * r
        if j == 2:
            return 2.0 * b * np.ones_like(r)
        return np.zeros_like(r)

    return KField(
        descriptor=desc,
        tag="quadratic-bump",
        profile=profile,
        profile_deriv=deriv,
        laplacian_profile=lambda r: 2.0 * n * b * np.ones_like(np.asarray(r, dtype=float)),
    )


def k_gaussian(amp: float, width: float, n: int) -> KField:
    if width <= 0:
        raise KFieldParseError(f"gaussian width must be positive, got {width}")
    desc = f"gauss:{amp:g},{width:g}"

    def profile(r):
        r = np.asarray(r, dtype=float)
        return 1.0 + amp * np.exp(-(r * r) / width**2)

    _check_positive(profile, desc)

    # d^j/dr^j exp(-r^2/w^2) = (-1/w)^j H_j(r/w) exp(-r^2/w^2), physicists' H_j
    def deriv(r, j):
        r = np.asarray(r, dtype=float)
        if j == 0:
            return profile(r)
        coeffs = np.zeros(j + 1)
        coeffs[j] = 1.0
        h = np.polynomial.hermite.hermval(r / width, coeffs)
        return amp * (-1.0 / width) ** j * h * np.exp(-(r * r) / width**2)

    def lap(r):
        r = np.asarray(r, dtype=float)
        return amp * np.exp(-(r * r) / width**2) * (4.0 * r * r / width**4 - 2.0 * n / width**2)

    return KField(descriptor=desc, tag="gaussian", profile=profile, profile_deriv=deriv, laplacian_profile=lap)


def k_polynomial(coeffs, n: int) -> KField:
    coeffs = [float(c) for c in coeffs]
    desc = "poly:" + ",".join(f"{c:g}" for c in coeffs)

    def profile(r):
        r2 = np.asarray(r, dtype=float) ** 2
        out = np.zeros_like(r2)
        for k in reversed(range(len(coeffs))):
            out = out * r2 + coeffs[k]
        return out

    _check_positive(profile, desc)

    # polynomial in r: sum_k c_k r^(2k); differentiate term by term
    def deriv(r, j):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for k, c in enumerate(coeffs):
            e = 2 * k
            if e >= j:
                fac = 1.0
                for i in range(j):
                    fac *= e - i
                out += c * fac * r ** (e - j)
        return out

    def lap(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for k, c in enumerate(coeffs):
            if k >= 1:
                out += c * 2 * k * (2 * k + n - 2) * r ** (2 * k - 2)
        return out

    return KField(descriptor=desc, tag="user-polynomial", profile=profile, profile_deriv=deriv, laplacian_profile=lap)


def parse_k_descriptor(s: str, n: int) -> KField:
    """Parse a field descriptor (grammar in the module docstring).

    Raises :class:`KFieldParseError` with the offending position, or
    :class:`KPositivityError` when the parsed field touches zero on the ball.
    """
    if not isinstance(s, str) or ":" not in s:
        raise KFieldParseError(f"descriptor {s!r} must look like 'family:args'", position=0)
    family, _, args = s.partition(":")
    family = family.strip().lower()
    try:
        values = [float(tok) for tok in args.split(",") if tok.strip() != ""]
    except ValueError as exc:
        bad = str(exc).split(":")[-1].strip()
        raise KFieldParseError(f"bad numeric literal {bad} in {s!r}", position=len(family) + 1) from None
    if family == "const":
        if len(values) != 1:
            raise KFieldParseError("const takes exactly one value", position=len(family) + 1)
        return k_constant(values[0], n)
    if family == "quad":
        if len(values) != 2:
            raise KFieldParseError("quad takes exactly two values a,b", position=len(family) + 1)
        return k_quadratic(values[0], values[1], n)
    if family == "gauss":
        if len(values) != 2:
            raise KFieldParseError("gauss takes exactly two values A,s", position=len(family) + 1)
        return k_gaussian(values[0], values[1], n)
    if family == "poly":
        if not values:
            raise KFieldParseError("poly needs at least one coefficient", position=len(family) + 1)
        return k_polynomial(values, n)
    raise KFieldParseError(f"unknown family {family!r} (const|quad|gauss|poly)", position=0)
