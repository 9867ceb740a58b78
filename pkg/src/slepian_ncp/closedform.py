"""Exact non-crossing formulas for constant and linear boundaries.

For the Slepian process S on [0, 1]:

* constant boundary a:
    P(S <= a) = Phi(a)^2 - a phi(a) Phi(a) - phi(a)^2
* linear boundary a + b t (b != 0):
    P(S <= a + bt) = Phi(a+b) Phi(a) - (1/b) phi(a) Phi(a+b)
                     + (sqrt(2 pi)/b) phi(a) phi(b) Phi(a) e^{-a b}
* Brownian motion below a + b t on [0, T] (the half-line formula used by the
  per-segment machinery):
    P = Phi(b sqrt(T) + a/sqrt(T)) - e^{-2ab} Phi(b sqrt(T) - a/sqrt(T)),
  and 0 when a <= 0.

The linear formula contains two 1/b terms whose difference loses roughly
|log10 b| digits as b -> 0, so below ``B_SWITCH`` it is replaced by a
second-order expansion about the constant-boundary value (the b -> 0 limit
of the exact expression):

    p(a, b) = p(a, 0) + b c1(a) + b^2 c2(a) + O(b^3)
    c1(a) = phi(a) [ (a^2 + 1) Phi(a) + a phi(a) ] / 2
    c2(a) = -phi(a) [ a^3 Phi(a) + (a^2 - 1) phi(a) ] / 6

obtained by symbolic differentiation of the exact expression and validated
against extended-precision evaluation near the switch point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .normmath import SQRT_2PI, Phi, log_Phi, log_mills_terms, phi

#: Slope below which linear_ncp switches to the Taylor continuation.
B_SWITCH = 1e-4

#: Raw values may exit [0, 1] by at most this much before we refuse to clamp.
CLAMP_SLACK = 1e-12


class InternalConsistencyError(RuntimeError):
    """A closed-form expression left [0, 1] by more than cancellation noise."""


@dataclass(frozen=True)
class ClosedFormResult:
    """Probability plus the stability branch that produced it."""

    p: float
    branch: str  # "generic" | "small_slope_series" | "tail_clamped"


def _clamp(p: float):
    """Clamp cancellation noise into [0, 1]; reject anything larger."""
    if p < -CLAMP_SLACK or p > 1.0 + CLAMP_SLACK:
        raise InternalConsistencyError(
            f"closed-form value {p!r} outside [0, 1] by more than {CLAMP_SLACK:g}"
        )
    if p < 0.0:
        return 0.0, True
    if p > 1.0:
        return 1.0, True
    return p, False


def constant_ncp(a: float) -> ClosedFormResult:
    """P(S(t) <= a on [0, 1]) for a constant boundary; monotone in a."""
    a = float(a)
    if not math.isfinite(a):
        raise ValueError(f"a must be finite, got {a}")
    pa = phi(a)
    Pa = Phi(a)
    raw = Pa * Pa - a * pa * Pa - pa * pa
    p, clamped = _clamp(raw)
    return ClosedFormResult(p=p, branch="tail_clamped" if clamped else "generic")


def _series_coeffs(a: float):
    pa = phi(a)
    Pa = Phi(a)
    c1 = 0.5 * pa * ((a * a + 1.0) * Pa + a * pa)
    c2 = -(pa / 6.0) * (a ** 3 * Pa + (a * a - 1.0) * pa)
    return c1, c2


def linear_ncp(a: float, b: float) -> ClosedFormResult:
    """P(S(t) <= a + b t on [0, 1]); continuous through b = 0."""
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"a, b must be finite, got ({a}, {b})")
    if abs(b) < B_SWITCH:
        base = constant_ncp(a)
        c1, c2 = _series_coeffs(a)
        raw = base.p + b * c1 + b * b * c2
        branch = "small_slope_series"
    else:
        pa = phi(a)
        Pa = Phi(a)
        Pab = Phi(a + b)
        raw = Pab * Pa - (pa / b) * Pab + (SQRT_2PI / b) * log_mills_terms(a, b) * Pa
        branch = "generic"
    p, clamped = _clamp(raw)
    return ClosedFormResult(p=p, branch="tail_clamped" if clamped else branch)


def bachelier_levy(a: float, b: float, T: float) -> float:
    """P(B(t) <= a + b t for all t in [0, T]) for standard Brownian motion.

    Zero when a <= 0 (the boundary starts at or below the origin).  The
    e^{-2ab} Phi(.) product is evaluated as one fused exponent via log_Phi,
    so large |b| neither overflows nor cancels.
    """
    a = float(a)
    b = float(b)
    T = float(T)
    if not T > 0.0:
        raise ValueError(f"horizon T must be positive, got {T}")
    if a <= 0.0:
        return 0.0
    rt = math.sqrt(T)
    raw = Phi(b * rt + a / rt) - math.exp(-2.0 * a * b + log_Phi(b * rt - a / rt))
    p, _ = _clamp(raw)
    return p


def abs_sup_bound(a: float) -> float:
    """The quantity 2 Phi(a) - a phi(a) - 1 = constant_ncp(a) - constant_ncp(-a).

    Defined for a >= 0, where it upper-bounds the two-sided band probability
    P(|S| stays below a).
    """
    a = float(a)
    if not math.isfinite(a) or a < 0.0:
        raise ValueError(f"a must be finite and >= 0, got {a}")
    raw = 2.0 * Phi(a) - a * phi(a) - 1.0
    p, _ = _clamp(raw)
    return p


def zero_hitting_prob() -> float:
    """P(S hits 0 by time 1) = 1 - 2 * constant_ncp(0) = 1/2 + 1/pi.

    By symmetry the zero level is avoided from below and from above with
    equal probability constant_ncp(0) = 1/4 - 1/(2 pi), so the hitting
    probability is 1 - 2 (1/4 - 1/(2 pi)) = 1/2 + 1/pi.
    """
    return 0.5 + 1.0 / math.pi
