"""The Slepian-to-Brownian reduction.

Conditionally on S(0) = x, the Slepian process on [0, 1] has the same law as

    Z_t = (2 - t) B(t / (2 - t)) + (1 - t) x

for a standard Brownian motion B.  The clock change u = t / (2 - t) (inverse
s = 2u / (u + 1)) therefore converts every non-crossing event for S into one
for B below a transformed boundary.  This module provides the conditional
density/covariance, the clock maps, and the transformed boundary image

    h(x, u) = ((u + 1) / 2) f(2u / (u + 1)) - ((1 - u) / 2) x,

evaluated at the Brownian-side knot times u_i = t_i / (2 - t_i).

Time-grid convention: the knots of the transformed boundary live at the
Brownian times u_i, not at the original times t_i.  A piecewise-linear f
maps to a boundary that is piecewise-linear in u with knot values h(x, u_i);
this is the only reading under which the increment spacings feeding the
bridge corrections are genuine Brownian time gaps (confirmed against the
path-simulation oracle on kinked boundaries, where the two readings differ
by ~0.02-0.09 in probability).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .boundary import PiecewiseLinearBoundary


@dataclass(frozen=True)
class TransformedKnots:
    """Transformed boundary values h_i(x) at the Brownian knot times u_i."""

    x: float
    h: np.ndarray
    u: np.ndarray


def conditional_density(t: float, y, x: float):
    """Density of S(t) given S(0) = x: normal with mean (1-t)x, variance t(2-t).

    Rejects t = 0 (degenerate point mass at x) and t outside (0, 1].
    """
    t = float(t)
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t must be in (0, 1], got {t}")
    var = t * (2.0 - t)
    y = np.asarray(y, dtype=float)
    out = np.exp(-((y - (1.0 - t) * x) ** 2) / (2.0 * var)) / np.sqrt(2.0 * np.pi * var)
    return out if out.ndim else float(out)


def conditional_covariance(t1, t2):
    """Cov(S(t1), S(t2) | S(0)) = min(t1 (2 - t2), t2 (2 - t1)) on [0, 1]^2."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    if np.any(t1 < 0) or np.any(t1 > 1) or np.any(t2 < 0) or np.any(t2 > 1):
        raise ValueError("times must lie in [0, 1]")
    out = np.minimum(t1 * (2.0 - t2), t2 * (2.0 - t1))
    return out if out.ndim else float(out)


def z_transform_time(u):
    """Slepian time s = 2u/(u+1) reached at Brownian clock time u in [0, 1]."""
    u = np.asarray(u, dtype=float)
    out = 2.0 * u / (u + 1.0)
    return out if out.ndim else float(out)


def brownian_clock_time(s):
    """Inverse clock u = s/(2-s): Brownian time at which Z reaches Slepian time s."""
    s = np.asarray(s, dtype=float)
    out = s / (2.0 - s)
    return out if out.ndim else float(out)


@lru_cache(maxsize=256)
def boundary_image_coeffs(l: PiecewiseLinearBoundary):
    """Brownian knot times and affine coefficients of the transformed boundary.

    Returns (u, p, q) with u_i = t_i/(2 - t_i) and h_i(x) = p_i - q_i x, where

        p_i = c_i / (2 - t_i),      q_i = (1 - t_i) / (2 - t_i).

    Computed once per boundary object and cached; every integrator and sampler
    evaluates h through these coefficients, keeping the image exactly affine
    in the conditioning value x.
    """
    t = l.times
    c = l.values
    denom = 2.0 - t
    u = t / denom
    p = c / denom
    q = (1.0 - t) / denom
    u.flags.writeable = False
    p.flags.writeable = False
    q.flags.writeable = False
    return u, p, q


def boundary_image(l: PiecewiseLinearBoundary, x: float) -> TransformedKnots:
    """Image h_0(x), ..., h_n(x) of the boundary under the reduction.

    h_0 = (a_1 - x)/2 where a_1 is the first segment's intercept, and the
    image is affine in x knot by knot.
    """
    u, p, q = boundary_image_coeffs(l)
    return TransformedKnots(x=float(x), h=p - q * float(x), u=u)
