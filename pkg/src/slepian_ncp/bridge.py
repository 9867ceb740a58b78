"""Brownian bridge crossing corrections and the reduced integrand.

The non-crossing probability below a piecewise-linear boundary factorizes
over the partition once the Brownian values at the knots are fixed: each
segment contributes

    1 - exp( -2 (u_{i-1} - c_{i-1}) (u_i - c_i) / (t_i - t_{i-1}) ),

the probability that the Brownian bridge pinned at (u_{i-1}, u_i) stays below
the chord of the boundary over that segment.  Integrating the knot-value
density times this product over the region u_i <= c_i gives the exact
probability.

``slepian_integrand`` assembles the Slepian-reduced version: the outer
conditioning variable x = S(0) with its standard normal weight, the boundary
image h_i(x) at the Brownian knot times u_i = t_i/(2 - t_i), and the product
above with c_i replaced by h_i(x).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import PiecewiseLinearBoundary
from .normmath import phi
from .transform import boundary_image_coeffs


@dataclass(frozen=True)
class BridgeSample:
    """Conditioning value x plus Brownian values u_1..u_n at the knot times.

    The value at time 0 is fixed at u_0 = 0 and not stored.
    """

    x: float
    u: np.ndarray


@dataclass(frozen=True)
class IntegrandValue:
    """Factored integrand at one sample point.

    The full integrand is density_part * correction_part if the indicator
    holds and 0 otherwise.
    """

    density_part: float
    correction_part: float
    indicator: bool

    @property
    def value(self) -> float:
        return self.density_part * self.correction_part if self.indicator else 0.0


def gaussian_increment_density(u: BridgeSample, times) -> float:
    """Joint density of Brownian values at strictly increasing knot times.

    Product over increments of N(0, t_i - t_{i-1}) densities, accumulated in
    log space and exponentiated once.
    """
    times = np.asarray(times, dtype=float)
    vals = np.asarray(u.u, dtype=float)
    if times.shape != vals.shape:
        raise ValueError(f"times shape {times.shape} != values shape {vals.shape}")
    dt = np.diff(times, prepend=0.0)
    if np.any(dt <= 0.0) or times[-1] > 1.0:
        raise ValueError("knot times must be strictly increasing in (0, 1]")
    du = np.diff(vals, prepend=0.0)
    n = times.size
    log_density = (
        -0.5 * np.sum(du * du / dt)
        - 0.5 * np.sum(np.log(dt))
        - 0.5 * n * np.log(2.0 * np.pi)
    )
    return float(np.exp(log_density))


def crossing_correction(u: BridgeSample, knot_values, times) -> float:
    """Probability that no bridge segment crosses its boundary chord.

    ``knot_values`` holds c_0..c_n (one more entry than the sampled values,
    since u_0 = 0 is implicit).  Outside the indicator region (any u_i > c_i,
    including 0 > c_0) the function returns 0 rather than raising: samplers
    probe the full space.
    """
    c = np.asarray(knot_values, dtype=float)
    vals = np.concatenate([[0.0], np.asarray(u.u, dtype=float)])
    if c.shape != vals.shape:
        raise ValueError(f"expected {vals.size} knot values, got {c.size}")
    if np.any(vals > c):
        return 0.0
    t = np.concatenate([[0.0], np.asarray(times, dtype=float)])
    dt = np.diff(t)
    if np.any(dt <= 0.0):
        raise ValueError("knot times must be strictly increasing")
    gap = vals - c  # <= 0 on the indicator region
    factors = 1.0 - np.exp(-2.0 * gap[:-1] * gap[1:] / dt)
    return float(np.prod(factors))


def slepian_integrand(s: BridgeSample, boundary: PiecewiseLinearBoundary) -> IntegrandValue:
    """The reduced integrand phi(x) * increment density * crossing correction.

    Zero whenever x exceeds the boundary at t = 0 (equivalently u_0 = 0
    exceeds h_0(x)) or any Brownian value exceeds its transformed knot value.
    """
    u_times, p_coef, q_coef = boundary_image_coeffs(boundary)
    h = p_coef - q_coef * s.x
    vals = np.concatenate([[0.0], np.asarray(s.u, dtype=float)])
    indicator = bool(np.all(vals <= h))
    density = phi(s.x) * gaussian_increment_density(s, u_times[1:])
    correction = crossing_correction(s, h, u_times[1:]) if indicator else 0.0
    return IntegrandValue(
        density_part=float(density),
        correction_part=float(correction),
        indicator=indicator,
    )
