"""Independent Monte Carlo ground truth via path simulation.

Paths of S(t) = B(t+1) - B(t) are built from a Brownian path on [0, 2] with
2 * grid_steps exact Gaussian increments; the S values on [0, 1] are windowed
differences.  There is no Euler bias - the finite-dimensional law at the grid
is exact - so the only systematic error of a non-crossing frequency is the
upward grid-discretization bias (crossings between grid points are missed),
which shrinks as the grid refines and is reported via a paired coarse-grid
estimate.

Every path draws from its own counter-based stream keyed by (seed, path
index), so path i is bit-reproducible regardless of batching or of how many
other paths are simulated.  Increments are drawn lazily (leading window
first, then blocks of the leading edge) and a path stops drawing once its
outcome is decided on both the fine and the paired coarse grid; laziness
changes which prefix of the stream is consumed, never the values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.random import Generator, Philox

from .boundary import Boundary

_MASK64 = 2**64 - 1

#: Leading-edge increments are drawn in blocks of this many steps.
_BLOCK = 512

#: Minimum grid resolution for oracle estimates.
MIN_GRID_STEPS = 256


@dataclass(frozen=True)
class PathSample:
    """A discretized process path: uniform grid times and values."""

    grid: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class OracleEstimate:
    """Frequency estimate with binomial standard error and provenance.

    ``coarse`` (when present) is the paired estimate from the same paths read
    on the 4x coarser grid; comparing the two shows the grid-bias trend.
    """

    p_hat: float
    se: float
    n_paths: int
    grid_steps: int
    seed: int
    coarse: Optional["OracleEstimate"] = None


def _path_rng(seed: int, path_index: int) -> Generator:
    return Generator(Philox(key=[seed & _MASK64, path_index & _MASK64]))


def _check_args(n_paths: int, grid_steps: int):
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    if grid_steps < MIN_GRID_STEPS:
        raise ValueError(f"grid_steps must be >= {MIN_GRID_STEPS}, got {grid_steps}")


def _binomial_estimate(count: int, n_paths: int, grid_steps: int, seed: int,
                       coarse: Optional[OracleEstimate] = None) -> OracleEstimate:
    p_hat = count / n_paths
    se = math.sqrt(p_hat * (1.0 - p_hat) / n_paths)
    return OracleEstimate(p_hat=p_hat, se=se, n_paths=n_paths,
                          grid_steps=grid_steps, seed=seed, coarse=coarse)


def simulate_slepian(n_paths: int, grid_steps: int, seed: int):
    """Yield Slepian paths on [0, 1] at grid_steps+1 uniform points.

    Increment m of path i covers [m/K, (m+1)/K] of the underlying Brownian
    motion on [0, 2] (K = grid_steps); S(j/K) is the sum of increments
    j .. j+K-1.
    """
    _check_args(n_paths, grid_steps)
    K = grid_steps
    scale = 1.0 / math.sqrt(K)
    grid = np.linspace(0.0, 1.0, K + 1)
    for i in range(n_paths):
        rng = _path_rng(seed, i)
        inc = [rng.standard_normal(K, dtype=np.float32)]
        drawn = K
        while drawn < 2 * K:
            nb = min(_BLOCK, 2 * K - drawn)
            inc.append(rng.standard_normal(nb, dtype=np.float32))
            drawn += nb
        c = np.cumsum(np.concatenate(inc), dtype=np.float64) * scale
        values = np.empty(K + 1)
        values[0] = c[K - 1]
        values[1:] = c[K:] - c[:K]
        yield PathSample(grid=grid, values=values)


def oracle_ncp(f: Boundary, n_paths: int, grid_steps: int, seed: int,
               report_coarse: bool = True) -> OracleEstimate:
    """Fraction of simulated paths with S <= f at every grid point.

    Upward-biased for finite grids; when the grid divides by 4 the paired
    coarse estimate (same paths, every 4th point) is attached so callers see
    the bias trend.  Pathwise, staying below f on the fine grid implies
    staying below on the coarse one, so coarse >= fine holds exactly.
    """
    _check_args(n_paths, grid_steps)
    K = grid_steps
    scale = 1.0 / math.sqrt(K)
    fvals = np.asarray(f.evaluate(np.linspace(0.0, 1.0, K + 1)), dtype=float)
    with_coarse = report_coarse and K % 4 == 0

    n_fine = 0
    n_coarse = 0
    for i in range(n_paths):
        rng = _path_rng(seed, i)
        w = rng.standard_normal(K, dtype=np.float32)
        s = float(np.sum(w, dtype=np.float64)) * scale
        fine_alive = s <= fvals[0]
        coarse_alive = fine_alive  # t = 0 is a point of both grids
        j = 0
        while coarse_alive and j < K:
            nb = min(_BLOCK, K - j)
            lead = rng.standard_normal(nb, dtype=np.float32)
            sblk = s + np.cumsum(lead - w[j:j + nb], dtype=np.float64) * scale
            ok = sblk <= fvals[j + 1:j + nb + 1]
            if fine_alive and not ok.all():
                fine_alive = False
                if not with_coarse:
                    coarse_alive = False  # stop drawing; only fine requested
                    break
            if with_coarse:
                first = (-(j + 1)) % 4  # block offset of the next coarse point
                if first < nb and not ok[first::4].all():
                    coarse_alive = False
            s = float(sblk[-1])
            j += nb
        if fine_alive:
            n_fine += 1
        if with_coarse and coarse_alive:
            n_coarse += 1

    coarse = (
        _binomial_estimate(n_coarse, n_paths, K // 4, seed) if with_coarse else None
    )
    return _binomial_estimate(n_fine, n_paths, K, seed, coarse=coarse)


def oracle_zero_hitting(n_paths: int, grid_steps: int, seed: int) -> OracleEstimate:
    """Fraction of paths whose S visits both signs on the grid.

    Estimates P(S hits the zero level by time 1); downward-biased on a finite
    grid (sign changes between grid points are missed).
    """
    _check_args(n_paths, grid_steps)
    K = grid_steps
    scale = 1.0 / math.sqrt(K)
    n_hit = 0
    for i in range(n_paths):
        rng = _path_rng(seed, i)
        w = rng.standard_normal(K, dtype=np.float32)
        s = float(np.sum(w, dtype=np.float64)) * scale
        seen_pos = s >= 0.0
        seen_neg = s <= 0.0
        j = 0
        while not (seen_pos and seen_neg) and j < K:
            nb = min(_BLOCK, K - j)
            lead = rng.standard_normal(nb, dtype=np.float32)
            sblk = s + np.cumsum(lead - w[j:j + nb], dtype=np.float64) * scale
            seen_pos = seen_pos or bool(sblk.max() >= 0.0)
            seen_neg = seen_neg or bool(sblk.min() <= 0.0)
            s = float(sblk[-1])
            j += nb
        if seen_pos and seen_neg:
            n_hit += 1
    return _binomial_estimate(n_hit, n_paths, K, seed)


def simulate_z(x: float, n_paths: int, grid_steps: int, seed: int):
    """Yield paths of Z_t = (2 - t) B(t/(2 - t)) + (1 - t) x on [0, 1].

    The Brownian values at the transformed clock times are simulated exactly
    (independent Gaussian increments with the true non-uniform variances).
    """
    _check_args(n_paths, grid_steps)
    K = grid_steps
    t = np.linspace(0.0, 1.0, K + 1)
    u = t / (2.0 - t)
    sq = np.sqrt(np.diff(u))
    shrink = 2.0 - t
    drift = (1.0 - t) * x
    for i in range(n_paths):
        rng = _path_rng(seed, i)
        z = rng.standard_normal(K, dtype=np.float32)
        b = np.empty(K + 1)
        b[0] = 0.0
        np.cumsum(z * sq, dtype=np.float64, out=b[1:])
        yield PathSample(grid=t, values=shrink * b + drift)


def brownian_line_ncp_mc(a: float, b: float, T: float, n_paths: int,
                         grid_steps: int, seed: int) -> OracleEstimate:
    """MC estimate of P(B(t) <= a + b t on [0, T]) for Brownian motion.

    Exact (no grid bias): conditional on the grid values, the probability
    that no excursion crosses the boundary between grid points is the product
    of bridge factors, and for a linear boundary the chord *is* the boundary.
    Each path contributes indicator * product in [0, 1]; ``se`` is the sample
    standard error of that mean (at most the binomial one).
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    if grid_steps < 16:
        raise ValueError(f"grid_steps must be >= 16, got {grid_steps}")
    if not T > 0:
        raise ValueError(f"horizon T must be positive, got {T}")
    K = grid_steps
    dt = T / K
    sq = math.sqrt(dt)
    line = a + b * np.linspace(0.0, T, K + 1)
    total = 0.0
    total_sq = 0.0
    for i in range(n_paths):
        rng = _path_rng(seed, i)
        z = rng.standard_normal(K, dtype=np.float32)
        path = np.empty(K + 1)
        path[0] = 0.0
        np.cumsum(z, dtype=np.float64, out=path[1:])
        gap = path * sq - line
        if gap.max() > 0.0:
            continue
        y = float(np.prod(1.0 - np.exp(2.0 * gap[:-1] * gap[1:] / -dt)))
        total += y
        total_sq += y * y
    p_hat = total / n_paths
    var = max(total_sq - n_paths * p_hat * p_hat, 0.0) / max(n_paths - 1, 1)
    return OracleEstimate(
        p_hat=p_hat,
        se=math.sqrt(var / n_paths),
        n_paths=n_paths,
        grid_steps=K,
        seed=seed,
    )
