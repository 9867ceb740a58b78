"""General continuous boundaries by piecewise-linear refinement.

A continuous boundary is approximated uniformly by piecewise-linear
interpolants on dyadic grids (2, 4, 8, ... segments); the non-crossing
probabilities of the interpolants converge to the true probability.  This
module drives that refinement and reports the trace.

Level estimates are chained: the coarsest levels (up to 4 segments) come from
deterministic quadrature, and each doubling beyond adds a coupled Monte Carlo
estimate of the *difference* between consecutive interpolants.  Both levels
of a pair are evaluated on the same simulated Brownian skeleton (the coarse
level reads the values at its own knots, a subset of the fine level's knots),
so the difference estimator has a standard error proportional to the actual
level gap rather than to the absolute probability.  Without this coupling the
successive differences of interest - which shrink quadratically for smooth
boundaries - would drown in independent sampling noise long before the
refinement stops.  Each level estimate remains unbiased for its interpolant's
probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.random import Generator, Philox

from .boundary import Boundary, refine
from .closedform import _clamp
from .integrate import (
    MAX_QUAD_SEGMENTS,
    McConfig,
    NonConvergence,
    ProbabilityResult,
    QuadratureConfig,
    piecewise_ncp_mc,
    piecewise_ncp_quadrature,
    _wp_from_skeleton,
)
from .transform import boundary_image_coeffs


@dataclass
class RefinementTrace:
    """Per-level estimates, convergence flag, and the final estimate.

    ``entries`` is a list of (n_segments, ProbabilityResult) with strictly
    doubling segment counts.  ``converged`` is True only if the last two
    successive differences were both within tolerance; the partial trace is
    returned either way.
    """

    entries: list
    converged: bool
    final: ProbabilityResult


def _knot_restriction(u_coarse: np.ndarray, u_fine: np.ndarray) -> np.ndarray:
    """Indices of the coarse knot times inside the fine knot times."""
    idx = np.searchsorted(u_fine, u_coarse)
    idx = np.clip(idx, 0, len(u_fine) - 1)
    left = np.clip(idx - 1, 0, None)
    take_left = np.abs(u_fine[left] - u_coarse) < np.abs(u_fine[idx] - u_coarse)
    idx = np.where(take_left, left, idx)
    if not np.allclose(u_fine[idx], u_coarse, rtol=0.0, atol=1e-9):
        raise RuntimeError("refinement grids are not nested")  # pragma: no cover
    return idx


def _coupled_delta(coarse, fine, level: int, cfg: McConfig):
    """Coupled MC estimate of p(fine boundary) - p(coarse boundary).

    One Brownian skeleton per sample at the fine knot times; the coarse
    estimator reads the same skeleton at its own (nested) knots.
    """
    u_f, p_f, q_f = boundary_image_coeffs(fine)
    u_c, p_c, q_c = boundary_image_coeffs(coarse)
    idx = _knot_restriction(u_c, u_f)
    du_f = np.diff(u_f)
    d = len(u_f)

    total = 0.0
    total_sq = 0.0
    done = 0
    batch_index = 0
    while done < cfg.n_samples:
        nb = min(cfg.batch, cfg.n_samples - done)
        key = [cfg.seed & (2**64 - 1), (level << 32) | batch_index]
        z = Generator(Philox(key=key)).standard_normal((nb, d))
        x = z[:, 0]
        v_full = np.empty((nb, d))
        v_full[:, 0] = 0.0
        np.cumsum(z[:, 1:] * np.sqrt(du_f), axis=1, out=v_full[:, 1:])
        y_fine = _wp_from_skeleton(x, v_full, u_f, p_f, q_f)
        y_coarse = _wp_from_skeleton(x, v_full[:, idx], u_c, p_c, q_c)
        delta = y_fine - y_coarse
        total += float(delta.sum())
        total_sq += float((delta * delta).sum())
        done += nb
        batch_index += 1
    n = cfg.n_samples
    mean = total / n
    var = max(total_sq - n * mean * mean, 0.0) / max(n - 1, 1)
    return mean, math.sqrt(var / n), n


def general_ncp(
    f: Boundary,
    convergence_tol: float = 1e-3,
    max_segments: int = 256,
    mc_cfg: Optional[McConfig] = None,
    quad_cfg: Optional[QuadratureConfig] = None,
) -> RefinementTrace:
    """Refine ``f`` on dyadic grids until successive estimates stabilize.

    Evaluates the piecewise-linear interpolant at n = 2, 4, 8, ... segments
    and stops once two successive doublings each changed the estimate by no
    more than ``convergence_tol`` plus the levels' error descriptors, or when
    n would exceed ``max_segments`` (then ``converged`` is False and the
    partial trace is still returned).  Requiring two consecutive agreements
    guards against a single accidental cancellation.
    """
    if not convergence_tol > 0:
        raise ValueError(f"convergence_tol must be positive, got {convergence_tol}")
    if max_segments < 2:
        raise ValueError(f"max_segments must be >= 2, got {max_segments}")
    mc_cfg = mc_cfg or McConfig()
    entries = []
    agreements = 0
    converged = False

    n = 2
    prev_boundary = None
    prev_result = None
    while n <= max_segments:
        boundary_n = refine(f, n)
        # The union of f's own knots with the uniform level-n grid can hold
        # more than n segments, so route on the actual count, not the level.
        if boundary_n.n_segments <= MAX_QUAD_SEGMENTS:
            try:
                result = piecewise_ncp_quadrature(boundary_n, quad_cfg)
            except NonConvergence:
                result = piecewise_ncp_mc(boundary_n, mc_cfg)
        elif prev_result is None:
            result = piecewise_ncp_mc(boundary_n, mc_cfg)
        else:
            delta, se_delta, n_evals = _coupled_delta(prev_boundary, boundary_n, n, mc_cfg)
            p, _ = _clamp(prev_result.p + delta)
            result = ProbabilityResult(
                p=p,
                err=math.hypot(prev_result.err, se_delta),
                method="mc_coupled",
                n_evals=n_evals,
                seed=mc_cfg.seed,
            )
        entries.append((n, result))
        if prev_result is not None:
            close = abs(result.p - prev_result.p) <= convergence_tol + result.err + prev_result.err
            agreements = agreements + 1 if close else 0
            if agreements >= 2:
                converged = True
        prev_boundary, prev_result = boundary_n, result
        if converged:
            break
        n *= 2

    return RefinementTrace(entries=entries, converged=converged, final=entries[-1][1])
