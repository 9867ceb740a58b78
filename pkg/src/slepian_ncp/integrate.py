"""Evaluate the reduced (n+1)-dimensional integral for piecewise boundaries.

Two independent evaluators for the same quantity:

* ``piecewise_ncp_quadrature`` - nested Gauss-Legendre over the admissible
  region in standardized-increment coordinates, with the innermost dimension
  integrated analytically (a half-line Brownian crossing formula), for up to
  4 segments.
* ``piecewise_ncp_mc`` - an unbiased (quasi-)Monte Carlo estimator valid for
  any number of segments: draw the conditioning value x and the Brownian
  skeleton unconstrained, multiply the indicator by the product of bridge
  non-crossing factors.

Both return :class:`ProbabilityResult` with an explicit error descriptor, and
``dispatch`` routes a boundary to the cheapest applicable method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy.special import log_ndtr, ndtr, ndtri, roots_legendre
from scipy.stats import qmc

from . import config
from .boundary import (
    Boundary,
    Constant,
    Linear,
    PiecewiseLinearBoundary,
    Sampled,
    as_piecewise,
)
from .closedform import _clamp, constant_ncp, linear_ncp
from .normmath import phi
from .transform import boundary_image_coeffs

_DEF = config.Defaults()

#: Quadrature handles at most this many segments (dimension n+1 <= 5).
MAX_QUAD_SEGMENTS = 4

#: Number of independent scramblings used for the low-discrepancy error bar.
_QMC_REPLICATES = 16


class DimensionTooLarge(ValueError):
    """Boundary has too many segments for deterministic quadrature; use MC."""


class NonConvergence(RuntimeError):
    """Quadrature error estimate stayed above abs_tol after max refinement."""


@dataclass(frozen=True)
class ProbabilityResult:
    """Probability estimate with an error descriptor and work counters.

    ``err`` is an absolute tolerance for deterministic methods and a standard
    error for Monte Carlo ones; which applies is determined by ``method``.
    """

    p: float
    err: float
    method: str
    n_evals: int
    seed: Optional[int] = None


@dataclass(frozen=True)
class QuadratureConfig:
    nodes_per_dim: int = _DEF.nodes_per_dim
    truncation: float = _DEF.truncation
    abs_tol: float = _DEF.abs_tol

    def __post_init__(self):
        if self.nodes_per_dim < 8:
            raise ValueError(f"nodes_per_dim must be >= 8, got {self.nodes_per_dim}")
        if self.truncation < 6:
            raise ValueError(f"truncation must be >= 6 SDs, got {self.truncation}")
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol}")


@dataclass(frozen=True)
class McConfig:
    n_samples: int = _DEF.n_samples
    sampler: str = _DEF.sampler  # "pseudo" | "low_discrepancy"
    seed: int = _DEF.seed
    batch: int = _DEF.mc_batch

    def __post_init__(self):
        if self.n_samples < 1000:
            raise ValueError(f"n_samples must be >= 1000, got {self.n_samples}")
        if self.sampler not in ("pseudo", "low_discrepancy"):
            raise ValueError(f'sampler must be "pseudo" or "low_discrepancy", got {self.sampler!r}')
        if self.batch < 1:
            raise ValueError(f"batch must be positive, got {self.batch}")


# ---------------------------------------------------------------------------
# deterministic quadrature
# ---------------------------------------------------------------------------

def _bl_factor(v_prev, g_prev, g_next, du):
    """P(B below the g_prev -> g_next chord on a step of length du, ending
    below g_next, started at v_prev), vectorized.

    This is the analytic innermost integral: combining the Gaussian endpoint
    density with its bridge factor gives the half-line crossing formula

        Phi(z1) - e^{-2 A s} Phi(z2),   A = g_prev - v_prev, s = chord slope,

    which is 0 whenever the start point already touches the chord (A <= 0).
    """
    v_prev, g_prev, g_next = np.broadcast_arrays(v_prev, g_prev, g_next)
    A = g_prev - v_prev
    pos = A > 0
    sq = math.sqrt(du)
    z1 = (g_next - v_prev) / sq
    z2 = (g_next + v_prev - 2.0 * g_prev) / sq
    slope = (g_next - g_prev) / du
    # Fused exponent; forced to -inf off the admissible region so the exp
    # cannot overflow there (those entries are zeroed anyway).
    expo = np.where(pos, -2.0 * A * slope + log_ndtr(z2), -np.inf)
    out = np.where(pos, ndtr(z1) - np.exp(expo), 0.0)
    return np.clip(out, 0.0, None)


def _quad_stage(u, p_coef, q_coef, c0, m, trunc):
    """One nested Gauss-Legendre pass with m nodes per dimension."""
    n = len(u) - 1
    du = np.diff(u)
    xn, xw = roots_legendre(m)

    x_lo, x_hi = -trunc, min(c0, trunc)
    if x_hi <= x_lo:
        return 0.0, 0
    xs = 0.5 * (x_hi - x_lo) * xn + 0.5 * (x_hi + x_lo)
    xws = 0.5 * (x_hi - x_lo) * xw * phi(xs)

    total = 0.0
    n_evals = 0
    for x, wx in zip(xs, xws):
        g = p_coef - q_coef * x
        vals = np.zeros(1)
        wts = np.ones(1)
        for i in range(1, n):
            sq = math.sqrt(du[i - 1])
            hi = np.minimum((g[i] - vals) / sq, trunc)
            width = np.clip(hi + trunc, 0.0, None)
            wnode = -trunc + 0.5 * width[:, None] * (xn[None, :] + 1.0)
            wwgt = 0.5 * width[:, None] * xw[None, :]
            vnew = vals[:, None] + sq * wnode
            expo = np.minimum(-2.0 * (vals[:, None] - g[i - 1]) * (vnew - g[i]) / du[i - 1], 0.0)
            factor = phi(wnode) * (1.0 - np.exp(expo))
            vals = vnew.ravel()
            wts = (wts[:, None] * wwgt * factor).ravel()
        inner = _bl_factor(vals, g[n - 1], g[n], du[n - 1])
        total += wx * float(np.sum(wts * inner))
        n_evals += vals.size
    return total, n_evals


def piecewise_ncp_quadrature(
    l: PiecewiseLinearBoundary, cfg: Optional[QuadratureConfig] = None
) -> ProbabilityResult:
    """Nested Gauss-Legendre evaluation of the reduced integral (n <= 4).

    The outer conditioning variable is truncated to [-trunc, min(c_0, trunc)]
    and each inner Brownian value to 8 SDs below its moving upper limit; the
    innermost dimension is analytic.  The error estimate is the Richardson
    difference between two successive node counts; the node count doubles
    until that difference is below ``abs_tol`` (at most twice), after which
    ``NonConvergence`` is raised.
    """
    cfg = cfg or QuadratureConfig()
    n = l.n_segments
    if n > MAX_QUAD_SEGMENTS:
        raise DimensionTooLarge(
            f"{n} segments exceed the quadrature limit of {MAX_QUAD_SEGMENTS}; "
            "use the MC path (piecewise_ncp_mc)"
        )
    u, p_coef, q_coef = boundary_image_coeffs(l)
    c0 = float(l.values[0])

    if min(c0, cfg.truncation) <= -cfg.truncation:
        # The admissible region for x carries less mass than ndtr(c0) < 1e-15:
        # nothing to integrate at double precision.
        return ProbabilityResult(p=0.0, err=float(ndtr(c0)), method="quadrature", n_evals=0)

    m = cfg.nodes_per_dim
    est_prev, n_evals = _quad_stage(u, p_coef, q_coef, c0, m, cfg.truncation)
    for _ in range(2):
        m *= 2
        est, evals = _quad_stage(u, p_coef, q_coef, c0, m, cfg.truncation)
        n_evals += evals
        err = abs(est - est_prev)
        if err <= cfg.abs_tol:
            p, _ = _clamp(est)
            return ProbabilityResult(
                p=p, err=max(err, 1e-16), method="quadrature", n_evals=n_evals
            )
        est_prev = est
    raise NonConvergence(
        f"Richardson error {err:.3e} above abs_tol {cfg.abs_tol:.1e} at {m} nodes/dim"
    )


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def _wp_from_skeleton(x, v_full, u, p_coef, q_coef) -> np.ndarray:
    """Estimator values from explicit Brownian skeletons.

    ``v_full`` holds the Brownian values at every knot time in ``u``
    including the fixed v = 0 column at u_0 = 0.  Each value is
    indicator * product of bridge factors, in [0, 1], with expectation equal
    to the non-crossing probability.
    """
    du = np.diff(u)
    g = p_coef[None, :] - q_coef[None, :] * x[:, None]
    gap = v_full - g
    ok = np.all(gap <= 0.0, axis=1)
    expo = np.minimum(-2.0 * gap[:, :-1] * gap[:, 1:] / du, 0.0)
    y = np.prod(1.0 - np.exp(expo), axis=1)
    y[~ok] = 0.0
    return y


def _wp_values(z: np.ndarray, u, p_coef, q_coef) -> np.ndarray:
    """Per-sample estimator values from standard normal input rows.

    Column 0 drives the conditioning value x, the rest the Brownian
    increments.
    """
    du = np.diff(u)
    x = z[:, 0]
    v_full = np.empty((z.shape[0], len(u)))
    v_full[:, 0] = 0.0
    np.cumsum(z[:, 1:] * np.sqrt(du), axis=1, out=v_full[:, 1:])
    return _wp_from_skeleton(x, v_full, u, p_coef, q_coef)


def _mc_pseudo(u, p_coef, q_coef, cfg: McConfig):
    d = len(u)
    total = 0.0
    total_sq = 0.0
    done = 0
    batch_index = 0
    while done < cfg.n_samples:
        nb = min(cfg.batch, cfg.n_samples - done)
        rng = Generator(Philox(key=[cfg.seed & (2**64 - 1), batch_index]))
        z = rng.standard_normal((nb, d))
        y = _wp_values(z, u, p_coef, q_coef)
        total += float(y.sum())
        total_sq += float((y * y).sum())
        done += nb
        batch_index += 1
    n = cfg.n_samples
    p_hat = total / n
    var = max(total_sq - n * p_hat * p_hat, 0.0) / max(n - 1, 1)
    se = math.sqrt(var / n)
    return p_hat, se, n


def _mc_sobol(u, p_coef, q_coef, cfg: McConfig):
    """Scrambled digital-sequence estimator.

    Error bar from independent scramblings: ``_QMC_REPLICATES`` replicates,
    each a fresh Owen-scrambled sequence, standard error of replicate means.
    (Consecutive blocks of one scrambled sequence are not independent, so a
    plain batch-means error bar would be biased.)
    """
    d = len(u)
    per_rep = max(64, -(-cfg.n_samples // _QMC_REPLICATES))
    m_pow = max(6, math.ceil(math.log2(per_rep)))
    children = SeedSequence(cfg.seed).spawn(_QMC_REPLICATES)
    means = []
    for child in children:
        sampler = qmc.Sobol(d=d, scramble=True, seed=np.random.default_rng(child))
        pts = sampler.random_base2(m_pow)
        rep_total = 0.0
        for lo in range(0, pts.shape[0], cfg.batch):
            block = pts[lo:lo + cfg.batch]
            z = ndtri(np.clip(block, 1e-16, 1.0 - 1e-16))
            rep_total += float(_wp_values(z, u, p_coef, q_coef).sum())
        means.append(rep_total / pts.shape[0])
    means = np.asarray(means)
    p_hat = float(means.mean())
    se = float(means.std(ddof=1) / math.sqrt(len(means)))
    return p_hat, se, _QMC_REPLICATES * 2**m_pow


def piecewise_ncp_mc(
    l: PiecewiseLinearBoundary, cfg: Optional[McConfig] = None
) -> ProbabilityResult:
    """Unbiased MC/QMC estimator of the reduced integral, any segment count.

    Unconstrained Gaussians times indicator times bridge-factor product;
    deterministic for a fixed (seed, sampler): pseudo-random batches draw
    from counter-based substreams keyed by (seed, batch index), so results do
    not depend on evaluation schedule.
    """
    cfg = cfg or McConfig()
    u, p_coef, q_coef = boundary_image_coeffs(l)
    if cfg.sampler == "pseudo":
        p_hat, se, n_evals = _mc_pseudo(u, p_coef, q_coef, cfg)
        method = "mc_pseudo"
    else:
        p_hat, se, n_evals = _mc_sobol(u, p_coef, q_coef, cfg)
        method = "mc_sobol"
    p, _ = _clamp(p_hat)
    return ProbabilityResult(
        p=p, err=max(se, 1e-16), method=method, n_evals=n_evals, seed=cfg.seed
    )


# ---------------------------------------------------------------------------
# routing
# ---------------------------------------------------------------------------

def dispatch(
    l: Boundary,
    prefs: Optional[str] = None,
    quad_cfg: Optional[QuadratureConfig] = None,
    mc_cfg: Optional[McConfig] = None,
    convergence_tol: Optional[float] = None,
    max_segments: Optional[int] = None,
) -> ProbabilityResult:
    """Route a boundary to closed form, quadrature, MC, or refinement.

    ``prefs`` may force "quad" or "mc" for boundaries with a partition; the
    default ("auto") picks closed forms for constant/linear boundaries,
    quadrature for up to 4 segments, MC beyond, and the refinement scheme for
    sampled boundaries.
    """
    prefs = prefs or "auto"
    if prefs not in ("auto", "quad", "mc"):
        raise ValueError(f'prefs must be "auto", "quad" or "mc", got {prefs!r}')

    if isinstance(l, Sampled):
        from .approx import general_ncp  # deferred: approx builds on this module

        dflt = config.Defaults()
        trace = general_ncp(
            l,
            convergence_tol=dflt.convergence_tol if convergence_tol is None else convergence_tol,
            max_segments=dflt.max_segments if max_segments is None else max_segments,
            mc_cfg=mc_cfg,
            quad_cfg=quad_cfg,
        )
        return trace.final

    if prefs == "auto":
        if isinstance(l, Constant):
            r = constant_ncp(l.a)
            return ProbabilityResult(p=r.p, err=0.0, method="closed_form_constant", n_evals=1)
        if isinstance(l, Linear):
            r = linear_ncp(l.a, l.b)
            return ProbabilityResult(p=r.p, err=0.0, method="closed_form_linear", n_evals=1)
        pl = as_piecewise(l)
        if pl.n_segments <= MAX_QUAD_SEGMENTS:
            return piecewise_ncp_quadrature(pl, quad_cfg)
        return piecewise_ncp_mc(pl, mc_cfg)

    pl = as_piecewise(l)
    if prefs == "quad":
        return piecewise_ncp_quadrature(pl, quad_cfg)
    return piecewise_ncp_mc(pl, mc_cfg)
