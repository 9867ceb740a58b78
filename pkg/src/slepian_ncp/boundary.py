"""Boundary data model: constant / linear / piecewise-linear / sampled.

A boundary is the deterministic function f in

    p_f = P( S(t) <= f(t) for all t in [0, 1] ).

Piecewise-linear boundaries carry an explicit partition 0 = t_0 < ... < t_n = 1
with values c_i at the knots; they are the workhorse representation, since the
crossing machinery operates segment by segment and general continuous
boundaries are handled by refining onto this form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np

#: Knot times closer than this are rejected rather than silently merged;
#: near-duplicate knots almost always indicate a caller bug.
MIN_KNOT_GAP = 1e-12


@dataclass(frozen=True)
class Knot:
    """A partition point: time t in [0, 1] and the boundary value there."""

    t: float
    c: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.c)):
            raise ValueError(f"knot must be finite, got ({self.t}, {self.c})")
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"knot time {self.t} outside [0, 1]")


@dataclass(frozen=True)
class SegmentParams:
    """Intercept/slope (a_i, b_i) of one segment: the line a_i + b_i * t."""

    a: float
    b: float


@dataclass(frozen=True)
class PiecewiseLinearBoundary:
    """Continuous piecewise-linear boundary over the partition of [0, 1].

    Invariants: first knot at t = 0, last at t = 1, times strictly increasing
    (gaps above ``MIN_KNOT_GAP``), at least two knots.
    """

    knots: tuple

    def __post_init__(self):
        knots = tuple(
            k if isinstance(k, Knot) else Knot(float(k[0]), float(k[1]))
            for k in self.knots
        )
        object.__setattr__(self, "knots", knots)
        if len(knots) < 2:
            raise ValueError("piecewise-linear boundary needs at least 2 knots")
        if knots[0].t != 0.0:
            raise ValueError(f"first knot must be at t=0, got t={knots[0].t}")
        if knots[-1].t != 1.0:
            raise ValueError(f"last knot must be at t=1, got t={knots[-1].t}")
        times = [k.t for k in knots]
        for lo, hi in zip(times, times[1:]):
            if hi - lo <= MIN_KNOT_GAP:
                raise ValueError(
                    f"knot times must increase by more than {MIN_KNOT_GAP:g}; "
                    f"got consecutive times {lo!r}, {hi!r}"
                )

    @cached_property
    def times(self) -> np.ndarray:
        return np.array([k.t for k in self.knots])

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([k.c for k in self.knots])

    @property
    def n_segments(self) -> int:
        return len(self.knots) - 1

    def evaluate(self, t):
        """Linear interpolation through the knots; accepts scalar or array."""
        out = np.interp(np.asarray(t, dtype=float), self.times, self.values)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class Constant:
    """Constant boundary f(t) = a."""

    a: float

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.a)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class Linear:
    """Linear boundary f(t) = a + b t."""

    a: float
    b: float

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        out = self.a + self.b * t
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class Sampled:
    """Boundary given as a callable t -> f(t); continuity asserted by caller."""

    evaluator: Callable[[float], float]

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        try:
            out = np.asarray(self.evaluator(t), dtype=float)
            if out.shape != t.shape:
                raise ValueError
        except Exception:
            out = np.array([self.evaluator(float(ti)) for ti in np.atleast_1d(t)],
                           dtype=float).reshape(t.shape)
        return out if out.ndim else float(out)


Boundary = Union[Constant, Linear, PiecewiseLinearBoundary, Sampled]


def segment_params(b: PiecewiseLinearBoundary) -> list:
    """Per-segment (a_i, b_i) with a_i + b_i t matching both segment endpoints.

    a_i = (c_{i-1} t_i - c_i t_{i-1}) / (t_i - t_{i-1}),
    b_i = (c_i - c_{i-1}) / (t_i - t_{i-1}).
    """
    t = b.times
    c = b.values
    dt = np.diff(t)
    if np.any(dt <= MIN_KNOT_GAP):
        raise ValueError("duplicate (or nearly duplicate) knot times")
    slope = np.diff(c) / dt
    intercept = (c[:-1] * t[1:] - c[1:] * t[:-1]) / dt
    return [SegmentParams(float(a), float(s)) for a, s in zip(intercept, slope)]


def _uniform_grid(n: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n + 1)


def refine(b: Boundary, n: int) -> PiecewiseLinearBoundary:
    """Piecewise-linear interpolant of ``b`` on the uniform n-segment grid.

    For an already piecewise-linear input the output knots are the union of
    the uniform grid and the original knots, so refinement is exact rather
    than lossy.  At every output knot the interpolant equals ``b`` exactly.
    """
    if n < 1:
        raise ValueError(f"need at least 1 segment, got {n}")
    grid = _uniform_grid(n)
    if isinstance(b, PiecewiseLinearBoundary):
        times = np.concatenate([grid, b.times])
        times.sort()
        # Collapse grid/knot collisions (distance <= MIN_KNOT_GAP): both
        # points evaluate b identically, so keeping one loses nothing.
        keep = np.concatenate([[True], np.diff(times) > MIN_KNOT_GAP])
        # Never drop the endpoints.
        times = times[keep]
        times[0] = 0.0
        times[-1] = 1.0
    else:
        times = grid
    vals = b.evaluate(times)
    return PiecewiseLinearBoundary(tuple(zip(times.tolist(), np.asarray(vals).tolist())))


def as_piecewise(b: Boundary) -> PiecewiseLinearBoundary:
    """View a constant/linear boundary as a single-segment partition."""
    if isinstance(b, PiecewiseLinearBoundary):
        return b
    if isinstance(b, Constant):
        return PiecewiseLinearBoundary(((0.0, b.a), (1.0, b.a)))
    if isinstance(b, Linear):
        return PiecewiseLinearBoundary(((0.0, b.a), (1.0, b.a + b.b)))
    raise TypeError(f"cannot view {type(b).__name__} as piecewise-linear without refining")


def boundary_from_json(obj) -> Boundary:
    """Parse the boundary file format.

    Accepted objects:
      {"type": "constant", "a": <float>}
      {"type": "linear", "a": <float>, "b": <float>}
      {"type": "piecewise", "knots": [[t, c], ...]}
    """
    if not isinstance(obj, dict):
        raise ValueError(f"boundary must be a JSON object, got {type(obj).__name__}")
    kind = obj.get("type")
    if kind == "constant":
        return Constant(_json_number(obj, "a"))
    if kind == "linear":
        return Linear(_json_number(obj, "a"), _json_number(obj, "b"))
    if kind == "piecewise":
        knots = obj.get("knots")
        if not isinstance(knots, list) or not knots:
            raise ValueError('piecewise boundary needs a non-empty "knots" list')
        pairs = []
        for i, item in enumerate(knots):
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise ValueError(f"knots[{i}] must be a [t, c] pair, got {item!r}")
            pairs.append((float(item[0]), float(item[1])))
        return PiecewiseLinearBoundary(tuple(pairs))
    raise ValueError(
        f'unknown boundary type {kind!r}; expected "constant", "linear" or "piecewise"'
    )


def boundary_to_json(b: Boundary) -> dict:
    """Inverse of ``boundary_from_json`` for report echoing."""
    if isinstance(b, Constant):
        return {"type": "constant", "a": b.a}
    if isinstance(b, Linear):
        return {"type": "linear", "a": b.a, "b": b.b}
    if isinstance(b, PiecewiseLinearBoundary):
        return {"type": "piecewise", "knots": [[k.t, k.c] for k in b.knots]}
    if isinstance(b, Sampled):
        return {"type": "sampled", "evaluator": repr(b.evaluator)}
    raise TypeError(f"not a boundary: {type(b).__name__}")


def _json_number(obj: dict, key: str) -> float:
    if key not in obj:
        raise ValueError(f'boundary object is missing field "{key}"')
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValueError(f'field "{key}" must be a number, got {val!r}')
    if not math.isfinite(val):
        raise ValueError(f'field "{key}" must be finite, got {val!r}')
    return float(val)
