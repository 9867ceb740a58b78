"""Boundary non-crossing probabilities for the Slepian process.

The Slepian process S(t) = B(t+1) - B(t) is the moving-window increment of a
standard Brownian motion; it is stationary and Gaussian with covariance
1 - |t1 - t2|.  This package computes

    p_f = P( S(t) <= f(t) for all t in [0, 1] )

for constant, linear, piecewise-linear and general continuous boundaries f,
together with an independent path-simulation oracle used for validation.

Submodules are imported lazily (PEP 562) so that the command-line front end
can apply its ``--threads`` cap through the standard environment variables
before numpy/scipy load their thread pools.
"""

from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    "boundary": (
        "Boundary",
        "Constant",
        "Knot",
        "Linear",
        "PiecewiseLinearBoundary",
        "Sampled",
        "SegmentParams",
        "boundary_from_json",
        "boundary_to_json",
        "refine",
        "segment_params",
    ),
    "closedform": (
        "ClosedFormResult",
        "InternalConsistencyError",
        "abs_sup_bound",
        "bachelier_levy",
        "constant_ncp",
        "linear_ncp",
        "zero_hitting_prob",
    ),
    "integrate": (
        "DimensionTooLarge",
        "McConfig",
        "NonConvergence",
        "ProbabilityResult",
        "QuadratureConfig",
        "dispatch",
        "piecewise_ncp_mc",
        "piecewise_ncp_quadrature",
    ),
    "approx": (
        "RefinementTrace",
        "general_ncp",
    ),
    "oracle": (
        "OracleEstimate",
        "PathSample",
        "brownian_line_ncp_mc",
        "oracle_ncp",
        "oracle_zero_hitting",
        "simulate_slepian",
        "simulate_z",
    ),
}

_HOME = {name: module for module, names in _EXPORTS.items() for name in names}

__all__ = ["__version__", *_HOME]


def __getattr__(name):
    module = _HOME.get(name)
    if module is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    value = getattr(import_module(f".{module}", __name__), name)
    globals()[name] = value  # cache so the import runs once
    return value


def __dir__():
    return sorted(__all__)
