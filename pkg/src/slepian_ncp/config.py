"""Central defaults for every tunable, with uniform environment overrides.

All knobs live in one place so the CLI, the integrators and the oracle agree
on documented defaults.  Each field of :class:`Defaults` can be overridden by
an environment variable named ``SLEPIAN_NCP_<FIELD>`` (upper-cased), e.g.::

    SLEPIAN_NCP_SEED=7 SLEPIAN_NCP_N_SAMPLES=200000 slepian-ncp constant --a 0

Values are parsed with the type of the field's default.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

ENV_PREFIX = "SLEPIAN_NCP_"


@dataclass
class Defaults:
    # Deterministic quadrature.
    abs_tol: float = 1e-5          # target absolute tolerance
    nodes_per_dim: int = 16        # Gauss-Legendre nodes per dimension (first stage)
    truncation: float = 8.0        # integration half-width in standard deviations

    # Monte Carlo estimators.
    n_samples: int = 1_000_000
    mc_batch: int = 65_536         # samples per substream batch
    sampler: str = "pseudo"        # "pseudo" | "low_discrepancy"
    seed: int = 12345

    # Refinement of general boundaries.
    convergence_tol: float = 1e-3
    max_segments: int = 256

    # Path-simulation oracle.
    oracle_paths: int = 100_000
    oracle_steps: int = 4096

    # Agreement checks involving the oracle add this grid-bias allowance on
    # top of 3 combined standard errors (crossings between grid points are
    # missed, biasing grid estimates upward).
    grid_bias_allowance: float = 5e-3

    # Worker-thread cap applied by the CLI (0 = leave library defaults).
    threads: int = 0

    # CLI output format.
    format: str = "json"


def defaults() -> Defaults:
    """The documented defaults with any SLEPIAN_NCP_* overrides applied."""
    cfg = Defaults()
    for f in fields(cfg):
        raw = os.environ.get(ENV_PREFIX + f.name.upper())
        if raw is None:
            continue
        current = getattr(cfg, f.name)
        try:
            if isinstance(current, bool):
                value = raw.lower() in ("1", "true", "yes", "on")
            elif isinstance(current, int):
                value = int(raw)
            elif isinstance(current, float):
                value = float(raw)
            else:
                value = raw
        except ValueError as exc:
            raise ValueError(
                f"environment override {ENV_PREFIX}{f.name.upper()}={raw!r} "
                f"is not a valid {type(current).__name__}"
            ) from exc
        setattr(cfg, f.name, value)
    return cfg
