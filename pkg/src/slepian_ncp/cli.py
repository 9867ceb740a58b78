"""Command-line front end: boundary files and flags in, structured results out.

JSON is the canonical output (``--csv`` secondary); every report carries the
fields needed to reproduce the run exactly, and validates against the schema
shipped in ``schemas/run_report.schema.json``.  Exit codes: 0 success,
2 invalid input, 3 non-convergence, 4 method disagreement (``compare``).

Only the standard library is imported at module level; the numeric stack
loads inside the subcommand handlers, after ``--threads`` has been applied to
the usual thread-cap environment variables.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

from . import __version__
from .config import defaults

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGENCE = 3
EXIT_DISAGREEMENT = 4

#: Standard errors granted to each stochastic method in `compare`.
_Z_MC = 4.0

#: Agreement half-width granted to closed forms in `compare`.
_EXACT_TOL = 1e-9

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)

_CSV_COLUMNS = (
    "method", "p", "err_kind", "err_value", "n_evals", "n_paths",
    "seed", "wall_time_ms", "version", "input", "options", "extras",
)


class _InputError(Exception):
    """User-facing input problem mapped to exit code 2."""


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser(d=None) -> argparse.ArgumentParser:
    d = d or defaults()
    ap = argparse.ArgumentParser(
        prog="slepian-ncp",
        description="Boundary non-crossing probabilities for the Slepian "
                    "process S(t) = B(t+1) - B(t) on [0, 1].",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument(
        "--threads", type=int, default=d.threads, metavar="N",
        help="cap worker threads of the numeric stack (0 = library default)",
    )
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=d.seed,
                        help="base seed for stochastic methods")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json",
                     help="emit the report as JSON (default)")
    fmt.add_argument("--csv", dest="format", action="store_const", const="csv",
                     help="emit the report as a one-row CSV")
    common.set_defaults(format=d.format)

    p = sub.add_parser("constant", parents=[common],
                       help="closed form for the constant boundary f = a")
    p.add_argument("--a", type=float, required=True, help="boundary level")

    p = sub.add_parser("linear", parents=[common],
                       help="closed form for the linear boundary f = a + b t")
    p.add_argument("--a", type=float, required=True, help="intercept")
    p.add_argument("--b", type=float, required=True, help="slope")

    p = sub.add_parser("piecewise", parents=[common],
                       help="piecewise-linear boundary from a JSON file")
    p.add_argument("--file", required=True, metavar="F", help="boundary JSON file")
    p.add_argument("--method", choices=("quad", "mc"), default=None,
                   help="force quadrature or Monte Carlo (default: auto)")
    p.add_argument("--samples", type=int, default=d.n_samples,
                   help="Monte Carlo sample count")
    p.add_argument("--tol", type=float, default=d.abs_tol,
                   help="quadrature absolute tolerance")
    p.add_argument("--sampler", choices=("pseudo", "low_discrepancy"),
                   default=d.sampler, help="Monte Carlo point set")

    p = sub.add_parser("general", parents=[common],
                       help="refine a general boundary until estimates stabilize")
    p.add_argument("--file", required=True, metavar="F", help="boundary JSON file")
    p.add_argument("--tol", type=float, default=d.convergence_tol,
                   help="stabilization tolerance between refinement levels")
    p.add_argument("--samples", type=int, default=d.n_samples,
                   help="Monte Carlo sample count per level")
    p.add_argument("--sampler", choices=("pseudo", "low_discrepancy"),
                   default=d.sampler, help="Monte Carlo point set")
    p.add_argument("--max-segments", type=int, default=d.max_segments,
                   help="refinement cap (exit 3 if still moving there)")

    p = sub.add_parser("oracle", parents=[common],
                       help="path-simulation estimate (independent ground truth)")
    p.add_argument("--file", required=True, metavar="F", help="boundary JSON file")
    p.add_argument("--paths", type=int, default=d.oracle_paths,
                   help="number of simulated paths")
    p.add_argument("--steps", type=int, default=d.oracle_steps,
                   help="time-grid steps per path")
    p.add_argument("--dump-paths", metavar="CSV", default=None,
                   help="also write the first --dump-count paths as CSV rows "
                        "(path, t, value) for debugging")
    p.add_argument("--dump-count", type=int, default=8,
                   help="paths written by --dump-paths")

    p = sub.add_parser(
        "compare",
        help="run every applicable method on one boundary and cross-check",
    )
    p.add_argument("--file", required=True, metavar="F", help="boundary JSON file")
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--json", dest="format", action="store_const", const="json",
                   default="table", help="emit JSON instead of the text table")
    p.add_argument("--samples", type=int, default=d.n_samples,
                   help="Monte Carlo sample count")
    p.add_argument("--tol", type=float, default=d.abs_tol,
                   help="quadrature absolute tolerance")
    p.add_argument("--sampler", choices=("pseudo", "low_discrepancy"),
                   default=d.sampler)
    p.add_argument("--paths", type=int, default=d.oracle_paths,
                   help="oracle path count")
    p.add_argument("--steps", type=int, default=d.oracle_steps,
                   help="oracle grid steps")
    p.add_argument("--bias-allowance", type=float, default=d.grid_bias_allowance,
                   help="extra slack granted to the oracle for grid bias")

    return ap


def _apply_thread_cap(threads: int):
    if threads > 0:
        for var in _THREAD_VARS:
            os.environ[var] = str(threads)


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------

def _err_kind(method: str) -> str:
    if method.startswith("closed_form"):
        return "exact"
    if method == "quadrature":
        return "abs_est"
    return "stderr"


def _report(boundary_echo, method, p, err_value, wall_ms, *, n_evals=None,
            n_paths=None, seed=None, options=None, extras=None) -> dict:
    report = {
        "input": {"boundary": boundary_echo},
        "method": method,
        "p": float(p),
        "err": {"kind": _err_kind(method), "value": float(err_value)},
        "n_evals": n_evals,
        "n_paths": n_paths,
        "seed": seed,
        "wall_time_ms": round(wall_ms, 3),
        "version": __version__,
        "options": options or {},
    }
    if extras:
        report["extras"] = extras
    return report


def _emit(report: dict, fmt: str):
    if fmt == "csv":
        writer = csv.writer(sys.stdout)
        writer.writerow(_CSV_COLUMNS)
        row = []
        for col in _CSV_COLUMNS:
            if col == "err_kind":
                row.append(report["err"]["kind"])
            elif col == "err_value":
                row.append(repr(report["err"]["value"]))
            elif col == "p":
                row.append(repr(report["p"]))
            elif col in ("input", "options", "extras"):
                value = report.get(col)
                row.append(json.dumps(value, sort_keys=True) if value else "")
            else:
                value = report.get(col)
                row.append("" if value is None else value)
        writer.writerow(row)
    else:
        json.dump(report, sys.stdout, indent=2)
        sys.stdout.write("\n")


def _print_error(code: str, message: str):
    json.dump({"error": {"code": code, "message": message}}, sys.stdout)
    sys.stdout.write("\n")
    print(f"slepian-ncp: error: {message}", file=sys.stderr)


def _load_boundary(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise _InputError(f"cannot read boundary file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _InputError(f"boundary file {path!r} is not valid JSON: {exc}") from exc
    from .boundary import boundary_from_json

    try:
        return boundary_from_json(obj)
    except ValueError as exc:
        raise _InputError(f"invalid boundary in {path!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_constant(args) -> int:
    from .closedform import constant_ncp

    t0 = time.perf_counter()
    r = constant_ncp(args.a)
    ms = 1e3 * (time.perf_counter() - t0)
    _emit(_report({"type": "constant", "a": args.a}, "closed_form_constant",
                  r.p, 0.0, ms, n_evals=1, options={"a": args.a},
                  extras={"branch": r.branch}), args.format)
    return EXIT_OK


def _cmd_linear(args) -> int:
    from .closedform import linear_ncp

    t0 = time.perf_counter()
    r = linear_ncp(args.a, args.b)
    ms = 1e3 * (time.perf_counter() - t0)
    _emit(_report({"type": "linear", "a": args.a, "b": args.b},
                  "closed_form_linear", r.p, 0.0, ms, n_evals=1,
                  options={"a": args.a, "b": args.b},
                  extras={"branch": r.branch}), args.format)
    return EXIT_OK


def _cmd_piecewise(args) -> int:
    b = _load_boundary(args.file)
    from .boundary import boundary_to_json
    from .integrate import McConfig, QuadratureConfig, dispatch

    quad_cfg = QuadratureConfig(abs_tol=args.tol)
    mc_cfg = McConfig(n_samples=args.samples, sampler=args.sampler, seed=args.seed)
    t0 = time.perf_counter()
    result = dispatch(b, prefs=args.method, quad_cfg=quad_cfg, mc_cfg=mc_cfg)
    ms = 1e3 * (time.perf_counter() - t0)
    options = {
        "method": args.method or "auto",
        "samples": args.samples,
        "tol": args.tol,
        "sampler": args.sampler,
    }
    _emit(_report(boundary_to_json(b), result.method, result.p, result.err, ms,
                  n_evals=result.n_evals, seed=result.seed, options=options),
          args.format)
    return EXIT_OK


def _cmd_general(args) -> int:
    b = _load_boundary(args.file)
    from .approx import general_ncp
    from .boundary import boundary_to_json
    from .integrate import McConfig

    mc_cfg = McConfig(n_samples=args.samples, sampler=args.sampler, seed=args.seed)
    t0 = time.perf_counter()
    trace = general_ncp(b, convergence_tol=args.tol,
                        max_segments=args.max_segments, mc_cfg=mc_cfg)
    ms = 1e3 * (time.perf_counter() - t0)
    final = trace.final
    options = {
        "tol": args.tol,
        "samples": args.samples,
        "sampler": args.sampler,
        "max_segments": args.max_segments,
    }
    extras = {
        "converged": trace.converged,
        "trace": [
            {"segments": n, "p": r.p, "err": r.err, "method": r.method}
            for n, r in trace.entries
        ],
    }
    _emit(_report(boundary_to_json(b), final.method, final.p, final.err, ms,
                  n_evals=final.n_evals, seed=args.seed, options=options,
                  extras=extras), args.format)
    if not trace.converged:
        print(
            f"slepian-ncp: estimates still moving at {args.max_segments} segments",
            file=sys.stderr,
        )
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def _dump_paths_csv(path, n_dump, steps, seed):
    from .oracle import simulate_slepian

    if n_dump < 1:
        raise _InputError(f"--dump-count must be >= 1, got {n_dump}")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["path", "t", "value"])
            for i, sample in enumerate(simulate_slepian(n_dump, steps, seed)):
                for t, v in zip(sample.grid, sample.values):
                    writer.writerow([i, f"{t:.10g}", f"{v:.17g}"])
    except OSError as exc:
        raise _InputError(f"cannot write path dump {path!r}: {exc}") from exc


def _cmd_oracle(args) -> int:
    b = _load_boundary(args.file)
    from .boundary import boundary_to_json
    from .oracle import oracle_ncp

    if args.dump_paths:
        _dump_paths_csv(args.dump_paths, min(args.dump_count, args.paths),
                        args.steps, args.seed)
    t0 = time.perf_counter()
    est = oracle_ncp(b, args.paths, args.steps, args.seed)
    ms = 1e3 * (time.perf_counter() - t0)
    extras = {"grid_steps": est.grid_steps}
    if est.coarse is not None:
        extras["coarse"] = {
            "p": est.coarse.p_hat,
            "se": est.coarse.se,
            "grid_steps": est.coarse.grid_steps,
        }
    _emit(_report(boundary_to_json(b), "oracle", est.p_hat, est.se, ms,
                  n_paths=est.n_paths, seed=args.seed,
                  options={"paths": args.paths, "steps": args.steps},
                  extras=extras), args.format)
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def _closed_form_row(b):
    """(method, result) for boundaries with a closed form, else None."""
    from .boundary import Constant, Linear, PiecewiseLinearBoundary, segment_params
    from .closedform import constant_ncp, linear_ncp

    if isinstance(b, Constant):
        return "closed_form_constant", constant_ncp(b.a)
    if isinstance(b, Linear):
        return "closed_form_linear", linear_ncp(b.a, b.b)
    if isinstance(b, PiecewiseLinearBoundary) and b.n_segments == 1:
        seg = segment_params(b)[0]
        if seg.b == 0.0:
            return "closed_form_constant", constant_ncp(seg.a)
        return "closed_form_linear", linear_ncp(seg.a, seg.b)
    return None


def _cmd_compare(args) -> int:
    b = _load_boundary(args.file)
    from .boundary import as_piecewise, boundary_to_json
    from .integrate import (
        MAX_QUAD_SEGMENTS,
        McConfig,
        QuadratureConfig,
        piecewise_ncp_mc,
        piecewise_ncp_quadrature,
    )
    from .oracle import oracle_ncp

    t0 = time.perf_counter()
    pl = as_piecewise(b) if not hasattr(b, "n_segments") else b
    rows = []  # (method, p, err, half_width)

    cf = _closed_form_row(b)
    if cf is not None:
        method, r = cf
        rows.append((method, r.p, 0.0, _EXACT_TOL))

    if pl.n_segments <= MAX_QUAD_SEGMENTS:
        quad = piecewise_ncp_quadrature(pl, QuadratureConfig(abs_tol=args.tol))
        rows.append((quad.method, quad.p, quad.err, max(quad.err, args.tol)))

    mc_cfg = McConfig(n_samples=args.samples, sampler=args.sampler, seed=args.seed)
    mc = piecewise_ncp_mc(pl, mc_cfg)
    rows.append((mc.method, mc.p, mc.err, _Z_MC * mc.err))

    est = oracle_ncp(b, args.paths, args.steps, args.seed)
    rows.append(("oracle", est.p_hat, est.se,
                 _Z_MC * est.se + args.bias_allowance))

    worst = None  # (delta - allowed, pair, delta, allowed)
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            delta = abs(rows[i][1] - rows[j][1])
            allowed = rows[i][3] + rows[j][3]
            margin = float(delta - allowed)
            if worst is None or margin > worst[0]:
                worst = (margin, (rows[i][0], rows[j][0]), float(delta),
                         float(allowed))
    agree = bool(worst is None or worst[0] <= 0.0)
    ms = 1e3 * (time.perf_counter() - t0)

    if args.format == "json":
        payload = {
            "input": {"boundary": boundary_to_json(b)},
            "rows": [
                {"method": m, "p": float(p), "err": float(e),
                 "half_width": float(hw)}
                for m, p, e, hw in rows
            ],
            "agree": agree,
            "worst_pair": None if worst is None else {
                "methods": list(worst[1]),
                "delta": worst[2],
                "allowed": worst[3],
            },
            "seed": args.seed,
            "wall_time_ms": round(ms, 3),
            "version": __version__,
        }
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        print(f"{'method':<22}{'p':>14}{'err':>12}{'half_width':>12}")
        for m, p, e, hw in rows:
            print(f"{m:<22}{p:>14.9f}{e:>12.3e}{hw:>12.3e}")
        if worst is not None:
            state = "OK" if agree else "DISAGREEMENT"
            print(f"agreement: {state} (worst pair {worst[1][0]} vs {worst[1][1]}: "
                  f"|delta| = {worst[2]:.3e}, allowed {worst[3]:.3e})")
    return EXIT_OK if agree else EXIT_DISAGREEMENT


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

_HANDLERS = {
    "constant": _cmd_constant,
    "linear": _cmd_linear,
    "piecewise": _cmd_piecewise,
    "general": _cmd_general,
    "oracle": _cmd_oracle,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ValueError as exc:  # malformed environment override
        _print_error("invalid_input", str(exc))
        return EXIT_INPUT
    _apply_thread_cap(args.threads)
    from .integrate import DimensionTooLarge, NonConvergence

    try:
        return _HANDLERS[args.command](args)
    except _InputError as exc:
        _print_error("invalid_input", str(exc))
        return EXIT_INPUT
    except DimensionTooLarge as exc:
        _print_error("dimension_too_large", f"DimensionTooLarge: {exc}")
        return EXIT_INPUT
    except NonConvergence as exc:
        _print_error("non_convergence", f"NonConvergence: {exc}")
        return EXIT_NONCONVERGENCE
    except ValueError as exc:
        _print_error("invalid_input", str(exc))
        return EXIT_INPUT


def run(argv) -> int:
    """Execute one compute subcommand (full argv, e.g. ["constant", "--a", "0"])."""
    return main(list(argv))


def compare(argv) -> int:
    """Execute the compare subcommand; ``argv`` holds its flags only."""
    return main(["compare", *argv])
