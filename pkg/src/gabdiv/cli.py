"""Command-line interface: batch evaluation, validation, curves, and checks.

Numbers are printed with 17 significant digits and all randomness flows from
a single seed (flag --seed, overridden by the GABDIV_SEED environment
variable), so identical invocations produce byte-identical output.

Exit codes: 0 success, 64 usage error, 65 data error, 70 internal numeric
error.  ``validate-psi`` exits 0/1/2 for valid/invalid/inconclusive.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import divergence as dv
from . import entropy as en
from . import maxent as me
from .errors import (
    BadParams,
    DimensionMismatch,
    GabdivError,
    Infeasible,
    InvalidMeasure,
    NonFiniteResult,
    NotConverged,
    StepFailed,
    UnsupportedSupport,
)
from .measures import Hyper, Measure
from .psi import CheckOptions, Verdict, check_validity, parse_spec

EX_OK = 0
EX_USAGE = 64
EX_DATA = 65
EX_NUMERIC = 70

_DATA_ERRORS = (InvalidMeasure, BadParams, DimensionMismatch)
_NUMERIC_ERRORS = (NonFiniteResult, UnsupportedSupport, NotConverged,
                   StepFailed, Infeasible)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


# ---------------------------------------------------------------------------
# Deterministic serialization (17 significant digits)
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0.0:
        x = 0.0  # print negative zero as 0
    return format(float(x), ".17g")


def to_json_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad}  "{k}": {to_json_text(v, indent + 1)}' for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [to_json_text(v, indent + 1) for v in obj]
        return "[" + ", ".join(items) + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    return json.dumps(str(obj))


def _emit_json(obj) -> None:
    sys.stdout.write(to_json_text(obj) + "\n")


def _csv_num(x: float) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0
    return format(x, ".17g")


def _emit_csv_pairs(rows) -> None:
    for key, value in rows:
        sys.stdout.write(f"{key},{_csv_num(value)}\n")


def _load_measure(path: str) -> Measure:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InvalidMeasure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidMeasure(f"{path} is not valid JSON: {exc}") from exc
    return Measure.from_dict(obj)


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise BadParams(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise BadParams(f"{path} is not valid JSON: {exc}") from exc


def _resolve_seed(args) -> int:
    env = os.environ.get("GABDIV_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise BadParams(f"GABDIV_SEED must be an integer, got {env!r}") from exc
    return args.seed


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_div(args) -> int:
    P = _load_measure(args.p)
    Q = _load_measure(args.q)
    h = Hyper.of(args.alpha, args.beta)
    f = parse_spec(args.psi)
    result = dv.gab(P, Q, h, f)
    if args.format == "csv":
        _emit_csv_pairs([("value", result.value), ("scale", result.scale)])
    else:
        _emit_json(result.to_dict())
    return EX_OK


def _cmd_entropy(args) -> int:
    P = _load_measure(args.p)
    h = Hyper.of(args.alpha, args.beta)
    f = parse_spec(args.psi)
    result = en.gabe(P, h, f)
    if args.format == "csv":
        _emit_csv_pairs([("value", result.value), ("scaled_value", result.scaled_value)])
    else:
        _emit_json(result.to_dict())
    return EX_OK


def _cmd_validate_psi(args) -> int:
    h = Hyper.of(args.alpha, args.beta)
    f = parse_spec(args.psi)
    opts = CheckOptions(
        grid_lo=args.grid_lo,
        grid_hi=args.grid_hi,
        grid_points=args.grid_points,
        witness_budget=args.budget,
        seed=_resolve_seed(args),
    )
    report = check_validity(f, h, opts)
    _emit_json(report.to_dict())
    return {Verdict.VALID: 0, Verdict.INVALID: 1, Verdict.INCONCLUSIVE: 2}[report.verdict]


def _cmd_maxent(args) -> int:
    problem = me.MaxEntProblem.from_dict(_load_json(args.problem))
    opts = me.SolveOptions(tol=args.tol, max_iter=args.max_iter)
    solution = me.solve(problem, opts)
    _emit_json(solution.to_dict())
    return EX_OK


def _cmd_curve(args) -> int:
    h = Hyper.of(args.alpha, args.beta)
    f = parse_spec(args.psi)
    if args.grid < 2:
        raise BadParams("curve needs a grid of at least 2 points")
    grid = np.linspace(0.0, 1.0, args.grid)
    rows = en.bernoulli_curve(h, f, grid)
    sys.stdout.write("p,entropy_scaled\n")
    for p, v in rows:
        sys.stdout.write(f"{_csv_num(p)},{_csv_num(v)}\n")
    return EX_OK


def _cmd_check_properties(args) -> int:
    from .checks import run_property_suites

    seed = _resolve_seed(args)
    rows, all_passed = run_property_suites(seed=seed, trials=args.trials)
    width = max(len(r.name) for r in rows)
    sys.stdout.write(f"{'suite'.ljust(width)}  trials  max_violation  status\n")
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        sys.stdout.write(
            f"{r.name.ljust(width)}  {r.trials:6d}  {r.max_violation:13.3e}  {status}\n"
        )
    sys.stdout.write("all suites passed\n" if all_passed else "some suites FAILED\n")
    return EX_OK if all_passed else 1


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------

def _add_common_psi(sub, with_measure_format: bool = False):
    sub.add_argument("--alpha", type=float, required=True)
    sub.add_argument("--beta", type=float, required=True)
    sub.add_argument("--psi", required=True, help="generating-function spec")
    if with_measure_format:
        sub.add_argument("--format", choices=("json", "csv"), default="json")


def _add_seed(sub):
    sub.add_argument("--seed", type=int, default=42,
                     help="RNG seed (GABDIV_SEED overrides)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gabdiv",
                     description="alpha-beta divergence family toolbox")
    sub = parser.add_subparsers(dest="command", required=True)

    p_div = sub.add_parser("div", help="divergence between two measure files")
    p_div.add_argument("p", help="JSON file for the first measure")
    p_div.add_argument("q", help="JSON file for the second measure")
    _add_common_psi(p_div, with_measure_format=True)
    p_div.set_defaults(fn=_cmd_div)

    p_ent = sub.add_parser("entropy", help="entropy of a measure file")
    p_ent.add_argument("p", help="JSON file for the measure")
    _add_common_psi(p_ent, with_measure_format=True)
    p_ent.set_defaults(fn=_cmd_entropy)

    p_val = sub.add_parser("validate-psi",
                           help="check validity conditions; exit 0/1/2")
    _add_common_psi(p_val)
    p_val.add_argument("--grid-lo", type=float, default=-30.0)
    p_val.add_argument("--grid-hi", type=float, default=30.0)
    p_val.add_argument("--grid-points", type=int, default=2001)
    p_val.add_argument("--budget", type=int, default=100_000,
                       help="witness-search evaluation budget")
    _add_seed(p_val)
    p_val.set_defaults(fn=_cmd_validate_psi)

    p_max = sub.add_parser("maxent", help="solve a maximum-entropy problem file")
    p_max.add_argument("problem", help="JSON problem file")
    p_max.add_argument("--tol", type=float, default=1e-8)
    p_max.add_argument("--max-iter", type=int, default=10_000)
    p_max.set_defaults(fn=_cmd_maxent)

    p_curve = sub.add_parser("curve", help="two-atom scaled-entropy curve as CSV")
    _add_common_psi(p_curve)
    p_curve.add_argument("--grid", type=int, default=101,
                         help="number of grid points on [0, 1]")
    p_curve.set_defaults(fn=_cmd_curve)

    p_chk = sub.add_parser("check-properties",
                           help="randomized identity/nonnegativity suites")
    p_chk.add_argument("--trials", type=int, default=1000)
    _add_seed(p_chk)
    p_chk.set_defaults(fn=_cmd_check_properties)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EX_USAGE
    except _DATA_ERRORS as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EX_DATA
    except _NUMERIC_ERRORS as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return EX_NUMERIC
    except GabdivError as exc:  # pragma: no cover - catch-all for new errors
        sys.stderr.write(f"error: {exc}\n")
        return EX_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
