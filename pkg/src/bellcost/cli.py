"""Command-line front end.

Every command reads and writes JSON files; ``-`` stands for stdin/stdout.
Failures print ``{"code": ..., "message": ...}`` on stderr and exit with

1  usage, parse or I/O error
2  validation failure (normalisation, independence, degenerate settings)
3  capacity exceeded
4  solver failure
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .exceptions import (
    BellCostError,
    CapacityError,
    DegenerateSetting,
    IndependenceViolation,
    NormalizationError,
    SolverError,
)
from .fraction import causal_fraction, frugal_decomposition
from .models import construct, eval_statistics, model_from_dict, model_to_dict
from .quantum import SCENARIOS, chsh_value, named_statistics
from .simulator import run_frugal
from .statistics import (
    EPS_FILE,
    SettingsDistribution,
    check_assumption1,
    dumps,
    loads,
    statistics_from_dict,
    statistics_to_dict,
    validate,
)

EXIT_USAGE, EXIT_INVALID, EXIT_CAPACITY, EXIT_SOLVER = 1, 2, 3, 4
REPRODUCTION_TOL = 1e-9


class UsageError(Exception):
    code = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(value):
    """Nine significant digits, trailing zeros kept."""
    return f"{value:#.9g}"


def _read(path):
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path, text):
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_stats(path):
    return statistics_from_dict(loads(_read(path)))


def _parse_settings(text):
    """``"0.3,0.7;0.6,0.4"`` -> product of ``P_x`` and ``P_y``."""
    try:
        px, py = (np.array([float(v) for v in part.split(",")]) for part in text.split(";"))
    except ValueError:
        raise UsageError(f"--settings expects 'px0,px1,...;py0,py1,...', got {text!r}") from None
    return SettingsDistribution.product(px, py)


def cmd_validate(args):
    stats = _load_stats(args.stats)
    norm = validate(stats, args.tol)
    indep = check_assumption1(stats, args.tol)
    doc = {"normalization": norm.to_dict(), "independence": indep.to_dict()}
    doc["valid"] = norm.valid and indep.passed
    _write("-", dumps(doc))
    return 0 if doc["valid"] else EXIT_INVALID


def cmd_gen(args):
    settings = _parse_settings(args.settings) if args.settings else None
    try:
        stats = named_statistics(args.scenario, settings)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(args.output, dumps(statistics_to_dict(stats)))
    return 0


def cmd_construct(args):
    stats = _load_stats(args.stats)
    model = construct(args.structure, stats, args.tol)
    again = eval_statistics(model)
    err = max(
        float(np.abs(again.behaviour.p - stats.behaviour.p).max()),
        float(np.abs(again.settings.p - stats.settings.p).max()),
    )
    if err > REPRODUCTION_TOL:
        raise NormalizationError(f"constructed model misses the input by {err:.3g}")
    _write(args.output, dumps(model_to_dict(model)))
    print(f"reproduction error = {fmt(err)}", file=sys.stderr)
    return 0


def cmd_eval(args):
    model = model_from_dict(loads(_read(args.model)), tol=args.tol)
    _write(args.output, dumps(statistics_to_dict(eval_statistics(model))))
    return 0


def cmd_fraction(args):
    stats = _load_stats(args.stats)
    result = causal_fraction(stats.behaviour, args.tol)
    lines = [f"q = {fmt(result.q)}"]
    for k in result.support():
        lines.append(f"  w[{result.strategies.label(k)}] = {fmt(result.local_weights[k])}")
    if args.certify:
        lp_bound = 1.0 + float((result.dual * stats.behaviour.p).sum())
        lines.append(f"LP dual bound = {fmt(lp_bound)}")
        if result.chsh_bound is None:
            lines.append("dual certificate = unavailable (needs 2x2x2x2)")
        else:
            lines.append(f"dual certificate = {fmt(result.chsh_bound)}")
            if result.chsh_bound > result.q + args.tol:
                raise SolverError("CHSH certificate exceeds the LP optimum")
    print("\n".join(lines))
    if args.output:
        _write(args.output, dumps(result.to_dict()))
    return 0


def cmd_simulate(args):
    stats = _load_stats(args.stats)
    if args.n < 1:
        raise UsageError("-n must be positive")
    decomposition = frugal_decomposition(stats, args.target, args.tol)
    report = run_frugal(stats, args.target, args.n, args.seed, args.tol, decomposition)
    _write(args.output, dumps(report.to_dict()))
    return 0


def cmd_chsh(args):
    stats = _load_stats(args.stats)
    print(fmt(chsh_value(stats.behaviour)))
    return 0


def build_parser():
    parser = _Parser(prog="bellcost", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--tol", type=float, default=EPS_FILE, help="numerical tolerance")
        return p

    p = add("validate", cmd_validate, "check normalisation and a _|_ y | x, x _|_ y")
    p.add_argument("stats")

    p = add("gen", cmd_gen, f"emit a built-in scenario ({', '.join(SCENARIOS)})")
    p.add_argument("scenario")
    p.add_argument("--settings", help="product settings 'px0,px1;py0,py1' (default uniform)")
    p.add_argument("-o", "--output", default="-")

    p = add("construct", cmd_construct, "build an nl/r/nf model reproducing the statistics")
    p.add_argument("structure", choices=["nl", "r", "nf"])
    p.add_argument("stats")
    p.add_argument("-o", "--output", default="-")

    p = add("eval", cmd_eval, "statistics generated by a model")
    p.add_argument("model")
    p.add_argument("-o", "--output", default="-")

    p = add("fraction", cmd_fraction, "causal fraction via linear programming")
    p.add_argument("stats")
    p.add_argument("--certify", action="store_true", help="print dual bounds")
    p.add_argument("-o", "--output", help="write the full result as JSON")

    p = add("simulate", cmd_simulate, "Monte Carlo run of the frugal protocol")
    p.add_argument("stats")
    p.add_argument("--target", required=True, choices=["nl", "r", "nf"])
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output", default="-")

    p = add("chsh", cmd_chsh, "CHSH value S of a 2x2x2x2 behaviour")
    p.add_argument("stats")
    return parser


def _exit_code(exc):
    if isinstance(exc, (NormalizationError, IndependenceViolation, DegenerateSetting)):
        return EXIT_INVALID
    if isinstance(exc, CapacityError):
        return EXIT_CAPACITY
    if isinstance(exc, SolverError):
        return EXIT_SOLVER
    return EXIT_USAGE


def _fail(code, message, status):
    sys.stderr.write(json.dumps({"code": code, "message": message}, sort_keys=True) + "\n")
    return status


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except BellCostError as exc:
        return _fail(exc.code, str(exc), _exit_code(exc))
    except OSError as exc:
        return _fail("io", str(exc), EXIT_USAGE)
    except ValueError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
