"""Command-line front end.

Subcommands: classify, check, szego, weinberger, search, replicate.

Exit codes: 0 when every check holds (or every replication matches), 1 when a
violation or mismatch is found, 2 on bad input.  A human-readable summary goes
to stdout; ``--json PATH`` writes the machine report (``--json -`` sends it to
stdout instead of the summary).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from .expr import EvaluationError, Expr, ExprError, Exp, Floor, Power, XLogX, parse
from .inequality import (
    EvenLength,
    InvalidExponent,
    SequenceError,
    check_generalized,
    check_szego,
    check_weinberger,
    validate_sequence,
)
from .properties import REL_TOL, GridSpec, Status, classify, propagate
from .search import STRATEGIES, SearchConfig, max_workers, search_violation

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2
SEED_ENV = "ALTSUM_SEED"


class InputError(Exception):
    """Bad user input; maps to exit code 2."""


@dataclass
class Report:
    command: list
    expression: Optional[str] = None
    properties: Optional[dict] = None
    checks: list = field(default_factory=list)
    search: Optional[dict] = None
    replications: Optional[list] = None
    seed: Optional[int] = None
    tolerance: float = REL_TOL
    exit_code: int = EXIT_OK
    timing: float = 0.0
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "tool_version": __version__,
            "command": self.command,
            "expression": self.expression,
            "properties": self.properties,
            "checks": self.checks,
            "search": self.search,
            "replications": self.replications,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "exit_code": self.exit_code,
            "timing": {"seconds": self.timing},
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(_json_safe(self.to_dict()), indent=2, sort_keys=True) + "\n"


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# Input helpers
# ---------------------------------------------------------------------------

def _parse_expr(text: Optional[str]) -> Expr:
    if text is None:
        raise InputError("--expr is required")
    try:
        return parse(text)
    except ExprError as exc:
        raise InputError(f"cannot parse expression {text!r}: {exc}") from None


def _parse_values(text: str, where: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise InputError(f"{where}: not a comma-separated list of numbers: {text!r}") from None
    if not values:
        raise InputError(f"{where}: empty sequence")
    return values


def read_sequence_file(path: str) -> list[tuple[str, list[float]]]:
    """One comma-separated sequence per line; '#' starts a comment."""
    out = []
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"cannot read sequence file: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if line:
            where = f"{path}:{lineno}"
            out.append((where, _parse_values(line, where)))
    return out


def _sequences(args):
    raw = [(f"--seq #{i + 1}", _parse_values(s, f"--seq #{i + 1}")) for i, s in enumerate(args.seq or [])]
    if args.seq_file:
        raw += read_sequence_file(args.seq_file)
    if not raw:
        raise InputError("no sequences given (use --seq or --seq-file)")
    seqs = []
    for where, values in raw:
        try:
            seqs.append(validate_sequence(values))
        except SequenceError as exc:
            raise InputError(f"{where}: inadmissible sequence {values}: {exc}") from None
    return seqs


def _grid(args) -> GridSpec:
    try:
        return GridSpec(bound=args.bound, n=args.grid_n)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {env!r}") from None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def run_classify(args, report: Report) -> None:
    expr = _parse_expr(args.expr)
    report.expression = str(expr)
    try:
        result = classify(expr, _grid(args), force_grid=args.force_grid)
    except EvaluationError as exc:
        raise InputError(f"evaluation failed on the grid: {exc}") from None
    report.properties = result.to_dict()
    report.properties["conflicts"] = result.conflicts()
    report.exit_code = EXIT_VIOLATION if result.conflicts() else EXIT_OK


def _run_checks(args, report: Report, check, expr_for_report: Expr) -> None:
    report.expression = str(expr_for_report)
    report.properties = {"propagated": propagate(expr_for_report).to_dict()}
    for seq in _sequences(args):
        try:
            res = check(seq)
        except EvaluationError as exc:
            raise InputError(f"sequence {list(seq.values)}: {exc}") from None
        report.checks.append(res.to_dict())
    report.exit_code = EXIT_OK if all(c["holds"] for c in report.checks) else EXIT_VIOLATION


def run_check(args, report: Report) -> None:
    expr = _parse_expr(args.expr)
    _run_checks(args, report, lambda s: check_generalized(expr, s, args.tol), expr)


def run_szego(args, report: Report) -> None:
    expr = _parse_expr(args.expr)

    def check(seq):
        try:
            return check_szego(expr, seq, args.tol)
        except EvenLength as exc:
            raise InputError(f"sequence {list(seq.values)}: {exc}") from None
    _run_checks(args, report, check, expr)
    relaxed = [c["sequence"] for c in report.checks
               if any(a == b for a, b in zip(c["sequence"], c["sequence"][1:])) or c["sequence"][-1] == 0]
    if relaxed:
        report.notes.append("odd-length check applied to sequences with ties or a zero last term "
                            f"(non-strict ordering): {relaxed}")


def run_weinberger(args, report: Report) -> None:
    r = args.r
    if r is None:
        expr = _parse_expr(args.expr)
        if not isinstance(expr, Power):
            raise InputError("weinberger needs --r or an --expr of the form pow(r)")
        r = expr.r
    if not r > 1:
        raise InputError(f"invalid exponent: Weinberger's inequality needs r > 1, got {r!r}")

    def check(seq):
        try:
            return check_weinberger(r, seq, args.tol)
        except InvalidExponent as exc:
            raise InputError(str(exc)) from None
    _run_checks(args, report, check, Power(r))


def run_search(args, report: Report) -> None:
    expr = _parse_expr(args.expr)
    report.expression = str(expr)
    try:
        cfg = SearchConfig(m=args.m, bound=args.bound, budget=args.budget, seed=report.seed,
                           strategy=args.strategy, workers=args.workers, rel_tol=args.tol)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    report.properties = {"propagated": propagate(expr).to_dict()}
    outcome = search_violation(expr, cfg)
    report.search = outcome.to_dict()
    report.search.update(m=cfg.m, bound=cfg.bound, budget=cfg.budget, strategy=cfg.strategy)
    report.exit_code = EXIT_VIOLATION if outcome.violated else EXIT_OK


# Values printed with the counterexample for f(x) = e^x on (1, 0.1).
EXP_EXAMPLE_LHS, EXP_EXAMPLE_RHS = 2.4596, 1.61311


def replications(rel: float = REL_TOL) -> list[dict]:
    """Every numeric instance worked out for the alternating inequality."""
    items = []

    def add(name, ok, **detail):
        items.append({"name": name, "match": bool(ok), **detail})

    r = check_generalized(Exp(), validate_sequence([1, 0.1]), rel)
    add("exp counterexample on (1, 0.1)",
        abs(r.lhs - EXP_EXAMPLE_LHS) <= 1e-3 and abs(r.rhs - EXP_EXAMPLE_RHS) <= 1e-3 and r.violated,
        expected={"lhs": EXP_EXAMPLE_LHS, "rhs": EXP_EXAMPLE_RHS, "violated": True}, result=r.to_dict())

    r = check_generalized(Floor(), validate_sequence([4.6, 3.1, 2.8, 1.2]), rel)
    add("floor fails on (4.6, 3.1, 2.8, 1.2)",
        r.lhs == 3 and r.rhs == 2 and r.margin == -1 and r.violated,
        expected={"lhs": 3, "rhs": 2, "margin": -1, "violated": True}, result=r.to_dict())

    for power, seq, lhs, rhs in [(2.0, [3, 2, 1], 4.0, 6.0), (3.5, [1, 1], 0.0, 0.0)]:
        r = check_weinberger(power, validate_sequence(seq), rel)
        add(f"weinberger r = {power:g} on {tuple(seq)}",
            r.holds and math.isclose(r.lhs, lhs, abs_tol=1e-12) and math.isclose(r.rhs, rhs, abs_tol=1e-12),
            expected={"lhs": lhs, "rhs": rhs, "holds": True}, result=r.to_dict())
    for power, seq in [(1.5, [5, 3, 2]), (2.0, [4, 3, 2, 1]), (7.3, [9.5, 6.25, 6.25, 0.5, 0.0])]:
        r = check_weinberger(power, validate_sequence(seq), rel)
        add(f"weinberger r = {power:g} on {tuple(seq)}", r.holds,
            expected={"holds": True}, result=r.to_dict())

    expected_classes = [
        (Floor(), {"in_W": Status.PROVEN, "convex": Status.REFUTED}),
        (XLogX(), {"in_W": Status.PROVEN, "convex": Status.PROVEN}),
        (Exp(), {"in_W": Status.REFUTED, "convex": Status.PROVEN}),
    ]
    for expr, want in expected_classes:
        got = classify(expr).merged
        add(f"classify {expr}", all(got[k].value is v for k, v in want.items()),
            expected={k: v.value for k, v in want.items()},
            result={k: got[k].to_dict() for k in want})
    return items


def run_replicate(args, report: Report) -> None:
    report.replications = replications(args.tol)
    report.exit_code = EXIT_OK if all(i["match"] for i in report.replications) else EXIT_VIOLATION


COMMANDS = {
    "classify": run_classify,
    "check": run_check,
    "szego": run_szego,
    "weinberger": run_weinberger,
    "search": run_search,
    "replicate": run_replicate,
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    return f"{x:.10g}" if isinstance(x, float) else str(x)


def render_table(report: Report) -> str:
    lines = []
    if report.expression is not None:
        lines.append(f"expression: {report.expression}")
    props = (report.properties or {}).get("properties")
    if props:
        lines.append(f"{'property':<16} {'status':<8} provenance")
        for name, st in props.items():
            if st.get("witness"):
                w = st["witness"]
                how = f"witness {tuple(w['point'])}, violation {_fmt(w['violation'])}"
            else:
                how = " <- ".join(reversed(st["rules"])) or "-"
            lines.append(f"{name:<16} {st['status']:<8} {how}")
    if report.checks:
        lines.append(f"{'kind':<12} {'lhs':>16} {'rhs':>16} {'margin':>16}  verdict  sequence")
        for c in report.checks:
            verdict = "holds" if c["holds"] else "VIOLATED"
            lines.append(f"{c['kind']:<12} {_fmt(c['lhs']):>16} {_fmt(c['rhs']):>16} "
                         f"{_fmt(c['margin']):>16}  {verdict:<8} {c['sequence']}")
    if report.search:
        s = report.search
        lines.append(f"search m={s['m']} strategy={s['strategy']} seed={s['seed']} "
                     f"evaluations={s['evaluations']}")
        lines.append(f"  best margin {_fmt(s['best_margin'])} at {s['best_seq']}: "
                     + ("VIOLATED" if s["violated"] else "no violation found"))
    if report.replications:
        for item in report.replications:
            lines.append(f"[{'ok' if item['match'] else 'MISMATCH'}] {item['name']}")
    lines.extend(f"note: {n}" for n in report.notes)
    lines.append(f"seed={report.seed} tolerance={report.tolerance:g} exit={report.exit_code}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--expr", help="function expression in the DSL, e.g. 'pow(2) + pow(4)'")
    common.add_argument("--seq", action="append", help="comma-separated nonincreasing sequence (repeatable)")
    common.add_argument("--seq-file", help="file with one comma-separated sequence per line")
    common.add_argument("-m", "--m", type=int, default=2, help="sequence length for search")
    common.add_argument("--r", type=float, help="exponent for the weinberger subcommand")
    common.add_argument("--budget", type=int, default=10_000, help="max evaluations for search")
    common.add_argument("--seed", type=int, default=None, help=f"random seed (default ${SEED_ENV} or 0)")
    common.add_argument("--bound", type=float, default=10.0, help="domain bound A")
    common.add_argument("--grid-n", type=int, default=200, help="grid points per axis")
    common.add_argument("--strategy", choices=STRATEGIES, default="pattern")
    common.add_argument("--workers", type=int, default=1,
                        help=f"parallel search restarts (0 = {max_workers()})")
    common.add_argument("--tol", type=float, default=REL_TOL, help="relative tolerance")
    common.add_argument("--force-grid", action="store_true", help="grid-test proven properties too")
    common.add_argument("--json", dest="json_out", help="write the JSON report here ('-' for stdout)")

    parser = argparse.ArgumentParser(prog="altsum", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "classify": "derive and grid-test properties of an expression",
        "check": "check the generalized inequality on given sequences",
        "szego": "check Szegő's inequality (odd-length sequences)",
        "weinberger": "check Weinberger's inequality for x^r, r > 1",
        "search": "search for a violating sequence",
        "replicate": "re-run the worked numeric examples",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT

    start = time.perf_counter()
    report = Report(command=argv, tolerance=args.tol)
    try:
        report.seed = args.seed if args.seed is not None else _default_seed()
        if args.workers == 0:
            args.workers = max_workers()
        if not (args.tol >= 0 and math.isfinite(args.tol)):
            raise InputError(f"--tol must be a nonnegative real, got {args.tol!r}")
        COMMANDS[args.command](args, report)
    except (InputError, ValueError, ArithmeticError) as exc:
        print(f"altsum: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report.timing = time.perf_counter() - start

    if args.json_out == "-":
        sys.stdout.write(report.to_json())
    else:
        print(render_table(report))
        if args.json_out:
            try:
                with open(args.json_out, "w", encoding="utf-8") as fh:
                    fh.write(report.to_json())
            except OSError as exc:
                print(f"altsum: error: cannot write report: {exc}", file=sys.stderr)
                return EXIT_INPUT
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
