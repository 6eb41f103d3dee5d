"""Acceptance gate. Each test prints one PASS/FAIL line for its criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary.
"""

import statistics
import time

import numpy as np
import pytest

from altsum.cli import main
from altsum.corpus import corpus, random_expr
from altsum.expr import Exp, Floor, depth, evaluate, parse, to_text
from altsum.inequality import (
    check_generalized,
    check_szego,
    check_weinberger,
    validate_sequence,
)
from altsum.properties import (
    GridSpec,
    classify,
    propagate,
    test_monotonicity as monotonicity_tester,
    test_w_difference as w_difference_tester,
    test_w_membership as w_membership_tester,
    violation,
)
from altsum.search import SearchConfig, max_workers, search_violation

from acceptance_log import record

CORPUS = corpus()
POWER_SUM = "pow(2)+pow(4)+pow(6)"
SUITE = {}


@pytest.fixture(autouse=True, scope="module")
def suite_clock():
    SUITE["start"] = time.perf_counter()


def median_runtime(fn, repeats=101):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def random_sequences(n, seed, lengths, bound=10.0):
    """``n`` admissible sequences with lengths drawn from ``lengths``."""
    rng = np.random.default_rng(seed)
    out = []
    for m in rng.choice(lengths, size=n):
        values = np.sort(rng.uniform(0, bound, m))[::-1]
        out.append(validate_sequence(values.tolist()))
    return out


def test_criterion_01_exp_counterexample():
    seq = validate_sequence([1, 0.1])
    r = check_generalized(Exp(), seq)
    secs = median_runtime(lambda: check_generalized(Exp(), seq))
    ok = (abs(r.lhs - 2.4596) <= 1e-3 and abs(r.rhs - 1.61311) <= 1e-3
          and r.violated and secs < 1e-3)
    record(1, "exp on (1, 0.1) is violated", ok,
           f"lhs={r.lhs:.6f} rhs={r.rhs:.6f} median={secs * 1e6:.1f}us")
    assert ok


def test_criterion_02_floor_even_terms():
    seq = validate_sequence([4.6, 3.1, 2.8, 1.2])
    r = check_generalized(Floor(), seq)
    secs = median_runtime(lambda: check_generalized(Floor(), seq))
    ok = r.lhs == 3 and r.rhs == 2 and r.violated and secs < 1e-3
    record(2, "floor on (4.6, 3.1, 2.8, 1.2) is violated", ok,
           f"lhs={r.lhs} rhs={r.rhs} median={secs * 1e6:.1f}us")
    assert ok


def test_criterion_03_weinberger_suite():
    t0 = time.perf_counter()
    failures, worst = 0, np.inf
    for k, r in enumerate((1.1, 1.5, 2, 3, 7.3)):
        for seq in random_sequences(1000, seed=300 + k, lengths=np.arange(1, 10)):
            res = check_weinberger(r, seq)
            worst = min(worst, res.margin)
            failures += not res.holds
    secs = time.perf_counter() - t0
    ok = failures == 0 and secs < 10
    record(3, "power-sum inequality, 5000 sequences", ok,
           f"failures={failures} worst margin={worst:.3g} time={secs:.2f}s")
    assert ok


def test_criterion_04_odd_length_and_exp_even_search():
    t0 = time.perf_counter()
    failures = 0
    for k, text in enumerate(("exp()", "xlogx()", "pow(2)", POWER_SUM)):
        e = parse(text)
        for seq in random_sequences(1000, seed=400 + k, lengths=np.arange(1, 10, 2)):
            failures += not check_szego(e, seq).holds
    margins = {m: search_violation(Exp(), SearchConfig(m=m, budget=10_000)).best_margin
               for m in (2, 4, 6, 8)}
    secs = time.perf_counter() - t0
    found = all(v < -1e-3 for v in margins.values())
    ok = failures == 0 and found and secs < 30
    record(4, "odd-length convex suite and exp even-length search", ok,
           f"failures={failures} exp margins="
           + ",".join(f"m{m}:{v:.3g}" for m, v in margins.items()) + f" time={secs:.2f}s")
    assert ok


def test_criterion_05_generalized_suite():
    t0 = time.perf_counter()
    failures = 0
    for k, text in enumerate(("xlogx()", "exp()-id()-1", "pow(1.5)", POWER_SUM)):
        e = parse(text)
        for seq in random_sequences(1000, seed=500 + k, lengths=np.arange(1, 10)):
            failures += not check_generalized(e, seq).holds
    secs = time.perf_counter() - t0
    ok = failures == 0 and secs < 10
    record(5, "convex with f(0) <= 0, mixed parity, 4000 sequences", ok,
           f"failures={failures} time={secs:.2f}s")
    assert ok


def test_criterion_06_condition_equivalence():
    grid = GridSpec(n=200, bound=10)
    mismatched = [name for name, e in CORPUS.items()
                  if w_membership_tester(e, grid).status.value
                  is not w_difference_tester(e, grid).status.value]
    ok = len(CORPUS) == 10 and not mismatched
    record(6, "sum and difference forms agree over the corpus", ok,
           f"corpus={len(CORPUS)} mismatched={mismatched}")
    assert ok


def test_criterion_07_propagation_grid_consistency():
    conflicts, bad_witnesses = [], []
    for name, e in CORPUS.items():
        c = classify(e, GridSpec(n=200, bound=10), force_grid=True)
        conflicts += [f"{name}:{p}" for p in c.conflicts()]
        statuses = list(c.merged.items()) + list(c.propagated.items()) + [
            (p, v.status) for p, v in c.grid_verdicts.items()]
        for prop, s in statuses:
            if s.refuted:
                viol, tol = violation(e, prop, s.witness.point)
                if not viol > tol:
                    bad_witnesses.append(f"{name}:{prop}")
    ok = not conflicts and not bad_witnesses
    record(7, "no proven property is refuted on the grid; witnesses re-verify", ok,
           f"conflicts={conflicts} bad witnesses={bad_witnesses}")
    assert ok


def test_criterion_08_f0_gate_and_monotonicity():
    gate, mono = [], []
    for name, e in CORPUS.items():
        p = propagate(e)
        if p.in_W.proven and not evaluate(e, 0.0) <= 1e-9:
            gate.append(name)
        if p.in_W.proven and p.nonnegative.proven:
            if monotonicity_tester(e, GridSpec(n=200, bound=10)).status.refuted:
                mono.append(name)
    ok = not gate and not mono
    record(8, "f(0) gate and monotone nonnegative members", ok,
           f"gate failures={gate} monotonicity failures={mono}")
    assert ok


def test_criterion_09_search_determinism():
    serial = search_violation(Exp(), SearchConfig(m=2, seed=7, budget=10_000, workers=1))
    workers = max_workers()
    parallel = search_violation(Exp(), SearchConfig(m=2, seed=7, budget=10_000, workers=workers))
    ok = serial == parallel
    record(9, "serial and parallel search agree", ok,
           f"workers={workers} margin={serial.best_margin:.6g} evaluations={serial.evaluations}")
    assert ok


def test_criterion_10_round_trip():
    rng = np.random.default_rng(2024)
    trees = [random_expr(rng, max_depth=6) for _ in range(500)]
    broken = [to_text(e) for e in trees if parse(to_text(e)) != e]
    deepest = max(depth(e) for e in trees)
    ok = not broken and deepest <= 6
    record(10, "500 random trees round-trip through text", ok,
           f"broken={len(broken)} max depth={deepest}")
    assert ok


def test_criterion_11_replicate_and_suite_time(capsys):
    code = main(["replicate"])
    capsys.readouterr()
    secs = time.perf_counter() - SUITE["start"]
    ok = code == 0 and secs < 60
    with capsys.disabled():
        record(11, "replicate exits 0 and the suite runs under 60 s", ok,
               f"exit={code} suite time={secs:.2f}s")
    assert ok
