"""Counterexample search for the generalized alternating inequality.

The objective is the margin ``S_m(f(a)) - f(S_m(a))`` over admissible
sequences of length m in [0, bound]; a margin below ``-tol`` is a violation.
Every candidate is repaired (clamped to [0, bound], sorted descending) before
it is evaluated, so nothing inadmissible is ever scored.

Strategies:

* ``pattern`` (default): random restarts, each followed by a coordinate
  pattern search with step bound/8, halved whenever a full sweep fails to
  improve, until the step drops below 1e-6 * bound.
* ``random``: independent order-statistic samples.
* ``grid``: every nonincreasing tuple on an evenly spaced lattice.

Restarts draw from independent streams keyed by (seed, restart index), and
results are reduced in restart order, so serial and parallel runs agree.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .expr import EvaluationError, Expr
from .inequality import AltSequence, sides
from .properties import REL_TOL

CLEAR_VIOLATION = 1e-3
STRATEGIES = ("pattern", "random", "grid")


@dataclass(frozen=True)
class SearchConfig:
    m: int
    bound: float = 10.0
    budget: int = 10_000
    seed: int = 0
    strategy: str = "pattern"
    restarts: int = 16
    workers: int = 1
    rel_tol: float = REL_TOL

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"sequence length m must be >= 1, got {self.m}")
        if not (self.bound > 0 and math.isfinite(self.bound)):
            raise ValueError(f"bound must be a positive real, got {self.bound!r}")
        if self.budget < self.m:
            raise ValueError(f"budget {self.budget} is smaller than m = {self.m}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.restarts < 1 or self.workers < 1:
            raise ValueError("restarts and workers must be >= 1")


@dataclass(frozen=True)
class SearchOutcome:
    best_seq: Optional[AltSequence]
    best_margin: float
    best_tol: float
    evaluations: int
    seed: int
    violated: bool

    def to_dict(self) -> dict:
        return {
            "best_seq": list(self.best_seq.values) if self.best_seq is not None else None,
            "best_margin": self.best_margin,
            "tol": self.best_tol,
            "evaluations": self.evaluations,
            "seed": self.seed,
            "violated": self.violated,
        }


def sample_sequences(m: int, n: int, bound: float = 10.0, seed: int = 0) -> list[AltSequence]:
    """n admissible sequences: m uniform draws on [0, bound], sorted descending."""
    if m < 1 or n < 1:
        raise ValueError("need m >= 1 and n >= 1")
    draws = np.random.default_rng(seed).uniform(0.0, bound, size=(n, m))
    draws = -np.sort(-draws, axis=1)
    return [AltSequence(tuple(row.tolist())) for row in draws]


def repair(values, bound: float) -> tuple[float, ...]:
    clipped = [min(max(float(v), 0.0), bound) for v in values]
    return tuple(sorted(clipped, reverse=True))


class _Objective:
    """Counts evaluations and tracks the best candidate of one run."""

    def __init__(self, expr: Expr, cap: int, rel: float):
        self.expr = expr
        self.cap = cap
        self.rel = rel
        self.evals = 0
        self.best: Optional[tuple[float, ...]] = None
        self.best_margin = math.inf
        self.best_tol = 0.0
        self.clear = False

    @property
    def exhausted(self) -> bool:
        return self.evals >= self.cap or self.clear

    def __call__(self, values: tuple[float, ...]) -> float:
        self.evals += 1
        try:
            _, _, margin, tol = sides(self.expr, values, self.rel)
        except EvaluationError:
            return math.inf
        if margin < self.best_margin:
            self.best, self.best_margin, self.best_tol = values, margin, tol
            if margin < -tol - CLEAR_VIOLATION:
                self.clear = True
        return margin


@dataclass(frozen=True)
class _RunResult:
    best: Optional[tuple[float, ...]]
    margin: float
    tol: float
    evals: int
    clear: bool


def _pattern_restart(expr: Expr, cfg: SearchConfig, index: int, cap: int) -> _RunResult:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(index,)))
    obj = _Objective(expr, cap, cfg.rel_tol)
    A = cfg.bound
    x = repair(rng.uniform(0.0, A, cfg.m), A)
    fx = obj(x)
    step = A / 8
    while step >= 1e-6 * A and not obj.exhausted:
        improved = False
        for i in range(cfg.m):
            for d in (step, -step):
                if obj.exhausted:
                    break
                trial = list(x)
                trial[i] += d
                cand = repair(trial, A)
                fc = obj(cand)
                if fc < fx:
                    x, fx, improved = cand, fc, True
                    break
        if not improved:
            step /= 2
    return _RunResult(obj.best, obj.best_margin, obj.best_tol, obj.evals, obj.clear)


def _pattern(expr: Expr, cfg: SearchConfig) -> list[_RunResult]:
    per_restart = max(cfg.m + 1, cfg.budget // cfg.restarts)
    runs: list[_RunResult] = []
    remaining = cfg.budget
    index = 0
    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        while remaining > 0:
            if pool is None:
                batch = [_pattern_restart(expr, cfg, index, min(per_restart, remaining))]
            else:
                # Speculative batch at the full per-restart cap; a run that
                # would have been cut short by the remaining budget is replayed.
                jobs = [pool.submit(_pattern_restart, expr, cfg, index + k, per_restart)
                        for k in range(cfg.workers)]
                batch = [j.result() for j in jobs]
            for run in batch:
                if run.evals > remaining:
                    run = _pattern_restart(expr, cfg, index, remaining)
                runs.append(run)
                remaining -= run.evals
                index += 1
                if run.clear or remaining <= 0:
                    return runs
    finally:
        if pool is not None:
            pool.shutdown()
    return runs


def _random(expr: Expr, cfg: SearchConfig) -> list[_RunResult]:
    obj = _Objective(expr, cfg.budget, cfg.rel_tol)
    rng = np.random.default_rng(cfg.seed)
    while not obj.exhausted:
        obj(repair(rng.uniform(0.0, cfg.bound, cfg.m), cfg.bound))
    return [_RunResult(obj.best, obj.best_margin, obj.best_tol, obj.evals, obj.clear)]


def _grid(expr: Expr, cfg: SearchConfig) -> list[_RunResult]:
    # Largest lattice whose nonincreasing m-tuples fit in the budget.
    k = 2
    while math.comb(k + 1 + cfg.m - 1, cfg.m) <= cfg.budget:
        k += 1
    levels = np.linspace(0.0, cfg.bound, k).tolist()
    obj = _Objective(expr, cfg.budget, cfg.rel_tol)
    for combo in itertools.combinations_with_replacement(reversed(levels), cfg.m):
        if obj.exhausted:
            break
        obj(tuple(combo))
    return [_RunResult(obj.best, obj.best_margin, obj.best_tol, obj.evals, obj.clear)]


def search_violation(expr: Expr, cfg: SearchConfig) -> SearchOutcome:
    """Minimize the margin over admissible sequences of length ``cfg.m``.

    Stops when the budget is spent or a clear violation (margin below
    ``-tol - 1e-3``) is found.  The best run wins; ties go to the earliest run.
    """
    runner = {"pattern": _pattern, "random": _random, "grid": _grid}[cfg.strategy]
    runs = runner(expr, cfg)
    evaluations = sum(r.evals for r in runs)
    best = None
    for r in runs:
        if r.best is not None and (best is None or r.margin < best.margin):
            best = r
    if best is None:
        return SearchOutcome(None, math.inf, 0.0, evaluations, cfg.seed, False)
    return SearchOutcome(
        best_seq=AltSequence(best.best),
        best_margin=best.margin,
        best_tol=best.tol,
        evaluations=evaluations,
        seed=cfg.seed,
        violated=best.margin < -best.tol,
    )


def max_workers() -> int:
    return max(2, os.cpu_count() or 1)
