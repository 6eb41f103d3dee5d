"""Admissible sequences and the alternating-sum inequalities.

For a nonincreasing sequence a_1 >= ... >= a_m >= 0 the generalized check
compares ``f(S_m(a))`` with ``S_m(f(a))``, where ``S_m`` is the alternating
sum.  The margin ``S_m(f(a)) - f(S_m(a))`` is stored raw; ``holds`` means the
margin is not below ``-tol``.

Szegő's form is stated for strictly decreasing sequences; ties are accepted
here and the inequality is still tested.  Entries equal to 0 are admissible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .expr import EvaluationError, Expr, Power, evaluate
from .properties import REL_TOL, tolerance


class SequenceError(ValueError):
    pass


class EmptySequence(SequenceError):
    def __init__(self):
        super().__init__("sequence has no entries")


class OrderViolation(SequenceError):
    def __init__(self, index: int, values=()):
        detail = f": a[{index}] = {values[index]!r} < a[{index + 1}] = {values[index + 1]!r}" if values else ""
        super().__init__(f"order violation at index {index}{detail}")
        self.index = index


class NegativeEntry(SequenceError):
    def __init__(self, index: int, value: float = math.nan):
        super().__init__(f"negative entry at index {index}: {value!r}")
        self.index = index


class NonFiniteEntry(SequenceError):
    def __init__(self, index: int, value: float):
        super().__init__(f"non-finite entry at index {index}: {value!r}")
        self.index = index


class InvalidExponent(ValueError):
    pass


class EvenLength(ValueError):
    pass


@dataclass(frozen=True)
class AltSequence:
    """a_1 >= a_2 >= ... >= a_m >= 0, validated on construction."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise EmptySequence()
        for i, v in enumerate(vals):
            if math.isnan(v) or math.isinf(v):
                raise NonFiniteEntry(i, v)
        for i in range(len(vals) - 1):
            if vals[i] < vals[i + 1]:
                raise OrderViolation(i, vals)
        if vals[-1] < 0:
            raise NegativeEntry(len(vals) - 1, vals[-1])
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


def validate_sequence(values: Iterable[float]) -> AltSequence:
    """Return the sequence unchanged if admissible; never sorts."""
    return AltSequence(tuple(values))


def _signed(values: Sequence[float]) -> list[float]:
    return [v if s % 2 == 0 else -v for s, v in enumerate(values)]


def alt_sum(seq: AltSequence) -> float:
    """S_m = a_1 - a_2 + a_3 - ...; correctly rounded, so always in [0, a_1]."""
    return math.fsum(_signed(seq.values))


def alt_f_sum(expr: Expr, seq: AltSequence) -> float:
    """f(a_1) - f(a_2) + f(a_3) - ..."""
    return math.fsum(_signed(_f_values(expr, seq.values)))


def _f_values(expr: Expr, values: Sequence[float]) -> list[float]:
    out = []
    for i, a in enumerate(values):
        try:
            out.append(evaluate(expr, a))
        except EvaluationError as exc:
            raise EvaluationError(f"at sequence index {i}: {exc}", a) from None
    return out


@dataclass(frozen=True)
class CheckResult:
    lhs: float
    rhs: float
    margin: float
    tol: float
    kind: str
    sequence: tuple[float, ...] = ()

    @property
    def holds(self) -> bool:
        return self.margin >= -self.tol

    @property
    def violated(self) -> bool:
        return not self.holds

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "sequence": list(self.sequence),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "tol": self.tol,
            "holds": self.holds,
        }


def sides(expr: Expr, values: Sequence[float], rel: float = REL_TOL) -> tuple[float, float, float, float]:
    """(lhs, rhs, margin, tol) for an already admissible list of values.

    The single code path behind every check and the violation search, so a
    margin found by search reproduces bit-for-bit under `check_generalized`.
    """
    fa = _f_values(expr, values)
    s = math.fsum(_signed(values))
    lhs = evaluate(expr, s)
    rhs = math.fsum(_signed(fa))
    return lhs, rhs, rhs - lhs, tolerance(lhs, rhs, *fa, rel=rel)


def check_generalized(expr: Expr, seq: AltSequence, rel: float = REL_TOL,
                      kind: str = "generalized") -> CheckResult:
    """Test f(S_m(a)) <= S_m(f(a)).  No hypothesis on f is checked."""
    lhs, rhs, margin, tol = sides(expr, seq.values, rel)
    return CheckResult(lhs, rhs, margin, tol, kind, seq.values)


def check_weinberger(r: float, seq: AltSequence, rel: float = REL_TOL) -> CheckResult:
    """The power case f(x) = x^r, r > 1."""
    if not r > 1:
        raise InvalidExponent(f"Weinberger's inequality needs r > 1, got {r!r}")
    return check_generalized(Power(r), seq, rel, kind="weinberger")


def check_szego(expr: Expr, seq: AltSequence, rel: float = REL_TOL) -> CheckResult:
    """Szegő's odd-length case."""
    if len(seq) % 2 == 0:
        raise EvenLength(f"Szegő's inequality needs an odd number of terms, got {len(seq)}")
    return check_generalized(expr, seq, rel, kind="szego")
