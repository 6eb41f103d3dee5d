"""Built-in expressions and a random tree generator."""

from __future__ import annotations

import math

import numpy as np

from .expr import (
    Compose,
    Constant,
    Exp,
    Expr,
    Floor,
    Identity,
    Power,
    Product,
    Scale,
    Series,
    Sum,
    XLogX,
    parse,
)


def exp_tail_series(n: int = 12) -> Series:
    """e^x - x - 1 = sum_{k>=2} x^k / k!, truncated after n terms."""
    ks = range(2, n + 2)
    return Series(tuple(1.0 / math.factorial(k) for k in ks),
                  tuple(Power(k) for k in ks), truncation=n)


CORPUS_TEXT = (
    "id()",
    "-1",
    "pow(2)",
    "floor()",
    "xlogx()",
    "exp()",
    "exp() - id() - 1",
    "pow(2) + pow(4) + pow(6)",
    "compose(pow(2), floor())",
)


def corpus() -> dict[str, Expr]:
    """The ten reference expressions, keyed by canonical text."""
    exprs = [parse(t) for t in CORPUS_TEXT] + [exp_tail_series()]
    return {str(e): e for e in exprs}


def random_expr(rng: np.random.Generator, max_depth: int = 6) -> Expr:
    """A random tree of depth at most ``max_depth`` (leaves have depth 1)."""

    def number(lo=-5.0, hi=5.0):
        # mix short decimals with full-precision doubles
        x = rng.uniform(lo, hi)
        return round(x, int(rng.integers(0, 3))) if rng.random() < 0.5 else x

    def positive():
        r = abs(number(0.0, 8.0))
        return r if r > 0 else 1.0

    def nonzero():
        a = number()
        return a if a != 0 else 1.0

    def leaf():
        kind = rng.integers(0, 6)
        if kind == 0:
            return Identity()
        if kind == 1:
            return Constant(number())
        if kind == 2:
            return Power(positive())
        return (Floor(), XLogX(), Exp())[kind - 3]

    def build(d):
        if d <= 1 or rng.random() < 0.3:
            return leaf()
        kind = rng.integers(0, 5)
        if kind == 0:
            return Sum(build(d - 1), build(d - 1))
        if kind == 1:
            return Product(build(d - 1), build(d - 1))
        if kind == 2:
            return Scale(nonzero(), build(d - 1))
        if kind == 3:
            return Compose(build(d - 1), build(d - 1))
        k = int(rng.integers(1, 4))
        n = int(rng.choice([k, 20, k + 3]))
        return Series(tuple(number() for _ in range(k)), tuple(build(d - 1) for _ in range(k)), n)

    return build(max_depth)
