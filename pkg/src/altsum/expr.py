"""Function expressions on [0, inf): tree nodes, text DSL, evaluation.

The DSL::

    expr   := term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := NUMBER | NUMBER '*' factor | call | '(' expr ')' | '-' factor
    call   := 'id()' | 'pow(' NUMBER ')' | 'floor()' | 'xlogx()' | 'exp()'
            | 'compose(' expr ',' expr ')' | 'series(' coeffpairs ')'
    coeffpairs := [INT ';'] SNUMBER ':' expr (',' SNUMBER ':' expr)*

Subtraction and unary minus desugar: ``a - 3`` becomes ``Sum(a, Constant(-3))``
and ``a - g`` becomes ``Sum(a, Scale(-1, g))``.  A leading ``-NUMBER *`` is a
signed scale factor, so ``-2*pow(2)`` is ``Scale(-2, Power(2))``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Union

import numpy as np

DEFAULT_TRUNCATION = 20


class ExprError(ValueError):
    """Base class for malformed expressions and DSL input."""


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UnknownFunction(ParseError):
    pass


class ArityError(ParseError):
    pass


class EvaluationError(ArithmeticError):
    """Evaluation left the domain [0, inf) or produced a non-finite value."""

    def __init__(self, message: str, point: float):
        super().__init__(f"{message} (x = {point!r})")
        self.point = point


def _finite(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ExprError(f"{what} must be finite, got {value!r}")
    return value


class Expr:
    """Base class of expression nodes.  Nodes are immutable and hashable."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)

    def __call__(self, x: float) -> float:
        return evaluate(self, x)

    def children(self) -> tuple[Expr, ...]:
        return ()


@dataclass(frozen=True)
class Identity(Expr):
    pass


@dataclass(frozen=True)
class Constant(Expr):
    c: float

    def __post_init__(self):
        object.__setattr__(self, "c", _finite(self.c, "constant"))


@dataclass(frozen=True)
class Power(Expr):
    r: float

    def __post_init__(self):
        r = _finite(self.r, "exponent")
        if r <= 0:
            raise ExprError(f"power exponent must be > 0, got {r!r}")
        object.__setattr__(self, "r", r)


@dataclass(frozen=True)
class Floor(Expr):
    pass


@dataclass(frozen=True)
class XLogX(Expr):
    pass


@dataclass(frozen=True)
class Exp(Expr):
    pass


@dataclass(frozen=True)
class Sum(Expr):
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Product(Expr):
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Scale(Expr):
    alpha: float
    child: Expr

    def __post_init__(self):
        alpha = _finite(self.alpha, "scale factor")
        if alpha == 0:
            raise ExprError("scale factor must be nonzero")
        object.__setattr__(self, "alpha", alpha)

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class Compose(Expr):
    """``outer(inner(x))``."""

    outer: Expr
    inner: Expr

    def children(self):
        return (self.outer, self.inner)


@dataclass(frozen=True)
class Series(Expr):
    """Finite truncation ``sum(c_i * f_i(x))`` of a series of functions."""

    coeffs: tuple[float, ...]
    terms: tuple[Expr, ...]
    truncation: int = field(default=DEFAULT_TRUNCATION)

    def __post_init__(self):
        coeffs = tuple(_finite(c, "series coefficient") for c in self.coeffs)
        terms = tuple(self.terms)
        if len(coeffs) != len(terms):
            raise ExprError(
                f"series has {len(coeffs)} coefficients but {len(terms)} terms")
        if int(self.truncation) != self.truncation or self.truncation < 1:
            raise ExprError(f"series truncation must be a positive integer, got {self.truncation!r}")
        if not 1 <= len(terms) <= self.truncation:
            raise ExprError(
                f"series needs between 1 and {self.truncation} terms, got {len(terms)}")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "truncation", int(self.truncation))

    def children(self):
        return self.terms


ExprLike = Union[Expr, str]


def as_expr(e: ExprLike) -> Expr:
    return parse(e) if isinstance(e, str) else e


def negate(e: Expr) -> Expr:
    if isinstance(e, Constant):
        return Constant(-e.c)
    return Scale(-1.0, e)


def depth(e: Expr) -> int:
    return 1 + max((depth(c) for c in e.children()), default=0)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*(),;:])
    """,
    re.VERBOSE,
)

_CALLS = {"id", "pow", "floor", "xlogx", "exp", "compose", "series"}


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int  # byte offset into the UTF-8 encoding of the input


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        offset = len(text[:pos].encode("utf-8"))
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", offset)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), offset))
        pos = m.end()
    tokens.append(_Token("end", "", len(text.encode("utf-8"))))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> _Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "name") and self.tok.text == text

    def expect(self, text: str) -> _Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", self.tok.offset)
        return self.advance()

    def number(self) -> float:
        if self.tok.kind != "number":
            found = self.tok.text or "end of input"
            raise ParseError(f"expected a number, found {found!r}", self.tok.offset)
        return float(self.advance().text)

    def signed_number(self) -> float:
        if self.at("-"):
            self.advance()
            return -self.number()
        return self.number()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            rhs = self.term()
            e = Sum(e, rhs if op == "+" else negate(rhs))
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.at("*"):
            self.advance()
            e = Product(e, self.factor())
        return e

    def factor(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            value = self.number()
            if self.at("*"):
                self.advance()
                return self._scale(value, tok)
            return Constant(value)
        if self.at("-"):
            self.advance()
            if self.tok.kind == "number" and self.peek().text == "*":
                value = -self.number()
                self.advance()
                return self._scale(value, tok)
            return negate(self.factor())
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "name":
            return self.call()
        raise ParseError(f"unexpected {tok.text or 'end of input'!r}", tok.offset)

    def _scale(self, value: float, tok: _Token) -> Expr:
        child = self.factor()
        try:
            return Scale(value, child)
        except ExprError as exc:
            raise ParseError(str(exc), tok.offset) from None

    def call(self) -> Expr:
        name = self.advance()
        if name.text not in _CALLS:
            raise UnknownFunction(f"unknown function {name.text!r}", name.offset)
        self.expect("(")
        if name.text in ("id", "floor", "xlogx", "exp"):
            if not self.at(")"):
                raise ArityError(f"{name.text}() takes no arguments", self.tok.offset)
            self.advance()
            return {"id": Identity, "floor": Floor, "xlogx": XLogX, "exp": Exp}[name.text]()
        if name.text == "pow":
            if self.at(")"):
                raise ArityError("pow() takes exactly one number", self.tok.offset)
            arg = self.tok
            r = self.number()
            if self.at(","):
                raise ArityError("pow() takes exactly one number", self.tok.offset)
            self.expect(")")
            try:
                return Power(r)
            except ExprError as exc:
                raise ParseError(str(exc), arg.offset) from None
        if name.text == "compose":
            if self.at(")"):
                raise ArityError("compose() takes exactly two expressions", self.tok.offset)
            outer = self.expr()
            if not self.at(","):
                raise ArityError("compose() takes exactly two expressions", self.tok.offset)
            self.advance()
            inner = self.expr()
            if self.at(","):
                raise ArityError("compose() takes exactly two expressions", self.tok.offset)
            self.expect(")")
            return Compose(outer, inner)
        return self.series(name)

    def series(self, name: _Token) -> Expr:
        if self.at(")"):
            raise ArityError("series() needs at least one 'coefficient: term' pair", self.tok.offset)
        truncation = DEFAULT_TRUNCATION
        if self.tok.kind == "number" and self.peek().text == ";":
            n_tok = self.advance()
            if not re.fullmatch(r"\d+", n_tok.text):
                raise ParseError("series truncation must be an integer", n_tok.offset)
            truncation = int(n_tok.text)
            self.advance()
        coeffs, terms = [], []
        while True:
            coeffs.append(self.signed_number())
            self.expect(":")
            terms.append(self.expr())
            if not self.at(","):
                break
            self.advance()
        self.expect(")")
        try:
            return Series(tuple(coeffs), tuple(terms), truncation)
        except ExprError as exc:
            raise ParseError(str(exc), name.offset) from None


def parse(text: str) -> Expr:
    """Parse DSL text into an expression tree.

    Raises ParseError (with a byte offset), UnknownFunction or ArityError.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Canonical printing
# ---------------------------------------------------------------------------

def format_number(x: float) -> str:
    """Shortest text that reads back as exactly ``x`` (unsigned use only for x >= 0)."""
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def to_text(e: Expr) -> str:
    """Canonical DSL text; ``parse(to_text(e)) == e`` for every tree."""
    return _print_expr(e)


def _print_expr(e: Expr) -> str:
    if not isinstance(e, Sum):
        return _print_term(e)
    left = _print_expr(e.left)
    r = e.right
    if isinstance(r, Constant) and math.copysign(1.0, r.c) < 0:
        return f"{left} - {format_number(-r.c)}"
    if isinstance(r, Scale) and r.alpha == -1 and not isinstance(r.child, Constant):
        return f"{left} - {_print_term(r.child)}"
    return f"{left} + {_print_term(r)}"


def _print_term(e: Expr) -> str:
    if not isinstance(e, Product):
        return _print_factor(e)
    # A bare number before '*' would read back as a scale factor, and a bare
    # number after '*' would swallow the next factor; parenthesize both.
    if isinstance(e.left, (Constant, Scale)):
        left = f"({_print_expr(e.left)})"
    else:
        left = _print_term(e.left)
    if isinstance(e.right, (Constant, Scale)):
        right = f"({_print_expr(e.right)})"
    else:
        right = _print_factor(e.right)
    return f"{left}*{right}"


def _print_factor(e: Expr) -> str:
    if isinstance(e, Identity):
        return "id()"
    if isinstance(e, Floor):
        return "floor()"
    if isinstance(e, XLogX):
        return "xlogx()"
    if isinstance(e, Exp):
        return "exp()"
    if isinstance(e, Power):
        return f"pow({format_number(e.r)})"
    if isinstance(e, Constant):
        if math.copysign(1.0, e.c) < 0:
            return f"-{format_number(-e.c)}"
        return format_number(e.c)
    if isinstance(e, Scale):
        sign = "-" if e.alpha < 0 else ""
        return f"{sign}{format_number(abs(e.alpha))}*{_print_factor(e.child)}"
    if isinstance(e, Compose):
        return f"compose({_print_expr(e.outer)}, {_print_expr(e.inner)})"
    if isinstance(e, Series):
        pairs = ", ".join(
            f"{'-' if c < 0 else ''}{format_number(abs(c))}: {_print_expr(t)}"
            for c, t in zip(e.coeffs, e.terms))
        head = "" if e.truncation == DEFAULT_TRUNCATION else f"{e.truncation}; "
        return f"series({head}{pairs})"
    if isinstance(e, (Sum, Product)):
        return f"({_print_expr(e)})"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _xlogx(x: float) -> float:
    return x * math.log(x) if x > 0 else 0.0


@lru_cache(maxsize=1024)
def _compile(e: Expr) -> Callable[[float], float]:
    if isinstance(e, Identity):
        return lambda x: x
    if isinstance(e, Constant):
        c = e.c
        return lambda x: c
    if isinstance(e, Power):
        r = e.r
        return lambda x: x ** r
    if isinstance(e, Floor):
        return lambda x: float(math.floor(x))
    if isinstance(e, XLogX):
        return _xlogx
    if isinstance(e, Exp):
        return math.exp
    if isinstance(e, Sum):
        f, g = _compile(e.left), _compile(e.right)
        return lambda x: f(x) + g(x)
    if isinstance(e, Product):
        f, g = _compile(e.left), _compile(e.right)
        return lambda x: f(x) * g(x)
    if isinstance(e, Scale):
        a, f = e.alpha, _compile(e.child)
        return lambda x: a * f(x)
    if isinstance(e, Compose):
        outer, inner = _compile(e.outer), _compile(e.inner)

        def composed(x):
            y = inner(x)
            if not y >= 0:
                raise EvaluationError(f"inner value {y!r} outside [0, inf) in composition", x)
            if math.isinf(y):
                raise EvaluationError("inner value overflowed in composition", x)
            return outer(y)
        return composed
    if isinstance(e, Series):
        parts = [(c, _compile(t)) for c, t in zip(e.coeffs, e.terms)]
        return lambda x: math.fsum(c * f(x) for c, f in parts)
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: Expr, x: float) -> float:
    """Evaluate ``e`` at a point ``x >= 0``.

    Raises EvaluationError for ``x < 0`` or a non-finite result.
    """
    x = float(x)
    if not x >= 0 or math.isinf(x):
        raise EvaluationError("evaluation point outside [0, inf)", x)
    try:
        y = _compile(e)(x)
    except (OverflowError, ValueError):
        raise EvaluationError("overflow or undefined intermediate value", x) from None
    if not math.isfinite(y):
        raise EvaluationError(f"non-finite value {y!r}", x)
    return float(y)


def _eval_array(e: Expr, x: np.ndarray) -> np.ndarray:
    if isinstance(e, Identity):
        return x
    if isinstance(e, Constant):
        return np.full_like(x, e.c)
    if isinstance(e, Power):
        return np.power(x, e.r)
    if isinstance(e, Floor):
        return np.floor(x)
    if isinstance(e, XLogX):
        safe = np.where(x > 0, x, 1.0)
        return np.where(x > 0, x * np.log(safe), 0.0)
    if isinstance(e, Exp):
        return np.exp(x)
    if isinstance(e, Sum):
        return _eval_array(e.left, x) + _eval_array(e.right, x)
    if isinstance(e, Product):
        return _eval_array(e.left, x) * _eval_array(e.right, x)
    if isinstance(e, Scale):
        return e.alpha * _eval_array(e.child, x)
    if isinstance(e, Compose):
        y = _eval_array(e.inner, x)
        bad = ~(np.isfinite(y) & (y >= 0))
        if bad.any():
            i = int(np.argmax(bad))
            raise EvaluationError(
                f"inner value {float(y[i])!r} outside [0, inf) in composition", float(x[i]))
        return _eval_array(e.outer, y)
    if isinstance(e, Series):
        total = np.zeros_like(x)
        for c, t in zip(e.coeffs, e.terms):
            total = total + c * _eval_array(t, x)
        return total
    raise TypeError(f"not an expression node: {e!r}")


def evaluate_many(e: Expr, xs) -> np.ndarray:
    """Vectorized evaluation for grid tests.

    Agrees with `evaluate` up to last-bit rounding; the scalar path is the
    reference used for witnesses and inequality checks.
    """
    x = np.asarray(xs, dtype=float)
    bad = ~(np.isfinite(x) & (x >= 0))
    if bad.any():
        raise EvaluationError("evaluation point outside [0, inf)", float(x[np.argmax(bad)]))
    with np.errstate(all="ignore"):
        y = _eval_array(e, x)
    y = np.broadcast_to(y, x.shape).astype(float)
    bad = ~np.isfinite(y)
    if bad.any():
        i = np.unravel_index(np.argmax(bad), bad.shape)
        raise EvaluationError(f"non-finite value {float(y[i])!r}", float(x[i]))
    return y
