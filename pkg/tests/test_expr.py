import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from altsum.corpus import corpus, exp_tail_series, random_expr
from altsum.expr import (
    ArityError,
    Compose,
    Constant,
    EvaluationError,
    Exp,
    ExprError,
    Floor,
    Identity,
    ParseError,
    Power,
    Product,
    Scale,
    Series,
    Sum,
    UnknownFunction,
    XLogX,
    evaluate,
    evaluate_many,
    parse,
    to_text,
)

from strategies import exprs


class TestParse:
    @pytest.mark.parametrize("text, tree", [
        ("pow(2)", Power(2)),
        ("exp() - id() - 1", Sum(Sum(Exp(), Scale(-1, Identity())), Constant(-1))),
        ("compose(pow(2), floor())", Compose(Power(2), Floor())),
        ("0.5*pow(3)", Scale(0.5, Power(3))),
        ("pow(2)*pow(3)", Product(Power(2), Power(3))),
        ("-2*pow(2)", Scale(-2, Power(2))),
        ("-pow(2)", Scale(-1, Power(2))),
        ("-3", Constant(-3)),
        ("(2)*id()", Product(Constant(2), Identity())),
        ("series(0.5: pow(2), 1e-3: exp())", Series((0.5, 0.001), (Power(2), Exp()))),
        ("series(3; -1: id())", Series((-1.0,), (Identity(),), 3)),
    ])
    def test_grammar(self, text, tree):
        assert parse(text) == tree

    def test_whitespace_insensitive(self):
        assert parse(" exp ( )-id( ) -  1 ") == parse("exp()-id()-1")

    def test_syntax_error_offset(self):
        with pytest.raises(ParseError) as info:
            parse("pow(2) + + id()")
        assert info.value.offset == 9

    def test_offset_counts_bytes(self):
        with pytest.raises(ParseError) as info:
            parse("pow(2) + é")
        assert info.value.offset == 9
        with pytest.raises(ParseError) as info:
            parse("é")
        assert info.value.offset == 0

    def test_unknown_function(self):
        with pytest.raises(UnknownFunction, match="sin"):
            parse("sin()")

    @pytest.mark.parametrize("text", ["id(1)", "pow()", "pow(1, 2)", "compose(id())",
                                      "compose(id(), id(), id())", "series()"])
    def test_arity(self, text):
        with pytest.raises(ArityError):
            parse(text)

    @pytest.mark.parametrize("text", ["pow(0)", "0*id()", "series(1; 1: id(), 1: id())", "id() id()"])
    def test_invalid(self, text):
        with pytest.raises(ParseError):
            parse(text)

    def test_case_sensitive(self):
        with pytest.raises(UnknownFunction):
            parse("Exp()")


class TestConstruction:
    def test_power_needs_positive_exponent(self):
        with pytest.raises(ExprError):
            Power(-1)

    def test_scale_needs_nonzero(self):
        with pytest.raises(ExprError):
            Scale(0, Identity())

    def test_series_lengths(self):
        with pytest.raises(ExprError):
            Series((1.0, 2.0), (Identity(),))
        with pytest.raises(ExprError):
            Series((), ())

    def test_non_finite_rejected(self):
        with pytest.raises(ExprError):
            Constant(math.inf)


class TestPrint:
    @pytest.mark.parametrize("tree, text", [
        (Power(2), "pow(2)"),
        (Scale(0.5, Power(3)), "0.5*pow(3)"),
        (Sum(Power(2), Power(4)), "pow(2) + pow(4)"),
        (Sum(Sum(Exp(), Scale(-1, Identity())), Constant(-1)), "exp() - id() - 1"),
    ])
    def test_canonical(self, tree, text):
        assert to_text(tree) == text

    @pytest.mark.parametrize("tree", [
        Product(Constant(2), Identity()),
        Product(Identity(), Constant(3)),
        Product(Product(Identity(), Constant(3)), Floor()),
        Product(Scale(2, Constant(3)), Identity()),
        Sum(Identity(), Scale(-1, Constant(3))),
        Sum(Identity(), Scale(-1, Sum(Floor(), Exp()))),
        Sum(Identity(), Scale(-2, Floor())),
        Scale(-1, Scale(2, Power(2))),
        Scale(2, Constant(-3)),
        Scale(-1, Constant(3)),
        Constant(-0.0),
        Sum(Constant(-2), Sum(Identity(), Identity())),
        Compose(Sum(Identity(), Constant(-1)), Product(Exp(), Exp())),
        exp_tail_series(),
    ])
    def test_round_trip_tricky(self, tree):
        assert parse(to_text(tree)) == tree

    @settings(max_examples=300, deadline=None)
    @given(exprs)
    def test_round_trip(self, e):
        assert parse(to_text(e)) == e

    def test_round_trip_seeded_generator(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            e = random_expr(rng)
            assert parse(to_text(e)) == e


class TestEvaluate:
    def test_xlogx_zero(self):
        assert evaluate(XLogX(), 0) == 0

    def test_power(self):
        assert evaluate(Power(2), 3) == 9

    def test_exp_minus_linear(self):
        # e^1 - 1 - 1
        assert evaluate(parse("exp()-id()-1"), 1) == pytest.approx(math.e - 2, abs=1e-15)

    def test_xlogx_continuity(self):
        assert abs(evaluate(XLogX(), 1e-12)) < 1e-9

    def test_floor_exact_at_integers(self):
        assert evaluate(Floor(), 3.0) == 3
        assert evaluate(Floor(), math.nextafter(3.0, 0)) == 2

    def test_series_is_truncated_sum(self):
        s = exp_tail_series(12)
        x = 0.7
        direct = sum(x ** k / math.factorial(k) for k in range(2, 14))
        assert evaluate(s, x) == pytest.approx(direct, rel=1e-15)
        assert evaluate(s, x) == pytest.approx(math.exp(x) - x - 1, rel=1e-12)

    def test_compose(self):
        assert evaluate(parse("compose(pow(2), floor())"), 2.7) == 4

    def test_negative_point(self):
        with pytest.raises(EvaluationError):
            evaluate(Identity(), -1)

    def test_overflow_is_an_error(self):
        with pytest.raises(EvaluationError):
            evaluate(Exp(), 1000)
        with pytest.raises(EvaluationError):
            evaluate(Product(Power(200), Power(200)), 1e3)
        with pytest.raises(EvaluationError):
            evaluate_many(Exp(), [0.0, 1000.0])

    def test_composition_domain(self):
        with pytest.raises(EvaluationError):
            evaluate(Compose(Identity(), Constant(-1)), 0.5)

    @given(st.floats(min_value=0, max_value=50))
    def test_deterministic(self, x):
        for e in corpus().values():
            assert evaluate(e, x) == evaluate(e, x)

    def test_vectorized_agrees(self):
        xs = np.linspace(0, 10, 101)
        for e in corpus().values():
            scalar = np.array([evaluate(e, x) for x in xs])
            np.testing.assert_allclose(evaluate_many(e, xs), scalar, rtol=1e-12, atol=1e-12)
