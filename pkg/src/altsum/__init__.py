"""Verification and falsification of alternating-sign inequalities.

For a nonincreasing sequence a_1 >= ... >= a_m >= 0 and a function f on
[0, inf), compares f(a_1 - a_2 + a_3 - ...) with f(a_1) - f(a_2) + f(a_3) - ...
and classifies f against superadditivity (class W), convexity and f(0) <= 0.
"""

__version__ = "0.1.0"

from .expr import (  # noqa: E402
    Compose,
    Constant,
    EvaluationError,
    Exp,
    Expr,
    ExprError,
    Floor,
    Identity,
    ParseError,
    Power,
    Product,
    Scale,
    Series,
    Sum,
    XLogX,
    evaluate,
    evaluate_many,
    parse,
    to_text,
)
from .inequality import (  # noqa: E402
    AltSequence,
    CheckResult,
    alt_f_sum,
    alt_sum,
    check_generalized,
    check_szego,
    check_weinberger,
    validate_sequence,
)
from .properties import GridSpec, PropertySet, Status, classify, propagate  # noqa: E402
from .search import SearchConfig, SearchOutcome, sample_sequences, search_violation  # noqa: E402
