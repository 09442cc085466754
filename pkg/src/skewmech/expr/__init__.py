"""Scalar expression language used by every model coefficient.

Provides the parser, evaluation, pretty-printing and central-difference derivatives.
"""

from .calculus import partial, second_partial
from .nodes import (
    FUNCTIONS,
    ONE,
    ZERO,
    BinaryOp,
    Call,
    Constant,
    Expression,
    Negate,
    Number,
    VarBinding,
    Variable,
    evaluate,
    free_variables,
    make_binding,
    pretty,
    substitute,
)
from .parser import parse, tokenize

__all__ = [
    "FUNCTIONS",
    "ONE",
    "ZERO",
    "BinaryOp",
    "Call",
    "Constant",
    "Expression",
    "Negate",
    "Number",
    "VarBinding",
    "Variable",
    "evaluate",
    "free_variables",
    "make_binding",
    "parse",
    "partial",
    "pretty",
    "second_partial",
    "substitute",
    "tokenize",
]
