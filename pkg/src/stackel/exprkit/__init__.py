"""A small expression language: parse, print, differentiate, evaluate."""

from .diff import diff, diff_multi, gradient
from .errors import ExprDomainError, ExprError, ExprSyntaxError, UnboundSymbolError, UnknownFunctionError
from .nodes import (
    FUNCTIONS,
    HALF,
    ONE,
    PI,
    TWO,
    ZERO,
    Expr,
    add,
    as_expr,
    atan,
    cos,
    cosh,
    div,
    exp,
    log,
    mul,
    neg,
    node_count,
    num,
    power,
    raw,
    simplify_basic,
    sin,
    sinh,
    sqrt,
    sub,
    subs,
    sym,
    symbols,
    tan,
    total,
)
from .parser import parse, tokenize
from .printer import to_source
from .program import Program, compile_exprs, evaluate, evaluate_many

Binding = dict

__all__ = [
    "Binding", "Expr", "ExprDomainError", "ExprError", "ExprSyntaxError", "FUNCTIONS", "HALF", "ONE",
    "PI", "Program", "TWO", "UnboundSymbolError", "UnknownFunctionError", "ZERO", "add", "as_expr",
    "atan", "compile_exprs", "cos", "cosh", "diff", "diff_multi", "div", "evaluate", "evaluate_many",
    "exp", "gradient", "log", "mul", "neg", "node_count", "num", "parse", "power", "raw",
    "simplify_basic", "sin", "sinh", "sqrt", "sub", "subs", "sym", "symbols", "tan", "to_source",
    "tokenize", "total",
]
