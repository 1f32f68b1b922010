"""Source printer: ``parse(to_source(e)) == e`` for every tree."""

from __future__ import annotations

from .nodes import Expr

_INFIX = {"add": " + ", "sub": " - ", "mul": "*", "div": "/"}

# binding strength of the grammar levels
_EXPR, _TERM, _UNARY, _ATOM = 1, 2, 3, 5


def _level(e: Expr) -> int:
    k = e.kind
    if k in ("add", "sub"):
        return _EXPR
    if k in ("mul", "div"):
        return _TERM
    if k == "neg":
        return _UNARY
    if k == "pow":
        return 4
    # negative literals print as "(-x)", so every leaf is an atom
    return _ATOM


def _num(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15 and not (x == 0 and str(x).startswith("-")):
        text = str(int(x))
    else:
        text = repr(x)
    if text.startswith("-"):
        return f"({text})"
    return text


def _wrap(e: Expr, min_level: int) -> str:
    s = to_source(e)
    return s if _level(e) >= min_level else f"({s})"


def to_source(e: Expr) -> str:
    k = e.kind
    if k == "num":
        return _num(e.value)
    if k == "sym":
        return e.value
    if k == "pi":
        return "pi"
    if k == "neg":
        a = e.args[0]
        if a.kind == "num" and not _num(a.value).startswith("("):
            # "-2.5" would parse back as a literal
            return f"-({to_source(a)})"
        return "-" + _wrap(a, _UNARY)
    if k == "pow":
        base, ex = e.args
        return _wrap(base, _ATOM) + "^" + _wrap(ex, _UNARY)
    if k in ("add", "sub"):
        a, b = e.args
        return _wrap(a, _EXPR) + _INFIX[k] + _wrap(b, _TERM)
    if k in ("mul", "div"):
        a, b = e.args
        return _wrap(a, _TERM) + _INFIX[k] + _wrap(b, _UNARY)
    return f"{k}({to_source(e.args[0])})"
