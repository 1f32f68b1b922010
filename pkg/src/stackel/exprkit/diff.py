"""Symbolic differentiation.

Results are memoized on each node per symbol, so repeated and mixed partial
derivatives share structure instead of swelling.  The traversal is iterative.
"""

from __future__ import annotations

from .nodes import (
    ONE,
    TWO,
    ZERO,
    Expr,
    add,
    apply_func,
    as_expr,
    div,
    log,
    mul,
    neg,
    num,
    power,
    sub,
)


def _zero(e: Expr) -> bool:
    return e.kind == "num" and e.value == 0.0


def _rule(e: Expr, s: str, d) -> Expr:
    """Derivative of ``e`` given derivatives ``d(child)`` of its children."""
    k = e.kind
    if k == "sym":
        return ONE if e.value == s else ZERO
    if k in ("num", "pi"):
        return ZERO
    if k == "neg":
        return neg(d(e.args[0]))
    if k == "add":
        return add(d(e.args[0]), d(e.args[1]))
    if k == "sub":
        return sub(d(e.args[0]), d(e.args[1]))
    if k == "mul":
        a, b = e.args
        return add(mul(d(a), b), mul(a, d(b)))
    if k == "div":
        a, b = e.args
        da, db = d(a), d(b)
        if _zero(db):
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), power(b, TWO))
    if k == "pow":
        a, b = e.args
        da = d(a)
        if not b.depends_on(s):
            if _zero(da):
                return ZERO
            if b.kind == "num" and float(b.value).is_integer():
                n = b.value
                return mul(mul(num(n), power(a, num(n - 1.0))), da)
            # constant exponent: no log needed, keeps negative bases legal
            return mul(mul(b, power(a, sub(b, ONE))), da)
        db = d(b)
        # a^b = exp(b log a)
        inner = mul(db, log(a))
        if not _zero(da):
            inner = add(inner, div(mul(b, da), a))
        return mul(e, inner)
    a = e.args[0]
    da = d(a)
    if _zero(da):
        return ZERO
    if k == "sin":
        g = apply_func("cos", a)
    elif k == "cos":
        g = neg(apply_func("sin", a))
    elif k == "tan":
        g = div(ONE, power(apply_func("cos", a), TWO))
    elif k == "sinh":
        g = apply_func("cosh", a)
    elif k == "cosh":
        g = apply_func("sinh", a)
    elif k == "exp":
        g = e
    elif k == "log":
        return div(da, a)
    elif k == "sqrt":
        return div(da, mul(TWO, e))
    elif k == "atan":
        return div(da, add(ONE, power(a, TWO)))
    else:  # pragma: no cover
        raise ValueError(f"no derivative rule for {k}")
    return mul(g, da)


def diff(e, s, n: int = 1) -> Expr:
    """Partial derivative of ``e`` with respect to symbol ``s`` (``n`` times).

    ``s`` may be a name or a symbol node.
    """
    e = as_expr(e)
    name = s.value if isinstance(s, Expr) else str(s)
    for _ in range(n):
        e = _diff1(e, name)
    return e


def _diff1(root: Expr, s: str) -> Expr:
    cached = root._dcache.get(s)
    if cached is not None:
        return cached
    if s not in root.free_symbols:
        root._dcache[s] = ZERO
        return ZERO

    def d(node: Expr) -> Expr:
        if s not in node.free_symbols:
            return ZERO
        return node._dcache[s]

    stack = [root]
    while stack:
        node = stack[-1]
        if s in node._dcache:
            stack.pop()
            continue
        pending = [a for a in node.args if s in a.free_symbols and s not in a._dcache]
        if pending:
            stack.extend(pending)
            continue
        stack.pop()
        node._dcache[s] = _rule(node, s, d)
    return root._dcache[s]


def diff_multi(e, symbols) -> Expr:
    """Mixed partial derivative, differentiating in the given order."""
    e = as_expr(e)
    for s in symbols:
        e = diff(e, s)
    return e


def gradient(e, symbols) -> list[Expr]:
    return [diff(e, s) for s in symbols]
