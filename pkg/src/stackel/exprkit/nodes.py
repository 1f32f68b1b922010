"""Immutable expression trees.

Nodes are interned: structurally equal trees built in the same process are
usually the same object, which keeps derivative DAGs small and lets the
compiler share common subexpressions.  Equality is still structural, so code
must never rely on identity.
"""

from __future__ import annotations

import math
import struct
import threading
import weakref
from typing import Iterable, Mapping

UNARY_OPS = ("neg", "sin", "cos", "tan", "sinh", "cosh", "exp", "log", "sqrt", "atan")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")
FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "exp", "log", "sqrt", "atan")

_INTERN: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()
_INTERN_LOCK = threading.Lock()


def _num_key(x: float) -> bytes:
    # bit pattern, so 0.0 and -0.0 stay distinct
    return struct.pack("<d", x)


class Expr:
    """A node of an expression tree.

    ``kind`` is one of ``"num"``, ``"sym"``, ``"pi"``, a unary op name or a
    binary op name.  ``value`` holds the float for numbers and the name for
    symbols.  Build nodes with :func:`num`, :func:`sym`, the smart
    constructors (:func:`add`, :func:`mul`, ...) or Python operators.
    """

    __slots__ = ("kind", "args", "value", "_key", "_hash", "_free", "_dcache", "_prog", "__weakref__")

    kind: str
    args: tuple["Expr", ...]
    value: object

    def __new__(cls, kind: str, args: tuple = (), value: object = None):
        if kind == "num":
            value = float(value)
            key = ("num", _num_key(value))
        elif kind == "sym":
            key = ("sym", str(value))
        elif kind == "pi":
            key = ("pi",)
            value = math.pi
        elif kind in UNARY_OPS:
            if len(args) != 1:
                raise ValueError(f"{kind} takes one argument")
            key = (kind, args[0]._key)
        elif kind in BINARY_OPS:
            if len(args) != 2:
                raise ValueError(f"{kind} takes two arguments")
            key = (kind, args[0]._key, args[1]._key)
        else:
            raise ValueError(f"unknown node kind {kind!r}")
        node = _INTERN.get(key)
        if node is not None:
            return node
        node = object.__new__(cls)
        object.__setattr__(node, "kind", kind)
        object.__setattr__(node, "args", tuple(args))
        object.__setattr__(node, "value", value)
        object.__setattr__(node, "_key", key)
        object.__setattr__(node, "_hash", hash(key))
        object.__setattr__(node, "_free", None)
        object.__setattr__(node, "_dcache", {})
        object.__setattr__(node, "_prog", None)
        with _INTERN_LOCK:
            existing = _INTERN.setdefault(key, node)
        return existing

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    def __reduce__(self):
        return (Expr, (self.kind, self.args, self.value))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return self._hash == other._hash and self._key == other._key

    def __ne__(self, other) -> bool:
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    # -- introspection ---------------------------------------------------
    @property
    def is_number(self) -> bool:
        return self.kind in ("num", "pi")

    @property
    def free_symbols(self) -> frozenset[str]:
        cached = self._free
        if cached is not None:
            return cached
        # iterative post-order so deep trees don't hit the recursion limit
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if node._free is not None:
                continue
            if done:
                if node.kind == "sym":
                    fs = frozenset((node.value,))
                elif node.args:
                    fs = frozenset().union(*(a._free for a in node.args))
                else:
                    fs = frozenset()
                object.__setattr__(node, "_free", fs)
            else:
                stack.append((node, True))
                stack.extend((a, False) for a in node.args if a._free is None)
        return self._free

    def depends_on(self, name: str) -> bool:
        return name in self.free_symbols

    def __repr__(self) -> str:
        from .printer import to_source

        return f"Expr({to_source(self)!r})"

    def __str__(self) -> str:
        from .printer import to_source

        return to_source(self)

    # -- arithmetic sugar (simplifying constructors) ---------------------
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __rpow__(self, other):
        return power(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self


# -- leaves --------------------------------------------------------------

def num(x: float) -> Expr:
    return Expr("num", (), float(x))


def sym(name: str) -> Expr:
    return Expr("sym", (), name)


def symbols(names: str | Iterable[str]) -> tuple[Expr, ...]:
    if isinstance(names, str):
        names = [n for n in names.replace(",", " ").split() if n]
    return tuple(sym(n) for n in names)


PI = Expr("pi")
ZERO = num(0.0)
ONE = num(1.0)
TWO = num(2.0)
HALF = num(0.5)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(x, (int, float)):
        return num(x)
    if isinstance(x, str):
        from .parser import parse

        return parse(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def raw(kind: str, *args: Expr) -> Expr:
    """Build a node without any simplification."""
    return Expr(kind, tuple(args))


# -- constant folding helpers -------------------------------------------

def _const(e: Expr) -> float | None:
    if e.kind == "num":
        return e.value
    return None


def _finite(x: float) -> bool:
    return math.isfinite(x)


def _is_int(x: float) -> bool:
    return math.isfinite(x) and float(x).is_integer()


_UNARY_FOLD = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "exp": math.exp,
    "atan": math.atan,
}


def _fold_unary(op: str, x: float) -> float | None:
    try:
        if op == "neg":
            return -x
        if op == "sqrt":
            return math.sqrt(x) if x >= 0 else None
        if op == "log":
            return math.log(x) if x > 0 else None
        r = _UNARY_FOLD[op](x)
    except (OverflowError, ValueError):
        return None
    return r if _finite(r) else None


def _fold_binary(op: str, x: float, y: float) -> float | None:
    try:
        if op == "add":
            r = x + y
        elif op == "sub":
            r = x - y
        elif op == "mul":
            r = x * y
        elif op == "div":
            if y == 0:
                return None
            r = x / y
        else:
            if x < 0 and not _is_int(y):
                return None
            if x == 0 and y < 0:
                return None
            r = math.pow(x, y)
    except (OverflowError, ValueError, ZeroDivisionError):
        return None
    return r if _finite(r) else None


# -- smart constructors ---------------------------------------------------
# Constant folding and 0/1 identities only; no reassociation or reordering.

def neg(a: Expr) -> Expr:
    c = _const(a)
    if c is not None:
        return num(-c)
    if a.kind == "neg":
        return a.args[0]
    return Expr("neg", (a,))


def add(a: Expr, b: Expr) -> Expr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        r = _fold_binary("add", ca, cb)
        if r is not None:
            return num(r)
    if ca == 0.0:
        return b
    if cb == 0.0:
        return a
    if b.kind == "neg":
        return sub(a, b.args[0])
    return Expr("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        r = _fold_binary("sub", ca, cb)
        if r is not None:
            return num(r)
    if cb == 0.0:
        return a
    if ca == 0.0:
        return neg(b)
    if a == b:
        return ZERO
    if b.kind == "neg":
        return add(a, b.args[0])
    return Expr("sub", (a, b))


def mul(a: Expr, b: Expr) -> Expr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        r = _fold_binary("mul", ca, cb)
        if r is not None:
            return num(r)
    if ca == 0.0 or cb == 0.0:
        return ZERO
    if ca == 1.0:
        return b
    if cb == 1.0:
        return a
    if ca == -1.0:
        return neg(b)
    if cb == -1.0:
        return neg(a)
    if a.kind == "neg" and b.kind == "neg":
        return mul(a.args[0], b.args[0])
    if a.kind == "neg":
        return neg(mul(a.args[0], b))
    if b.kind == "neg":
        return neg(mul(a, b.args[0]))
    return Expr("mul", (a, b))


def div(a: Expr, b: Expr) -> Expr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        r = _fold_binary("div", ca, cb)
        if r is not None:
            return num(r)
    if ca == 0.0 and cb != 0.0:
        return ZERO
    if cb == 1.0:
        return a
    if cb == -1.0:
        return neg(a)
    if a.kind == "neg":
        return neg(div(a.args[0], b))
    if b.kind == "neg":
        return neg(div(a, b.args[0]))
    return Expr("div", (a, b))


def power(a: Expr, b: Expr) -> Expr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        r = _fold_binary("pow", ca, cb)
        if r is not None:
            return num(r)
    if cb == 0.0:
        return ONE
    if cb == 1.0:
        return a
    if ca == 1.0:
        return ONE
    return Expr("pow", (a, b))


def apply_func(name: str, a: Expr) -> Expr:
    if name == "neg":
        return neg(a)
    c = _const(a)
    if c is not None:
        r = _fold_unary(name, c)
        if r is not None:
            return num(r)
    return Expr(name, (a,))


def sin(a): return apply_func("sin", as_expr(a))
def cos(a): return apply_func("cos", as_expr(a))
def tan(a): return apply_func("tan", as_expr(a))
def sinh(a): return apply_func("sinh", as_expr(a))
def cosh(a): return apply_func("cosh", as_expr(a))
def exp(a): return apply_func("exp", as_expr(a))
def log(a): return apply_func("log", as_expr(a))
def sqrt(a): return apply_func("sqrt", as_expr(a))
def atan(a): return apply_func("atan", as_expr(a))


_BINARY_SMART = {"add": add, "sub": sub, "mul": mul, "div": div, "pow": power}


def rebuild(node: Expr, args: tuple[Expr, ...]) -> Expr:
    """Rebuild ``node`` over new children with the simplifying constructors."""
    if node.kind in _BINARY_SMART:
        return _BINARY_SMART[node.kind](*args)
    if node.kind in UNARY_OPS:
        return apply_func(node.kind, args[0])
    return node


def _postorder(root: Expr) -> list[Expr]:
    order: list[Expr] = []
    seen: set[int] = set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for a in reversed(node.args):
            if id(a) not in seen:
                stack.append((a, False))
    return order


def transform(root: Expr, leaf_map) -> Expr:
    """Bottom-up rebuild; ``leaf_map(node)`` may return a replacement or None."""
    out: dict[int, Expr] = {}
    for node in _postorder(root):
        repl = leaf_map(node)
        if repl is not None:
            out[id(node)] = repl
        elif node.args:
            out[id(node)] = rebuild(node, tuple(out[id(a)] for a in node.args))
        else:
            out[id(node)] = node
    return out[id(root)]


def simplify_basic(e: Expr) -> Expr:
    """Constant folding and 0/1 identity elimination, nothing more."""
    return transform(e, lambda n: None)


def subs(e: Expr, mapping: Mapping[str, "Expr | float"]) -> Expr:
    """Substitute symbols by expressions or numbers."""
    repl = {k: as_expr(v) for k, v in mapping.items()}
    if not repl or not (e.free_symbols & repl.keys()):
        return e
    return transform(e, lambda n: repl.get(n.value) if n.kind == "sym" else None)


def node_count(e: Expr) -> int:
    return len(_postorder(e))


def total(terms: Iterable[Expr]) -> Expr:
    acc = ZERO
    for t in terms:
        acc = add(acc, t)
    return acc
