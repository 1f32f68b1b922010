"""Recursive-descent parser for the expression language.

Grammar (standard precedence, ``^`` right-associative and binding tighter
than unary minus)::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := "-" unary | power
    power := atom ("^" unary)?
    atom  := number | symbol | func "(" expr ")" | "(" expr ")"

A minus directly in front of a number literal (and not followed by ``^``)
produces a negative literal, so ``-2`` is a number while ``-2^2`` is
``-(2^2)``.  The parser performs no other simplification.
"""

from __future__ import annotations

import math
import re

from .errors import ExprSyntaxError, UnknownFunctionError
from .nodes import FUNCTIONS, PI, Expr, num, sym

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[^\W\d]\w*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_ATOM_START = frozenset({"number", "symbol", "function", "(", "-"})
_END = "end of input"
MAX_DEPTH = 100


def tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", source, pos, _ATOM_START)
        kind = m.lastgroup
        if kind != "ws":
            text = m.group()
            tokens.append((text if kind == "op" else kind, text, pos))
        pos = m.end()
    tokens.append(("eof", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0
        self.depth = 0

    def nest(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            tok = self.peek()
            raise ExprSyntaxError("expression nested too deeply", self.source, tok[2], ())

    def peek(self, k: int = 0):
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected, tok=None):
        tok = tok or self.peek()
        what = _END if tok[0] == "eof" else f"token {tok[1]!r}"
        raise ExprSyntaxError(f"unexpected {what}", self.source, tok[2], expected)

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "eof":
            self.fail({"+", "-", "*", "/", "^", _END})
        return e

    def expr(self) -> Expr:
        self.nest()
        left = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            right = self.term()
            left = Expr("add" if op == "+" else "sub", (left, right))
        self.depth -= 1
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            right = self.unary()
            left = Expr("mul" if op == "*" else "div", (left, right))
        return left

    def unary(self) -> Expr:
        if self.peek()[0] == "-":
            self.advance()
            if self.peek()[0] == "number" and self.peek(1)[0] != "^":
                return num(-self.number(self.advance()))
            self.nest()
            e = Expr("neg", (self.unary(),))
            self.depth -= 1
            return e
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "^":
            self.advance()
            self.nest()
            e = Expr("pow", (base, self.unary()))
            self.depth -= 1
            return e
        return base

    def number(self, tok) -> float:
        value = float(tok[1])
        if not math.isfinite(value):
            raise ExprSyntaxError("number literal out of range", self.source, tok[2], ())
        return value

    def atom(self) -> Expr:
        tok = self.peek()
        kind = tok[0]
        if kind == "number":
            self.advance()
            return num(self.number(tok))
        if kind == "name":
            self.advance()
            name = tok[1]
            if self.peek()[0] == "(":
                if name not in FUNCTIONS:
                    raise UnknownFunctionError(name, self.source, tok[2])
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Expr(name, (arg,))
            if name in FUNCTIONS:
                self.fail({"("})
            if name == "pi":
                return PI
            return sym(name)
        if kind == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        self.fail({"number", "symbol", "function", "("})

    def expect(self, kind: str):
        if self.peek()[0] != kind:
            self.fail({kind, "+", "-", "*", "/", "^"})
        return self.advance()


def parse(source: str) -> Expr:
    """Parse ``source`` into an expression tree.

    Raises ExprSyntaxError (with ``offset`` and ``expected``) or its subclass
    UnknownFunctionError.
    """
    if not isinstance(source, str):
        raise TypeError("parse expects a string")
    return _Parser(source).parse()
