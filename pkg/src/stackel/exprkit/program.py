"""Compile expression DAGs into flat register programs for fast evaluation."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .. import _kernels
from .._kernels._opcodes import CONST, ERROR_TEXT, OPCODE, SYM
from .errors import ExprDomainError, UnboundSymbolError
from .nodes import Expr, _postorder, as_expr


class Program:
    """A compiled batch of expressions over an ordered list of symbols.

    Shared subtrees are computed once.  ``evaluate`` takes a 2-D array with
    one row per point and one column per symbol, and returns one column per
    expression.
    """

    def __init__(self, exprs: Sequence[Expr], symbols: Sequence[str]):
        self.exprs = tuple(as_expr(e) for e in exprs)
        self.symbols = tuple(symbols)
        free = set().union(*(e.free_symbols for e in self.exprs)) if self.exprs else set()
        missing = free - set(self.symbols)
        if missing:
            raise UnboundSymbolError(missing)
        col = {s: i for i, s in enumerate(self.symbols)}
        index: dict[Expr, int] = {}
        ops, ia, ib, consts, nodes = [], [], [], [], []
        for root in self.exprs:
            for node in _postorder(root):
                if node in index:
                    continue
                k = node.kind
                if k in ("num", "pi"):
                    ops.append(CONST)
                    ia.append(0)
                    ib.append(0)
                    consts.append(float(node.value))
                elif k == "sym":
                    ops.append(SYM)
                    ia.append(col[node.value])
                    ib.append(0)
                    consts.append(0.0)
                else:
                    ops.append(OPCODE[k])
                    ia.append(index[node.args[0]])
                    ib.append(index[node.args[1]] if len(node.args) > 1 else 0)
                    consts.append(0.0)
                index[node] = len(nodes)
                nodes.append(node)
        self.ops = np.array(ops, dtype=np.intc)
        self.ia = np.array(ia, dtype=np.intc)
        self.ib = np.array(ib, dtype=np.intc)
        self.consts = np.array(consts, dtype=float)
        self.outs = np.array([index[e] for e in self.exprs], dtype=np.intc)
        self.nodes = nodes

    def __len__(self) -> int:
        return len(self.ops)

    def _args(self):
        return self.ops, self.ia, self.ib, self.consts, self.outs

    def _raise(self, err, point: dict):
        _, instr, code = err
        raise ExprDomainError(ERROR_TEXT[code], self.nodes[instr], point)

    def evaluate(self, X, backend: str | None = None) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
        if X.shape[1] != len(self.symbols):
            raise ValueError(f"expected {len(self.symbols)} columns, got {X.shape[1]}")
        Y, err = _kernels.get_backend(backend).eval_program(*self._args(), X)
        if err is not None:
            i = err[0]
            self._raise(err, dict(zip(self.symbols, map(float, X[i]))))
        return Y

    def __call__(self, binding: Mapping[str, float]):
        """Evaluate at a single binding; returns a tuple of floats."""
        missing = [s for s in self.symbols if s not in binding]
        if missing:
            raise UnboundSymbolError(missing)
        row = [[float(binding[s]) for s in self.symbols]]
        return tuple(float(v) for v in self.evaluate(row)[0])

    def rk4(self, x0: float, h: float, nsteps: int, y0: float, dy0: float, backend: str | None = None):
        """Integrate y'' + f y' + q y = 0 for a program compiled from (f, q) over one symbol."""
        if len(self.symbols) != 1 or len(self.exprs) != 2:
            raise ValueError("rk4 needs a program of two expressions in one variable")
        xs, ys, dys, err = _kernels.get_backend(backend).rk4(
            *self._args(), float(x0), float(h), int(nsteps), float(y0), float(dy0)
        )
        if err is not None:
            self._raise(err, {self.symbols[0]: err[0]})
        return xs, ys, dys


def compile_exprs(exprs, symbols) -> Program:
    return Program(exprs, symbols)


def evaluate(e, binding: Mapping[str, float] | None = None, **kw) -> float:
    """Evaluate one expression at a binding (mapping and/or keywords)."""
    e = as_expr(e)
    b = dict(binding or {})
    b.update(kw)
    missing = e.free_symbols - b.keys()
    if missing:
        raise UnboundSymbolError(missing)
    prog = e._prog
    if prog is None:
        prog = Program([e], sorted(e.free_symbols))
        object.__setattr__(e, "_prog", prog)
    return prog(b)[0]


def evaluate_many(exprs, symbols, X) -> np.ndarray:
    return Program(exprs, symbols).evaluate(X)
