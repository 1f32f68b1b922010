"""Check reports and the term-wise residual machinery shared by all checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..exprkit import Expr, Program, neg

PASS, FAIL, DEGENERATE = "pass", "fail", "degenerate"
REGULAR, OBSTRUCTION, SKIPPED = "regular", "obstruction", "skipped"
FACTORIZABLE, NONFACTORIZABLE = "factorizable", "nonfactorizable"

# verdicts that do not count as a failed check
SUCCESS = frozenset({PASS, DEGENERATE, REGULAR, OBSTRUCTION, SKIPPED, FACTORIZABLE, NONFACTORIZABLE})

TOL_IDENTITY = 1e-8
TOL_FIT = 1e-6
ZERO_DENOM = 1e-10


@dataclass
class CheckReport:
    """Outcome of one named condition evaluated at a set of samples.

    ``residuals`` are relative (normalized by the magnitude of the terms that
    make up each identity); ``abs_residuals`` are the raw values.
    """

    name: str
    verdict: str
    tolerance: float
    samples: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0))
    abs_residuals: np.ndarray = field(default_factory=lambda: np.empty(0))
    multipliers: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        r = np.asarray(self.residuals, dtype=float)
        return float(r.max()) if r.size else 0.0

    @property
    def max_abs_residual(self) -> float:
        r = np.asarray(self.abs_residuals, dtype=float)
        return float(r.max()) if r.size else 0.0

    @property
    def ok(self) -> bool:
        return self.verdict in SUCCESS

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "verdict": self.verdict,
            "max_residual": _clean(self.max_residual),
            "max_abs_residual": _clean(self.max_abs_residual),
            "tolerance": self.tolerance,
            "samples": int(len(self.samples)),
            "multipliers": {k: _clean(v) for k, v in sorted(self.multipliers.items())},
            "details": {k: _clean(v) for k, v in sorted(self.details.items())},
        }

    def __str__(self):
        return f"{self.name}: {self.verdict} (max residual {self.max_residual:.3e}, tol {self.tolerance:g})"


def _clean(v):
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, float) and not np.isfinite(v):
        return None if np.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def verdict_for(residuals, tol: float, degenerate: bool = False) -> str:
    r = np.asarray(residuals, dtype=float)
    if r.size and not (np.all(np.isfinite(r)) and r.max() <= tol):
        return FAIL
    return DEGENERATE if degenerate else PASS


def split_terms(e: Expr) -> list[Expr]:
    """Flatten top-level sums and differences into signed terms."""
    out = []
    stack = [(e, False)]
    while stack:
        node, negated = stack.pop()
        k = node.kind
        if k == "add":
            stack.append((node.args[1], negated))
            stack.append((node.args[0], negated))
        elif k == "sub":
            stack.append((node.args[1], not negated))
            stack.append((node.args[0], negated))
        elif k == "neg":
            stack.append((node.args[0], not negated))
        elif k == "num" and node.value == 0:
            continue
        else:
            out.append(neg(node) if negated else node)
    return out


class Batch:
    """Collects expressions, compiles them once, evaluates them at samples."""

    def __init__(self, symbols: Sequence[str]):
        self.symbols = tuple(symbols)
        self._exprs: list[Expr] = []
        self._index: dict[Expr, int] = {}
        self._Y = None

    def add(self, e: Expr) -> int:
        i = self._index.get(e)
        if i is None:
            i = len(self._exprs)
            self._index[e] = i
            self._exprs.append(e)
        return i

    def terms(self, *exprs: Expr) -> list[int]:
        """Register the signed terms of the sum of ``exprs``."""
        idx = []
        for e in exprs:
            idx.extend(self.add(t) for t in split_terms(e))
        return idx

    def run(self, X) -> "Batch":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self._exprs:
            self._Y = Program(self._exprs, self.symbols).evaluate(X)
        else:
            self._Y = np.zeros((X.shape[0], 0))
        return self

    def value(self, i: int) -> np.ndarray:
        return self._Y[:, i]

    def sum(self, idx) -> np.ndarray:
        if not idx:
            return np.zeros(self._Y.shape[0])
        return self._Y[:, idx].sum(axis=1)

    def scale(self, idx) -> np.ndarray:
        if not idx:
            return np.zeros(self._Y.shape[0])
        return np.abs(self._Y[:, idx]).sum(axis=1)


def relative(value, scale) -> np.ndarray:
    value = np.abs(np.asarray(value, dtype=float))
    scale = np.asarray(scale, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(scale > 0, value / np.where(scale > 0, scale, 1.0), np.where(value > 0, np.inf, 0.0))
    return r


def family_relative(values, scales) -> np.ndarray:
    """Worst relative residual over a family of identities, per sample.

    Each identity is scaled by its own term magnitudes, floored by the
    largest scale in the family at that sample.  Identities that vanish
    structurally (every term a rounding-level product) would otherwise report
    a relative residual of order one.
    """
    values = np.abs(np.atleast_2d(np.asarray(values, dtype=float)))
    scales = np.atleast_2d(np.asarray(scales, dtype=float))
    floor = scales.max(axis=0, keepdims=True)
    return relative(values, np.maximum(scales, floor)).max(axis=0)


def ratio_residual(na, sa, da, nb, sb, db, zero_a, zero_b):
    """Relative residual of ``na/da == nb/db`` under the zero-denominator convention.

    ``sa`` and ``sb`` are term magnitudes of the numerators.  Where a
    denominator vanishes its numerator must vanish instead.  Returns the
    residual array and a boolean mask of samples where the convention applied.
    """
    na, sa, da, nb, sb, db = (np.asarray(a, dtype=float) for a in (na, sa, da, nb, sb, db))
    cross = relative(na * db - nb * da, sa * np.abs(db) + sb * np.abs(da))
    only_a = relative(na, sa)
    only_b = relative(nb, sb)
    zero_a = np.asarray(zero_a, dtype=bool)
    zero_b = np.asarray(zero_b, dtype=bool)
    r = np.where(zero_a & zero_b, np.maximum(only_a, only_b),
                 np.where(zero_a, only_a, np.where(zero_b, only_b, cross)))
    return r, zero_a | zero_b
