"""Commutators of diagonal second-order operators and their closure modulo side operators."""

from __future__ import annotations

from itertools import combinations
from math import factorial
from typing import Sequence

import numpy as np

from ..exprkit import ZERO, Expr, as_expr, diff, div, mul, neg, num, power, sub, sym, total
from ..stackel_core import GeneralizedStackelMatrix
from .report import TOL_IDENTITY, Batch, CheckReport, relative, verdict_for


class SecondOrderOperator:
    """``sum_j a_j d_j^2 + sum_j b_j d_j + c`` with expression coefficients."""

    def __init__(self, coords: Sequence[str], second, first=None, zeroth=ZERO):
        self.coords = tuple(coords)
        n = len(self.coords)
        self.second = tuple(as_expr(a) for a in second)
        self.first = tuple(as_expr(b) for b in (first if first is not None else [ZERO] * n))
        self.zeroth = as_expr(zeroth)
        if len(self.second) != n or len(self.first) != n:
            raise ValueError("one coefficient per coordinate")

    @classmethod
    def from_row(cls, coords, T_row, f=None, v=None):
        """``sum_j T_j (d_j^2 + f_j d_j + v_j)``."""
        n = len(coords)
        f = [as_expr(e) for e in (f or [ZERO] * n)]
        v = [as_expr(e) for e in (v or [ZERO] * n)]
        return cls(coords, T_row, [mul(t, fj) for t, fj in zip(T_row, f)],
                   total(mul(t, vj) for t, vj in zip(T_row, v)))

    def apply(self, phi) -> Expr:
        phi = as_expr(phi)
        terms = []
        for x, a, b in zip(self.coords, self.second, self.first):
            terms.append(mul(a, diff(phi, x, 2)))
            terms.append(mul(b, diff(phi, x)))
        terms.append(mul(self.zeroth, phi))
        return total(terms)

    __call__ = apply


def stackel_operators(S: GeneralizedStackelMatrix, v=None, f=None) -> list[SecondOrderOperator]:
    T = S.inverse()
    return [SecondOrderOperator.from_row(S.coords, T[l], f, v) for l in range(S.n)]


def multi_indices(n: int, degree: int):
    out = []

    def rec(prefix, left):
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for k in range(left + 1):
            rec(prefix + [k], left - k)

    rec([], degree)
    return sorted(out, key=lambda b: (sum(b), tuple(-x for x in b)))


def _center(x: str) -> str:
    return x + "#0"


def monomial_probe(coords, beta) -> Expr:
    """``prod (x_i - c_i)^beta_i / beta_i!`` with symbolic centers ``c_i``.

    At ``x = c`` the derivative ``d^gamma`` of this is 1 for gamma = beta and
    0 otherwise, so a commutator applied to it reads off one coefficient.
    """
    terms = []
    for x, b in zip(coords, beta):
        if b:
            terms.append(power(sub(sym(x), sym(_center(x))), num(b)))
    scale = 1.0
    for b in beta:
        scale *= factorial(b)
    e = terms[0] if terms else num(1.0)
    for t in terms[1:]:
        e = mul(e, t)
    return div(e, num(scale)) if scale != 1 else e


def operator_commutator_closure(Lops: Sequence[SecondOrderOperator], LN_op, samples,
                                degree: int = 4, tol: float = TOL_IDENTITY, pairs=None) -> CheckReport:
    """Fit ``[A, B] = sum_m F_m L_m`` with first-order ``F_m`` at each sample.

    ``LN_op`` is one side operator or a list of them.  Each ``F_m`` is
    ``g0 + sum_h g_h d_h``; for every pair the unknowns are solved by least
    squares over the coefficient vector of the commutator in the basis of
    derivatives up to ``degree``.
    """
    Lops = list(Lops)
    sides = list(LN_op) if isinstance(LN_op, (list, tuple)) else [LN_op]
    coords = Lops[0].coords
    n = len(coords)
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    if pairs is None:
        pairs = list(combinations(range(len(Lops)), 2))
    betas = multi_indices(n, degree)
    phis = [monomial_probe(coords, b) for b in betas]
    symbols = tuple(coords) + tuple(_center(x) for x in coords)

    batch = Batch(symbols)
    side_idx = []
    for op in sides:
        per_beta = []
        for phi in phis:
            applied = op.apply(phi)
            per_beta.append([batch.terms(applied)] + [batch.terms(diff(applied, x)) for x in coords])
        side_idx.append(per_beta)
    comm_idx = {}
    for i, j in pairs:
        A, B = Lops[i], Lops[j]
        comm_idx[(i, j)] = [batch.terms(A.apply(B.apply(phi)), neg(B.apply(A.apply(phi)))) for phi in phis]
    batch.run(np.hstack([X, X]))

    # design matrix, shape (npts, nbeta, sides*(n+1))
    cols = []
    for per_beta in side_idx:
        for c in range(n + 1):
            cols.append(np.column_stack([batch.sum(pb[c]) for pb in per_beta]))
    D = np.stack(cols, axis=2)
    order = np.array([sum(b) for b in betas])

    res = np.zeros(len(X))
    abs_res = np.zeros(len(X))
    third = np.zeros(len(X))
    mults = {}
    rank_def = []
    pair_details = {}
    for key, idx in comm_idx.items():
        k = np.column_stack([batch.sum(g) for g in idx])
        ks = np.column_stack([batch.scale(g) for g in idx])
        G = np.zeros((len(X), D.shape[2]))
        pr = np.zeros(len(X))
        for s in range(len(X)):
            A = D[s]
            sv = np.linalg.svd(A, compute_uv=False)
            if sv.size and sv[-1] <= 1e-12 * sv[0]:
                rank_def.append({"pair": [key[0] + 1, key[1] + 1], "point": X[s].tolist()})
            g, *_ = np.linalg.lstsq(A, k[s], rcond=None)
            r = A @ g - k[s]
            scale = ks[s] + np.abs(A) @ np.abs(g)
            rr = relative(r, np.maximum(scale, scale.max(initial=0.0)))
            pr[s] = rr.max() if rr.size else 0.0
            abs_res[s] = max(abs_res[s], float(np.abs(r).max()))
            G[s] = g
        hi = order >= 3
        if hi.any():
            floor = ks.max(axis=1, keepdims=True)
            third = np.maximum(third, relative(k[:, hi], np.maximum(ks[:, hi], floor)).max(axis=1))
        res = np.maximum(res, pr)
        mults[f"F{key[0] + 1}{key[1] + 1}"] = G
        pair_details[f"{key[0] + 1},{key[1] + 1}"] = {
            "max_residual": float(pr.max()) if len(pr) else 0.0,
            "max_multiplier": float(np.abs(G).max()) if G.size else 0.0,
            "max_commutator": float(np.abs(k).max()) if k.size else 0.0,
        }
    verdict = verdict_for(res, tol)
    details = {
        "pairs": pair_details,
        "third_order_max": float(third.max()) if len(third) else 0.0,
        "rank_deficient": rank_def[:10],
        "degree": degree,
    }
    return CheckReport("commutators", verdict, tol, X, res, abs_res, multipliers=mults, details=details)

