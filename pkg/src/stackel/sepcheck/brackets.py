"""Poisson brackets of phase functions polynomial in the momenta."""

from __future__ import annotations

from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from ..exprkit import ZERO, Expr, Program, add, as_expr, diff, mul, neg, num, sub
from ..sampling import rng
from ..stackel_core import GeneralizedStackelMatrix, QuadraticForm
from .report import (
    FAIL, OBSTRUCTION, PASS, TOL_FIT, TOL_IDENTITY, Batch, CheckReport, relative, verdict_for,
)


class PhasePoly:
    """``sum_m c_m(x) p^m``: a polynomial in the momenta with expression coefficients.

    Monomials are exponent tuples, one entry per coordinate.
    """

    def __init__(self, coords: Sequence[str], terms: Mapping[tuple, Expr] | None = None):
        self.coords = tuple(coords)
        self.terms: dict[tuple, Expr] = {}
        for m, c in (terms or {}).items():
            c = as_expr(c)
            if not (c.kind == "num" and c.value == 0):
                self.terms[tuple(m)] = c

    @classmethod
    def from_quadratic(cls, q: QuadraticForm) -> "PhasePoly":
        n = len(q.coords)
        terms = {}
        for j, c in enumerate(q.coeffs):
            m = [0] * n
            m[j] = 2
            terms[tuple(m)] = c
        terms[(0,) * n] = q.W
        return cls(q.coords, terms)

    @classmethod
    def coerce(cls, a, coords=None) -> "PhasePoly":
        if isinstance(a, PhasePoly):
            return a
        if isinstance(a, QuadraticForm):
            return cls.from_quadratic(a)
        if coords is None:
            raise TypeError("coordinates needed to lift an expression to phase space")
        return cls(coords, {(0,) * len(coords): as_expr(a)})

    def __add__(self, other):
        other = PhasePoly.coerce(other, self.coords)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = add(out[m], c) if m in out else c
        return PhasePoly(self.coords, out)

    def __neg__(self):
        return PhasePoly(self.coords, {m: neg(c) for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-PhasePoly.coerce(other, self.coords))

    def __mul__(self, other):
        other = PhasePoly.coerce(other, self.coords)
        out: dict[tuple, Expr] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                t = mul(c1, c2)
                out[m] = add(out[m], t) if m in out else t
        return PhasePoly(self.coords, out)

    def dx(self, i: int) -> "PhasePoly":
        return PhasePoly(self.coords, {m: diff(c, self.coords[i]) for m, c in self.terms.items()})

    def dp(self, i: int) -> "PhasePoly":
        out = {}
        for m, c in self.terms.items():
            if m[i]:
                mm = list(m)
                mm[i] -= 1
                out[tuple(mm)] = mul(num(m[i]), c)
        return PhasePoly(self.coords, out)

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def evaluate(self, X, P) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if not self.terms:
            return np.zeros(len(X))
        monos = list(self.terms)
        C = Program([self.terms[m] for m in monos], self.coords).evaluate(X)
        powers = np.stack([np.prod(P ** np.array(m), axis=1) for m in monos], axis=1)
        return (C * powers).sum(axis=1)

    def __call__(self, point) -> float:
        return float(self.evaluate([point.x], [point.p])[0])


def poisson_bracket(A, B, coords=None) -> PhasePoly:
    """``{A, B} = sum_i (d_{x_i} B d_{p_i} A - d_{x_i} A d_{p_i} B)``."""
    a = PhasePoly.coerce(A, coords)
    b = PhasePoly.coerce(B, coords or a.coords)
    if a.coords != b.coords:
        raise ValueError("phase functions live on different coordinates")
    out = PhasePoly(a.coords)
    for i in range(len(a.coords)):
        out = out + b.dx(i) * a.dp(i) - a.dx(i) * b.dp(i)
    return out


def _constraint_momenta(C_side, W_side, n, gen, draws=50):
    """Real momenta on ``{L^m = 0}`` for the side forms at one point, or None."""
    s = len(W_side)
    order = [I for I in combinations(range(n), s) if np.linalg.matrix_rank(C_side[:, list(I)]) == s]
    if not order:
        return None
    order.sort(key=lambda I: np.linalg.cond(C_side[:, list(I)]))
    for _ in range(draws):
        p = gen.uniform(-1.0, 1.0, size=n)
        mask = gen.random(n) < 0.3
        p[mask] = 0.0
        for I in order:
            M = C_side[:, list(I)]
            rest = [j for j in range(n) if j not in I]
            rhs = -(W_side + C_side[:, rest] @ (p[rest] ** 2))
            y = np.linalg.solve(M, rhs)
            tiny = 1e-14 * max(1.0, np.abs(rhs).max(), np.abs(y).max())
            if np.all(y >= -tiny):
                q = p.copy()
                q[list(I)] = np.sqrt(np.clip(y, 0.0, None)) * np.where(gen.random(s) < 0.5, -1.0, 1.0)
                return q
    return None


def _poly_arrays(poly: PhasePoly, X):
    """Coefficient values and term scales per monomial at samples."""
    monos = sorted(poly.terms)
    batch = Batch(poly.coords)
    groups = [batch.terms(poly.terms[m]) for m in monos]
    batch.run(X)
    vals = np.column_stack([batch.sum(g) for g in groups]) if monos else np.zeros((len(X), 0))
    scl = np.column_stack([batch.scale(g) for g in groups]) if monos else np.zeros((len(X), 0))
    return monos, vals, scl


def pb_closed_form(S: GeneralizedStackelMatrix, i: int, j: int) -> list[list[Expr]]:
    """Multiplier coefficients of ``{L^i, L^j} = sum_m lambda_m L^m`` (free columns m).

    ``c^(m)_h = 2 sum_k (T^{ik} T^{jh} - T^{jk} T^{ih}) d_h s_{km}``.
    """
    T = S.inverse()
    n = S.n
    out = []
    for m in range(n - S.sides, n):
        row = []
        for h in range(n):
            acc = ZERO
            for k in range(n):
                d = diff(S.entries[k][m], S.coords[h])
                if d.kind == "num" and d.value == 0:
                    continue
                acc = add(acc, mul(sub(mul(T[i][k], T[j][h]), mul(T[j][k], T[i][h])), d))
            row.append(mul(num(2.0), acc))
        out.append(row)
    return out


def check_bracket_side_condition(L: Sequence[QuadraticForm], samples, sides: int = 1,
                                 S: GeneralizedStackelMatrix | None = None,
                                 tol: float = TOL_IDENTITY, fit_tol: float = TOL_FIT,
                                 seed: int = 0, draws: int = 50) -> CheckReport:
    """Brackets of the constants of motion on and off the side conditions.

    (a) at momenta solving the side conditions, every bracket must vanish;
    (b) as polynomials in p at fixed x, ``{L^i, L^j} = sum_m lambda_m(p) L^m``
        with ``lambda_m`` linear in p, fitted by least squares and, when the
        Stäckel matrix is given, compared with the closed form.
    """
    L = list(L)
    n = len(L[0].coords)
    coords = L[0].coords
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    side = L[len(L) - sides:]
    pairs = list(combinations(range(len(L)), 2))
    brackets = {(i, j): poisson_bracket(L[i], L[j]) for i, j in pairs}
    side_parts = [q.parts(X) for q in side]

    # (a) on-constraint values
    gen = rng(seed, 11)
    on_res = np.zeros(len(X))
    on_abs = np.zeros(len(X))
    admissible = np.zeros(len(X), dtype=bool)
    P = np.zeros_like(X)
    for s in range(len(X)):
        C_side = np.array([sp[0][s] for sp in side_parts])
        W_side = np.array([sp[1][s] for sp in side_parts])
        p = _constraint_momenta(C_side, W_side, n, gen, draws)
        if p is not None:
            admissible[s] = True
            P[s] = p
    bracket_data = {}
    for key, poly in brackets.items():
        monos, vals, scl = _poly_arrays(poly, X)
        bracket_data[key] = (monos, vals, scl)
        if not monos:
            continue
        powers = np.stack([np.prod(P ** np.array(m), axis=1) for m in monos], axis=1)
        value = (vals * powers).sum(axis=1)
        scale = (scl * np.abs(powers)).sum(axis=1)
        on_abs = np.maximum(on_abs, np.where(admissible, np.abs(value), 0.0))
        on_res = np.maximum(on_res, np.where(admissible, relative(value, scale), 0.0))

    # (b) polynomial identity fit
    side_vals = [(q.parts(X)) for q in side]
    fit_res = np.zeros(len(X))
    closed_res = np.zeros(len(X))
    off_res = np.zeros(len(X))
    mults = {}
    closed_exprs = {}
    if S is not None:
        closed_exprs = {key: pb_closed_form(S, *key) for key in pairs}
    closed_vals = {}
    if closed_exprs:
        batch = Batch(coords)
        idx = {key: [[batch.terms(e) for e in row] for row in rows] for key, rows in closed_exprs.items()}
        batch.run(X)
        closed_vals = {
            key: (np.array([[batch.sum(g) for g in row] for row in rows]),
                  np.array([[batch.scale(g) for g in row] for row in rows]))
            for key, rows in idx.items()
        }
    for key in pairs:
        monos, vals, scl = bracket_data[key]
        mono_index = {m: t for t, m in enumerate(monos)}
        # unknowns c^(m)_h, m over side forms, h over coordinates
        target_monos = set(monos)
        for m_s in range(sides):
            for h in range(n):
                for k in range(n):
                    e = [0] * n
                    e[h] += 1
                    e[k] += 2
                    target_monos.add(tuple(e))
                e = [0] * n
                e[h] = 1
                target_monos.add(tuple(e))
        target = sorted(target_monos)
        cs = np.zeros((len(X), sides, n))
        for s in range(len(X)):
            A = np.zeros((len(target), sides * n))
            b = np.zeros(len(target))
            bs = np.zeros(len(target))
            row_of = {m: t for t, m in enumerate(target)}
            for m, t in mono_index.items():
                b[row_of[m]] = vals[s, t]
                bs[row_of[m]] = scl[s, t]
            for m_s in range(sides):
                coeffs, Wv = side_vals[m_s]
                for h in range(n):
                    col = m_s * n + h
                    for k in range(n):
                        e = [0] * n
                        e[h] += 1
                        e[k] += 2
                        A[row_of[tuple(e)], col] += coeffs[s, k]
                    e = [0] * n
                    e[h] = 1
                    A[row_of[tuple(e)], col] += Wv[s]
            c, *_ = np.linalg.lstsq(A, b, rcond=None)
            r = A @ c - b
            scale = bs + np.abs(A) @ np.abs(c)
            fit_res[s] = max(fit_res[s], float(relative(r, scale).max()) if len(r) else 0.0)
            off_res[s] = max(off_res[s], float(relative(b, bs).max()) if len(b) else 0.0)
            cs[s] = c.reshape(sides, n)
            if key in closed_vals:
                cv, cscale = closed_vals[key]
                cv = cv[:, :, s]
                cscale = cscale[:, :, s]
                denom = max(np.abs(cv).max(), cscale.max(), np.abs(c).max())
                d = np.abs(c.reshape(sides, n) - cv).max()
                closed_res[s] = max(closed_res[s], d / denom if denom > 0 else 0.0)
        mults[f"c{key[0] + 1}{key[1] + 1}"] = cs
    n_adm = int(admissible.sum())
    on_verdict = verdict_for(on_res[admissible], tol) if n_adm else OBSTRUCTION
    fit_verdict = verdict_for(fit_res, fit_tol)
    closed_verdict = verdict_for(closed_res, fit_tol) if closed_vals else "skipped"
    parts = [on_verdict, fit_verdict] + ([closed_verdict] if closed_vals else [])
    verdict = FAIL if FAIL in parts else (OBSTRUCTION if on_verdict == OBSTRUCTION else PASS)
    res = np.maximum(on_res, fit_res)
    details = {
        "admissible_samples": n_adm,
        "on_constraint": {"verdict": on_verdict, "max_residual": float(on_res.max()), "max_abs": float(on_abs.max())},
        "identity_fit": {"verdict": fit_verdict, "max_residual": float(fit_res.max())},
        "closed_form": {"verdict": closed_verdict, "max_residual": float(closed_res.max())},
        "off_constraint_max": float(off_res.max()),
    }
    return CheckReport("brackets", verdict, tol, X, res, on_abs, multipliers=mults, details=details)
