"""Pointwise separability conditions on an orthogonal metric.

Notation: ``h_j = H_j^-2`` (contravariant metric), ``L_k = rho_k h_k`` the
coefficients of the side condition, ``B_k = rho_k / rho_r`` with ``r`` the
reference coordinate (the first one where ``rho`` does not vanish).
"""

from __future__ import annotations

import numpy as np

from ..exprkit import ONE, Expr, add, as_expr, diff, div, mul, neg, sub, sym
from ..sampling import rng
from ..stackel_core import OrthogonalMetric, QuadraticForm
from .report import (
    FAIL, PASS, REGULAR, TOL_IDENTITY, ZERO_DENOM, Batch, CheckReport, family_relative, ratio_residual,
    relative,
    verdict_for,
)


def cij_operator(hk2, f, i: int, j: int, coords) -> Expr:
    """``C_ij(f) = d_ij f - (d_j h_i / h_i) d_i f - (d_i h_j / h_j) d_j f``."""
    if i == j:
        raise ValueError("C_ij needs i != j")
    hi, hj = as_expr(hk2[i]), as_expr(hk2[j])
    f = as_expr(f)
    xi, xj = coords[i], coords[j]
    fi, fj = diff(f, xi), diff(f, xj)
    return sub(sub(diff(fi, xj), mul(div(diff(hi, xj), hi), fi)), mul(div(diff(hj, xi), hj), fj))


def cij_numerator(hk2, f, i: int, j: int, coords) -> Expr:
    """``h_i h_j C_ij(f)``, free of denominators."""
    hi, hj = as_expr(hk2[i]), as_expr(hk2[j])
    f = as_expr(f)
    xi, xj = coords[i], coords[j]
    fi, fj = diff(f, xi), diff(f, xj)
    return sub(sub(mul(mul(hi, hj), diff(fi, xj)), mul(mul(hj, diff(hi, xj)), fi)), mul(mul(hi, diff(hj, xi)), fj))


# the printed operator has a stray log in one coefficient; both are read as d h / h
CIJ_READING = "log-derivative d_i h_j / h_j in both first-order coefficients"


def _pairs(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def check_regular(metric: OrthogonalMetric, V, samples, tol: float = TOL_IDENTITY) -> CheckReport:
    """Levi-Civita type conditions ``C_ij(h_k) = 0`` and ``C_ij(V) = 0``."""
    coords, h = metric.coords, metric.hinv2
    V = as_expr(V if V is not None else 0)
    batch = Batch(coords)
    groups = []
    for i, j in _pairs(metric.n):
        for k in range(metric.n):
            groups.append((f"C{i + 1}{j + 1}(h{k + 1})", batch.terms(cij_numerator(h, h[k], i, j, coords))))
        groups.append((f"C{i + 1}{j + 1}(V)", batch.terms(cij_numerator(h, V, i, j, coords))))
    batch.run(samples)
    per = {name: relative(batch.sum(idx), batch.scale(idx)) for name, idx in groups}
    res = np.max(np.vstack(list(per.values())), axis=0) if per else np.zeros(len(samples))
    absr = np.max(np.vstack([np.abs(batch.sum(idx)) for _, idx in groups]), axis=0) if groups else res
    worst = {k: float(v.max()) for k, v in per.items()}
    return CheckReport(
        "regular", verdict_for(res, tol), tol, np.asarray(samples), res, absr,
        details={"conditions": worst, "cij_reading": CIJ_READING},
    )


def _reference_index(L_vals: np.ndarray) -> tuple[int, np.ndarray]:
    scale = np.abs(L_vals).max(axis=1, keepdims=True)
    zero = np.abs(L_vals) <= ZERO_DENOM * np.where(scale > 0, scale, 1.0)
    for k in range(L_vals.shape[1]):
        if not zero[:, k].any():
            return k, zero
    return -1, zero


def b_exprs(metric: OrthogonalMetric, LN: QuadraticForm, r: int) -> list[Expr]:
    """``B_k = rho_k / rho_r = L_k h_r / (h_k L_r)``; ``B_r = 1``."""
    h, L = metric.hinv2, LN.coeffs
    return [ONE if k == r else div(mul(L[k], h[r]), mul(h[k], L[r])) for k in range(metric.n)]


def check_nonregular(metric: OrthogonalMetric, LN: QuadraticForm, V, W=None, samples=None,
                     tol: float = TOL_IDENTITY, random_b: int = 3, seed: int = 0) -> CheckReport:
    """Conditions for nonregular separation on the leaf ``L^N = 0``.

    Evaluates, at every sample, the first-order conditions relating
    ``rho^(N)``, ``V`` and ``W``, the second-order ``C_ij`` ratios, the
    first-order system for ``B_k`` and its integrability identity.  The
    integrability identity is checked as a formal identity in ``B`` (at the
    actual ``B`` and at random values) with both sides built independently.
    """
    coords, h, n = metric.coords, metric.hinv2, metric.n
    V = as_expr(V if V is not None else 0)
    W = as_expr(W if W is not None else LN.W)
    L = LN.coeffs
    X = np.atleast_2d(np.asarray(samples, dtype=float))

    pre = Batch(coords)
    Lidx = [pre.add(c) for c in L]
    pre.run(X)
    L_vals = np.column_stack([pre.value(i) for i in Lidx])
    r, zeroL = _reference_index(L_vals)
    if r < 0:
        raise ValueError("side condition has no coordinate with nonvanishing eigenvalue at every sample")

    batch = Batch(coords)
    hdiff = [[diff(h[k], x) for x in coords] for k in range(n)]

    # first-order conditions: ratios (h_j d_j L_a - L_j d_j h_a) / L_a
    def first_num(a, j):
        return sub(mul(h[j], diff(L[a], coords[j])), mul(L[j], hdiff[a][j]))

    ratios0 = []
    for j in range(n):
        nums = {a: batch.terms(first_num(a, j)) for a in range(n)}
        nW = batch.terms(sub(mul(h[j], diff(W, coords[j])), mul(L[j], diff(V, coords[j]))))
        ratios0.append((j, nums, nW))
    w_terms = batch.terms(W)

    # second-order: K_ij(h_a) / L_a and K_ij(V) / W
    ratios1 = []
    for i, j in _pairs(n):
        nums = {a: batch.terms(cij_numerator(h, h[a], i, j, coords)) for a in range(n)}
        nV = batch.terms(cij_numerator(h, V, i, j, coords))
        ratios1.append(((i, j), nums, nV))

    # first-order system for B
    B = b_exprs(metric, LN, r)
    eiln1 = []
    for i in range(n):
        for k in range(n):
            if k == r:
                continue
            lhs = mul(mul(h[k], h[r]), diff(B[k], coords[i]))
            rhs1 = mul(mul(sub(B[i], B[k]), h[r]), hdiff[k][i])
            rhs2 = mul(mul(mul(B[k], sub(ONE, B[i])), h[k]), hdiff[r][i])
            eiln1.append(((i, k), batch.terms(lhs, neg(rhs1), neg(rhs2))))

    # its second-order consequence at the actual B
    lcln1 = []
    for i, j in _pairs(n):
        for k in range(n):
            if k == r:
                continue
            e = sub(mul(cij_numerator(h, h[k], i, j, coords), h[r]),
                    mul(mul(B[k], h[k]), cij_numerator(h, h[r], i, j, coords)))
            lcln1.append(((i, j, k), batch.terms(e)))

    batch.run(X)
    Ls = L_vals
    Lzero = zeroL
    Wv = batch.sum(w_terms)
    Wzero = np.abs(Wv) <= ZERO_DENOM * batch.scale(w_terms)

    conds = {}
    degenerate = np.zeros(len(X), dtype=bool)

    res0 = []
    for j, nums, nW in ratios0:
        ref_n, ref_s = batch.sum(nums[r]), batch.scale(nums[r])
        for a in range(n):
            if a == r:
                continue
            rr, used = ratio_residual(batch.sum(nums[a]), batch.scale(nums[a]), Ls[:, a],
                                      ref_n, ref_s, Ls[:, r], Lzero[:, a], Lzero[:, r])
            res0.append(rr)
            degenerate |= used
        rr, used = ratio_residual(ref_n, ref_s, Ls[:, r], batch.sum(nW), batch.scale(nW), Wv,
                                  Lzero[:, r], Wzero)
        res0.append(rr)
        degenerate |= used
    conds["EiLN0"] = np.max(res0, axis=0)

    res1 = []
    for _, nums, nV in ratios1:
        ref_n, ref_s = batch.sum(nums[r]), batch.scale(nums[r])
        for a in range(n):
            if a == r:
                continue
            rr, used = ratio_residual(batch.sum(nums[a]), batch.scale(nums[a]), Ls[:, a],
                                      ref_n, ref_s, Ls[:, r], Lzero[:, a], Lzero[:, r])
            res1.append(rr)
            degenerate |= used
        rr, used = ratio_residual(ref_n, ref_s, Ls[:, r], batch.sum(nV), batch.scale(nV), Wv,
                                  Lzero[:, r], Wzero)
        res1.append(rr)
        degenerate |= used
    conds["LCLN0"] = np.max(res1, axis=0) if res1 else np.zeros(len(X))

    conds["EiLN1"] = _max_rel(batch, [idx for _, idx in eiln1], len(X))
    conds["LCLN1"] = _max_rel(batch, [idx for _, idx in lcln1], len(X))
    conds["intcondLN"], B_vals = _intcond(metric, LN, r, X, B, random_b, seed)

    res = np.max(np.vstack(list(conds.values())), axis=0)
    details = {
        "reference_coordinate": coords[r],
        "conditions": {k: {"max_residual": float(v.max()), "verdict": verdict_for(v, tol)} for k, v in conds.items()},
        "degenerate_samples": int(degenerate.sum()),
    }
    return CheckReport(
        "nonregular", verdict_for(res, tol, bool(degenerate.any())), tol, X, res, res,
        multipliers={"B": B_vals}, details=details,
    )


def _max_rel(batch: Batch, groups, npts):
    if not groups:
        return np.zeros(npts)
    return family_relative([batch.sum(g) for g in groups], [batch.scale(g) for g in groups])


def _intcond(metric, LN, r, X, B_actual, random_b, seed):
    """Formal integrability identity of the first-order system for B."""
    coords, h, n = metric.coords, metric.hinv2, metric.n
    bsym = [None if k == r else f"B#{k + 1}" for k in range(n)]
    beta = [ONE if k == r else sym(bsym[k]) for k in range(n)]
    a = [[div(diff(h[k], x), h[k]) for k in range(n)] for x in coords]  # a[i][k] = d_i h_k / h_k

    def G(i, k):
        return add(mul(sub(beta[i], beta[k]), a[i][k]), mul(mul(beta[k], sub(ONE, beta[i])), a[i][r]))

    def D(j, e):
        out = diff(e, coords[j])
        for m in range(n):
            if m != r:
                out = add(out, mul(diff(e, bsym[m]), G(j, m)))
        return out

    symbols = list(coords) + [s for s in bsym if s is not None]
    batch = Batch(symbols)
    groups = []
    for i, j in _pairs(n):
        for k in range(n):
            if k == r:
                continue
            lhs = sub(D(j, G(i, k)), D(i, G(j, k)))
            c_k = div(cij_numerator(h, h[k], i, j, coords), mul(mul(h[i], h[j]), h[k]))
            c_r = div(cij_numerator(h, h[r], i, j, coords), mul(mul(h[i], h[j]), h[r]))
            rhs = mul(sub(beta[i], beta[j]), sub(c_k, mul(beta[k], c_r)))
            groups.append(batch.terms(lhs, neg(rhs)))
    bprog = Batch(coords)
    bidx = [bprog.add(b) for b in B_actual]
    bprog.run(X)
    B_vals = np.column_stack([bprog.value(i) for i in bidx])
    free = [k for k in range(n) if k != r]
    if not groups:
        return np.zeros(len(X)), B_vals
    gen = rng(seed, 7)
    worst = np.zeros(len(X))
    draws = [B_vals[:, free]] + [gen.uniform(-2.0, 2.0, size=(len(X), len(free))) for _ in range(random_b)]
    for d in draws:
        batch.run(np.hstack([X, d]))
        worst = np.maximum(worst, _max_rel(batch, groups, len(X)))
    return worst, B_vals


def candidate_BN(metric: OrthogonalMetric, samples, tol: float = TOL_IDENTITY, reference: int = 0) -> CheckReport:
    """``B_a = C_ij(h_a) h_r / (C_ij(h_r) h_a)``, required to be independent of (i, j)."""
    coords, h, n = metric.coords, metric.hinv2, metric.n
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    r = reference
    batch = Batch(coords)
    hidx = [batch.add(x) for x in h]
    pairs = _pairs(n)
    K = {(p, a): batch.terms(cij_numerator(h, h[a], p[0], p[1], coords)) for p in pairs for a in range(n)}
    batch.run(X)
    hv = np.column_stack([batch.value(i) for i in hidx])
    B = np.full((len(X), n), np.nan)
    spread = np.zeros(len(X))
    regular = np.zeros(len(X), dtype=bool)
    inconsistent = np.zeros(len(X), dtype=bool)
    for s in range(len(X)):
        cand = []
        for p in pairs:
            kr = batch.sum(K[(p, r)])[s]
            sr = batch.scale(K[(p, r)])[s]
            vals = np.array([batch.sum(K[(p, a)])[s] for a in range(n)])
            scl = np.array([batch.scale(K[(p, a)])[s] for a in range(n)])
            if abs(kr) <= ZERO_DENOM * sr or sr == 0:
                # convention: the other numerators must vanish as well
                if np.any(np.abs(vals) > tol * np.maximum(scl, np.finfo(float).tiny)):
                    inconsistent[s] = True
                continue
            cand.append(vals * hv[s, r] / (kr * hv[s]))
        if not cand:
            regular[s] = True
            continue
        cand = np.array(cand)
        B[s] = cand.mean(axis=0)
        mag = max(np.abs(cand).max(), 1.0)
        spread[s] = float((cand.max(axis=0) - cand.min(axis=0)).max() / mag)
    if regular.all():
        verdict = REGULAR
    elif inconsistent.any():
        verdict = FAIL
    else:
        verdict = PASS if spread.max() <= tol else FAIL
    res = np.where(inconsistent, np.inf, spread)
    return CheckReport(
        "candidate_BN", verdict, tol, X, res, res,
        multipliers={"B": B},
        details={"regular_samples": int(regular.sum()), "reference_coordinate": coords[r]},
    )
