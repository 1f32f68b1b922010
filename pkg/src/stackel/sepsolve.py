"""Separated solutions: construction from the separated equations and verification.

Conventions.  The separated equations of a generalized Stäckel system are

    p_i^2 + v_i + sum_a s_ia lambda_a = 0                  (Hamilton-Jacobi)
    psi_i'' + f_i psi_i' + (v_i - sum_a s_ia lambda_a) psi_i = 0   (Helmholtz)

with ``a`` running over the ``N - sides`` non-side columns.  For
Hamilton-Jacobi ``lambda_1 = -E``; for Helmholtz ``lambda_1 = E``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import ceil
from typing import Sequence

import numpy as np

from .exprkit import (
    ZERO, Expr, ExprDomainError, Program, add, as_expr, diff, div, exp, mul, neg, num, sub, total,
)
from .sepcheck.report import TOL_IDENTITY, Batch, CheckReport, relative, verdict_for
from .stackel_core import GeneralizedStackelMatrix, OrthogonalMetric


class SingularCoefficientError(ValueError):
    def __init__(self, coord: str, location: float, detail: str = ""):
        self.coord = coord
        self.location = location
        super().__init__(
            f"coefficient singular near {coord} = {location:.6g}{': ' + detail if detail else ''}; "
            "split the interval"
        )


class GridError(ValueError):
    pass


class StencilError(GridError):
    pass


# ---------------------------------------------------------------------------
# separated equations

@dataclass(frozen=True)
class SeparationSystem:
    coords: tuple
    rows: tuple          # rows[i][a] = s_{i a} for the non-side columns
    v: tuple
    f: tuple
    lam: tuple
    mode: str = "helmholtz"
    R: Expr | None = None

    def __post_init__(self):
        if self.mode not in ("hj", "helmholtz"):
            raise ValueError("mode must be 'hj' or 'helmholtz'")
        n = len(self.coords)
        if any(len(r) != len(self.lam) for r in self.rows) or len(self.rows) != n:
            raise ValueError(f"need {n} rows of {len(self.lam)} entries")
        for i, x in enumerate(self.coords):
            for e in (self.v[i], self.f[i], *self.rows[i]):
                extra = as_expr(e).free_symbols - {x}
                if extra:
                    raise ValueError(f"separated equation {i + 1} depends on {sorted(extra)}")

    @classmethod
    def from_stackel(cls, S: GeneralizedStackelMatrix, v, lam, f=None, mode="helmholtz", R=None):
        k = S.n - S.sides
        lam = tuple(float(x) for x in lam)
        if len(lam) != k:
            raise ValueError(f"need {k} separation constants (the side columns carry none), got {len(lam)}")
        rows = tuple(tuple(S.entries[i][:k]) for i in range(S.n))
        v = tuple(as_expr(e) for e in v)
        f = tuple(as_expr(e) for e in (f or [ZERO] * S.n))
        return cls(S.coords, rows, v, f, lam, mode, as_expr(R) if R is not None else None)

    @property
    def energy(self) -> float:
        return self.lam[0] if self.mode == "helmholtz" else -self.lam[0]

    def ode(self, i: int) -> tuple[Expr, Expr]:
        """``(f_i, q_i)`` with ``psi'' + f_i psi' + q_i psi = 0``."""
        q = sub(self.v[i], total(mul(as_expr(s), num(l)) for s, l in zip(self.rows[i], self.lam)))
        return as_expr(self.f[i]), q

    def momentum_squared(self, i: int) -> Expr:
        """``p_i^2 = -v_i - sum_a s_ia lambda_a``."""
        return neg(add(self.v[i], total(mul(as_expr(s), num(l)) for s, l in zip(self.rows[i], self.lam))))


def hj_pointwise_verify(S: GeneralizedStackelMatrix, v, lam, samples, tol: float = TOL_IDENTITY) -> CheckReport:
    """Check the separated HJ solution at the level of squared momenta.

    ``L_l = -lambda_l`` for the non-side constants (so ``H = E = -lambda_1``)
    and ``L_m = 0`` for the side conditions.  Points where some ``p_i^2 < 0``
    are classically forbidden; they are listed but do not fail the check.
    """
    sys = SeparationSystem.from_stackel(S, v, lam, mode="hj")
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    n = S.n
    P2 = Program([sys.momentum_squared(i) for i in range(n)], S.coords).evaluate(X)
    T = S.invert_many(X)
    vv = Program(list(sys.v), S.coords).evaluate(X)
    target = np.array(list(sys.lam) + [0.0] * S.sides)
    res = np.zeros(len(X))
    absr = np.zeros(len(X))
    per = {}
    for l in range(n):
        quad_terms = T[:, l, :] * P2
        pot_terms = T[:, l, :] * vv
        value = quad_terms.sum(axis=1) + pot_terms.sum(axis=1) + target[l]
        scale = np.abs(quad_terms).sum(axis=1) + np.abs(pot_terms).sum(axis=1) + abs(target[l])
        r = relative(value, scale)
        per[f"L{l + 1}"] = float(r.max()) if len(r) else 0.0
        res = np.maximum(res, r)
        absr = np.maximum(absr, np.abs(value))
    forbidden = np.where((P2 < 0).any(axis=1))[0]
    details = {
        "E": sys.energy,
        "identities": per,
        "forbidden_samples": [X[i].tolist() for i in forbidden],
        "forbidden_count": int(len(forbidden)),
    }
    return CheckReport("hj_pointwise", verdict_for(res, tol), tol, X, res, absr,
                       multipliers={"p2": P2}, details=details)


# ---------------------------------------------------------------------------
# integration

@dataclass
class SampledFactor:
    coord: str
    xs: np.ndarray
    ys: np.ndarray
    dys: np.ndarray

    @property
    def h(self) -> float:
        return float(self.xs[1] - self.xs[0]) if len(self.xs) > 1 else 0.0


def integrate_ode(f, q, coord: str, interval, y0: float, dy0: float, h: float, backend=None) -> SampledFactor:
    """Fixed-step RK4 for ``y'' + f y' + q y = 0``.

    The step is shrunk so that a whole number of steps ends exactly at the
    right end of ``interval``.
    """
    a, b = (float(t) for t in interval)
    if not h > 0:
        raise ValueError("step must be positive")
    if not b > a:
        raise ValueError("empty interval")
    nsteps = max(1, ceil((b - a) / h - 1e-9))
    step = (b - a) / nsteps
    prog = Program([as_expr(f), as_expr(q)], (coord,))
    try:
        xs, ys, dys = prog.rk4(a, step, nsteps, float(y0), float(dy0), backend=backend)
    except ExprDomainError as exc:
        loc = exc.point.get(coord, float("nan")) if isinstance(exc.point, dict) else float("nan")
        raise SingularCoefficientError(coord, loc, exc.reason) from exc
    bad = ~np.isfinite(ys)
    if bad.any():
        raise SingularCoefficientError(coord, float(xs[np.argmax(bad)]), "solution overflowed")
    return SampledFactor(coord, np.asarray(xs), np.asarray(ys), np.asarray(dys))


def integrate_factor(system: SeparationSystem, i: int, interval, y0: float, dy0: float, h: float,
                     backend=None) -> SampledFactor:
    f, q = system.ode(i)
    return integrate_ode(f, q, system.coords[i], interval, y0, dy0, h, backend)


def richardson(f, q, coord, interval, y0, dy0, h, exact=None, backend=None) -> dict:
    """Endpoint errors at ``h, h/2, h/4`` and their ratios (about 16 for RK4)."""
    runs = [integrate_ode(f, q, coord, interval, y0, dy0, h / 2**k, backend) for k in range(3)]
    ends = np.array([r.ys[-1] for r in runs])
    out = {"h": [r.h for r in runs], "endpoint": ends.tolist()}
    d1, d2 = ends[0] - ends[1], ends[1] - ends[2]
    out["ratio"] = float(d1 / d2) if d2 != 0 else float("inf")
    if exact is not None:
        errs = np.abs(ends - exact)
        out["errors"] = errs.tolist()
        out["error_ratio"] = float(errs[0] / errs[1]) if errs[1] > 0 else float("inf")
    return out


# ---------------------------------------------------------------------------
# assembly

@dataclass
class SeparatedSolution:
    coords: tuple
    mode: str = "product"
    R: Expr | None = None
    psi: tuple | None = None          # closed-form factors
    axes: tuple | None = None         # grid axes
    values: np.ndarray | None = None  # Theta (product) or u (sum) on the grid
    factors: tuple = field(default_factory=tuple)

    @property
    def closed_form(self) -> bool:
        return self.psi is not None

    def psi_expr(self) -> Expr:
        if self.mode == "sum":
            return total(self.psi)
        out = self.psi[0]
        for p in self.psi[1:]:
            out = mul(out, p)
        return out

    def theta_expr(self) -> Expr:
        base = self.psi_expr()
        if self.mode == "product" and self.R is not None:
            return mul(exp(self.R), base)
        return base

    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def closed_form_solution(coords, psi, R=None, mode="product") -> SeparatedSolution:
    psi = tuple(as_expr(p) for p in psi)
    for x, p in zip(coords, psi):
        extra = p.free_symbols - {x}
        if extra:
            raise ValueError(f"factor for {x} depends on {sorted(extra)}")
    return SeparatedSolution(tuple(coords), mode, as_expr(R) if R is not None else None, psi=psi)


def assemble(factors: Sequence, R=None, mode: str = "product", coords=None, axes=None) -> SeparatedSolution:
    """Tensor-product values of ``exp(R) prod psi_j`` (or ``sum u_j`` in sum mode).

    ``factors`` are :class:`SampledFactor` objects, or expressions together
    with ``axes`` (one 1-D array per coordinate).
    """
    if mode not in ("product", "sum"):
        raise ValueError("mode must be 'product' or 'sum'")
    sampled = all(isinstance(fc, SampledFactor) for fc in factors)
    if sampled:
        coords = tuple(fc.coord for fc in factors) if coords is None else tuple(coords)
        grid_axes = [np.asarray(fc.xs, dtype=float) for fc in factors]
        if axes is not None:
            for j, (ax, g) in enumerate(zip(axes, grid_axes)):
                ax = np.asarray(ax, dtype=float)
                if ax.shape != g.shape or np.abs(ax - g).max() > 1e-12 * max(1.0, np.abs(ax).max()):
                    raise GridError(f"factor grid for {coords[j]} does not match the tensor axis")
        vals1d = [np.asarray(fc.ys, dtype=float) for fc in factors]
    else:
        if coords is None or axes is None:
            raise GridError("expression factors need coordinates and axes")
        coords = tuple(coords)
        grid_axes = [np.asarray(a, dtype=float) for a in axes]
        vals1d = []
        for x, e, ax in zip(coords, factors, grid_axes):
            e = as_expr(e)
            vals1d.append(Program([e], (x,)).evaluate(ax[:, None])[:, 0])
    if len(grid_axes) != len(coords):
        raise GridError("one factor per coordinate")
    out = vals1d[0]
    for vals in vals1d[1:]:
        out = np.add.outer(out, vals) if mode == "sum" else np.multiply.outer(out, vals)
    R = as_expr(R) if R is not None else None
    if mode == "product" and R is not None:
        mesh = np.meshgrid(*grid_axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        out = out * np.exp(Program([R], coords).evaluate(pts)[:, 0]).reshape(out.shape)
    return SeparatedSolution(coords, mode, R, axes=tuple(grid_axes), values=out,
                             factors=tuple(factors) if sampled else ())


# ---------------------------------------------------------------------------
# operators

def lb_first_order(metric: OrthogonalMetric) -> list[Expr]:
    """``b_j`` in ``Delta = sum h_j d_j^2 + sum b_j d_j`` for a diagonal metric.

    ``b_j = d_j h_j - h_j/2 sum_k d_j h_k / h_k``; ratios keep this valid for
    metrics of any signature.
    """
    h, coords = metric.hinv2, metric.coords
    out = []
    for j, x in enumerate(coords):
        s = total(div(diff(hk, x), hk) for hk in h)
        out.append(sub(diff(h[j], x), mul(num(0.5), mul(h[j], s))))
    return out


def laplace_beltrami(metric: OrthogonalMetric, phi) -> Expr:
    phi = as_expr(phi)
    b = lb_first_order(metric)
    return total(add(mul(h, diff(phi, x, 2)), mul(bj, diff(phi, x)))
                 for x, h, bj in zip(metric.coords, metric.hinv2, b))


def helmholtz_apply(metric: OrthogonalMetric, V, F, theta) -> list[Expr]:
    """Terms of ``(Delta + F.d + V) theta``."""
    theta = as_expr(theta)
    b = lb_first_order(metric)
    terms = []
    for x, h, bj, Fj in zip(metric.coords, metric.hinv2, b, F):
        d1 = diff(theta, x)
        terms += [mul(h, diff(theta, x, 2)), mul(bj, d1), mul(as_expr(Fj), d1)]
    terms.append(mul(as_expr(V), theta))
    return terms


def derived_helmholtz(metric: OrthogonalMetric, v, f, R) -> tuple[Expr, tuple[Expr, ...]]:
    """``(V, F)`` with ``exp(R) L_1 exp(-R) = Delta + F.d + V``."""
    R = as_expr(R)
    b = lb_first_order(metric)
    F, Vt = [], []
    for x, h, bj, fj, vj in zip(metric.coords, metric.hinv2, b, f, v):
        Rj = diff(R, x)
        F.append(sub(mul(h, sub(as_expr(fj), mul(num(2.0), Rj))), bj))
        Vt.append(mul(h, total([mul(Rj, Rj), neg(diff(Rj, x)), neg(mul(as_expr(fj), Rj)), as_expr(vj)])))
    return total(Vt), tuple(F)


def _operator_data(sd):
    metric = sd.metric()
    hh = sd.helmholtz()
    derived = hh is None
    if derived:
        V, F = derived_helmholtz(metric, sd.potentials(), sd.first_order(), sd.rfactor())
    else:
        V, F = hh
    return metric, V, F, derived


def _solution_E(sd, E):
    if E is not None:
        return float(E)
    E = sd.get("solution", "E")
    if E is None:
        raise ValueError(f"{sd.name}: no energy given and none stored with the definition")
    return float(E)


def solution_of(sd) -> SeparatedSolution:
    psi = sd.get("solution", "psi")
    if psi is None:
        raise ValueError(f"{sd.name} has no stored closed-form solution")
    return closed_form_solution(sd.coords, [sd.bind(p) for p in psi], sd.rfactor() if sd.R is not None else None)


TOL_EXACT = 1e-9
TOL_STENCIL = 1e-4


def pde_residual(sd, solution: SeparatedSolution, samples=None, E=None, tol: float | None = None,
                 max_nodes: int = 2000) -> CheckReport:
    """``|H Theta - E Theta|`` relative to the size of its terms, plus side-condition residuals.

    Closed-form solutions use exact derivatives at ``samples``.  Grid
    solutions use fourth-order central differences at nodes at least two
    cells away from the boundary.  The default tolerance is ``TOL_EXACT`` or
    ``TOL_STENCIL`` accordingly.
    """
    if tol is None:
        tol = TOL_EXACT if solution.closed_form else TOL_STENCIL
    E = _solution_E(sd, E)
    metric, V, F, derived = _operator_data(sd)
    S = sd.matrix()
    T = S.inverse()
    f, v = sd.first_order(), sd.potentials()
    side_rows = list(range(S.n - S.sides, S.n))
    if solution.closed_form:
        X = np.atleast_2d(np.asarray(samples, dtype=float))
        theta = solution.theta_expr()
        psi = solution.psi_expr()
        batch = Batch(sd.coords)
        main = batch.terms(*helmholtz_apply(metric, V, F, theta), neg(mul(num(E), theta)))
        side = []
        for l in side_rows:
            terms = []
            for x, t, fj, vj in zip(sd.coords, T[l], f, v):
                terms += [mul(t, diff(psi, x, 2)), mul(mul(t, fj), diff(psi, x)), mul(mul(t, vj), psi)]
            side.append(batch.terms(*terms))
        batch.run(X)
        res = relative(batch.sum(main), batch.scale(main))
        absr = np.abs(batch.sum(main))
        side_res = [relative(batch.sum(g), batch.scale(g)) for g in side]
        method = "exact"
    else:
        X, res, absr, side_res = _grid_residual(sd, solution, metric, V, F, E, T, f, v, side_rows,
                                                samples, max_nodes)
        method = "fd4"
    side_max = np.max(np.vstack(side_res), axis=0) if side_res else np.zeros(len(X))
    total_res = np.maximum(res, side_max)
    details = {
        "E": E,
        "method": method,
        "pde_max": float(res.max()) if len(res) else 0.0,
        "side_max": {f"L{l + 1}": float(r.max()) if len(r) else 0.0 for l, r in zip(side_rows, side_res)},
        "operator": "derived from the separated operator" if derived else "declared",
    }
    return CheckReport("pde_residual", verdict_for(total_res, tol), tol, X, total_res, absr, details=details)


def _fd(values, axis, h):
    """Fourth-order first and second derivatives on interior nodes (two-cell border dropped)."""
    n = values.ndim

    def sl(off):
        idx = [slice(2, -2)] * n
        lo = 2 + off
        hi = values.shape[axis] - 2 + off
        idx[axis] = slice(lo, hi)
        return values[tuple(idx)]

    d1 = (-sl(2) + 8 * sl(1) - 8 * sl(-1) + sl(-2)) / (12 * h)
    d2 = (-sl(2) + 16 * sl(1) - 30 * sl(0) + 16 * sl(-1) - sl(-2)) / (12 * h * h)
    return d1, d2


def _grid_residual(sd, sol, metric, V, F, E, T, f, v, side_rows, samples, max_nodes):
    axes = [np.asarray(a) for a in sol.axes]
    if any(len(a) < 5 for a in axes):
        raise StencilError("grid needs at least five nodes per axis for the fourth-order stencil")
    hs = [float(a[1] - a[0]) for a in axes]
    for a, h in zip(axes, hs):
        if np.abs(np.diff(a) - h).max() > 1e-9 * abs(h):
            raise GridError("finite differences need uniform axes")
    theta = sol.values
    inner = [a[2:-2] for a in axes]
    mesh = np.meshgrid(*inner, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    shape = mesh[0].shape
    if samples is not None and not np.isscalar(samples):
        req = np.atleast_2d(np.asarray(samples, dtype=float))
        picks = []
        for p in req:
            idx = []
            for j, (a, h) in enumerate(zip(axes, hs)):
                k = int(round((p[j] - a[0]) / h))
                if not 0 <= k < len(a) or abs(a[k] - p[j]) > 1e-9 * max(abs(h), 1.0):
                    raise GridError(f"sample {p.tolist()} is not a grid node")
                if k < 2 or k > len(a) - 3:
                    raise StencilError(f"sample {p.tolist()} is within two cells of the grid boundary")
                idx.append(k - 2)
            picks.append(np.ravel_multi_index(idx, shape))
        sel = np.array(picks, dtype=int)
    else:
        count = max_nodes if samples is None else int(samples)
        sel = np.unique(np.linspace(0, len(pts) - 1, min(count, len(pts))).round().astype(int))
    P = pts[sel]
    b = lb_first_order(metric)
    coeffs = Program(list(metric.hinv2) + b + list(F) + [V], sd.coords).evaluate(P)
    n = len(axes)
    h_, b_, F_, V_ = coeffs[:, :n], coeffs[:, n:2 * n], coeffs[:, 2 * n:3 * n], coeffs[:, 3 * n]
    th = theta[tuple(slice(2, -2) for _ in range(n))].ravel()[sel]
    terms = [V_ * th, -E * th]
    for j in range(n):
        d1, d2 = _fd(theta, j, hs[j])
        d1, d2 = d1.ravel()[sel], d2.ravel()[sel]
        terms += [h_[:, j] * d2, b_[:, j] * d1, F_[:, j] * d1]
    terms = np.array(terms)
    value = terms.sum(axis=0)
    res = relative(value, np.abs(terms).sum(axis=0))
    # side conditions on psi = exp(-R) theta
    psi_grid = theta
    if sol.mode == "product" and sd.R is not None:
        full = np.meshgrid(*axes, indexing="ij")
        allpts = np.stack([m.ravel() for m in full], axis=1)
        psi_grid = theta * np.exp(-Program([sd.rfactor()], sd.coords).evaluate(allpts)[:, 0]).reshape(theta.shape)
    side_res = []
    psi_in = psi_grid[tuple(slice(2, -2) for _ in range(n))].ravel()[sel]
    derivs = [tuple(d.ravel()[sel] for d in _fd(psi_grid, j, hs[j])) for j in range(n)]
    for l in side_rows:
        cf = Program(list(T[l]) + [mul(t, fj) for t, fj in zip(T[l], f)] + [mul(t, vj) for t, vj in zip(T[l], v)],
                     sd.coords).evaluate(P)
        st = []
        for j in range(n):
            d1, d2 = derivs[j]
            st += [cf[:, j] * d2, cf[:, n + j] * d1, cf[:, 2 * n + j] * psi_in]
        st = np.array(st)
        side_res.append(relative(st.sum(axis=0), np.abs(st).sum(axis=0)))
    return P, res, np.abs(value), side_res


def r_identity_check(sd, samples, E: float = 0.0, lam=None, count: int = 10, degree: int = 3,
                     tol: float = TOL_IDENTITY) -> CheckReport:
    """``exp(-R)(H - E) exp(R) phi = sum_j T^{1j}(d_j^2 + f_j d_j + v_j - sum_a s_ja lambda_a) phi``.

    ``lambda_1 = E``; the remaining constants default to zero.  Both sides are
    applied to ``count`` test functions (monomials up to ``degree`` times an
    exponential) and compared at the samples.
    """
    from .sepcheck.operators import multi_indices

    metric, V, F, derived = _operator_data(sd)
    S = sd.matrix()
    T = S.inverse()
    k = S.n - S.sides
    lam = [E] + list(lam if lam is not None else [0.0] * (k - 1))
    if len(lam) != k:
        raise ValueError(f"need {k - 1} constants besides E")
    R = sd.rfactor()
    f, v = sd.first_order(), sd.potentials()
    coords = sd.coords
    q = [sub(vj, total(mul(S.entries[j][a], num(lam[a])) for a in range(k))) for j, vj in enumerate(v)]
    betas = multi_indices(len(coords), degree)
    pick = np.unique(np.linspace(0, len(betas) - 1, min(count, len(betas))).round().astype(int))
    rates = [0.3, -0.2, 0.1, 0.25]
    wave = exp(total(mul(num(rates[i % 4]), as_expr(x)) for i, x in enumerate(coords)))
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    batch = Batch(coords)
    groups = []
    for bi in pick:
        mono = num(1.0)
        for x, p in zip(coords, betas[bi]):
            for _ in range(p):
                mono = mul(mono, as_expr(x))
        phi = mul(mono, wave)
        eR = exp(R)
        lhs = [mul(exp(neg(R)), t) for t in helmholtz_apply(metric, V, F, mul(eR, phi))]
        lhs.append(neg(mul(num(E), phi)))
        rhs = []
        for x, t, fj, qj in zip(coords, T[0], f, q):
            rhs += [mul(t, diff(phi, x, 2)), mul(mul(t, fj), diff(phi, x)), mul(mul(t, qj), phi)]
        groups.append(batch.terms(*lhs, *(neg(r) for r in rhs)))
    batch.run(X)
    per = [relative(batch.sum(g), batch.scale(g)) for g in groups]
    res = np.max(np.vstack(per), axis=0)
    absr = np.max(np.vstack([np.abs(batch.sum(g)) for g in groups]), axis=0)
    details = {
        "test_functions": [list(betas[i]) for i in pick],
        "operator": "derived from the separated operator" if derived else "declared",
        "lambda": lam,
    }
    return CheckReport("r_identity", verdict_for(res, tol), tol, X, res, absr, details=details)


def write_csv(solution: SeparatedSolution, path, residual: dict | None = None):
    """One row per grid node: coordinates, Theta and (where computed) the residual."""
    if solution.values is None:
        raise GridError("only grid solutions can be dumped")
    nodes = solution.nodes()
    vals = solution.values.ravel()
    lookup = {}
    if residual:
        for p, r in zip(residual["points"], residual["values"]):
            lookup[tuple(np.round(p, 12))] = r
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(solution.coords) + ["theta", "residual"])
        for p, t in zip(nodes, vals):
            r = lookup.get(tuple(np.round(p, 12)))
            w.writerow([repr(float(x)) for x in p] + [repr(float(t)), "" if r is None else repr(float(r))])
