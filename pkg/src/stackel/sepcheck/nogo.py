"""Two-dimensional results: the factorization criterion and first-order (vector potential) terms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from ..exprkit import (
    Expr, Program, add, as_expr, diff, div, exp, log, mul, neg, num, sqrt, sub, subs, total,
)
from ..stackel_core import OrthogonalMetric
from .report import (
    FACTORIZABLE, FAIL, NONFACTORIZABLE, OBSTRUCTION, PASS, TOL_IDENTITY, Batch, CheckReport, relative,
    verdict_for,
)

NONFACTORIZABLE_TEXT = (
    "true nonregular separation for Hamilton-Jacobi only; "
    "no Helmholtz R-separation without a vector potential"
)


def log_mixed(f, x: str, y: str) -> tuple[Expr, Expr]:
    """Numerator and denominator of ``d_x d_y log f`` in the log-free form."""
    f = as_expr(f)
    fx, fy = diff(f, x), diff(f, y)
    return sub(mul(f, diff(fx, y)), mul(fx, fy)), mul(f, f)


def nogo2d_check(f, samples, coords=("u", "v"), tol: float = TOL_IDENTITY) -> CheckReport:
    """Is ``f(u, v)`` a product ``U(u) V(v)``?

    The test quantity is ``(f f_uv - f_u f_v) / f^2``, which equals
    ``d_uv log f`` without taking a logarithm.  Residuals are that numerator
    relative to its two terms.
    """
    f = as_expr(f)
    u, v = coords
    numer, den = log_mixed(f, u, v)
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    batch = Batch(coords)
    ni = batch.terms(numer)
    fi = batch.add(f)
    batch.run(X)
    fv = batch.value(fi)
    if np.any(fv == 0):
        bad = X[np.argmax(fv == 0)]
        raise ValueError(f"f vanishes at sample {bad.tolist()}")
    nv = batch.sum(ni)
    value = nv / fv**2
    res = relative(nv, batch.scale(ni))
    ok = verdict_for(res, tol) == PASS
    verdict = FACTORIZABLE if ok else NONFACTORIZABLE
    details = {
        "criterion": "d_uv log f",
        "max_abs_value": float(np.abs(value).max()) if len(value) else 0.0,
        "conclusion": "regular separation after rescaling" if ok else NONFACTORIZABLE_TEXT,
        "helmholtz_r_separation": ok,
    }
    return CheckReport("nogo2d", verdict, tol, X, res, np.abs(value), multipliers={"dlog": value}, details=details)


def canonical_f(metric: OrthogonalMetric) -> Expr:
    """``f = -h_1/h_2`` so that the canonical 2x2 form has this metric."""
    if metric.n != 2:
        raise ValueError("the no-go criterion is two-dimensional")
    return neg(div(metric.hinv2[0], metric.hinv2[1]))


def _half_dlog_ratio(metric: OrthogonalMetric, k: int) -> Expr:
    """``d_k log(H_2/H_1) = (d_k h_1 / h_1 - d_k h_2 / h_2) / 2``."""
    h1, h2 = metric.hinv2
    x = metric.coords[k]
    return mul(num(0.5), sub(div(diff(h1, x), h1), div(diff(h2, x), h2)))


def _rterms(metric: OrthogonalMetric, R: Expr) -> Expr:
    """The R-dependent zeroth-order terms produced by conjugating with ``e^R``."""
    h1, h2 = metric.hinv2
    x1, x2 = metric.coords
    R1, R2 = diff(R, x1), diff(R, x2)
    d1, d2 = _half_dlog_ratio(metric, 0), _half_dlog_ratio(metric, 1)
    return total([
        mul(h1, diff(R1, x1)), mul(h2, diff(R2, x2)), mul(h1, mul(R1, R1)), mul(h2, mul(R2, R2)),
        mul(h1, mul(R1, d1)), neg(mul(h2, mul(R2, d2))),
    ])


@dataclass
class VectorPotentialResult:
    branch: str
    fields: dict = field(default_factory=dict)
    report: CheckReport | None = None


def vectorpotential2d_compat(metric: OrthogonalMetric, f1=0, f2=0, R1=None, R2=None, w1=0, w2=0,
                             gammas=(0.0, 0.0, 0.0), samples=None, v1=0, v2=0, branch: str = "magnetic",
                             R=None, mu=0, domain=None, tol: float = TOL_IDENTITY) -> VectorPotentialResult:
    """First-order terms compatible with R-separation for a 2D orthogonal metric.

    ``branch="magnetic"``: imaginary first-order terms.  The ratio ``H_2/H_1``
    must factor; the vector potential ``a`` and scalar potential ``Phi`` are
    reconstructed (``H_1 = 1`` canonical form required) and the imaginary
    zeroth-order identity is verified at the samples.

    ``branch="solute"``: real drift ``q``.  ``q`` follows from the first-order
    identification, the zeroth-order identity is checked with absorption
    ``mu`` and the curl criterion is reported.
    """
    if metric.n != 2:
        raise ValueError("vector potential compatibility is two-dimensional")
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    if branch == "magnetic":
        return _magnetic(metric, as_expr(f1), as_expr(f2), R1, R2, as_expr(w1), as_expr(w2), gammas, X,
                         as_expr(v1), as_expr(v2), domain, tol)
    if branch == "solute":
        return _solute(metric, as_expr(f1), as_expr(f2), as_expr(R if R is not None else 0), X,
                       as_expr(v1), as_expr(v2), as_expr(mu), tol)
    raise ValueError(f"unknown branch {branch!r}")


def _ratio(metric: OrthogonalMetric) -> Expr:
    h1, h2 = metric.hinv2
    return sqrt(div(h1, h2))


def _magnetic(metric, f1, f2, R1, R2, w1, w2, gammas, X, v1, v2, domain, tol):
    x1, x2 = metric.coords
    h1, h2 = metric.hinv2
    g4, g5, g6 = (float(g) for g in gammas)
    ratio = _ratio(metric)
    numer, _ = log_mixed(mul(ratio, ratio), x1, x2)
    batch = Batch(metric.coords)
    ni = batch.terms(numer)
    hi = batch.add(h1)
    batch.run(X)
    sep_res = relative(batch.sum(ni), batch.scale(ni))
    details = {"sepcond_max": float(sep_res.max()) if len(sep_res) else 0.0}
    if verdict_for(sep_res, tol) == FAIL:
        details["conclusion"] = "H_2/H_1 does not factor: no R-separation with a magnetic vector potential"
        rep = CheckReport("vectorpot", OBSTRUCTION, tol, X, sep_res, sep_res, details=details)
        return VectorPotentialResult("magnetic", {}, rep)
    if np.abs(batch.value(hi) - 1.0).max() > 1e-12:
        raise ValueError("the magnetic reconstruction uses the canonical form H_1 = 1")

    base = X[0]
    rho0 = float(Program([ratio], metric.coords).evaluate([base])[0, 0])
    Pi1 = subs(ratio, {x2: float(base[1])})
    Pi2 = div(subs(ratio, {x1: float(base[0])}), num(rho0))
    if R1 is None:
        R1 = mul(num(-0.5), log(Pi1))
    if R2 is None:
        R2 = mul(num(0.5), log(Pi2))
    R1, R2 = as_expr(R1), as_expr(R2)
    Rsum = add(R1, R2)

    # first-order identification: f_j are the ODE coefficients
    f1_pred = add(_half_dlog_ratio(metric, 0), mul(num(2.0), diff(Rsum, x1)))
    f2_pred = add(neg(_half_dlog_ratio(metric, 1)), mul(num(2.0), diff(Rsum, x2)))
    Phi = sub(add(mul(h1, v1), mul(h2, v2)), _rterms(metric, Rsum))

    # quadrature for a^1 and a^2
    lo = [float(X[:, 0].min()), float(X[:, 1].min())] if domain is None else [domain[0][0], domain[1][0]]
    I1 = mul(exp(R1), sub(mul(w1, Pi1), div(num(g4), Pi1)))
    I2 = mul(exp(R2), add(div(w2, Pi2), mul(num(g4), Pi2)))
    P1 = mul(num(2.0), div(exp(neg(R1)), Pi1))
    P2 = mul(num(2.0), div(exp(neg(R2)), mul(mul(Pi1, Pi1), Pi2)))
    prog1 = Program([I1], (x1,))
    prog2 = Program([I2], (x2,))

    def integral(prog, a, b):
        val, _ = quad(lambda t: prog.evaluate([[t]])[0, 0], a, b, epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    J1 = np.array([g5 + integral(prog1, lo[0], x[0]) for x in X])
    J2 = np.array([g6 + integral(prog2, lo[1], x[1]) for x in X])
    ev = Batch(metric.coords)
    names = {
        "P1": P1, "P2": P2, "dP1": diff(P1, x1), "dP2x2": diff(P2, x2),
        "I1": I1, "I2": I2, "R1": diff(Rsum, x1), "R2": diff(Rsum, x2),
        "lH2_1": mul(num(-0.5), div(diff(h2, x1), h2)), "lH2_2": mul(num(-0.5), div(diff(h2, x2), h2)),
        "lH1_1": mul(num(-0.5), div(diff(h1, x1), h1)), "lH1_2": mul(num(-0.5), div(diff(h1, x2), h1)),
        "lhs": add(mul(h1, w1), mul(h2, w2)), "Phi": Phi,
    }
    idx = {k: ev.add(e) for k, e in names.items()}
    f_idx = [ev.terms(sub(f1_pred, f1)), ev.terms(sub(f2_pred, f2))]
    ev.run(X)
    val = {k: ev.value(i) for k, i in idx.items()}
    a1 = val["P1"] * J1
    a2 = val["P2"] * J2
    da1 = val["dP1"] * J1 + val["P1"] * val["I1"]
    da2 = val["dP2x2"] * J2 + val["P2"] * val["I2"]
    rhs_terms = [
        0.5 * a1 * val["R1"], 0.5 * a2 * val["R2"], 0.5 * da1, 0.5 * da2,
        0.5 * a1 * (val["lH1_1"] + val["lH2_1"]), 0.5 * a2 * (val["lH1_2"] + val["lH2_2"]),
    ]
    rhs = np.sum(rhs_terms, axis=0)
    scale = np.abs(val["lhs"]) + np.sum(np.abs(rhs_terms), axis=0)
    w_res = relative(val["lhs"] - rhs, scale)
    f_res = np.maximum(*(relative(ev.sum(g), ev.scale(g)) for g in f_idx))
    res = np.maximum(w_res, f_res)
    details.update({
        "weq_max": float(w_res.max()), "f1eq_max": float(f_res.max()),
        "integration_base": lo,
    })
    fields = {
        "Pi1": Pi1, "Pi2": Pi2, "R1": R1, "R2": R2, "Phi": Phi,
        "a1": a1, "a2": a2, "prefactor1": P1, "prefactor2": P2,
    }
    rep = CheckReport("vectorpot", verdict_for(res, tol), tol, X, res, np.abs(val["lhs"] - rhs),
                      multipliers={"a1": a1, "a2": a2, "Phi": val["Phi"]}, details=details)
    return VectorPotentialResult("magnetic", fields, rep)


def _solute(metric, f1, f2, R, X, v1, v2, mu, tol):
    x1, x2 = metric.coords
    h1, h2 = metric.hinv2
    d1, d2 = _half_dlog_ratio(metric, 0), _half_dlog_ratio(metric, 1)
    Q1 = add(sub(d1, f1), mul(num(2.0), diff(R, x1)))     # H_1^2 q^1
    Q2 = add(sub(neg(d2), f2), mul(num(2.0), diff(R, x2)))  # H_2^2 q^2
    q1, q2 = mul(h1, Q1), mul(h2, Q2)
    speed2 = add(mul(h1, mul(Q1, Q1)), mul(h2, mul(Q2, Q2)))
    curl = sub(diff(Q1, x2), diff(Q2, x1))
    rhs = total([neg(mu), _rterms(metric, R), neg(mul(q1, diff(R, x1))), neg(mul(q2, diff(R, x2)))])
    lhs = add(mul(h1, v1), mul(h2, v2))
    batch = Batch(metric.coords)
    ri = batch.terms(lhs, neg(rhs))
    ci = batch.terms(curl)
    idx = {k: batch.add(e) for k, e in (("Q1", Q1), ("Q2", Q2), ("q1", q1), ("q2", q2), ("speed2", speed2))}
    batch.run(X)
    res = relative(batch.sum(ri), batch.scale(ri))
    curl_v = batch.sum(ci)
    curl_rel = relative(curl_v, batch.scale(ci))
    rotational = bool(np.any(curl_rel > tol))
    details = {
        "vAform_max": float(res.max()) if len(res) else 0.0,
        "curl_max_abs": float(np.abs(curl_v).max()) if len(curl_v) else 0.0,
        "rotational": rotational,
        "conclusion": ("drift is rotational: no equivalent regular Stäckel form" if rotational
                       else "drift is irrotational: H_2/H_1 factors, regular form available"),
    }
    fields = {"H1sq_q1": Q1, "H2sq_q2": Q2, "q1": q1, "q2": q2, "speed2": speed2, "curl": curl,
              "drift": (neg(q1), neg(q2))}
    mults = {k: batch.value(i) for k, i in idx.items()}
    mults["curl"] = curl_v
    rep = CheckReport("vectorpot", verdict_for(res, tol), tol, X, res, np.abs(batch.sum(ri)),
                      multipliers=mults, details=details)
    return VectorPotentialResult("solute", fields, rep)
