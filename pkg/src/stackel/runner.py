"""Run the available checks for a system definition."""

from __future__ import annotations

import numpy as np

from . import sepsolve
from .sampling import DEFAULT_MARGIN, DEFAULT_SEED
from .sepcheck import (
    SKIPPED, TOL_FIT, TOL_IDENTITY, CheckReport, canonical_f, check_bracket_side_condition, check_nonregular,
    check_regular, nogo2d_check, operator_commutator_closure, stackel_operators, vectorpotential2d_compat,
)
from .sepcheck.report import verdict_for
from .stackel_core import assemble_potential, constants_of_motion, roundtrip_error

CHECK_MODES = ("regular", "nonregular", "brackets", "commutators", "nogo2d", "vectorpot")
EXTRA_MODES = ("roundtrip", "r_identity", "solution", "coordmap")
ALL_MODES = ("roundtrip",) + CHECK_MODES + EXTRA_MODES[1:]


def roundtrip_check(sd, samples, tol: float = 1e-10) -> CheckReport:
    """``||S T - I||_inf <= tol * cond(S)`` with ``T`` from numeric inversion."""
    S = sd.matrix()
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    num = S.numeric(X)
    res, err, kappa = np.zeros(len(X)), np.zeros(len(X)), np.zeros(len(X))
    for s, x in enumerate(X):
        T = S.invert_at(x)
        err[s], kappa[s] = roundtrip_error(num[s], T)
        res[s] = err[s] / kappa[s]
    return CheckReport("roundtrip", verdict_for(res, tol), tol, X, res, err,
                       details={"max_condition": float(kappa.max()) if len(kappa) else 0.0})


def applicable(sd, mode: str) -> bool:
    if mode == "nogo2d":
        return sd.dim == 2
    if mode == "vectorpot":
        return bool(sd.vectorpot)
    if mode == "r_identity":
        return sd.R is not None
    if mode == "solution":
        return sd.get("solution", "psi") is not None
    if mode == "coordmap":
        return sd.get("coordmap", "map") is not None
    return True


def _skipped(name, why):
    return CheckReport(name, SKIPPED, 0.0, details={"reason": why})


def run_check(sd, mode: str, samples, tol: float | None = None, fit_tol: float | None = None,
              seed: int = 0) -> CheckReport:
    tol = TOL_IDENTITY if tol is None else tol
    fit_tol = TOL_FIT if fit_tol is None else fit_tol
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    if not applicable(sd, mode):
        return _skipped(mode, "not applicable to this definition")
    S = sd.matrix()
    if mode == "roundtrip":
        return roundtrip_check(sd, X)
    if mode == "regular":
        return check_regular(sd.metric(), assemble_potential(S, sd.classical_potentials()), X, tol)
    if mode == "nonregular":
        if S.sides > 1:
            return _skipped(mode, "conditions are stated for a single side condition")
        v = sd.classical_potentials()
        L = constants_of_motion(S, v)
        V = assemble_potential(S, v)
        reports = [check_nonregular(sd.metric(), LN, V, samples=X, tol=tol, seed=seed)
                   for LN in L[S.n - S.sides:]]
        return _merge("nonregular", reports, tol)
    if mode == "brackets":
        L = constants_of_motion(S, sd.classical_potentials())
        return check_bracket_side_condition(L, X, sides=S.sides, S=S, tol=tol, fit_tol=fit_tol, seed=seed)
    if mode == "commutators":
        ops = stackel_operators(S, sd.potentials(), sd.first_order())
        k = S.n - S.sides
        return operator_commutator_closure(ops, ops[k:], X, tol=tol)
    if mode == "nogo2d":
        return nogo2d_check(canonical_f(sd.metric()), X, coords=sd.coords, tol=tol)
    if mode == "vectorpot":
        vp = {k: sd.bind(x) if not isinstance(x, (str, float)) else x for k, x in sd.vectorpot}
        gammas = tuple(vp.pop(f"gamma{i}", 0.0) for i in (4, 5, 6))
        branch = vp.pop("branch", "magnetic")
        if branch == "solute" and sd.R is not None:
            vp.setdefault("R", sd.rfactor())
        res = vectorpotential2d_compat(sd.metric(), samples=X, gammas=gammas, branch=branch,
                                       domain=sd.domain, tol=tol, **vp)
        return res.report
    if mode == "r_identity":
        return sepsolve.r_identity_check(sd, X, E=float(sd.get("solution", "E", 0.0)), tol=tol)
    if mode == "solution":
        sol = sepsolve.solution_of(sd)
        return sepsolve.pde_residual(sd, sol, X, tol=tol)
    if mode == "coordmap":
        from .gallery import coordmap_check
        return coordmap_check(sd, X[:20], tol=tol)
    raise ValueError(f"unknown mode {mode!r}")


def _merge(name, reports, tol):
    if len(reports) == 1:
        return reports[0]
    res = np.max(np.vstack([r.residuals for r in reports]), axis=0)
    absr = np.max(np.vstack([r.abs_residuals for r in reports]), axis=0)
    verdicts = [r.verdict for r in reports]
    verdict = next((v for v in verdicts if v not in ("pass",)), "pass")
    details = {f"side{i + 1}": r.details for i, r in enumerate(reports)}
    return CheckReport(name, verdict, tol, reports[0].samples, res, absr, details=details)


def expand_modes(sd, mode: str) -> list[str]:
    if mode == "all":
        return [m for m in ALL_MODES if applicable(sd, m)]
    return [mode]


def run(sd, mode: str = "all", n_samples: int = 50, seed: int = DEFAULT_SEED, margin: float = DEFAULT_MARGIN,
        tol: float | None = None, fit_tol: float | None = None) -> list[CheckReport]:
    X = sd.samples(n_samples, seed=seed, margin=margin)
    return [run_check(sd, m, X, tol, fit_tol) for m in expand_modes(sd, mode)]
