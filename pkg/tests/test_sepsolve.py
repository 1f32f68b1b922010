import csv
import dataclasses
import math

import numpy as np
import pytest

from stackel import gallery
from stackel.exprkit import Program, parse
from stackel.sepcheck import FAIL, PASS
from stackel.sepsolve import (
    GridError, SeparationSystem, SingularCoefficientError, StencilError, TOL_EXACT, assemble,
    closed_form_solution, hj_pointwise_verify, integrate_factor, integrate_ode, laplace_beltrami,
    pde_residual, r_identity_check, richardson, solution_of, write_csv,
)
from stackel.stackel_core import OrthogonalMetric

PHI = (1 + math.sqrt(5)) / 2


def _grid_solution(sd, n=(21, 21, 21)):
    psi = [sd.bind(p) for p in sd.get("solution", "psi")]
    box = sd.domain
    axes = [np.linspace(a + 0.1 * (b - a), b - 0.1 * (b - a), k) for (a, b), k in zip(box, n)]
    R = sd.rfactor() if sd.R is not None else None
    return assemble(psi, R=R, coords=sd.coords, axes=axes)


# -- Hamilton-Jacobi pointwise ------------------------------------------------

def test_hj_pointwise_kepler():
    sd = gallery.load("kepler_spherical")
    X = sd.samples(40)
    rep = hj_pointwise_verify(sd.matrix(), sd.classical_potentials(), [-0.5, 2.0], X, tol=1e-10)
    assert rep.name == "hj_pointwise"
    assert rep.verdict == PASS
    assert rep.max_residual <= 1e-10


def test_hj_pointwise_trivial():
    sd = gallery.load("minkowski3d")
    rep = hj_pointwise_verify(sd.matrix(), sd.classical_potentials(), [0.0, 0.0], sd.samples(50), tol=1e-10)
    assert rep.verdict == PASS


def test_hj_pointwise_minkowski():
    sd = gallery.load("minkowski3d")
    rep = hj_pointwise_verify(sd.matrix(), sd.classical_potentials(), [0.0, -1.0], sd.samples(50))
    assert rep.verdict == PASS
    assert "forbidden_count" in rep.details


def test_hj_lambda_count():
    sd = gallery.load("minkowski3d")
    with pytest.raises(ValueError):
        SeparationSystem.from_stackel(sd.matrix(), sd.potentials(), [0.0, 1.0, 2.0])


# -- RK4 ----------------------------------------------------------------------

def test_rk4_cosine():
    fac = integrate_ode("0", "1/4", "x", (0.0, math.pi), 1.0, 0.0, 1e-3)
    assert fac.xs[-1] == pytest.approx(math.pi, abs=1e-14)
    i = np.argmin(np.abs(fac.xs - math.pi))
    assert abs(fac.ys[i] - math.cos(fac.xs[i] / 2)) <= 1e-8


def test_rk4_linear_exact():
    fac = integrate_ode("0", "0", "x", (0.0, 2.0), 0.0, 1.0, 0.1)
    np.testing.assert_allclose(fac.ys, fac.xs, atol=1e-13)


def test_rk4_power_law():
    fac = integrate_ode("0", "-1/w^2", "w", (1.0, 2.0), 1.0, PHI, 1e-3)
    assert np.abs(fac.ys - fac.xs ** PHI).max() <= 1e-7


def test_minkowski_w_factor_from_system():
    sd = gallery.load("minkowski3d")
    lam = sd.get("solution", "lambda")
    system = SeparationSystem.from_stackel(sd.matrix(), sd.potentials(), lam, f=sd.first_order())
    fac = integrate_factor(system, 2, (1.0, 2.0), 1.0, PHI, 1e-3)
    assert np.abs(fac.ys - fac.xs ** PHI).max() <= 1e-7


def test_richardson_ratio():
    out = richardson("0", "-1/w^2", "w", (1.0, 2.0), 1.0, PHI, 0.05, exact=2 ** PHI)
    assert 12 <= out["ratio"] <= 20
    assert 12 <= out["error_ratio"] <= 20
    assert out["errors"][2] < out["errors"][0]


def test_singular_coefficient_location():
    with pytest.raises(SingularCoefficientError) as info:
        integrate_ode("0", "1/w", "w", (-1.0, 1.0), 1.0, 0.0, 0.25)
    assert info.value.coord == "w"
    assert info.value.location == pytest.approx(0.0, abs=1e-12)
    assert "split the interval" in str(info.value)


def test_bad_step():
    with pytest.raises(ValueError):
        integrate_ode("0", "1", "x", (0, 1), 1, 0, 0.0)
    with pytest.raises(ValueError):
        integrate_ode("0", "1", "x", (1, 1), 1, 0, 0.1)


# -- assembly -----------------------------------------------------------------

def test_assemble_constant():
    facs = [integrate_ode("0", "0", x, (0.0, 1.0), 1.0, 0.0, 0.1) for x in "xyz"]
    sol = assemble(facs)
    assert sol.values.shape == (11, 11, 11)
    np.testing.assert_allclose(sol.values, 1.0, atol=1e-14)


def test_assemble_misaligned():
    facs = [integrate_ode("0", "0", x, (0.0, 1.0), 1.0, 0.0, 0.1) for x in "xy"]
    with pytest.raises(GridError):
        assemble(facs, axes=[np.linspace(0, 1, 11), np.linspace(0, 1, 12)])
    with pytest.raises(GridError):
        assemble(["x", "y"])


def test_assemble_sum_mode():
    ax = [np.array([0.0, 1.0]), np.array([0.0, 2.0, 3.0])]
    sol = assemble(["x", "y^2"], mode="sum", coords=("x", "y"), axes=ax)
    np.testing.assert_allclose(sol.values, [[0, 4, 9], [1, 5, 10]])
    with pytest.raises(ValueError):
        assemble(["x"], mode="ratio", coords=("x",), axes=ax[:1])


@pytest.mark.parametrize("name", ["minkowski3d", "dupin_cyclide"])
def test_assemble_conjugation_factor(name):
    sd = gallery.load(name)
    sol = _grid_solution(sd, (5, 6, 7))
    nodes = sol.nodes()
    exact = Program([solution_of(sd).theta_expr()], sd.coords).evaluate(nodes)[:, 0]
    np.testing.assert_allclose(sol.values.ravel(), exact, rtol=1e-13)


# -- PDE residuals ------------------------------------------------------------

def test_zero_solution():
    sd = gallery.load("dupin_cyclide")
    sol = closed_form_solution(sd.coords, ["0", "0", "0"], sd.rfactor())
    rep = pde_residual(sd, sol, sd.samples(10))
    assert rep.max_residual == 0.0


@pytest.mark.parametrize("name", ["dupin_cyclide", "solute2d"])
def test_closed_form_residuals(name):
    sd = gallery.load(name)
    rep = pde_residual(sd, solution_of(sd), sd.samples(50))
    assert rep.details["method"] == "exact"
    assert rep.details["pde_max"] <= TOL_EXACT
    assert all(v <= TOL_EXACT for v in rep.details["side_max"].values())
    assert rep.verdict == PASS


def test_closed_form_negative_control():
    sd = gallery.load("dupin_cyclide")
    psi = [sd.bind(p) for p in sd.get("solution", "psi")]
    psi[0] = parse("cos(u/3)")
    rep = pde_residual(sd, closed_form_solution(sd.coords, psi, sd.rfactor()), sd.samples(20))
    assert rep.verdict == FAIL


def test_closed_form_rejects_coupled_factor():
    with pytest.raises(ValueError):
        closed_form_solution(("u", "v"), ["u*v", "1"])


def test_grid_residual_fd():
    sd = gallery.load("minkowski3d")
    sol = _grid_solution(sd)
    rep = pde_residual(sd, sol, samples=200)
    assert rep.details["method"] == "fd4"
    assert rep.verdict == PASS
    assert rep.max_residual <= 1e-4


def test_grid_residual_explicit_nodes():
    sd = gallery.load("minkowski3d")
    sol = _grid_solution(sd, (9, 9, 9))
    node = [a[4] for a in sol.axes]
    rep = pde_residual(sd, sol, samples=[node])
    assert len(rep.residuals) == 1
    with pytest.raises(StencilError):
        pde_residual(sd, sol, samples=[[a[1] for a in sol.axes]])
    with pytest.raises(GridError):
        pde_residual(sd, sol, samples=[[a[4] + 1e-3 for a in sol.axes]])


def test_grid_too_small():
    sd = gallery.load("minkowski3d")
    with pytest.raises(StencilError):
        pde_residual(sd, _grid_solution(sd, (4, 9, 9)))


def test_laplace_beltrami_polar():
    metric = OrthogonalMetric(("r", "theta"), (parse("1"), parse("1/r^2")))
    lap = laplace_beltrami(metric, "r^2*cos(2*theta)")
    val = Program([lap], ("r", "theta")).evaluate([[1.3, 0.4], [2.0, 1.1]])[:, 0]
    np.testing.assert_allclose(val, 0.0, atol=1e-12)
    lap = laplace_beltrami(metric, "r^2")
    assert Program([lap], ("r", "theta")).evaluate([[1.7, 0.2]])[0, 0] == pytest.approx(4.0, rel=1e-13)


# -- conjugation identity -------------------------------------------------------

@pytest.mark.parametrize("name", ["minkowski3d", "dupin_cyclide"])
def test_r_identity(name):
    sd = gallery.load(name)
    rep = r_identity_check(sd, sd.samples(20), E=float(sd.get("solution", "E")), count=10)
    assert len(rep.details["test_functions"]) == 10
    assert rep.verdict == PASS
    assert rep.max_residual <= 1e-8


def test_r_identity_wrong_R_fails():
    sd = gallery.load("minkowski3d")
    bad = dataclasses.replace(sd, R=parse("-2*log(w)"))
    rep = r_identity_check(bad, bad.samples(20))
    assert rep.verdict == FAIL


def test_r_identity_lambda_count():
    sd = gallery.load("minkowski3d")
    with pytest.raises(ValueError):
        r_identity_check(sd, sd.samples(3), lam=[1.0, 2.0])


# -- output ---------------------------------------------------------------------

def test_write_csv(tmp_path):
    sd = gallery.load("minkowski3d")
    sol = _grid_solution(sd, (6, 6, 6))
    rep = pde_residual(sd, sol)
    path = tmp_path / "theta.csv"
    write_csv(sol, path, {"points": rep.samples, "values": rep.residuals})
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["u", "v", "w", "theta", "residual"]
    assert len(rows) == 1 + 216
    filled = sum(1 for r in rows[1:] if r[4])
    assert filled == len(rep.residuals) == 8
    with pytest.raises(GridError):
        write_csv(solution_of(sd), path)
