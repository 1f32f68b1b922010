import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stackel import gallery
from stackel.exprkit import Program, evaluate, parse
from stackel.runner import run_check
from stackel.sampling import random_momenta, sample_box
from stackel.sepcheck import (
    DEGENERATE, FACTORIZABLE, FAIL, NONFACTORIZABLE, OBSTRUCTION, PASS, REGULAR, PhasePoly,
    SecondOrderOperator, candidate_BN, canonical_f, check_bracket_side_condition, check_nonregular,
    check_regular, cij_operator, nogo2d_check, operator_commutator_closure, poisson_bracket,
    stackel_operators, vectorpotential2d_compat,
)
from stackel.sepcheck.report import family_relative, ratio_residual, relative, split_terms
from stackel.stackel_core import (
    OrthogonalMetric, QuadraticForm, assemble_potential, constants_of_motion,
)

SOLUTE_F = "-(1/4)*(u+v+sqrt((u+v)^2-4))^2"
GENERALIZED_SINGLE_SIDE = [n for n in gallery.list_systems()
                           if not gallery.load(n).matrix().is_regular() and gallery.load(n).sides == 1]


def spherical():
    return gallery.load("kepler_spherical")


# -- report helpers -----------------------------------------------------------

def test_relative_residual_conventions():
    assert np.array_equal(relative([0.0, 1.0, 0.0], [0.0, 2.0, 1.0]), [0.0, 0.5, 0.0])
    assert np.isinf(relative([1e-3], [0.0])[0])


def test_family_floor_suppresses_structural_zero():
    # second identity is made of rounding-level terms only
    r = family_relative([[1e-12], [1e-17]], [[1.0], [1e-17]])
    assert r[0] == pytest.approx(1e-12)


def test_ratio_residual_zero_denominator_convention():
    res, used = ratio_residual([1.0, 0.0], [1.0, 1.0], [2.0, 0.0], [2.0, 0.0], [2.0, 1.0], [4.0, 1.0],
                               [False, True], [False, False])
    assert res[0] == 0.0 and res[1] == 0.0
    assert list(used) == [False, True]


def test_split_terms_flattens_signs():
    terms = split_terms(parse("a - (b + c) + -d"))
    assert [str(t) for t in terms] == ["a", "-b", "-c", "-d"]


# -- C_ij and the regular conditions ------------------------------------------

def test_cij_cartesian_is_mixed_partial():
    e = cij_operator(["1", "1", "1"], parse("u*v"), 0, 1, ("u", "v", "w"))
    assert evaluate(e, u=0.3, v=-2.0, w=7.0) == 1.0
    with pytest.raises(ValueError):
        cij_operator(["1", "1"], parse("u"), 0, 0, ("u", "v"))


def test_cij_spherical_metric_vanishes():
    sd = spherical()
    h = sd.metric().hinv2
    X = sd.samples(50)
    exprs = [cij_operator(h, h[k], i, j, sd.coords) for i in range(3) for j in range(3) if i != j for k in range(3)]
    vals = Program(exprs, sd.coords).evaluate(X)
    assert np.abs(vals).max() <= 1e-12


def test_cij_solute_regression_value():
    sd = gallery.load("solute2d")
    h = sd.metric().hinv2
    val = evaluate(cij_operator(h, h[0], 0, 1, sd.coords), u=2.0, v=1.0) / evaluate(h[0], u=2.0, v=1.0)
    # fixture computed independently with a computer algebra system
    assert val == pytest.approx(-0.068328157299974764, rel=1e-12)


def test_regular_spherical_kepler_passes():
    sd = spherical()
    rep = check_regular(sd.metric(), parse("1/r"), sd.samples(50))
    assert rep.verdict == PASS
    assert "cij_reading" in rep.details


def test_regular_cartesian_passes():
    m = OrthogonalMetric(("x", "y", "z"), ("1", "1", "1"))
    rep = check_regular(m, parse("0"), sample_box([(0, 1)] * 3, 20))
    assert rep.verdict == PASS and rep.max_residual == 0.0


def test_regular_canonical_nonfactorizable_fails():
    sd = gallery.load("canonical2d")
    rep = check_regular(sd.metric(), parse("0"), sd.samples(20))
    assert rep.verdict == FAIL


# -- nonregular conditions ----------------------------------------------------

def _nonregular(sd, metric=None, n=50):
    S = sd.matrix()
    v = sd.classical_potentials()
    LN = constants_of_motion(S, v)[-1]
    return check_nonregular(metric or sd.metric(), LN, assemble_potential(S, v), samples=sd.samples(n))


@pytest.mark.parametrize("name", GENERALIZED_SINGLE_SIDE)
def test_nonregular_conditions_hold_by_construction(name):
    rep = _nonregular(gallery.load(name))
    assert rep.verdict in (PASS, DEGENERATE)
    assert rep.max_residual <= 1e-8
    for cond in ("EiLN0", "LCLN0", "EiLN1", "intcondLN"):
        assert rep.details["conditions"][cond]["max_residual"] <= 1e-8


def test_nonregular_with_hamiltonian_side_condition_has_equal_B():
    sd = spherical()
    S = sd.matrix()
    H = constants_of_motion(S, sd.classical_potentials())[0]
    rep = check_nonregular(sd.metric(), H, H.W, samples=sd.samples(30))
    assert rep.verdict in (PASS, DEGENERATE)
    assert np.allclose(rep.multipliers["B"], 1.0)


def test_perturbed_minkowski_metric_fails():
    sd = gallery.load("minkowski3d")
    h = sd.metric().hinv2
    bad = OrthogonalMetric(sd.coords, (h[0], h[1], parse("(1 + 0.1*u)") * h[2]))
    rep = _nonregular(sd, bad)
    assert rep.verdict == FAIL
    assert rep.max_residual >= 1e-3


def test_candidate_B_matches_stackel_matrix():
    sd = gallery.load("solute2d")
    X = sd.samples(20)
    rep = candidate_BN(sd.metric(), X)
    assert rep.verdict == PASS
    T = sd.matrix().invert_many(X)
    rho = T[:, -1] / T[:, 0]
    assert np.allclose(rep.multipliers["B"], rho / rho[:, :1], rtol=1e-8)


def test_candidate_B_regular_and_minkowski_pattern():
    assert candidate_BN(spherical().metric(), spherical().samples(10)).verdict == REGULAR
    sd = gallery.load("minkowski3d")
    rep = candidate_BN(sd.metric(), sd.samples(20))
    assert rep.verdict == PASS
    assert np.allclose(rep.multipliers["B"], [1.0, 1.0, 0.0], atol=1e-12)


# -- Poisson brackets ---------------------------------------------------------

def test_bracket_of_momenta_squares_vanishes():
    coords = ("r", "theta", "phi")
    a = QuadraticForm(coords, ["0", "0", "1"])
    b = QuadraticForm(coords, ["0", "1", "0"])
    assert poisson_bracket(a, b).terms == {}


def test_kepler_hamiltonian_commutes_with_L2():
    sd = spherical()
    L = constants_of_motion(sd.matrix(), sd.classical_potentials())
    X = sd.samples(100)
    P = random_momenta(100, 3, seed=5)
    for i in range(3):
        for j in range(i + 1, 3):
            val = poisson_bracket(L[i], L[j]).evaluate(X, P)
            assert np.abs(val).max() <= 1e-12


def test_bracket_against_finite_differences():
    coords = ("u", "v")
    A = QuadraticForm(coords, ["u^2 + v", "exp(u*v)"], "sin(u) + v^3")
    B = QuadraticForm(coords, ["cos(v)", "u + 2"], "u*v")
    br = poisson_bracket(A, B)
    rng = np.random.default_rng(3)
    h = 1e-5
    for _ in range(20):
        x = rng.uniform(0.2, 1.0, size=2)
        p = rng.normal(size=2)

        def grad(Q):
            gx, gp = np.zeros(2), np.zeros(2)
            for i in range(2):
                e = np.zeros(2)
                e[i] = h
                gx[i] = (Q.evaluate([x + e], [p]) - Q.evaluate([x - e], [p]))[0] / (2 * h)
                gp[i] = (Q.evaluate([x], [p + e]) - Q.evaluate([x], [p - e]))[0] / (2 * h)
            return gx, gp

        ax, ap = grad(A)
        bx, bp = grad(B)
        fd = float(np.dot(bx, ap) - np.dot(ax, bp))
        assert br.evaluate([x], [p])[0] == pytest.approx(fd, abs=1e-6, rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_bracket_antisymmetry_and_leibniz(seed):
    rng = np.random.default_rng(seed)
    coords = ("u", "v")
    pool = ["u", "v", "u*v", "sin(u)", "exp(v)", "u^2 + 1", "cos(u*v)", "1"]

    def rnd():
        return QuadraticForm(coords, [pool[i] for i in rng.integers(len(pool), size=2)], pool[rng.integers(len(pool))])

    A, B, C = rnd(), rnd(), rnd()
    X = rng.uniform(0.1, 1.5, size=(100, 2))
    P = rng.normal(size=(100, 2))
    ab = poisson_bracket(A, B).evaluate(X, P)
    ba = poisson_bracket(B, A).evaluate(X, P)
    assert np.allclose(ab, -ba, rtol=0, atol=1e-12 * (1 + np.abs(ab).max()))
    Bp, Cp = PhasePoly.from_quadratic(B), PhasePoly.from_quadratic(C)
    lhs = poisson_bracket(A, Bp * Cp).evaluate(X, P)
    rhs = (poisson_bracket(A, Bp) * Cp + Bp * poisson_bracket(A, Cp)).evaluate(X, P)
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10 * (1 + np.abs(lhs).max()))


def _brackets(sd, n=50):
    S = sd.matrix()
    L = constants_of_motion(S, sd.classical_potentials())
    return check_bracket_side_condition(L, sd.samples(n), sides=S.sides, S=S)


def test_minkowski_on_constraint_brackets():
    rep = _brackets(gallery.load("minkowski3d"))
    assert rep.verdict == PASS
    assert rep.details["admissible_samples"] >= 30
    assert rep.details["on_constraint"]["max_abs"] <= 1e-9


def test_kepler_brackets_vanish_and_multiplier_is_zero():
    rep = _brackets(spherical())
    assert rep.verdict == PASS
    assert rep.details["off_constraint_max"] <= 1e-10
    for c in rep.multipliers.values():
        assert np.abs(np.asarray(c, dtype=float)).max() <= 1e-10


def test_bracket_negative_control():
    sd = gallery.load("minkowski3d")
    S = sd.matrix()
    L = constants_of_motion(S, sd.classical_potentials())
    # break the Staeckel structure of L^2 by an x-dependent factor on one coefficient
    c = list(L[1].coeffs)
    c[0] = parse("1 + 0.3*v") * c[0]
    bad = [L[0], QuadraticForm(S.coords, c, L[1].W), L[2]]
    rep = check_bracket_side_condition(bad, sd.samples(30), sides=1)
    assert rep.verdict == FAIL
    assert rep.details["identity_fit"]["max_residual"] > 1e-6


# -- operator commutators -----------------------------------------------------

def _ops(sd):
    S = sd.matrix()
    ops = stackel_operators(S, sd.potentials(), sd.first_order())
    return ops, ops[S.n - S.sides:]


def test_true_stackel_operators_commute():
    sd = spherical()
    ops, side = _ops(sd)
    rep = operator_commutator_closure(ops, side, sd.samples(20))
    assert rep.verdict == PASS
    assert rep.details["third_order_max"] <= 1e-10
    for F in rep.multipliers.values():
        assert np.abs(np.asarray(F, dtype=float)).max() <= 1e-10


def test_minkowski_operator_closure():
    sd = gallery.load("minkowski3d")
    ops, side = _ops(sd)
    rep = operator_commutator_closure(ops, side, sd.samples(20))
    assert rep.verdict == PASS and rep.max_residual <= 1e-8


def test_dupin_two_side_closure():
    sd = gallery.load("dupin_cyclide")
    ops, side = _ops(sd)
    X = sd.samples(20)
    rep = operator_commutator_closure(ops, side, X)
    assert rep.verdict == PASS and rep.max_residual <= 1e-8
    # the two side operators commute outright
    rep23 = operator_commutator_closure(ops, side, X, pairs=[(1, 2)])
    assert rep23.details["pairs"]["2,3"]["max_commutator"] <= 1e-10


def test_second_order_operator_apply():
    op = SecondOrderOperator(("u", "v"), ["1", "u"], ["v", "0"], "2")
    out = op.apply(parse("u^2*v"))
    # 2v + u*0 + v*2uv + 2u^2 v
    assert evaluate(out, u=1.5, v=0.5) == pytest.approx(2 * 0.5 + 0.5 * 2 * 1.5 * 0.5 + 2 * 1.5 ** 2 * 0.5)


# -- 2D no-go -----------------------------------------------------------------

def test_nogo_product_and_sum():
    X = sample_box([(0.5, 2.0), (0.5, 2.0)], 20)
    assert nogo2d_check("u*v", X).verdict == FACTORIZABLE
    rep = nogo2d_check("u + v", np.array([[1.0, 1.0]]))
    assert rep.verdict == NONFACTORIZABLE
    assert rep.multipliers["dlog"][0] == pytest.approx(-0.25, rel=1e-14)


def test_nogo_solute_nonfactorizable():
    sd = gallery.load("solute2d")
    rep = nogo2d_check(SOLUTE_F, sd.samples(20))
    assert rep.verdict == NONFACTORIZABLE
    assert "no Helmholtz R-separation" in rep.details["conclusion"]
    assert not rep.details["helmholtz_r_separation"]


def test_nogo_negative_f_uses_log_free_form():
    X = sample_box([(0.5, 2.0), (0.5, 2.0)], 10)
    assert nogo2d_check("-u^2*exp(v)", X).verdict == FACTORIZABLE


def test_canonical_f_recovers_f():
    sd = gallery.load("canonical2d", f="u*v + 3")
    X = sd.samples(10)
    vals = Program([canonical_f(sd.metric())], sd.coords).evaluate(X)[:, 0]
    assert np.allclose(vals, X[:, 0] * X[:, 1] + 3, rtol=1e-13)


@settings(max_examples=20, deadline=None)
@given(a=st.sampled_from(["u", "exp(u)", "u^2 + 1", "cosh(u)", "2 + sin(u)"]),
       b=st.sampled_from(["v", "exp(-v)", "v^3 + 2", "1/v", "2 + cos(v)"]),
       k=st.floats(0.5, 4.0))
def test_products_are_factorizable(a, b, k):
    X = sample_box([(0.5, 2.0), (0.5, 2.0)], 20)
    assert nogo2d_check(f"{k}*({a})*({b})", X).verdict == FACTORIZABLE


# -- vector potentials --------------------------------------------------------

def test_polar_magnetic_scalar_potential():
    sd = gallery.load("polar_magnetic")
    X = sd.samples(20)
    res = vectorpotential2d_compat(sd.metric(), samples=X, v1=parse("r"), v2=parse("cos(theta)"),
                                   w1=parse("r^2"), w2=parse("sin(theta)"), gammas=(0.3, 0.5, 0.7),
                                   domain=sd.domain)
    assert res.report.verdict == PASS
    r, th = X.T
    Phi = Program([res.fields["Phi"]], sd.coords).evaluate(X)[:, 0]
    assert np.allclose(Phi, r + np.cos(th) / r ** 2 - 0.25 / r ** 2, rtol=1e-10, atol=1e-12)
    R1 = Program([res.fields["R1"]], ("r",)).evaluate(X[:, :1])[:, 0]
    assert np.allclose(np.diff(R1 + 0.5 * np.log(r)), 0.0, atol=1e-12)


def test_solute_drift_speed():
    sd = gallery.load("solute2d")
    X = sd.samples(20)
    res = vectorpotential2d_compat(sd.metric(), samples=X, branch="solute")
    f = res.fields
    Q = Program([f["H1sq_q1"], f["H2sq_q2"], f["speed2"]], sd.coords).evaluate(X)
    r = X.sum(axis=1)
    assert np.allclose(Q[:, 0], 1 / np.sqrt(r ** 2 - 4), rtol=1e-10)
    assert np.allclose(Q[:, 1], -1 / np.sqrt(r ** 2 - 4), rtol=1e-10)
    assert np.allclose(Q[:, 2], 1 / (r ** 2 - 4), rtol=1e-10)
    assert res.report.details["rotational"]


def test_magnetic_branch_obstruction_for_nonfactoring_ratio():
    sd = gallery.load("solute2d")
    res = vectorpotential2d_compat(sd.metric(), samples=sd.samples(10), branch="magnetic")
    assert res.report.verdict == OBSTRUCTION


def test_zero_drift_reduces_to_scalar_no_go():
    # with q = 0 the first-order identification forces f_j; the curl then reduces to the log criterion
    sd = gallery.load("canonical2d", f="u*v + 2")
    X = sd.samples(10)
    res = vectorpotential2d_compat(sd.metric(), samples=X, branch="solute")
    curl_nonzero = res.report.details["rotational"]
    scalar = nogo2d_check(canonical_f(sd.metric()), X).verdict
    assert curl_nonzero == (scalar == NONFACTORIZABLE)


# -- runner -------------------------------------------------------------------

@pytest.mark.parametrize("name", gallery.list_systems())
def test_gallery_expected_verdicts(name):
    sd = gallery.load(name)
    X = sd.samples(50)
    for mode, want in sd.expect:
        got = run_check(sd, mode, X).verdict
        assert got == want, (name, mode, got, want)
