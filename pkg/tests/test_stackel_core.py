import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stackel import gallery
from stackel.exprkit import Program, evaluate, parse
from stackel.sampling import random_momenta, sample_box
from stackel.stackel_core import (
    DegenerateMetricError, ForeignSymbolError, GeneralizedStackelMatrix, PhasePoint, QuadraticForm,
    SingularMatrixError, StackelError, StructuralError, assemble_potential, constants_of_motion,
    eigenvalues_rho, metric_from, restricted, roundtrip_error,
)


def canonical(f):
    return GeneralizedStackelMatrix(("u", "v"), [["1", "1"], ["1", f]])


def _eval_all(exprs, coords, X):
    return Program(list(exprs), coords).evaluate(np.atleast_2d(X))


# -- construction -----------------------------------------------------------

def test_structural_constraint_names_row_and_column():
    with pytest.raises(StructuralError) as ei:
        GeneralizedStackelMatrix(("u", "v", "w"), [["1", "u*v", "0"], ["0", "1", "w"], ["0", "0", "1"]])
    assert (ei.value.row, ei.value.col) == (1, 2)
    assert "row 1, column 2" in str(ei.value)


def test_last_column_is_free():
    S = GeneralizedStackelMatrix(("u", "v"), [["1", "u*v"], ["1", "sin(u+v)"]])
    assert not S.is_regular()


def test_two_side_matrix_frees_two_columns():
    S = GeneralizedStackelMatrix(("u", "v", "w"), [["1", "v", "w"], ["0", "u", "1"], ["1", "u", "v"]], sides=2)
    assert S.sides == 2
    with pytest.raises(StructuralError):
        GeneralizedStackelMatrix(("u", "v", "w"), [["1", "v", "w"], ["0", "1", "1"], ["1", "0", "1"]], sides=1)


def test_foreign_symbols_rejected():
    with pytest.raises(ForeignSymbolError):
        GeneralizedStackelMatrix(("u", "v"), [["1", "a"], ["1", "2"]])
    with pytest.raises(StackelError):
        GeneralizedStackelMatrix(("u", "v"), [["1", "1"]])
    with pytest.raises(StackelError):
        GeneralizedStackelMatrix(("u", "u"), [["1", "1"], ["1", "2"]])


# -- inversion --------------------------------------------------------------

def test_canonical_inverse_at_f_equal_three():
    T = canonical("u + v").invert_at((1.0, 2.0))
    assert np.allclose(T, 0.5 * np.array([[3, -1], [-1, 1]]), atol=1e-15)


def test_identity_inverse_and_degenerate_metric():
    S = GeneralizedStackelMatrix(("u", "v"), [["1", "0"], ["0", "1"]])
    assert np.array_equal(S.invert_at((0.3, 0.7)), np.eye(2))
    with pytest.raises(DegenerateMetricError) as ei:
        metric_from(S)
    assert ei.value.index == 1


def test_minkowski_first_row_by_hand():
    S = gallery.load("minkowski3d").matrix()
    T = S.invert_at((2.0, 1.0, 1.0))
    assert np.allclose(T[0], [-2.25, -2.25, 1.0], rtol=1e-14)


def test_singular_matrix_error_carries_point():
    S = canonical("1")
    with pytest.raises(SingularMatrixError) as ei:
        S.invert_at((0.5, 0.5))
    assert ei.value.point == (0.5, 0.5)
    assert ei.value.det == 0.0


@pytest.mark.parametrize("name", gallery.list_systems())
def test_symbolic_metric_matches_numeric_inverse(name):
    sd = gallery.load(name)
    S = sd.matrix()
    X = sd.samples(30)
    H = _eval_all(metric_from(S).hinv2, S.coords, X)
    for x, h in zip(X, H):
        T = S.invert_at(x)
        assert np.allclose(h, T[0], rtol=1e-12, atol=1e-13)
        err, kappa = roundtrip_error(S.numeric([x])[0], T)
        assert err <= 1e-10 * kappa


def test_canonical_metric_formula():
    m = metric_from(canonical("u*v + 2"))
    u, v = 1.3, 0.4
    f = u * v + 2
    assert evaluate(m.hinv2[0], u=u, v=v) == pytest.approx(f / (f - 1), rel=1e-14)
    assert evaluate(m.hinv2[1], u=u, v=v) == pytest.approx(-1 / (f - 1), rel=1e-14)


def test_dupin_first_row():
    sd = gallery.load("dupin_cyclide")
    a, c = 2.0, 1.0
    b = math.sqrt(a * a - c * c)
    X = sd.samples(20)
    H = _eval_all(sd.metric().hinv2, sd.coords, X)
    for (u, v, w), h in zip(X, H):
        h1 = ((a * math.cosh(v) - c * math.cos(u)) / (b * (a * math.cosh(v) - w))) ** 2
        h2 = ((a * math.cosh(v) - c * math.cos(u)) / (b * (w - c * math.cos(u)))) ** 2
        assert h == pytest.approx([h1, h2, 1.0], rel=1e-12)


# -- constants of motion ------------------------------------------------------

def test_kepler_constants_of_motion():
    sd = gallery.load("kepler_spherical", alpha=1.5)
    S = sd.matrix()
    L = constants_of_motion(S, sd.classical_potentials())
    X = sd.samples(10)
    P = random_momenta(10, 3, seed=3)
    for x, p in zip(X, P):
        r, th, _ = x
        pr, pt, pf = p
        L3 = pf ** 2
        L2 = pt ** 2 + L3 / math.sin(th) ** 2
        H = pr ** 2 + L2 / r ** 2 + 1.5 / r
        pt_ = PhasePoint(x, p)
        assert L[2](pt_) == pytest.approx(L3, rel=1e-13)
        assert L[1](pt_) == pytest.approx(L2, rel=1e-13)
        assert L[0](pt_) == pytest.approx(H, rel=1e-13)


def test_zero_potential_gives_zero_W():
    for q in constants_of_motion(canonical("u + v")):
        assert q.W == parse("0")
    assert assemble_potential(canonical("u + v"), ["0", "0"]) == parse("0")


def test_minkowski_side_condition_coefficients():
    sd = gallery.load("minkowski3d")
    L3 = constants_of_motion(sd.matrix(), sd.classical_potentials())[2]
    C, W = L3.parts(sd.samples(10))
    assert np.allclose(C, [1.0, 1.0, 0.0], atol=1e-14)
    assert np.allclose(W, 0.0)


def test_potential_must_be_single_variable():
    with pytest.raises(ForeignSymbolError):
        constants_of_motion(canonical("u + v"), ["v", "0"])


def test_kepler_potential_and_wedge_potential():
    sd = gallery.load("kepler_spherical", alpha=2.0)
    X = sd.samples(10)
    V = _eval_all([assemble_potential(sd.matrix(), sd.classical_potentials())], sd.coords, X)[:, 0]
    assert np.allclose(V, 2.0 / X[:, 0], rtol=1e-14)
    sd = gallery.load("euclid_wedge", U="-u^2", V="v", W="sin(w)")
    X = sd.samples(10)
    V = _eval_all([assemble_potential(sd.matrix(), sd.classical_potentials())], sd.coords, X)[:, 0]
    u, v, w = X.T
    assert np.allclose(V, -u ** 2 / (v + w) ** 2 + v + np.sin(w), rtol=1e-13)


def test_restricted_potential_shifts_only_the_side_condition():
    sd = gallery.load("kepler_spherical")
    S = sd.matrix()
    v = sd.classical_potentials()
    L0 = constants_of_motion(S, v)
    L1 = constants_of_motion(S, restricted(S, v, 0.7))
    X = sd.samples(10)
    P = random_momenta(10, 3, seed=1)
    for a, b in zip(L0[:-1], L1[:-1]):
        assert np.allclose(a.evaluate(X, P), b.evaluate(X, P), rtol=1e-13)
    assert np.allclose(L1[-1].evaluate(X, P), L0[-1].evaluate(X, P) - 0.7, rtol=1e-13)


# -- eigenvalues --------------------------------------------------------------

def test_rho_canonical_and_first_row():
    # f = 2: T = [[2, -1], [-1, 1]], so rho2 = (-1/2, 1/(-1))
    rho = eigenvalues_rho(canonical("u + v"), (1.0, 1.0))
    assert np.array_equal(rho[0], [1.0, 1.0])
    assert np.allclose(rho[1], [-0.5, -1.0], rtol=1e-15)


def test_rho_dupin_against_numeric_inverse():
    sd = gallery.load("dupin_cyclide")
    S = sd.matrix()
    for x in sd.samples(10):
        T = S.invert_at(x)
        rho = eigenvalues_rho(S, x)
        assert np.array_equal(rho[0], np.ones(3))
        assert np.allclose(rho * T[0], T, rtol=1e-12, atol=1e-14)


# -- column rescaling ---------------------------------------------------------

def test_rescale_by_one_is_identity_up_to_structure():
    S = canonical("u + v")
    R = S.column_rescale("1")
    X = sample_box([(1, 2), (1, 2)], 10)
    assert np.allclose(R.numeric(X), S.numeric(X))


def test_rescale_by_two_keeps_metric():
    sd = gallery.load("minkowski3d")
    S = sd.matrix()
    R = S.column_rescale("2")
    X = sd.samples(50)
    a = _eval_all(metric_from(S).hinv2, S.coords, X)
    b = _eval_all(metric_from(R).hinv2, S.coords, X)
    assert np.allclose(a, b, rtol=1e-12)


def test_rescale_recovers_the_two_function_form():
    # [[1, A], [1, B]] rescaled by 1/A becomes the canonical form with f = B/A
    S = GeneralizedStackelMatrix(("u", "v"), [["1", "u + 2*v"], ["1", "u*v + 1"]])
    C = S.column_rescale("1/(u + 2*v)")
    X = sample_box([(1, 2), (1, 2)], 20)
    want = canonical("(u*v + 1)/(u + 2*v)")
    assert np.allclose(C.numeric(X), want.numeric(X), rtol=1e-14)
    assert np.allclose(_eval_all(metric_from(C).hinv2, ("u", "v"), X),
                       _eval_all(metric_from(S).hinv2, ("u", "v"), X), rtol=1e-12)


def test_rescale_factor_must_not_vanish():
    S = canonical("u + v")
    with pytest.raises(StackelError):
        S.column_rescale("0")
    with pytest.raises(StackelError):
        S.column_rescale("u - 1.5", box=[(1, 2), (1, 2)])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), k=st.floats(0.1, 3.0))
def test_rescale_preserves_side_condition_zero_set(seed, k):
    sd = gallery.load("euclid_wedge")
    S = sd.matrix()
    f = f"{k} + u^2 + v*w"
    R = S.column_rescale(f)
    v = sd.classical_potentials()
    LN, LNr = constants_of_motion(S, v)[-1], constants_of_motion(R, v)[-1]
    rng = np.random.default_rng(seed)
    X = sd.samples(100, seed=seed)
    P = rng.normal(size=(100, 3))
    a, b = LN.evaluate(X, P), LNr.evaluate(X, P)
    fv = _eval_all([parse(f)], S.coords, X)[:, 0]
    assert np.allclose(b, a / fv, rtol=1e-10, atol=1e-12)
    assert np.array_equal(np.sign(a), np.sign(b))
    # the other constants are unchanged
    for q, qr in zip(constants_of_motion(S, v)[:-1], constants_of_motion(R, v)[:-1]):
        assert np.allclose(q.evaluate(X, P), qr.evaluate(X, P), rtol=1e-10, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.5, 3.0), min_size=4, max_size=4))
def test_quadratic_form_evaluation(vals):
    q = QuadraticForm(("u", "v"), ["u", "v^2"], "u*v")
    u, v, pu, pv = vals
    assert q(PhasePoint((u, v), (pu, pv))) == pytest.approx(u * pu ** 2 + v ** 2 * pv ** 2 + u * v, rel=1e-14)


def test_plain_stackel_matrix_restricts_every_column():
    with pytest.raises(StructuralError):
        GeneralizedStackelMatrix(("u", "v"), [["1", "u*v"], ["0", "1"]], sides=0)
    S = GeneralizedStackelMatrix(("u", "v"), [["1", "u"], ["0", "1"]], sides=0)
    assert S.is_regular()
