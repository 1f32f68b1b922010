"""Catalog of worked separable systems as ready-made definitions.

Each entry is built by a function taking its parameters; numeric parameters
stay symbolic in the expressions (so an exported definition can be
re-parametrized), while free functions such as ``U(u)`` are substituted at
build time.  Curved domains are replaced by conservative boxes.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .exprkit import Expr, Program, as_expr, diff, parse, to_source
from .sepcheck.report import (
    DEGENERATE, FACTORIZABLE, FAIL, NONFACTORIZABLE, PASS, SKIPPED, TOL_IDENTITY, CheckReport, relative,
    verdict_for,
)
from .sysdef import InvalidParameterError, SysdefError, SystemDefinition


class UnknownSystemError(KeyError):
    def __str__(self):
        return f"unknown system {self.args[0]!r}; known: {', '.join(list_systems())}"


def _p(text) -> Expr:
    return parse(text) if isinstance(text, str) else as_expr(text)


def _sub(template: str, **funcs) -> Expr:
    """Parse ``template`` with ``{name}`` holes filled by parenthesized expressions."""
    return parse(template.format(**{k: f"({to_source(_p(v))})" for k, v in funcs.items()}))


def _verdicts(*groups) -> tuple:
    """Merge verdict groups; later entries win."""
    out: dict[str, str] = {}
    for g in groups:
        out.update(g)
    return tuple(out.items())


def _rows(*rows):
    return tuple(tuple(_p(e) for e in r) for r in rows)


_SPHERICAL_MAP = ("r*sin(theta)*cos(phi)", "r*sin(theta)*sin(phi)", "r*cos(theta)")
_SPHERICAL_ROWS = (("1", "-1/r^2", "0"), ("0", "1", "-1/sin(theta)^2"), ("0", "0", "1"))
_SPHERICAL_BOX = ((1.0, 3.0), (0.5, 2.5), (0.5, 5.5))

# Verdict groups.  The side condition always has vanishing eigenvalues
# somewhere, so the nonregular conditions report "degenerate" (the
# zero-denominator convention was used) rather than a plain pass.
_GENERALIZED = (("roundtrip", PASS), ("regular", FAIL), ("nonregular", DEGENERATE), ("brackets", PASS),
                ("commutators", PASS))
_TRUE_STACKEL = (("roundtrip", PASS), ("regular", PASS), ("nonregular", DEGENERATE), ("brackets", PASS),
                 ("commutators", PASS))


def kepler_spherical(alpha: float = 1.0, lambda3: float = 0.0) -> SystemDefinition:
    """Kepler problem in spherical coordinates.

    The last constant ``p_phi^2`` is a side condition; ``lambda3`` shifts it
    into the potentials (restriction mode).
    """
    return SystemDefinition(
        name="kepler_spherical",
        coords=("r", "theta", "phi"),
        rows=_rows(*_SPHERICAL_ROWS),
        v=(_p("alpha/r"), _p("0"), _p("0")),
        domain=_SPHERICAL_BOX,
        restrict=float(lambda3),
        params=(("alpha", alpha),),
        coordmap=(("ambient", "euclidean"), ("map", tuple(_p(m) for m in _SPHERICAL_MAP))),
        expect=_verdicts(_TRUE_STACKEL, (("coordmap", PASS),)),
    )


def hydrogen_spherical(alpha: float = 1.0) -> SystemDefinition:
    """Coulomb Schrödinger operator with ``exp(R) = 1/(r sqrt(sin theta))``.

    Conjugating the Laplacian by ``exp(R)`` produces the constant ``1/4`` and
    ``1/(4 sin^2 theta)`` in the angular equation.
    """
    return SystemDefinition(
        name="hydrogen_spherical",
        coords=("r", "theta", "phi"),
        rows=_rows(*_SPHERICAL_ROWS),
        v=(_p("alpha/r"), _p("1/4 + 1/(4*sin(theta)^2)"), _p("0")),
        classical=(_p("alpha/r"), _p("0"), _p("0")),
        domain=_SPHERICAL_BOX,
        R=_p("-log(r) - log(sin(theta))/2"),
        helmholtz_V=_p("alpha/r"),
        helmholtz_F=(_p("0"),) * 3,
        params=(("alpha", alpha),),
        coordmap=(("ambient", "euclidean"), ("map", tuple(_p(m) for m in _SPHERICAL_MAP))),
        expect=_verdicts(_TRUE_STACKEL, (("coordmap", PASS), ("r_identity", PASS))),
    )


def canonical2d(f="u + v") -> SystemDefinition:
    """Two-dimensional canonical form ``S = [[1, 1], [1, f(u, v)]]``.

    Verdicts that depend on ``f`` are only declared for the default.
    """
    default = f == "u + v"
    f = _p(f)
    return SystemDefinition(
        name="canonical2d",
        coords=("u", "v"),
        rows=((_p("1"), _p("1")), (_p("1"), f)),
        v=(_p("0"), _p("0")),
        domain=((1.0, 2.0), (1.0, 2.0)),
        expect=_verdicts(_GENERALIZED, (("nogo2d", NONFACTORIZABLE),)) if default else _verdicts(
            {k: x for k, x in _GENERALIZED if k != "regular"}),
    )


_SOLUTE_F = "-(1/4)*(u + v + sqrt((u + v)^2 - 4))^2"


def solute2d(omega: float = 1.0) -> SystemDefinition:
    """Solute transport in the plane with a rotational drift.

    ``E = -omega^2`` with factors ``cos(omega u)`` and ``cos(omega v)``.
    Periodicity in ``u`` and ``v`` is not imposed.
    """
    f = f"({_SOLUTE_F})"
    s = "(u + v)"
    q = f"({s} + sqrt({s}^2 - 4))"
    phi = f"({q}/2 - 2*atan({q}/2))"
    return SystemDefinition(
        name="solute2d",
        coords=("u", "v"),
        rows=((_p("1"), _p("1")), (_p("1"), _p(f))),
        v=(_p("0"), _p("0")),
        domain=((1.5, 3.0), (1.5, 3.0)),
        R=_p("0"),
        helmholtz_V=_p("0"),
        helmholtz_F=(_p(f"-diffu/(2*({f} - 1))".replace("diffu", to_source(diff(_p(f), "u")))),
                     _p(f"-diffv/(2*{f}*({f} - 1))".replace("diffv", to_source(diff(_p(f), "v"))))),
        params=(("omega", omega),),
        solution=(("E", -omega * omega), ("lambda", (-omega * omega,)),
                  ("psi", (_p("cos(omega*u)"), _p("cos(omega*v)")))),
        coordmap=(("ambient", "euclidean"),
                  ("map", (_p(f"{s}*cos({phi} - u)"), _p(f"{s}*sin({phi} - u)")))),
        vectorpot=(("branch", "solute"),),
        expect=_verdicts(_GENERALIZED, (("nogo2d", NONFACTORIZABLE), ("vectorpot", PASS), ("r_identity", PASS),
                                        ("solution", PASS), ("coordmap", PASS))),
    )


def minkowski3d(kappa: float = 1.0, lambda2: float = 1.0) -> SystemDefinition:
    """Wave operator plus ``-kappa/w^2`` on the (u, v, w) chart, ``exp(R) = 1/w``.

    Conjugation by ``1/w`` is exact on the w-part of the Laplacian, so the
    ``-1/w^2`` of the separated w-equation has to come from the potential.

    ``lambda2`` follows the ``(d_uu + lambda2) psi_1 = 0`` naming; the stored
    separation constant is ``-lambda2`` in the row convention of this package.
    The closed-form solution has ``E = 0``: ``cos``/``cosh`` factors and the
    power law ``w^((1 + sqrt(1 + 4 kappa))/2)``.
    """
    D = "(u^2 - v^2)^2/(4*w^2)"
    dv = "(u^2 - v^2)"
    if not 1 + 4 * kappa > 0:
        raise InvalidParameterError("minkowski3d needs 1 + 4 kappa > 0")
    if lambda2 > 0:
        p1, p2 = f"cos({math.sqrt(lambda2)!r}*u)", f"cosh({math.sqrt(lambda2)!r}*v)"
    elif lambda2 < 0:
        p1, p2 = f"cosh({math.sqrt(-lambda2)!r}*u)", f"cos({math.sqrt(-lambda2)!r}*v)"
    else:
        p1, p2 = "1 + u", "1 + v"
    return SystemDefinition(
        name="minkowski3d",
        coords=("u", "v", "w"),
        rows=_rows(("0", "1", f"1 + {D}"), ("0", "-1", f"-{D}"), ("1", "0", D)),
        v=(_p("0"), _p("0"), _p("-kappa/w^2")),
        classical=(_p("0"),) * 3,
        domain=((2.0, 3.0), (0.2, 1.0), (0.5, 2.0)),
        R=_p("-log(w)"),
        helmholtz_V=_p("-kappa/w^2"),
        helmholtz_F=(_p("0"),) * 3,
        params=(("kappa", kappa),),
        solution=(("E", 0.0), ("lambda", (0.0, -float(lambda2))),
                  ("psi", (_p(p1), _p(p2), _p("w^((1 + sqrt(1 + 4*kappa))/2)")))),
        coordmap=(("ambient", "minkowski"),
                  ("map", (_p(f"w/{dv}*(1/4 + (u^2 + v^2)^2)"), _p(f"w/{dv}*(1/4 - (u^2 + v^2)^2)"),
                           _p(f"2*w*u*v/{dv}")))),
        # the listed map pulls back to the metric times (u^2 + v^2) in the u, v block
        expect=_verdicts(_GENERALIZED, (("r_identity", PASS), ("solution", PASS), ("coordmap", FAIL))),
    )


def dupin_box(a: float, c: float):
    """u in [0.5, 2.5], v in [0.1, 1] and a w-range inside ``c cos u < w < a cosh v`` over that box."""
    u_box, v_box = (0.5, 2.5), (0.1, 1.0)
    lo, hi = c * math.cos(u_box[0]), a * math.cosh(v_box[0])
    pad = 0.1 * (hi - lo)
    return (u_box, v_box, (lo + pad, hi - pad))


def dupin_cyclide(a: float = 2.0, c: float = 1.0, E: float = 1.0) -> SystemDefinition:
    """Dupin-cyclidic coordinates on flat space with two side conditions."""
    if not (c > 0 and a > c):
        raise InvalidParameterError(f"dupin_cyclide needs 0 < c < a (got a={a:g}, c={c:g})")
    h1 = "((a*cosh(v) - c*cos(u))/(b*(a*cosh(v) - w)))^2"
    h2 = "((a*cosh(v) - c*cos(u))/(b*(w - c*cos(u))))^2"
    den = "(a*cosh(v) - c*cos(u))"
    if E > 0:
        p3 = f"exp({math.sqrt(E)!r}*w)"
    elif E < 0:
        p3 = f"cos({math.sqrt(-E)!r}*w)"
    else:
        p3 = "1 + w"
    return SystemDefinition(
        name="dupin_cyclide",
        coords=("u", "v", "w"),
        rows=_rows(("0", "1", "0"), ("0", "0", "1"), ("1", f"-{h1}", f"-{h2}")),
        v=(_p("1/4"), _p("-1/4"), _p("0")),
        classical=(_p("0"),) * 3,
        domain=dupin_box(a, c),
        sides=2,
        R=_p("-log((w - c*cos(u))*(a*cosh(v) - w))/2"),
        helmholtz_V=_p("0"),
        helmholtz_F=(_p("0"),) * 3,
        params=(("a", a), ("c", c)),
        derived=(("b", _p("sqrt(a^2 - c^2)")),),
        require=(_p("a - c"), _p("c")),
        solution=(("E", float(E)), ("lambda", (float(E),)),
                  ("psi", (_p("cos(u/2)"), _p("cosh(v/2)"), _p(p3)))),
        coordmap=(("ambient", "euclidean"),
                  ("map", (_p(f"(b^2*cos(u)*cosh(v) + (c*cosh(v) - a*cos(u))*w)/{den}"),
                           _p(f"b*sin(u)*(a*cosh(v) - w)/{den}"),
                           _p(f"b*sinh(v)*(w - c*cos(u))/{den}")))),
        expect=_verdicts(_GENERALIZED, (("nonregular", SKIPPED), ("r_identity", PASS), ("solution", PASS),
                                        ("coordmap", PASS))),
    )


def euclid_wedge(U="-u^2", V="0", W="0") -> SystemDefinition:
    """Flat space with ``x = (v + w) cos u / sqrt 2`` and potential ``U/(v+w)^2 + V + W``.

    The metric is read off the map: ``H^-2 = (2/(v+w)^2, 1, 1)``.  Conjugating
    by ``exp(R) = (v + w)^(-1/2)`` leaves the constant ``1/4`` in the u-equation.
    The default ``U`` is negative so that the side condition has real momenta.
    """
    U, V, W = _p(U), _p(V), _p(W)
    return SystemDefinition(
        name="euclid_wedge",
        coords=("u", "v", "w"),
        rows=_rows(("0", "0", "1"), ("0", "1", "0"), ("1", "-1", "-2/(v + w)^2")),
        v=(_sub("{U}/2 + 1/4", U=U), V, W),
        classical=(_sub("{U}/2", U=U), V, W),
        domain=((0.3, 2.5), (0.5, 1.5), (0.5, 1.5)),
        R=_p("-log(v + w)/2"),
        helmholtz_V=_sub("{U}/(v + w)^2 + {V} + {W}", U=U, V=V, W=W),
        helmholtz_F=(_p("0"),) * 3,
        coordmap=(("ambient", "euclidean"),
                  ("map", (_p("(v + w)*cos(u)/sqrt(2)"), _p("(v + w)*sin(u)/sqrt(2)"), _p("(v - w)/sqrt(2)")))),
        expect=_verdicts(_GENERALIZED, (("r_identity", PASS), ("coordmap", PASS))),
    )


def _linear_rows(G: Expr):
    return ((_p("0"), _p("0"), _p("1")), (_p("0"), _p("1"), _p("0")),
            (_p("1"), _p("-1"), _sub("-1/{G}^2", G=G)))


def linear_family(U1="1", U2="u", U3="0") -> SystemDefinition:
    """Metrics ``(U1 w + U2 v + U3)^2 du^2 + dv^2 + dw^2`` (free-particle HJ)."""
    G = _sub("{U1}*w + {U2}*v + {U3}", U1=U1, U2=U2, U3=U3)
    return SystemDefinition(
        name="linear_family",
        coords=("u", "v", "w"),
        rows=_linear_rows(G),
        v=(_p("0"),) * 3,
        domain=((0.5, 1.5),) * 3,
        expect=_verdicts(_GENERALIZED),
    )


def rotational_frames() -> SystemDefinition:
    """Linear-family instance realized by a u-dependent frame in flat space."""
    s = "sqrt(1 + sin(u)^2)"
    F = ("sin(u)^2", f"-cos(u)^3/{s}", "sin(u)*cos(u)", f"sin(u)*(1 + cos(u)^2)/{s}", "cos(u)",
         f"-sin(u)^2/{s}")
    G = _p(f"{s}*v + cos(u)*(2 + sin(u)^2)/(1 + sin(u)^2)*w")
    return SystemDefinition(
        name="rotational_frames",
        coords=("u", "v", "w"),
        rows=_linear_rows(G),
        v=(_p("0"),) * 3,
        domain=((0.2, 1.2), (0.5, 1.5), (0.5, 1.5)),
        coordmap=(("ambient", "euclidean"),
                  ("map", tuple(_p(f"({F[2 * k]})*v + ({F[2 * k + 1]})*w") for k in range(3)))),
        expect=_verdicts(_GENERALIZED, (("coordmap", PASS),)),
    )


def hyperbolic_halfspace() -> SystemDefinition:
    """Upper half-space model ``(dx^2 + dy^2 + dz^2)/z^2`` in a ruled chart."""
    return SystemDefinition(
        name="hyperbolic_halfspace",
        coords=("u", "v", "w"),
        rows=_rows(("0", "0", "1"), ("0", "1", "0"), ("1/w^2", "-1", "-1/(u + v)^2")),
        v=(_p("0"),) * 3,
        domain=((0.5, 1.5),) * 3,
        coordmap=(("ambient", "halfspace"),
                  ("map", (_p("(u + v)*sin(u) + cos(u)"), _p("-(u + v)*cos(u) + sin(u)"), _p("w")))),
        expect=_verdicts(_GENERALIZED, (("coordmap", PASS),)),
    )


def polar_magnetic(gamma4: float = 0.3, gamma5: float = 0.5, gamma6: float = 0.7) -> SystemDefinition:
    """Plane polar coordinates with imaginary first-order (magnetic) terms."""
    return SystemDefinition(
        name="polar_magnetic",
        coords=("r", "theta"),
        rows=_rows(("1", "-1/r^2"), ("0", "1")),
        v=(_p("0"), _p("0")),
        domain=((1.0, 3.0), (0.5, 2.5)),
        coordmap=(("ambient", "euclidean"), ("map", (_p("r*cos(theta)"), _p("r*sin(theta)")))),
        vectorpot=(("branch", "magnetic"), ("v1", _p("r")), ("v2", _p("cos(theta)")),
                   ("w1", _p("r^2")), ("w2", _p("sin(theta)")),
                   ("gamma4", gamma4), ("gamma5", gamma5), ("gamma6", gamma6)),
        expect=_verdicts(_TRUE_STACKEL, (("nogo2d", FACTORIZABLE), ("vectorpot", PASS), ("coordmap", PASS))),
    )


def planar_kepler(alpha: float = 1.0) -> SystemDefinition:
    """Kepler problem in plane polar coordinates (not part of the catalog)."""
    return SystemDefinition(
        name="planar_kepler",
        coords=("r", "theta"),
        rows=_rows(("1", "-1/r^2"), ("0", "1")),
        v=(_p("alpha/r"), _p("0")),
        domain=((1.0, 3.0), (0.5, 2.5)),
        sides=0,
        params=(("alpha", alpha),),
        coordmap=(("ambient", "euclidean"), ("map", (_p("r*cos(theta)"), _p("r*sin(theta)")))),
    )


_CATALOG: dict[str, Callable[..., SystemDefinition]] = {
    "kepler_spherical": kepler_spherical,
    "hydrogen_spherical": hydrogen_spherical,
    "canonical2d": canonical2d,
    "solute2d": solute2d,
    "minkowski3d": minkowski3d,
    "dupin_cyclide": dupin_cyclide,
    "euclid_wedge": euclid_wedge,
    "linear_family": linear_family,
    "rotational_frames": rotational_frames,
    "hyperbolic_halfspace": hyperbolic_halfspace,
    "polar_magnetic": polar_magnetic,
}


def list_systems() -> list[str]:
    return list(_CATALOG)


def load(name: str, **overrides) -> SystemDefinition:
    """Build a catalog entry; keyword overrides replace parameter defaults."""
    try:
        build = _CATALOG[name]
    except KeyError:
        raise UnknownSystemError(name) from None
    import inspect

    allowed = inspect.signature(build).parameters
    for k in overrides:
        if k not in allowed:
            raise InvalidParameterError(f"unknown parameter {k!r} for {name}; "
                                        f"accepted: {', '.join(allowed) or 'none'}")
    sd = build(**overrides)
    sd.check_params()
    return sd


# ---------------------------------------------------------------------------
# coordinate maps

_AMBIENT = {
    "euclidean": lambda X: np.ones_like(X),
    "minkowski": lambda X: np.column_stack([np.ones(len(X))] + [-np.ones(len(X))] * (X.shape[1] - 1)),
    "halfspace": lambda X: np.repeat(1.0 / X[:, -1:] ** 2, X.shape[1], axis=1),
}


def coordmap_check(sd: SystemDefinition, samples, tol: float = TOL_IDENTITY) -> CheckReport:
    """Pull the ambient metric back through the coordinate map and compare with ``H_j^2``.

    Off-diagonal components must vanish (relative to the diagonal scale).
    """
    ambient = sd.get("coordmap", "ambient")
    maps = sd.get("coordmap", "map")
    if maps is None:
        raise SysdefError(f"{sd.name} has no coordinate map")
    if ambient not in _AMBIENT:
        raise SysdefError(f"unknown ambient metric {ambient!r}")
    maps = [sd.bind(m) for m in maps]
    n = sd.dim
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    jac = [diff(m, x) for m in maps for x in sd.coords]
    vals = Program(maps + jac + list(sd.metric().hinv2), sd.coords).evaluate(X)
    Y = vals[:, :len(maps)]
    J = vals[:, len(maps):len(maps) + len(jac)].reshape(len(X), len(maps), n)
    h = vals[:, len(maps) + len(jac):]
    eta = _AMBIENT[ambient](Y)
    G = np.einsum("sai,sa,saj->sij", J, eta, J)
    target = 1.0 / h
    diag = np.einsum("sii->si", G)
    scale = np.abs(np.einsum("sai,sa,sai->si", J, np.abs(eta), J))
    res_d = relative(diag - target, scale + np.abs(target))
    off = G - np.einsum("si,ij->sij", diag, np.eye(n))
    res_o = relative(np.abs(off).max(axis=(1, 2)), scale.max(axis=1))
    res = np.maximum(res_d.max(axis=1), res_o)
    absr = np.maximum(np.abs(diag - target).max(axis=1), np.abs(off).max(axis=(1, 2)))
    details = {"ambient": ambient, "max_offdiagonal": float(res_o.max()) if len(res_o) else 0.0,
               "ratio_to_declared": (diag / target).tolist()[:3]}
    return CheckReport("coordmap", verdict_for(res, tol), tol, X, res, absr, details=details)
