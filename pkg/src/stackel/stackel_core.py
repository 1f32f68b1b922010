"""Generalized Stäckel matrices and the objects derived from them.

A generalized Stäckel matrix ``S`` is N×N; in row ``i`` the first
``N - sides`` columns may depend on the coordinate ``x^i`` only, the last
``sides`` columns on all coordinates.  With ``T = S^-1`` the contravariant
metric is the first row of ``T`` and the quadratic forms

    L_l = sum_j T^{lj} (p_j^2 + v_j)

are the Hamiltonian (``l = 1``), the constants of motion, and (the last
``sides`` of them) the side conditions.  Separation constants satisfy
``L_l = -lambda_l``.

The Hamiltonian follows the convention ``H = sum H_j^-2 p_j^2 + V``, which is
twice the usual mechanical Hamiltonian.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Sequence

import numpy as np

from .exprkit import ONE, ZERO, Expr, Program, as_expr, mul, neg, sub, total, div
from .sampling import sample_box

EPS_DET = 1e-12
DEGENERACY_SAMPLES = 20


class StackelError(ValueError):
    pass


class StructuralError(StackelError):
    """An entry depends on a coordinate it must not depend on (indices are 1-based)."""

    def __init__(self, row: int, col: int, entry: Expr, foreign):
        self.row = row
        self.col = col
        self.entry = entry
        self.foreign = tuple(sorted(foreign))
        super().__init__(
            f"structural constraint violated at row {row}, column {col}: "
            f"entry {entry} depends on {', '.join(self.foreign)}"
        )


class SingularMatrixError(StackelError):
    def __init__(self, point, det: float):
        self.point = tuple(float(v) for v in point)
        self.det = det
        super().__init__(f"matrix is singular at {self.point} (det = {det:.3e})")


class DegenerateMetricError(StackelError):
    def __init__(self, index: int, point=None):
        self.index = index
        self.point = point
        where = "identically" if point is None else f"at {tuple(point)}"
        super().__init__(f"metric coefficient H^-2_{index + 1} vanishes {where}")


class ForeignSymbolError(StackelError):
    pass


def _det_expr(m: list[list[Expr]]) -> Expr:
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return sub(mul(m[0][0], m[1][1]), mul(m[0][1], m[1][0]))
    terms = []
    for j in range(n):
        if m[0][j].kind == "num" and m[0][j].value == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        t = mul(m[0][j], _det_expr(minor))
        terms.append(t if j % 2 == 0 else neg(t))
    return total(terms)


def _cofactor(m, i, j) -> Expr:
    minor = [row[:j] + row[j + 1:] for k, row in enumerate(m) if k != i]
    d = _det_expr(minor) if minor else ONE
    return d if (i + j) % 2 == 0 else neg(d)


class GeneralizedStackelMatrix:
    """N×N matrix of expressions with the generalized Stäckel structure."""

    def __init__(self, coords: Sequence[str], rows, sides: int = 1):
        self.coords = tuple(coords)
        n = len(self.coords)
        if n < 1:
            raise StackelError("need at least one coordinate")
        if len(set(self.coords)) != n:
            raise StackelError("coordinate names must be distinct")
        # sides = 0 is an ordinary Stäckel matrix
        if not 0 <= sides <= n:
            raise StackelError(f"sides must be between 0 and {n}")
        entries = [[as_expr(e) for e in row] for row in rows]
        if len(entries) != n or any(len(r) != n for r in entries):
            raise StackelError(f"Stäckel matrix must be {n}x{n}")
        cset = set(self.coords)
        for i, row in enumerate(entries):
            for j, e in enumerate(row):
                extra = e.free_symbols - cset
                if extra:
                    raise ForeignSymbolError(
                        f"entry at row {i + 1}, column {j + 1} uses non-coordinate symbol(s) {sorted(extra)}"
                    )
                if j < n - sides:
                    foreign = e.free_symbols - {self.coords[i]}
                    if foreign:
                        raise StructuralError(i + 1, j + 1, e, foreign)
        self.n = n
        self.sides = sides
        self.entries = tuple(tuple(r) for r in entries)
        self._inverse = None
        self._prog = None

    def __eq__(self, other):
        return (
            isinstance(other, GeneralizedStackelMatrix)
            and self.coords == other.coords
            and self.sides == other.sides
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash((self.coords, self.sides, self.entries))

    def __repr__(self):
        rows = "; ".join(", ".join(str(e) for e in r) for r in self.entries)
        return f"GeneralizedStackelMatrix({list(self.coords)}, [{rows}], sides={self.sides})"

    @property
    def last_column(self) -> tuple[Expr, ...]:
        return tuple(r[-1] for r in self.entries)

    def is_regular(self) -> bool:
        """True when every entry of row i depends on x^i only (classical Stäckel)."""
        return all(
            e.free_symbols <= {self.coords[i]} for i, row in enumerate(self.entries) for e in row
        )

    # -- numeric ---------------------------------------------------------
    def program(self) -> Program:
        if self._prog is None:
            flat = [e for row in self.entries for e in row]
            self._prog = Program(flat, self.coords)
        return self._prog

    def numeric(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.program().evaluate(X).reshape(-1, self.n, self.n)

    def invert_at(self, x) -> np.ndarray:
        """T = S(x)^-1, with a scaled determinant test."""
        S = self.numeric([x])[0]
        return _checked_inverse(S, x)

    def invert_many(self, X) -> np.ndarray:
        Ss = self.numeric(X)
        return np.array([_checked_inverse(S, x) for S, x in zip(Ss, np.atleast_2d(X))])

    # -- symbolic --------------------------------------------------------
    def inverse(self) -> tuple[tuple[Expr, ...], ...]:
        """Symbolic T = S^-1 by cofactors (N <= 4)."""
        if self._inverse is None:
            if self.n > 4:
                raise NotImplementedError("symbolic inverse is limited to N <= 4")
            m = [list(r) for r in self.entries]
            det = _det_expr(m)
            if det.kind == "num" and det.value == 0:
                raise StackelError("Stäckel matrix is identically singular")
            self._det = det
            self._inverse = tuple(
                tuple(div(_cofactor(m, j, l), det) for j in range(self.n)) for l in range(self.n)
            )
        return self._inverse

    def det(self) -> Expr:
        self.inverse()
        return self._det

    def column_rescale(self, f, box=None) -> "GeneralizedStackelMatrix":
        """Multiply the last column by ``f``; the separated equations are unchanged.

        With a domain ``box`` the factor is sampled and must not vanish.
        """
        f = as_expr(f)
        if f.kind == "num" and f.value == 0:
            raise StackelError("rescaling factor is identically zero")
        if box is not None:
            X = sample_box(box, DEGENERACY_SAMPLES)
            vals = Program([f], self.coords).evaluate(X)[:, 0]
            if np.any(vals == 0):
                raise StackelError(f"rescaling factor vanishes at {tuple(X[np.argmax(vals == 0)])}")
            if vals.min() < 0 < vals.max():
                raise StackelError("rescaling factor changes sign inside the domain")
        rows = [list(r[:-1]) + [mul(r[-1], f)] for r in self.entries]
        return GeneralizedStackelMatrix(self.coords, rows, self.sides)


def _checked_inverse(S: np.ndarray, x) -> np.ndarray:
    n = S.shape[0]
    det = float(np.linalg.det(S))
    norm = float(np.abs(S).sum(axis=1).max())
    if not np.isfinite(det) or abs(det) <= EPS_DET * norm ** n:
        raise SingularMatrixError(x, det)
    return np.linalg.solve(S, np.eye(n))


def roundtrip_error(S: np.ndarray, T: np.ndarray) -> tuple[float, float]:
    """``(||S T - I||_inf, cond_inf(S))``."""
    n = S.shape[0]
    err = float(np.abs(S @ T - np.eye(n)).sum(axis=1).max())
    return err, float(np.linalg.cond(S, np.inf))


@dataclass(frozen=True)
class OrthogonalMetric:
    """Diagonal contravariant metric ``H_j^-2`` (entries may be negative)."""

    coords: tuple[str, ...]
    hinv2: tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "hinv2", tuple(as_expr(h) for h in self.hinv2))
        if len(self.coords) != len(self.hinv2):
            raise ValueError("one metric coefficient per coordinate")

    @property
    def n(self) -> int:
        return len(self.coords)

    def check_nondegenerate(self, box=None, n: int = DEGENERACY_SAMPLES):
        for j, h in enumerate(self.hinv2):
            if h.kind == "num" and h.value == 0:
                raise DegenerateMetricError(j)
        if box is None:
            return
        X = sample_box(box, n)
        vals = Program(self.hinv2, self.coords).evaluate(X)
        scale = np.abs(vals).max(axis=0)
        for j in range(self.n):
            if scale[j] == 0:
                raise DegenerateMetricError(j)
            small = np.abs(vals[:, j]) <= 1e-14 * max(scale[j], 1.0)
            if small.any():
                raise DegenerateMetricError(j, X[np.argmax(small)])


def metric_from(S: GeneralizedStackelMatrix, box=None) -> OrthogonalMetric:
    """``H_j^-2 = T^{1j}`` from the symbolic inverse; rejects degenerate metrics."""
    metric = OrthogonalMetric(S.coords, S.inverse()[0])
    metric.check_nondegenerate(box)
    return metric


@dataclass(frozen=True)
class PhasePoint:
    x: tuple
    p: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if len(self.x) != len(self.p):
            raise ValueError("x and p must have the same length")


@dataclass(frozen=True)
class QuadraticForm:
    """Phase function ``sum_j T^j(x) p_j^2 + W(x)``."""

    coords: tuple[str, ...]
    coeffs: tuple[Expr, ...]
    W: Expr = ZERO
    _prog: list = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "coeffs", tuple(as_expr(c) for c in self.coeffs))
        object.__setattr__(self, "W", as_expr(self.W))
        if len(self.coeffs) != len(self.coords):
            raise ValueError("one coefficient per coordinate")

    def program(self) -> Program:
        if not self._prog:
            self._prog.append(Program(list(self.coeffs) + [self.W], self.coords))
        return self._prog[0]

    def parts(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Coefficients (npts, N) and potential part (npts,) at configuration points."""
        vals = self.program().evaluate(np.atleast_2d(X))
        return vals[:, :-1], vals[:, -1]

    def evaluate(self, X, P) -> np.ndarray:
        C, W = self.parts(X)
        P = np.atleast_2d(np.asarray(P, dtype=float))
        return (C * P**2).sum(axis=1) + W

    def __call__(self, point: PhasePoint) -> float:
        return float(self.evaluate([point.x], [point.p])[0])

    def scaled(self, f) -> "QuadraticForm":
        f = as_expr(f)
        return QuadraticForm(self.coords, [mul(f, c) for c in self.coeffs], mul(f, self.W))


def _check_single_variable(S: GeneralizedStackelMatrix, v) -> tuple[Expr, ...]:
    v = tuple(as_expr(e) for e in v)
    if len(v) != S.n:
        raise StackelError(f"need {S.n} potentials, got {len(v)}")
    for i, e in enumerate(v):
        foreign = e.free_symbols - {S.coords[i]}
        if foreign:
            raise ForeignSymbolError(
                f"potential v_{i + 1} may depend on {S.coords[i]} only, found {sorted(foreign)}"
            )
    return v


def constants_of_motion(S: GeneralizedStackelMatrix, v=None) -> list[QuadraticForm]:
    """``L_l = sum_j T^{lj}(p_j^2 + v_j)`` for l = 1..N (L_1 is the Hamiltonian)."""
    v = _check_single_variable(S, v if v is not None else [ZERO] * S.n)
    T = S.inverse()
    return [
        QuadraticForm(S.coords, T[l], total(mul(T[l][j], v[j]) for j in range(S.n)))
        for l in range(S.n)
    ]


def restricted(S: GeneralizedStackelMatrix, v, lam_last: float) -> tuple[Expr, ...]:
    """Potentials for which the side condition L_N = 0 means L_N = lam_last originally.

    Shifting v by ``-lam_last * (last column)`` changes only L_N, by
    ``-lam_last``, because T S = I.
    """
    v = _check_single_variable(S, v)
    if lam_last == 0:
        return v
    col = S.last_column
    for i, c in enumerate(col):
        if c.free_symbols - {S.coords[i]}:
            raise StackelError("restriction needs a last column that is single-variable per row")
    lam = as_expr(float(lam_last))
    return tuple(sub(v[i], mul(lam, col[i])) for i in range(S.n))


def assemble_potential(S: GeneralizedStackelMatrix, v) -> Expr:
    """``V = sum_j v_j T^{1j}``."""
    return constants_of_motion(S, v)[0].W


def eigenvalues_rho(S: GeneralizedStackelMatrix, x) -> np.ndarray:
    """``rho^(l)_j = T^{lj} / T^{1j}`` at a point; row 1 is exactly one."""
    T = S.invert_at(x)
    if np.any(T[0] == 0):
        j = int(np.argmin(np.abs(T[0])))
        raise DegenerateMetricError(j, x)
    rho = T / T[0]
    rho[0] = 1.0
    return rho


def rho_exprs(S: GeneralizedStackelMatrix) -> list[list[Expr]]:
    T = S.inverse()
    return [[div(T[l][j], T[0][j]) if l else ONE for j in range(S.n)] for l in range(S.n)]


def coordinate_permutations(n: int):
    return permutations(range(n))
