"""System definitions and their sectioned text format.

A definition keeps its expressions with parameter symbols in place; the
parameter values are substituted whenever a concrete object (matrix, metric,
potentials) is requested.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .exprkit import ZERO, Expr, ExprError, Program, as_expr, parse, subs, to_source
from .stackel_core import (
    GeneralizedStackelMatrix, OrthogonalMetric, StackelError, StructuralError, metric_from, restricted,
)


class SysdefError(ValueError):
    """Problem in a definition; carries the source name and line when known."""

    def __init__(self, message: str, source: str | None = None, line: int | None = None):
        self.message = message
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = f"{source}:{line}: " if line is not None else f"{source}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class InvalidParameterError(SysdefError):
    pass


@dataclass(frozen=True)
class SystemDefinition:
    name: str
    coords: tuple
    rows: tuple                      # Stäckel rows, raw expressions
    v: tuple                         # potentials of the separated equations
    domain: tuple                    # ((lo, hi), ...)
    sides: int = 1
    classical: tuple | None = None   # HJ potentials when they differ from v
    f: tuple | None = None           # first-order coefficients of the separated equations
    R: Expr | None = None
    helmholtz_V: Expr | None = None
    helmholtz_F: tuple | None = None
    restrict: float | None = None
    params: tuple = ()               # ((name, float), ...)
    derived: tuple = ()              # ((name, Expr), ...)
    require: tuple = ()              # expressions that must be positive
    solution: tuple = ()             # (("E", x), ("lambda", (...)), ("psi", (...)))
    coordmap: tuple = ()             # (("ambient", name), ("map", (...)))
    vectorpot: tuple = ()            # ((key, value), ...)
    expect: tuple = ()               # ((check, verdict), ...)

    def __post_init__(self):
        ex = lambda seq: tuple(as_expr(e) for e in seq) if seq is not None else None
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "rows", tuple(tuple(as_expr(e) for e in r) for r in self.rows))
        object.__setattr__(self, "v", ex(self.v))
        object.__setattr__(self, "classical", ex(self.classical))
        object.__setattr__(self, "f", ex(self.f))
        object.__setattr__(self, "helmholtz_F", ex(self.helmholtz_F))
        for k in ("R", "helmholtz_V"):
            val = getattr(self, k)
            if val is not None:
                object.__setattr__(self, k, as_expr(val))
        object.__setattr__(self, "domain", tuple((float(a), float(b)) for a, b in self.domain))
        object.__setattr__(self, "params", tuple((k, float(x)) for k, x in self.params))
        object.__setattr__(self, "derived", tuple((k, as_expr(e)) for k, e in self.derived))
        object.__setattr__(self, "require", tuple(as_expr(e) for e in self.require))
        object.__setattr__(self, "solution", tuple(
            (k, float(x) if k == "E" else tuple(float(t) for t in x) if k == "lambda" else ex(x))
            for k, x in self.solution))
        object.__setattr__(self, "coordmap", tuple(
            (k, str(x) if k == "ambient" else ex(x)) for k, x in self.coordmap))
        object.__setattr__(self, "vectorpot", tuple(
            (k, str(x) if k == "branch" else float(x) if k.startswith("gamma") else as_expr(x))
            for k, x in self.vectorpot))
        object.__setattr__(self, "expect", tuple((str(k), str(x)) for k, x in self.expect))
        if len(self.domain) != len(self.coords):
            raise SysdefError(f"domain needs one interval per coordinate ({len(self.coords)})")

    # -- parameters ------------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.coords)

    def param_values(self) -> dict[str, float]:
        vals = dict(self.params)
        for k, e in self.derived:
            vals[k] = _eval_const(e, vals, k)
        return vals

    def check_params(self):
        vals = self.param_values()
        for e in self.require:
            x = _eval_const(e, vals, to_source(e))
            if not x > 0:
                raise InvalidParameterError(f"parameter constraint {to_source(e)} > 0 violated ({x:g})")

    def with_params(self, **overrides) -> "SystemDefinition":
        known = dict(self.params)
        derived = {k for k, _ in self.derived}
        for k in overrides:
            if k in derived:
                raise InvalidParameterError(f"parameter {k} is derived and cannot be set")
            if k not in known:
                raise InvalidParameterError(f"unknown parameter {k!r} for {self.name}")
        known.update({k: float(x) for k, x in overrides.items()})
        out = replace(self, params=tuple(sorted(known.items())))
        out.check_params()
        return out

    def bind(self, e):
        if e is None:
            return None
        return subs(as_expr(e), self.param_values())

    def _bind_all(self, seq):
        return None if seq is None else tuple(self.bind(e) for e in seq)

    # -- concrete objects --------------------------------------------------
    def matrix(self) -> GeneralizedStackelMatrix:
        return GeneralizedStackelMatrix(self.coords, [self._bind_all(r) for r in self.rows], self.sides)

    def metric(self) -> OrthogonalMetric:
        return metric_from(self.matrix(), self.domain)

    def potentials(self) -> tuple[Expr, ...]:
        v = self._bind_all(self.v)
        if self.restrict:
            v = restricted(self.matrix(), v, self.restrict)
        return v

    def classical_potentials(self) -> tuple[Expr, ...]:
        if self.classical is None:
            return self.potentials()
        v = self._bind_all(self.classical)
        if self.restrict:
            v = restricted(self.matrix(), v, self.restrict)
        return v

    def first_order(self) -> tuple[Expr, ...]:
        return self._bind_all(self.f) if self.f is not None else (ZERO,) * self.dim

    def rfactor(self) -> Expr:
        return self.bind(self.R) if self.R is not None else ZERO

    def helmholtz(self):
        """``(V, F)`` of the equation ``(Delta + F.d + V) Theta = E Theta``, or None."""
        if self.helmholtz_V is None and self.helmholtz_F is None:
            return None
        V = self.bind(self.helmholtz_V) if self.helmholtz_V is not None else ZERO
        F = self._bind_all(self.helmholtz_F) if self.helmholtz_F is not None else (ZERO,) * self.dim
        return V, F

    def get(self, group: str, key: str, default=None):
        return dict(getattr(self, group)).get(key, default)

    def expected(self) -> dict[str, str]:
        return dict(self.expect)

    def samples(self, n: int, seed=None, margin=None) -> np.ndarray:
        from .sampling import DEFAULT_MARGIN, DEFAULT_SEED, sample_box
        return sample_box(self.domain, n, DEFAULT_SEED if seed is None else seed,
                          DEFAULT_MARGIN if margin is None else margin)


def _eval_const(e: Expr, vals: Mapping[str, float], what: str) -> float:
    missing = e.free_symbols - vals.keys()
    if missing:
        raise InvalidParameterError(f"{what}: unknown parameter(s) {sorted(missing)}")
    try:
        return float(Program([e], sorted(e.free_symbols)).evaluate([[vals[s] for s in sorted(e.free_symbols)]])[0, 0])
    except ExprError as exc:
        raise InvalidParameterError(f"{what}: {exc}") from exc


# ---------------------------------------------------------------------------
# text format

_ITEM = re.compile(r'\s*(?:"((?:[^"\\]|\\.)*)"|([^,"\s][^,"]*?))\s*(?:,|$)')
_SECTIONS = ("system", "stackel", "potential", "rfactor", "domain", "helmholtz", "solution",
             "coordmap", "vectorpot", "params", "expect")


def _items(text: str, where) -> list[tuple[str, bool]]:
    """Split a comma list into (value, was_quoted) pairs."""
    out, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _ITEM.match(text, pos)
        if not m or m.end() == pos:
            raise SysdefError(f"cannot read list item at column {pos + 1}", *where)
        if m.group(1) is not None:
            out.append((json.loads('"' + m.group(1) + '"'), True))
        else:
            out.append((m.group(2).strip(), False))
        pos = m.end()
    return out


def _expr(text: str, where) -> Expr:
    try:
        return parse(text)
    except ExprError as exc:
        raise SysdefError(f"bad expression {text!r}: {exc}", *where) from exc


def _exprs(value: str, where, n=None) -> tuple[Expr, ...]:
    items = _items(value, where)
    if n is not None and len(items) != n:
        raise SysdefError(f"expected {n} expressions, got {len(items)}", *where)
    return tuple(_expr(t, where) for t, _ in items)


def _number(text: str, where) -> float:
    try:
        x = float(text)
    except ValueError:
        raise SysdefError(f"expected a number, got {text!r}", *where) from None
    if not np.isfinite(x):
        raise SysdefError(f"non-finite number {text!r}", *where)
    return x


def loads(text: str, source: str = "<string>") -> SystemDefinition:
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current = None
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise SysdefError("unterminated section header", source, lineno)
            current = line[1:-1].strip()
            if current not in _SECTIONS:
                raise SysdefError(f"unknown section [{current}]", source, lineno)
            if current in sections:
                raise SysdefError(f"duplicate section [{current}]", source, lineno)
            sections[current] = {}
            continue
        if current is None:
            raise SysdefError("key outside of any section", source, lineno)
        if "=" not in line:
            raise SysdefError("expected 'key = value'", source, lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in sections[current]:
            raise SysdefError(f"duplicate key {key!r}", source, lineno)
        sections[current][key] = (value, lineno)

    def need(sec, key):
        if sec not in sections:
            raise SysdefError(f"missing section [{sec}]", source)
        if key not in sections[sec]:
            raise SysdefError(f"missing key {key!r} in [{sec}]", source)
        return sections[sec][key]

    def opt(sec, key):
        return sections.get(sec, {}).get(key)

    def at(line):
        return (source, line)

    name, ln = need("system", "name")
    name = _items(name, at(ln))[0][0]
    coords_v, ln = need("system", "coords")
    coords = tuple(t for t, _ in _items(coords_v, at(ln)))
    dim_v, ln = need("system", "dim")
    dim = int(_number(dim_v, at(ln)))
    if dim != len(coords):
        raise SysdefError(f"dim = {dim} but {len(coords)} coordinates listed", source, ln)
    sides = 1
    if opt("system", "sides"):
        s, ln = opt("system", "sides")
        sides = int(_number(s, at(ln)))
        if sides not in (0, 1, 2):
            raise SysdefError("sides must be 0, 1 or 2", source, ln)
    restrict = None
    if opt("system", "restrict"):
        s, ln = opt("system", "restrict")
        restrict = _number(s, at(ln))
    for key, (_, ln) in sections["system"].items():
        if key not in ("name", "dim", "coords", "sides", "restrict"):
            raise SysdefError(f"unknown key {key!r} in [system]", source, ln)

    rows, row_lines = [], []
    for i in range(1, dim + 1):
        val, ln = need("stackel", f"row.{i}")
        rows.append(_exprs(val, at(ln), dim))
        row_lines.append(ln)
    for key, (_, ln) in sections["stackel"].items():
        if not re.fullmatch(r"row\.\d+", key) or not 1 <= int(key[4:]) <= dim:
            raise SysdefError(f"unknown key {key!r} in [stackel]", source, ln)

    val, ln = need("potential", "v")
    v = _exprs(val, at(ln), dim)
    classical = f = None
    if opt("potential", "classical"):
        val, ln = opt("potential", "classical")
        classical = _exprs(val, at(ln), dim)
    if opt("potential", "f"):
        val, ln = opt("potential", "f")
        f = _exprs(val, at(ln), dim)

    R = None
    if opt("rfactor", "R"):
        val, ln = opt("rfactor", "R")
        R = _exprs(val, at(ln), 1)[0]

    domain = []
    for c in coords:
        val, ln = need("domain", c)
        m = re.fullmatch(r"\[(.*)\]", val)
        if not m:
            raise SysdefError(f"domain for {c} must look like [lo, hi]", source, ln)
        parts = _items(m.group(1), at(ln))
        if len(parts) != 2:
            raise SysdefError(f"domain for {c} needs two bounds", source, ln)
        lo, hi = (_number(t, at(ln)) for t, _ in parts)
        if not hi > lo:
            raise SysdefError(f"empty domain interval for {c}", source, ln)
        domain.append((lo, hi))

    hV = hF = None
    if opt("helmholtz", "V"):
        val, ln = opt("helmholtz", "V")
        hV = _exprs(val, at(ln), 1)[0]
    if opt("helmholtz", "F"):
        val, ln = opt("helmholtz", "F")
        hF = _exprs(val, at(ln), dim)

    params, derived, require = [], [], []
    for key, (val, ln) in sections.get("params", {}).items():
        if key == "require":
            require.extend(_exprs(val, at(ln)))
            continue
        items = _items(val, at(ln))
        if len(items) != 1:
            raise SysdefError(f"parameter {key} takes one value", source, ln)
        text, quoted = items[0]
        if quoted:
            derived.append((key, _expr(text, at(ln))))
        else:
            params.append((key, _number(text, at(ln))))

    solution = []
    for key, (val, ln) in sections.get("solution", {}).items():
        if key == "E":
            solution.append(("E", _number(val, at(ln))))
        elif key == "lambda":
            solution.append(("lambda", tuple(_number(t, at(ln)) for t, _ in _items(val, at(ln)))))
        elif key == "psi":
            solution.append(("psi", _exprs(val, at(ln), dim)))
        else:
            raise SysdefError(f"unknown key {key!r} in [solution]", source, ln)

    coordmap = []
    for key, (val, ln) in sections.get("coordmap", {}).items():
        if key == "ambient":
            coordmap.append(("ambient", _items(val, at(ln))[0][0]))
        elif key == "map":
            coordmap.append(("map", _exprs(val, at(ln))))
        else:
            raise SysdefError(f"unknown key {key!r} in [coordmap]", source, ln)

    vectorpot = []
    for key, (val, ln) in sections.get("vectorpot", {}).items():
        text, quoted = _items(val, at(ln))[0]
        if key == "branch":
            vectorpot.append((key, text))
        elif key.startswith("gamma"):
            vectorpot.append((key, _number(text, at(ln))))
        else:
            vectorpot.append((key, _expr(text, at(ln))))

    expect = tuple((k, _items(val, at(ln))[0][0]) for k, (val, ln) in sections.get("expect", {}).items())

    try:
        sd = SystemDefinition(
            name=name, coords=coords, rows=tuple(rows), v=v, domain=tuple(domain), sides=sides,
            classical=classical, f=f, R=R, helmholtz_V=hV, helmholtz_F=hF, restrict=restrict,
            params=tuple(params), derived=tuple(derived), require=tuple(require),
            solution=tuple(solution), coordmap=tuple(coordmap), vectorpot=tuple(vectorpot), expect=expect,
        )
        sd.check_params()
    except SysdefError as exc:
        if exc.source is None:
            raise SysdefError(exc.message, source) from exc
        raise
    try:
        sd.matrix()
    except StructuralError as exc:
        raise SysdefError(str(exc), source, row_lines[exc.row - 1]) from exc
    except StackelError as exc:
        raise SysdefError(str(exc), source, row_lines[0]) from exc
    return sd


def load(path) -> SystemDefinition:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SysdefError(f"cannot read file: {exc.strerror}", str(path)) from exc
    return loads(text, str(path))


def _q(e) -> str:
    return json.dumps(to_source(as_expr(e)), ensure_ascii=False)


def _qlist(seq) -> str:
    return ", ".join(_q(e) for e in seq)


def _num(x: float) -> str:
    return repr(float(x)) if not float(x).is_integer() else str(int(x)) if abs(x) < 1e15 else repr(float(x))


def dumps(sd: SystemDefinition) -> str:
    out = ["[system]", f"name = {json.dumps(sd.name)}", f"dim = {sd.dim}", f"coords = {', '.join(sd.coords)}",
           f"sides = {sd.sides}"]
    if sd.restrict is not None:
        out.append(f"restrict = {_num(sd.restrict)}")
    out += ["", "[stackel]"]
    out += [f"row.{i + 1} = {_qlist(r)}" for i, r in enumerate(sd.rows)]
    out += ["", "[potential]", f"v = {_qlist(sd.v)}"]
    if sd.classical is not None:
        out.append(f"classical = {_qlist(sd.classical)}")
    if sd.f is not None:
        out.append(f"f = {_qlist(sd.f)}")
    if sd.R is not None:
        out += ["", "[rfactor]", f"R = {_q(sd.R)}"]
    out += ["", "[domain]"]
    out += [f"{c} = [{_num(lo)}, {_num(hi)}]" for c, (lo, hi) in zip(sd.coords, sd.domain)]
    if sd.helmholtz_V is not None or sd.helmholtz_F is not None:
        out += ["", "[helmholtz]"]
        if sd.helmholtz_V is not None:
            out.append(f"V = {_q(sd.helmholtz_V)}")
        if sd.helmholtz_F is not None:
            out.append(f"F = {_qlist(sd.helmholtz_F)}")
    if sd.solution:
        out += ["", "[solution]"]
        for k, val in sd.solution:
            if k == "E":
                out.append(f"E = {_num(val)}")
            elif k == "lambda":
                out.append(f"lambda = {', '.join(_num(x) for x in val)}")
            else:
                out.append(f"psi = {_qlist(val)}")
    if sd.coordmap:
        out += ["", "[coordmap]"]
        for k, val in sd.coordmap:
            out.append(f"ambient = {val}" if k == "ambient" else f"map = {_qlist(val)}")
    if sd.vectorpot:
        out += ["", "[vectorpot]"]
        for k, val in sd.vectorpot:
            if k == "branch":
                out.append(f"branch = {val}")
            elif isinstance(val, float):
                out.append(f"{k} = {_num(val)}")
            else:
                out.append(f"{k} = {_q(val)}")
    if sd.params or sd.derived or sd.require:
        out += ["", "[params]"]
        out += [f"{k} = {_num(x)}" for k, x in sd.params]
        out += [f"{k} = {_q(e)}" for k, e in sd.derived]
        if sd.require:
            out.append(f"require = {_qlist(sd.require)}")
    if sd.expect:
        out += ["", "[expect]"]
        out += [f"{k} = {val}" for k, val in sd.expect]
    return "\n".join(out) + "\n"


def dump(sd: SystemDefinition, path):
    Path(path).write_text(dumps(sd), encoding="utf-8")
