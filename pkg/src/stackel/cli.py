"""Command-line front end.

Exit codes: 0 when every requested check succeeds, 1 when one fails, 2 for
usage, parse, input and evaluation errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import gallery, runner, sepsolve, sysdef
from .exprkit import ExprError, to_source
from .sampling import DEFAULT_MARGIN, DEFAULT_SEED, shrink_box
from .sepcheck.report import SUCCESS, CheckReport, _clean
from .stackel_core import StackelError

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    source: str | None = None
    samples: int = 50
    tol: float | None = None
    fit_tol: float | None = None
    seed: int = DEFAULT_SEED
    margin: float = DEFAULT_MARGIN
    out: str | None = None
    fmt: str = "json"
    timestamp: bool = True
    mode: str = "all"
    params: dict = field(default_factory=dict)
    step: float = 0.02
    csv: str | None = None

    def __post_init__(self):
        for name in ("tol", "fit_tol"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if self.samples <= 0:
            raise UsageError("--samples must be positive")
        if not 0 <= self.margin < 0.5:
            raise UsageError("--margin must lie in [0, 0.5)")
        if not self.step > 0:
            raise UsageError("--step must be positive")


def _param(text: str):
    key, sep, val = text.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    val = val.strip()
    try:
        return key.strip(), float(val)
    except ValueError:
        return key.strip(), val


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--samples", type=int, default=50, help="number of sample points (default 50)")
    common.add_argument("--tol", type=float, help="tolerance for exact identities")
    common.add_argument("--fit-tol", type=float, help="tolerance for fitted multipliers")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="sampling seed")
    common.add_argument("--margin", type=float, default=DEFAULT_MARGIN, help="domain shrink fraction (default 0.05)")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp (byte-identical reports)")
    common.add_argument("--param", action="append", type=_param, default=[], metavar="NAME=VALUE",
                        help="override a parameter (repeatable)")

    top = argparse.ArgumentParser(prog="stackel", description="Separation of variables with side conditions.")
    sub = top.add_subparsers(dest="command", required=True)
    p = sub.add_parser("invert", parents=[common], help="symbolic inverse and numeric round trip")
    p.add_argument("source", help="definition file or catalog name")
    p = sub.add_parser("check", parents=[common], help="run separability checks")
    p.add_argument("source")
    p.add_argument("--mode", default="all", choices=runner.CHECK_MODES + ("all",))
    p = sub.add_parser("solve", parents=[common], help="integrate the separated equations on a grid")
    p.add_argument("source")
    p.add_argument("--step", type=float, default=0.02, help="RK4 step (default 0.02)")
    p.add_argument("--csv", help="dump the grid solution as CSV")
    p = sub.add_parser("verify", parents=[common], help="verify the stored closed-form solution")
    p.add_argument("source")
    p = sub.add_parser("gallery", parents=[common], help="catalog of worked systems")
    gsub = p.add_subparsers(dest="gallery_command", required=True)
    gsub.add_parser("list", parents=[common])
    g = gsub.add_parser("run", parents=[common])
    g.add_argument("source", metavar="name")
    g.add_argument("--mode", default="all", choices=runner.ALL_MODES + ("all",))
    p = sub.add_parser("export", parents=[common], help="write a definition in the text format")
    p.add_argument("source")
    return top


def config_from(ns) -> RunConfig:
    command = ns.command if ns.command != "gallery" else f"gallery-{ns.gallery_command}"
    return RunConfig(
        command=command, source=getattr(ns, "source", None), samples=ns.samples, tol=ns.tol,
        fit_tol=ns.fit_tol, seed=ns.seed, margin=ns.margin, out=ns.out, fmt=ns.format,
        timestamp=not ns.no_timestamp, mode=getattr(ns, "mode", "all"), params=dict(ns.param),
        step=getattr(ns, "step", 0.02), csv=getattr(ns, "csv", None),
    )


def resolve(source: str, params: dict) -> sysdef.SystemDefinition:
    """A path to a definition file, or a catalog name."""
    path = Path(source)
    if path.exists():
        sd = sysdef.load(path)
        return sd.with_params(**params) if params else sd
    if source in gallery.list_systems():
        return gallery.load(source, **params)
    raise UsageError(f"{source}: neither a definition file nor a catalog name")


def _entry(report: CheckReport, expected: str | None) -> dict:
    d = report.to_json()
    d["expected"] = expected
    d["ok"] = report.verdict == expected if expected is not None else report.verdict in SUCCESS
    return d


def _document(cfg: RunConfig, name: str | None, entries: list[dict], extra: dict | None = None) -> dict:
    code = EXIT_OK if all(e["ok"] for e in entries) else EXIT_FAIL
    doc = {"schema": SCHEMA, "system": name, "command": cfg.command}
    if cfg.timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    doc["config"] = {"samples": cfg.samples, "seed": cfg.seed, "margin": cfg.margin, "tol": cfg.tol,
                     "fit_tol": cfg.fit_tol, "mode": cfg.mode, "params": dict(sorted(cfg.params.items()))}
    doc["checks"] = entries
    if extra:
        doc.update(_clean(extra))
    doc["exit"] = code
    return doc


def _render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    lines = [f"system: {doc.get('system')}"]
    for e in doc["checks"]:
        exp = f" (expected {e['expected']})" if e["expected"] is not None else ""
        mark = "ok" if e["ok"] else "FAILED"
        res = e["max_residual"]
        res = f"{res:.3e}" if isinstance(res, float) else str(res)
        lines.append(f"  {e['name']:<14} {e['verdict']:<16} max residual {res:<10} tol {e['tolerance']:g}"
                     f"{exp}  {mark}")
    for key in ("systems", "inverse"):
        if key in doc:
            lines.append(f"{key}:")
            items = [" | ".join(r) if isinstance(r, list) else r for r in doc[key]]
            lines += [f"  {x}" for x in items]
    lines.append(f"exit: {doc['exit']}")
    return "\n".join(lines) + "\n"


def _checks(cfg: RunConfig, sd, modes) -> list[dict]:
    X = sd.samples(cfg.samples, seed=cfg.seed, margin=cfg.margin)
    expected = sd.expected()
    return [_entry(runner.run_check(sd, m, X, cfg.tol, cfg.fit_tol), expected.get(m)) for m in modes]


def cmd_invert(cfg: RunConfig):
    sd = resolve(cfg.source, cfg.params)
    T = sd.matrix().inverse()
    entries = _checks(cfg, sd, ["roundtrip"])
    return _document(cfg, sd.name, entries, {"inverse": [[to_source(e) for e in row] for row in T]})


def cmd_check(cfg: RunConfig):
    sd = resolve(cfg.source, cfg.params)
    modes = [m for m in runner.CHECK_MODES if runner.applicable(sd, m)] if cfg.mode == "all" else [cfg.mode]
    return _document(cfg, sd.name, _checks(cfg, sd, modes))


def cmd_gallery_run(cfg: RunConfig):
    if cfg.source not in gallery.list_systems():
        raise UsageError(str(gallery.UnknownSystemError(cfg.source)))
    sd = gallery.load(cfg.source, **cfg.params)
    return _document(cfg, sd.name, _checks(cfg, sd, runner.expand_modes(sd, cfg.mode)))


def cmd_gallery_list(cfg: RunConfig):
    return _document(cfg, None, [], {"systems": gallery.list_systems()})


def cmd_verify(cfg: RunConfig):
    sd = resolve(cfg.source, cfg.params)
    if sd.get("solution", "psi") is None:
        raise UsageError(f"{sd.name}: no closed-form solution to verify")
    X = sd.samples(cfg.samples, seed=cfg.seed, margin=cfg.margin)
    reports = [sepsolve.pde_residual(sd, sepsolve.solution_of(sd), X, tol=cfg.tol)]
    if sd.R is not None:
        reports.append(sepsolve.r_identity_check(sd, X, E=sd.get("solution", "E"), lam=_rest_lambda(sd),
                                                 **({"tol": cfg.tol} if cfg.tol else {})))
    lam = sd.get("solution", "lambda")
    if lam is not None:
        reports.append(sepsolve.hj_pointwise_verify(sd.matrix(), sd.classical_potentials(), lam, X,
                                                    **({"tol": cfg.tol} if cfg.tol else {})))
    return _document(cfg, sd.name, [_entry(r, None) for r in reports])


def _rest_lambda(sd):
    lam = sd.get("solution", "lambda")
    return list(lam[1:]) if lam else None


def cmd_solve(cfg: RunConfig):
    sd = resolve(cfg.source, cfg.params)
    lam = sd.get("solution", "lambda")
    if lam is None:
        raise UsageError(f"{sd.name}: [solution] needs lambda to integrate the separated equations")
    system = sepsolve.SeparationSystem.from_stackel(sd.matrix(), sd.potentials(), lam, f=sd.first_order(),
                                                    R=sd.rfactor() if sd.R is not None else None)
    box = shrink_box(sd.domain, cfg.margin)
    psi = sd.get("solution", "psi")
    factors, richardson = [], {}
    for i, (x, iv) in enumerate(zip(sd.coords, box)):
        y0, dy0 = _initial(sd, psi, i, iv[0])
        factors.append(sepsolve.integrate_factor(system, i, iv, y0, dy0, cfg.step))
        f, q = system.ode(i)
        exact = None
        if psi is not None:
            exact = _at(sd.bind(psi[i]), x, iv[1])
        richardson[x] = sepsolve.richardson(f, q, x, iv, y0, dy0, 4 * cfg.step, exact=exact)
    sol = sepsolve.assemble(factors, R=sd.rfactor() if sd.R is not None else None)
    report = sepsolve.pde_residual(sd, sol, samples=cfg.samples, tol=cfg.tol)
    if cfg.csv:
        sepsolve.write_csv(sol, cfg.csv, {"points": report.samples, "values": report.residuals})
    shape = [len(a) for a in sol.axes]
    return _document(cfg, sd.name, [_entry(report, None)], {"grid": shape, "richardson": richardson})


def _at(e, x, val):
    from .exprkit import Program
    return float(Program([e], (x,)).evaluate([[val]])[0, 0])


def _initial(sd, psi, i, x0):
    """Initial data from the closed-form factor when there is one, else (1, 0)."""
    if psi is None:
        return 1.0, 0.0
    from .exprkit import diff
    x = sd.coords[i]
    e = sd.bind(psi[i])
    return _at(e, x, x0), _at(diff(e, x), x, x0)


def cmd_export(cfg: RunConfig):
    sd = resolve(cfg.source, cfg.params)
    return sysdef.dumps(sd)


COMMANDS = {
    "invert": cmd_invert, "check": cmd_check, "solve": cmd_solve, "verify": cmd_verify,
    "gallery-run": cmd_gallery_run, "gallery-list": cmd_gallery_list, "export": cmd_export,
}


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        cfg = config_from(ns)
        result = COMMANDS[cfg.command](cfg)
        if isinstance(result, str):
            _emit(result, cfg.out)
            return EXIT_OK
        _emit(_render(result, cfg.fmt), cfg.out)
        return result["exit"]
    except (UsageError, sysdef.SysdefError, StackelError, ExprError, sepsolve.GridError,
            sepsolve.SingularCoefficientError, gallery.UnknownSystemError, OSError, ValueError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) else exc.__str__()
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
