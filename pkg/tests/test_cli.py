import json
import subprocess
import sys

import pytest

from stackel import gallery
from stackel.cli import main
from stackel.sysdef import dumps, loads


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--no-timestamp")
    return code, json.loads(out)


BAD3 = """\
[system]
name = "bad3"
dim = 3
coords = r, theta, phi

[stackel]
row.1 = "1", "r*theta", "0"
row.2 = "0", "1", "0"
row.3 = "0", "0", "1"

[potential]
v = "0", "0", "0"

[domain]
r = [1, 2]
theta = [0.5, 1]
phi = [0, 1]
"""


def test_gallery_list(capsys):
    code, doc = report(capsys, "gallery", "list")
    assert code == 0
    assert doc["systems"] == gallery.list_systems()


@pytest.mark.parametrize("name", ["minkowski3d", "solute2d", "kepler_spherical"])
def test_gallery_run_ok(capsys, name):
    code, doc = report(capsys, "gallery", "run", name, "--samples", "30")
    assert code == 0 and doc["exit"] == 0
    assert all(e["ok"] for e in doc["checks"])
    assert {e["name"] for e in doc["checks"]} >= {"roundtrip", "brackets"}


def test_unknown_source_exit2(capsys):
    code, _, err = run(capsys, "check", "no_such_thing")
    assert code == 2
    assert err.startswith("error: ")
    code, _, _ = run(capsys, "gallery", "run", "no_such_thing")
    assert code == 2


def test_bad_subcommand_exit2(capsys):
    assert run(capsys, "frobnicate")[0] == 2


def test_structural_error_exit2(capsys, tmp_path):
    path = tmp_path / "bad3.sys"
    path.write_text(BAD3)
    code, out, err = run(capsys, "check", str(path))
    assert code == 2
    assert out == ""
    assert "row 1, column 2" in err
    assert "bad3.sys:7:" in err


def test_failing_check_exit1(capsys, tmp_path):
    sd = gallery.load("canonical2d")
    text = dumps(sd).split("[expect]")[0]
    path = tmp_path / "canon.sys"
    path.write_text(text)
    assert loads(text).expected() == {}
    code, doc = report(capsys, "check", str(path), "--mode", "regular")
    assert code == 1
    assert doc["checks"][0]["verdict"] == "fail"
    assert doc["checks"][0]["ok"] is False


def test_nogo_override(capsys):
    code, doc = report(capsys, "check", "canonical2d", "--mode", "nogo2d", "--param", "f=u*v")
    assert code == 0
    assert doc["checks"][0]["verdict"] == "factorizable"
    assert doc["config"]["params"] == {"f": "u*v"}


def test_solute_nonfactorizable(capsys):
    code, doc = report(capsys, "check", "solute2d", "--mode", "nogo2d")
    assert code == 0
    entry = doc["checks"][0]
    assert entry["verdict"] == "nonfactorizable"
    assert "no Helmholtz R-separation" in json.dumps(entry)


def test_deterministic(capsys):
    argv = ("gallery", "run", "dupin_cyclide", "--samples", "20", "--no-timestamp")
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    assert "timestamp" not in json.loads(first)
    _, stamped, _ = run(capsys, "gallery", "list")
    assert "timestamp" in json.loads(stamped)


def test_seed_changes_samples(capsys):
    _, a = report(capsys, "check", "kepler_spherical", "--mode", "regular", "--samples", "5")
    _, b = report(capsys, "check", "kepler_spherical", "--mode", "regular", "--samples", "5", "--seed", "7")
    assert a["checks"][0]["max_abs_residual"] != b["checks"][0]["max_abs_residual"]
    assert b["config"]["seed"] == 7


def test_out_file(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, stdout, _ = run(capsys, "invert", "kepler_spherical", "--out", str(out), "--no-timestamp")
    assert code == 0 and stdout == ""
    doc = json.loads(out.read_text())
    assert doc["command"] == "invert"
    assert len(doc["inverse"]) == 3


def test_text_format(capsys):
    code, out, _ = run(capsys, "verify", "dupin_cyclide", "--format", "text", "--no-timestamp")
    assert code == 0
    assert out.splitlines()[0] == "system: dupin_cyclide"
    assert "pde_residual" in out and out.rstrip().endswith("exit: 0")


def test_export_round_trip(capsys, tmp_path):
    code, text, _ = run(capsys, "export", "dupin_cyclide")
    assert code == 0
    assert loads(text) == gallery.load("dupin_cyclide")
    path = tmp_path / "d.sys"
    path.write_text(text)
    code, doc = report(capsys, "verify", str(path), "--samples", "10")
    assert code == 0


def test_solve_and_csv(capsys, tmp_path):
    csv_path = tmp_path / "grid.csv"
    code, doc = report(capsys, "solve", "minkowski3d", "--csv", str(csv_path))
    assert code == 0
    assert doc["checks"][0]["name"] == "pde_residual"
    for rich in doc["richardson"].values():
        assert 12 <= rich["ratio"] <= 20
    assert csv_path.read_text().startswith("u,v,w,theta,residual")


def test_solve_needs_lambda(capsys):
    assert run(capsys, "solve", "kepler_spherical")[0] == 2


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "stackel.cli", "gallery", "list", "--format", "text",
                           "--no-timestamp"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "polar_magnetic" in proc.stdout
