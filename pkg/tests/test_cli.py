import json
import subprocess
import sys

import numpy as np
import pytest

from dihedral import __version__
from dihedral.cli import main, resolve_solution


def run(tmp_path, *argv):
    code = main(["--out-dir", str(tmp_path), *argv])
    manifest = json.loads((tmp_path / "manifest.json").read_text()) if (tmp_path / "manifest.json").exists() else None
    return code, manifest


def test_match_closed_form(tmp_path, capsys):
    code, man = run(tmp_path, "match", "--m", "6", "--N", "4", "--closed-form")
    assert code == 0
    sols = json.loads((tmp_path / "solutions.json").read_text())
    assert len(sols) == 5
    assert all(s["residual"] < 1e-10 and abs(s["det"]) > 1e-8 for s in sols)
    assert json.loads(capsys.readouterr().out) == sols
    assert man["version"] == __version__ and man["exit_code"] == 0
    assert man["args"]["m"] == 6 and man["outputs"][0].endswith("solutions.json")


def test_match_empty_family(tmp_path):
    code, _ = run(tmp_path, "match", "--m", "5", "--N", "2", "--closed-form")
    assert code == 0
    assert json.loads((tmp_path / "solutions.json").read_text()) == []


def test_match_enumerate_positive_branch(tmp_path):
    code, _ = run(tmp_path, "match", "--m", "6", "--N", "50", "--enumerate", "--seed", "1", "--starts", "40")
    assert code == 0
    sols = json.loads((tmp_path / "solutions.json").read_text())
    assert any(min(s["a"]) > 0 for s in sols)
    code, _ = run(tmp_path, "match", "enumerate", "--m", "6", "--N", "2", "--starts", "10")
    assert code == 0


def test_usage_errors(tmp_path, capsys):
    assert main(["match", "--m", "6", "--N", "4", "--bogus"]) == 1
    assert "unrecognized arguments" in capsys.readouterr().err
    assert main(["match", "--m", "6"]) == 1
    assert main(["frobnicate"]) == 1
    code, man = run(tmp_path, "match", "--m", "5", "--N", "4", "--closed-form")
    assert code == 1 and "UnsupportedCase" in man["error"]
    code, _ = run(tmp_path, "match", "--m", "0", "--N", "4")
    assert code == 1


def test_help_lists_flags(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "radii", "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--omega", "--mesh", "--r", "--bounds"):
        assert flag in out


def test_continuum_solve(tmp_path):
    code, man = run(tmp_path, "continuum", "solve", "--mesh", "100")
    assert code == 0
    data = np.loadtxt(tmp_path / "continuum.csv", delimiter=",", skiprows=1)
    assert data.shape == (101, 2) and np.min(data[:, 1]) > 0
    assert json.loads((tmp_path / "continuum.json").read_text())["residual"] < 1e-12


def test_verify_radii_exit_codes(tmp_path):
    code, man = run(tmp_path / "ok", "verify", "radii", "--omega", "0.1", "--mesh", "200", "--r", "1e-3")
    assert code == 0
    cert = json.loads((tmp_path / "ok" / "certificate.json").read_text())
    assert cert["verified"] and cert["M"] == 200
    # too coarse a mesh for this omega: no radius verifies and the bracket is empty
    code, man = run(tmp_path / "bad", "verify", "radii", "--omega", "0.02", "--mesh", "200", "--r", "1e-3")
    assert code == 3
    assert json.loads((tmp_path / "bad" / "certificate.json").read_text())["r_lo"] is None
    code, man = run(tmp_path / "bad", "verify", "radii", "--omega", "0.1", "--mesh", "200", "--r", "1.0")
    assert code == 3 and man["exit_code"] == 3
    assert not json.loads((tmp_path / "bad" / "certificate.json").read_text())["verified"]


def test_profile_synth_outputs(tmp_path):
    code, _ = run(tmp_path, "profile", "synth", "--m", "6", "--N", "1", "--nr", "40", "--ntheta", "36",
                  "--pixels", "60")
    assert code == 0
    data = np.loadtxt(tmp_path / "pattern.csv", delimiter=",", skiprows=1)
    assert data.shape == (40 * 36, 3)
    assert (tmp_path / "pattern.png").stat().st_size > 0
    code, man = run(tmp_path, "profile", "synth", "--m", "6", "--N", "4", "--solution", "N4_3", "--nr", "10",
                    "--ntheta", "12", "--pixels", "20")
    assert code == 0
    code, man = run(tmp_path, "profile", "synth", "--m", "6", "--N", "2", "--solution", "N9")
    assert code == 1
    code, man = run(tmp_path, "profile", "synth", "--m", "6", "--N", "1", "--a", "1", "2", "3")
    assert code == 1


def test_profile_triple(tmp_path):
    code, _ = run(tmp_path, "profile", "triple", "--m", "6", "--a", "0", "--b", "0", "--r-max", "500")
    assert code == 0
    rec = json.loads((tmp_path / "triple.json").read_text())
    assert rec["error"] < 0.05 and rec["envelope"] >= rec["error"]


def test_resolve_solution():
    a = resolve_solution(2, 10, "N1", rotate=True)
    assert a.shape == (11,) and np.allclose(a[:2], [-1, -np.sqrt(2)]) and np.all(a[2:] == 0)
    p = resolve_solution(6, 10, "positive")
    assert np.all(p > 0)
    with pytest.raises(ValueError):
        resolve_solution(5, 3, "positive")
    with pytest.raises(ValueError):
        resolve_solution(6, 1, "N3_1")
    with pytest.raises(ValueError):
        resolve_solution(6, 3, "hexagon")


def _config(tmp_path, **kw):
    base = dict(m=6, N=1, r_star=20.0, T=81, mu0=0.3, gamma=1.6, a=[0.0, 0.0], steps=3, step_size=0.05)
    base.update(kw)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(base))
    return path


def test_galerkin_solve_and_continue(tmp_path):
    cfg = _config(tmp_path, mu_path=[0.2])
    code, man = run(tmp_path / "s", "galerkin", "solve", "--config", str(cfg))
    assert code == 0
    field = np.loadtxt(tmp_path / "s" / "field_001.csv", delimiter=",", skiprows=1)
    assert field.shape == (81, 3)
    assert man["args"]["config_resolved"]["T"] == 81
    code, man = run(tmp_path / "c", "galerkin", "continue", "--config", str(_config(tmp_path, snapshots=[0.4])))
    assert code == 0
    branch = np.loadtxt(tmp_path / "c" / "branch.csv", delimiter=",", skiprows=1)
    assert branch.shape == (5, 4) and np.all(np.diff(branch[:, 1]) > 0)
    assert (tmp_path / "c" / "snapshot_mu_0.4.csv").exists()


def test_galerkin_toml_config_and_default_T(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('m = 6\nN = 1\nr_star = 10.0\nmu0 = 0.3\na = [0.0, 0.0]\n')
    code, man = run(tmp_path, "galerkin", "solve", "--config", str(path))
    assert code == 0 and man["args"]["config_resolved"]["T"] == 30


def test_galerkin_config_errors(tmp_path):
    code, man = run(tmp_path, "galerkin", "solve", "--config", str(tmp_path / "missing.toml"))
    assert code == 1
    code, man = run(tmp_path, "galerkin", "solve", "--config", str(_config(tmp_path, colour="red")))
    assert code == 1 and "unknown config keys" in man["error"]
    bad = tmp_path / "nokey.json"
    bad.write_text(json.dumps({"m": 6, "N": 1, "r_star": 10.0}))
    assert run(tmp_path, "galerkin", "solve", "--config", str(bad))[0] == 1


def test_solver_failure_exit_code(tmp_path):
    # a seed far from any solution with an unreachable tolerance
    cfg = _config(tmp_path, a=[5.0, 5.0], beta=50.0, tol=1e-30)
    code, man = run(tmp_path, "galerkin", "solve", "--config", str(cfg))
    assert code == 2 and man["error"].startswith(("NoConvergence", "SingularJacobian"))


def test_threads_flag(tmp_path):
    code, man = run(tmp_path, "--threads", "1", "match", "--m", "6", "--N", "1")
    assert code == 0 and man["args"]["threads"] == 1


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "dihedral.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == __version__
