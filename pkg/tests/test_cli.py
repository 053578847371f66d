import json
from pathlib import Path

import pytest

from openbilliard.cli import main

CONFIGS = Path(__file__).parent.parent / "configs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_lyapunov_two_spheres(capsys):
    code, out, _ = run(capsys, "lyapunov", CONFIGS / "two_spheres.json")
    assert code == 0
    assert "lambda1 = 1.762747" in out
    assert "bracket [1.609438, 1.791759]" in out


def test_check_collinear_exits_one(capsys):
    code, out, _ = run(capsys, "check", CONFIGS / "collinear.json")
    assert code == 1
    assert "hull of obstacles 1,3 meets obstacle 2" in out


def test_check_reports_bounds(capsys):
    code, out, _ = run(capsys, "check", CONFIGS / "equilateral.json")
    assert code == 0 and "condition (H) holds" in out and "lambda1 bracket" in out


def test_other_commands_refuse_collinear(capsys):
    code, _, err = run(capsys, "orbit", CONFIGS / "collinear.json")
    assert code == 1 and "violated" in err


def test_sweep_writes_csv_and_svg(capsys, tmp_path):
    csv, svg = tmp_path / "s.csv", tmp_path / "s.svg"
    code, out, _ = run(capsys, "sweep", CONFIGS / "radius_family.json", "-m", 200, "--csv", csv, "--svg", svg)
    assert code == 0
    assert csv.read_text().splitlines()[0] == "alpha,lambda1,lower,upper,fd_deriv,F_m"
    assert len(csv.read_text().splitlines()) == 6
    assert "<polyline" in svg.read_text()
    assert "continuity modulus" in out


def test_sweep_is_byte_identical(capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)           # the config's default svg path is relative
    for k in range(2):
        run(capsys, "sweep", CONFIGS / "radius_family.json", "-m", 100, "--csv", tmp_path / f"{k}.csv")
    assert (tmp_path / "0.csv").read_bytes() == (tmp_path / "1.csv").read_bytes()


def test_derivative_table(capsys, tmp_path):
    code, out, _ = run(capsys, "derivative", CONFIGS / "radius_family.json", "--json", tmp_path / "d.json")
    assert code == 0 and "Richardson limit" in out
    data = json.loads((tmp_path / "d.json").read_text())
    assert data["gap"] < 1e-4 and data["monotone"]


def test_orbit_and_trace(capsys, tmp_path):
    code, out, _ = run(capsys, "orbit", CONFIGS / "equilateral.json")
    assert code == 0 and "reflection residual" in out
    code, out, _ = run(capsys, "trace", CONFIGS / "equilateral.json", "-m", 40, "--dps", 80,
                       "--csv", tmp_path / "t.csv")
    assert code == 0 and "escaped" not in out
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 41


def test_lyapunov_csv(capsys, tmp_path):
    path = tmp_path / "l.csv"
    code, _, _ = run(capsys, "lyapunov", CONFIGS / "asymmetric.json", "-m", 50, "--no-oracle", "--csv", path)
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "bounce,obstacle,d_j,cos_phi_j,ell_j,log_factor,partial_lambda1" and len(lines) == 51


def test_malformed_config_exits_one(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": "1", "dimension": 3, "obstacles": [}')
    code, _, err = run(capsys, "check", bad)
    assert code == 1 and "line 1" in err
    raw = json.loads((CONFIGS / "two_spheres.json").read_text())
    raw["coding"] = [1, 1]
    bad.write_text(json.dumps(raw))
    code, _, err = run(capsys, "orbit", bad)
    assert code == 1 and "coding" in err


def test_missing_config_exits_one(capsys, tmp_path):
    code, _, _ = run(capsys, "check", tmp_path / "missing.json")
    assert code == 1


def test_sweep_needs_grid(capsys):
    code, _, err = run(capsys, "sweep", CONFIGS / "two_spheres.json")
    assert code == 1 and "alpha_grid" in err


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        main(["launch"])
