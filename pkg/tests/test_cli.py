import json
import math
import subprocess
import sys

import numpy as np
import pytest

from angval.cli import load_matrix, main, save_matrix


def write_config(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def value_from(capsys):
    out = capsys.readouterr().out
    for line in reversed(out.strip().splitlines()):
        if line.startswith("value = "):
            return float(line.split("=", 1)[1])
    raise AssertionError("no value line in output:\n" + out)


def csv_rows(text):
    lines = text.strip().splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


@pytest.fixture
def planar(tmp_path):
    v = tmp_path / "v.csv"
    w = tmp_path / "w.csv"
    save_matrix(v, np.array([[1.0], [0.0]]))
    save_matrix(w, np.array([[math.cos(0.3)], [math.sin(0.3)]]))
    return str(v), str(w)


def test_matrix_roundtrip(tmp_path):
    m = np.arange(6.0).reshape(3, 2) / 7.0
    path = tmp_path / "m.csv"
    save_matrix(path, m)
    assert path.read_text().startswith("# 3 2\n")
    assert np.array_equal(load_matrix(path), m)


def test_angles_identical_files(tmp_path, capsys):
    p = tmp_path / "v.csv"
    save_matrix(p, np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
    assert main(["angles", str(p), str(p)]) == 0
    headers, rows = csv_rows(capsys.readouterr().out)
    assert headers == ["j", "phi_j", "cos", "sin"]
    assert len(rows) == 2
    for j, row in enumerate(rows):
        assert row[0] == str(j + 1)
        assert float(row[1]) == 0.0
        assert float(row[2]) == 1.0 and float(row[3]) == 0.0


def test_angles_planar_fixture(planar, capsys):
    v, w = planar
    assert main(["angles", v, w]) == 0
    _, rows = csv_rows(capsys.readouterr().out)
    assert abs(float(rows[0][1]) - 0.3) < 1e-12


def test_angles_orthogonal_degrees(tmp_path, capsys):
    v = tmp_path / "v.csv"
    w = tmp_path / "w.csv"
    save_matrix(v, np.array([[1.0], [0.0]]))
    save_matrix(w, np.array([[0.0], [1.0]]))
    assert main(["angles", str(v), str(w), "--degrees"]) == 0
    _, rows = csv_rows(capsys.readouterr().out)
    assert abs(float(rows[0][1]) - 90.0) < 1e-9
    assert abs(float(rows[0][2])) < 1e-15 and abs(float(rows[0][3]) - 1.0) < 1e-15


def test_angles_out_files(planar, tmp_path, capsys):
    v, w = planar
    out = tmp_path / "angles.csv"
    assert main(["angles", v, w, "--out", str(out)]) == 0
    assert "wrote" in capsys.readouterr().out
    headers, rows = csv_rows(out.read_text())
    assert headers == ["j", "phi_j", "cos", "sin"] and len(rows) == 1
    meta = json.loads((tmp_path / "angles.csv.meta.json").read_text())
    assert meta["command"] == "angles" and meta["seed"] == 0


def test_angles_dimension_mismatch_is_exit_2(tmp_path, capsys):
    v = tmp_path / "v.csv"
    w = tmp_path / "w.csv"
    save_matrix(v, np.eye(4, 1))
    save_matrix(w, np.eye(5, 1))
    assert main(["angles", str(v), str(w)]) == 2
    assert "error" in capsys.readouterr().err


def test_angles_rank_deficiency_is_exit_3(tmp_path, capsys):
    v = tmp_path / "v.csv"
    m = np.ones((4, 2))
    save_matrix(v, m)
    assert main(["angles", str(v), str(v)]) == 3
    assert "error" in capsys.readouterr().err


def test_malformed_matrix_header_is_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1.0,2.0\n3.0,4.0\n")
    good = tmp_path / "good.csv"
    save_matrix(good, np.eye(2))
    assert main(["angles", str(bad), str(good)]) == 2
    capsys.readouterr()


def test_metrics_identities(tmp_path, capsys):
    rng = np.random.default_rng(12)
    v = tmp_path / "v.csv"
    w = tmp_path / "w.csv"
    save_matrix(v, rng.standard_normal((5, 2)))
    save_matrix(w, rng.standard_normal((5, 2)))
    assert main(["metrics", str(v), str(w)]) == 0
    headers, rows = csv_rows(capsys.readouterr().out)
    assert headers == ["metric", "value"]
    vals = {r[0]: float(r[1]) for r in rows}
    assert set(vals) == {"d1", "d2", "dF", "dsigma"}
    assert abs(vals["d2"] - math.sin(vals["d1"])) < 1e-12
    assert abs(vals["dsigma"] - 2.0 * math.sin(vals["d1"] / 2.0)) < 1e-12


def test_derivative_unit_rotation(tmp_path, capsys):
    w = tmp_path / "w.csv"
    wd = tmp_path / "wd.csv"
    save_matrix(w, np.array([[1.0], [0.0]]))
    save_matrix(wd, np.array([[0.0], [1.0]]))
    assert main(["derivative", str(w), str(wd)]) == 0
    assert abs(value_from(capsys) - 1.0) < 1e-12


def test_discrete_identity_is_zero(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        "d.json",
        {
            "system": {"kind": "constant", "matrix": [[1.0, 0.0], [0.0, 1.0]]},
            "s": 1,
            "horizon": 64,
            "search": {"candidates": 3, "refine_rounds": 1},
        },
    )
    assert main(["discrete", "--config", cfg]) == 0
    assert abs(value_from(capsys)) < 1e-12


def test_discrete_budget_is_exit_4(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        "d.json",
        {
            "system": {"kind": "planar_rotation", "rho": 0.5, "phi": 0.3},
            "horizon": 10**9,
        },
    )
    assert main(["discrete", "--config", cfg]) == 4
    assert "error" in capsys.readouterr().err


def test_continuous_model_recovers_omega(tmp_path, capsys):
    horizon = 50.0 * math.pi
    cfg = write_config(
        tmp_path,
        "c.json",
        {
            "system": {"kind": "model2d", "rho": 1.0 / 3.0, "omega": 1.0},
            "s": 1,
            "horizon": horizon,
            "step": 5e-3,
            "search": {"candidates": 2, "refine_rounds": 0, "sample_times": [horizon]},
        },
    )
    assert main(["continuous", "--config", cfg]) == 0
    assert abs(value_from(capsys) - 1.0) < 1e-3


def test_autonomous_headline_number(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        "a.json",
        {
            "blocks": [
                {"beta": 0.0, "omega": 1.0, "rho": 1.0 / 3.0},
                {"beta": -1.0, "omega": 1.0 / math.sqrt(2.0), "rho": 0.25},
            ],
            "s": 2,
        },
    )
    assert main(["autonomous", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "1+2" in out
    val = [float(l.split("=")[1]) for l in out.splitlines() if l.startswith("value =")][0]
    assert abs(val - 1.2693394) < 1e-5


def test_autonomous_resonant_emits_line(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        "r.json",
        {
            "resonant": {"omega1": 1.0, "p": 1, "q": 2, "rho1": 1.0 / 3.0, "rho2": 0.25},
            "quad": {"t_points": 90, "tau_panels": 720},
        },
    )
    out = tmp_path / "line.csv"
    assert main(["autonomous", "--config", cfg, "--out", str(out)]) == 0
    assert value_from(capsys) >= 1.0 - 1e-9
    headers, rows = csv_rows(out.read_text())
    assert headers == ["t", "L"] and len(rows) == 90


def test_autonomous_rational_gate_is_exit_3(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        "g.json",
        {
            "blocks": [
                {"beta": 0.0, "omega": 1.0, "rho": 0.5},
                {"beta": -1.0, "omega": 0.5, "rho": 0.5},
            ],
            "s": 2,
        },
    )
    assert main(["autonomous", "--config", cfg]) == 3
    assert "omega" in capsys.readouterr().err


def test_sweep_csv_and_determinism(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        "s.json",
        {
            "omega1": 1.0,
            "rho1": 1.0 / 3.0,
            "kappa_grid": [0.5, 0.505],
            "rho2_grid": [0.25],
            "quad": {"panels": 512, "t_points": 180, "tau_panels": 720},
        },
    )
    out1 = tmp_path / "s1.csv"
    out2 = tmp_path / "s2.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(out2), "--threads", "3"]) == 0
    capsys.readouterr()
    assert out1.read_bytes() == out2.read_bytes()
    headers, rows = csv_rows(out1.read_text())
    assert headers == ["kappa", "rho2", "tag", "p", "q", "value", "t_argmax", "err_estimate"]
    rational = rows[0]
    assert rational[2] == "rational" and rational[3] == "1" and rational[4] == "2"
    assert rational[6] != ""
    irrational = rows[1]
    assert irrational[2] == "irrational" and irrational[3] == "" and irrational[4] == ""
    assert irrational[6] == ""
    meta = json.loads((tmp_path / "s1.csv.meta.json").read_text())
    assert meta["config"]["kappa_grid"] == [0.5, 0.505]
    assert meta["cells"] == 2


def test_oracle_birkhoff_rotation(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        "o.json",
        {
            "kind": "birkhoff",
            "time": "discrete",
            "system": {"kind": "planar_rotation", "rho": 1.0, "phi": 0.3},
            "v0": [[1.0], [0.0]],
            "horizon": 250,
        },
    )
    assert main(["oracle", "--config", cfg]) == 0
    assert abs(value_from(capsys) - 0.3) < 1e-12


def test_oracle_fd_derivative(tmp_path, capsys):
    w = tmp_path / "w.csv"
    wd = tmp_path / "wd.csv"
    save_matrix(w, np.array([[1.0], [0.0]]))
    save_matrix(wd, np.array([[0.0], [1.0]]))
    cfg = write_config(
        tmp_path, "o.json", {"kind": "fd_derivative", "w": str(w), "wdot": str(wd), "h": 1e-6}
    )
    assert main(["oracle", "--config", cfg]) == 0
    assert abs(value_from(capsys) - 1.0) < 1e-5


def test_missing_config_is_exit_2(capsys):
    assert main(["discrete"]) == 2
    assert "config" in capsys.readouterr().err


def test_unknown_search_key_is_exit_2(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        "d.json",
        {
            "system": {"kind": "constant", "matrix": [[1.0]]},
            "horizon": 10,
            "search": {"candidatez": 3},
        },
    )
    assert main(["discrete", "--config", cfg]) == 2
    capsys.readouterr()


def test_env_threads_fallback(tmp_path, capsys, monkeypatch):
    cfg = write_config(
        tmp_path,
        "s.json",
        {
            "omega1": 1.0,
            "rho1": 0.5,
            "kappa_grid": [0.7],
            "rho2_grid": [0.5],
            "quad": {"panels": 256},
        },
    )
    monkeypatch.setenv("ANGVAL_THREADS", "2")
    assert main(["sweep", "--config", cfg]) == 0
    capsys.readouterr()
    monkeypatch.setenv("ANGVAL_THREADS", "lots")
    assert main(["sweep", "--config", cfg]) == 2
    assert "ANGVAL_THREADS" in capsys.readouterr().err


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "angval.cli", "--version"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("angval ")
