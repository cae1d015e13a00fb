"""Command-line front end: schemas, determinism, overrides and exit codes."""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from hardwall.cli import (
    DIST_COLUMNS,
    ENV_PREFIX,
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_SELFTEST,
    MGF_COLUMNS,
    MOMENT_COLUMNS,
    load_config,
    main,
)
from hardwall.errors import ConfigError


def _read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _write_ini(path, text):
    path.write_text(text)
    return str(path)


ZERO_U = """
[grid]
m = 1
t = 1.0,0.5
u = 0,0
"""


def test_mgf_schema_and_manifest(tmp_path):
    assert main(["mgf", "--out", str(tmp_path), "--n-list", "200,400,800"]) == EXIT_OK
    header, rows = _read(tmp_path / "mgf.csv")
    assert tuple(header) == MGF_COLUMNS
    assert [int(r[0]) for r in rows] == [200, 400, 800]
    manifest = json.loads((tmp_path / "mgf_manifest.json").read_text())
    assert manifest["schema_version"] == 1
    assert set(manifest["constants"]) == {"C1", "C2", "C3", "C4", "ln_Q"}
    assert manifest["config"]["model"] == {"b": 1.0, "alpha": 0.0, "rho1": 0.6, "rho2": 0.8}
    assert "mgf.csv" in manifest["outputs"]
    for r in rows:
        exact, asym, err = float(r[1]), float(r[2]), float(r[3])
        assert err == pytest.approx(abs(exact - asym), abs=1e-15)


def test_csv_uses_crlf_line_endings(tmp_path):
    main(["mgf", "--out", str(tmp_path), "--n-list", "50"])
    assert (tmp_path / "mgf.csv").read_bytes().count(b"\r\n") == 2


def test_zero_exponents_give_zero_columns(tmp_path):
    cfg = _write_ini(tmp_path / "zero.ini", ZERO_U)
    assert main(["mgf", "--config", cfg, "--out", str(tmp_path), "--n-list", "10,100"]) == EXIT_OK
    _, rows = _read(tmp_path / "mgf.csv")
    assert all(float(v) == 0.0 for r in rows for v in r[1:])


def test_manifest_replay_reproduces_csv(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["mgf", "--out", str(first), "--n-list", "100,300", "--threads", "2"]) == EXIT_OK
    manifest = first / "mgf_manifest.json"
    assert main(["mgf", "--config", str(manifest), "--out", str(second)]) == EXIT_OK
    assert (first / "mgf.csv").read_bytes() == (second / "mgf.csv").read_bytes()
    a = json.loads(manifest.read_text())
    b = json.loads((second / "mgf_manifest.json").read_text())
    assert a["config"] == b["config"] and a["outputs"] == b["outputs"]


def test_moments_rows(tmp_path):
    assert main(["moments", "--out", str(tmp_path), "--n-list", "100,1000"]) == EXIT_OK
    header, rows = _read(tmp_path / "moments.csv")
    assert tuple(header) == MOMENT_COLUMNS
    # two means and three covariances per n
    assert len(rows) == 2 * 5
    for r in rows:
        assert float(r[7]) == pytest.approx(float(r[4]) - float(r[5]), abs=1e-12)


def test_moments_cross_covariance_on_the_wall(tmp_path):
    cfg = _write_ini(tmp_path / "wall.ini", "[grid]\nm = 1\nt = 0,0\nu = 0,0\n")
    assert main(["moments", "--config", cfg, "--out", str(tmp_path), "--n-list", "2000,8000"]) == EXIT_OK
    _, rows = _read(tmp_path / "moments.csv")
    cross = [r for r in rows if r[1] == "cov" and r[2] == "1" and r[3] == "2"]
    L = np.log(0.8 / 0.6)
    # with both radii on the wall the oscillation is negligible and the constant is 1/(2L)
    assert float(cross[1][5]) == pytest.approx(1 / (2 * L), abs=1e-9)
    assert abs(float(cross[1][7])) < 0.01
    assert abs(float(cross[1][7])) < abs(float(cross[0][7])) / 3


def test_dist_pmfs_and_total_variation(tmp_path):
    assert main(["dist", "--out", str(tmp_path), "--n-list", "64,512,4096"]) == EXIT_OK
    header, rows = _read(tmp_path / "dist.csv")
    assert tuple(header) == DIST_COLUMNS
    tv = {}
    for n in (64, 512, 4096):
        sub = [r for r in rows if int(r[0]) == n]
        assert sum(float(r[3]) for r in sub) == pytest.approx(1.0, abs=1e-9)
        assert sum(float(r[4]) for r in sub) == pytest.approx(1.0, abs=1e-9)
        tv[n] = float(sub[0][5])
    assert tv[64] > tv[512] > tv[4096]
    assert tv[4096] < 0.05


@pytest.mark.parametrize("b", ["0.5", "1.0", "2.0"])
def test_sample_outputs(tmp_path, b):
    edge = float(b) ** (-1 / (2 * float(b)))
    ini = f"[model]\nb = {b}\nrho1 = {0.6 * edge!r}\nrho2 = {0.8 * edge!r}\n"
    cfg = _write_ini(tmp_path / "fig.ini", ini)
    args = ["sample", "--config", cfg, "--n-list", "4096", "--num-samples", "50", "--seed", "3"]
    assert main(args + ["--out", str(tmp_path / "x")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "y")]) == EXIT_OK
    for name in ("counts_n4096.csv", "points_n4096.csv"):
        assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()
    header, rows = _read(tmp_path / "x" / "counts_n4096.csv")
    assert header == ["N_1", "N_2"] and len(rows) == 50
    counts = np.array(rows, dtype=int)
    assert np.all(np.diff(counts, axis=1) >= 0)
    header, rows = _read(tmp_path / "x" / "points_n4096.csv")
    assert header == ["x", "y"] and len(rows) == 4096
    manifest = json.loads((tmp_path / "x" / "sample_manifest.json").read_text())
    assert manifest["records"][0]["points_in_gap"] == 0
    assert manifest["config"]["run"]["seed"] == 3


def test_environment_override(monkeypatch, tmp_path):
    monkeypatch.setenv(f"{ENV_PREFIX}MODEL_RHO1", "0.55")
    monkeypatch.setenv(f"{ENV_PREFIX}RUN_N_LIST", "20,40")
    cfg = load_config()
    assert cfg.model.rho1 == 0.55 and cfg.n_list == (20, 40)
    # flags win over the environment
    assert load_config(overrides={("run", "n_list"): "7"}).n_list == (7,)


def test_config_errors(tmp_path, monkeypatch):
    with pytest.raises(ConfigError):
        load_config(_write_ini(tmp_path / "a.ini", "[model]\nbeta = 1\n"))
    with pytest.raises(ConfigError):
        load_config(_write_ini(tmp_path / "b.ini", "[extra]\nx = 1\n"))
    with pytest.raises(ConfigError):
        load_config(_write_ini(tmp_path / "c.ini", "[model]\nrho1 = 0.9\n"))
    with pytest.raises(ConfigError):
        load_config(overrides={("run", "n_list"): "5,5"})
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.ini"))
    monkeypatch.setenv(f"{ENV_PREFIX}GRID_T", "1,x")
    with pytest.raises(ConfigError):
        load_config()


def test_exit_codes(tmp_path, monkeypatch, capsys):
    bad = _write_ini(tmp_path / "bad.ini", "[model]\nrho1 = 0.9\n")
    assert main(["mgf", "--config", bad, "--out", str(tmp_path)]) == EXIT_CONFIG
    monkeypatch.setenv(f"{ENV_PREFIX}MODEL_RHO1", "0.9")
    assert main(["mgf", "--out", str(tmp_path)]) == EXIT_CONFIG
    monkeypatch.delenv(f"{ENV_PREFIX}MODEL_RHO1")
    # n must exceed every inner t
    assert main(["mgf", "--out", str(tmp_path), "--n-list", "1"]) == EXIT_NUMERIC
    assert "numeric failure" in capsys.readouterr().err


def test_selftest_passes_and_reports_the_constant(tmp_path, capsys):
    assert main(["selftest", "--out", str(tmp_path), "--n-list", "200"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "I_constant" in text and "FAIL" not in text
    records = json.loads((tmp_path / "selftest_manifest.json").read_text())["records"]
    assert all(r["passed"] for r in records)


def test_selftest_detects_injected_failure(capsys):
    assert main(["selftest", "--n-list", "200", "--tolerance-scale", "0"]) == EXIT_SELFTEST
    assert "FAIL" in capsys.readouterr().out


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hardwall", "mgf", "--out", str(tmp_path),
                           "--n-list", "20"], capture_output=True, text=True)
    assert proc.returncode == EXIT_OK
    assert (tmp_path / "mgf.csv").is_file()
