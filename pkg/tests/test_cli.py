from __future__ import annotations

import json

import pytest

from wavekin.cli import main
from wavekin.config import shipped_config_path
from wavekin.spectrum import read_spectra_csv


def write_config(tmp_path, **step):
    raw = {
        "dispersion": {"form": "power-law", "alpha": 1.5},
        "grid": {"n_cells": 32, "omega_max": 1.0},
        "profile": {"kind": "gaussian-bump", "center": 0.5, "width": 0.1, "mass": 1.0},
        "step": {"t_end": 0.0, **step},
        "diagnostics": {"record_dissipation": False},
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(raw))
    return p


def test_run_t_end_zero(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--no-plots"]) == 0
    snaps = read_spectra_csv(out / "spectra.csv")
    assert len(snaps) == 1 and snaps[0].t == 0.0
    summary = json.loads((out / "run_summary.json").read_text())
    assert summary["samples"] == 1 and summary["termination"] == "horizon"


def test_run_is_byte_reproducible(tmp_path):
    cfg = write_config(tmp_path, t_end=0.5, record_dt=0.05, dt_max=0.05)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg), "--out", str(a), "--no-plots"]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(b), "--no-plots"]) == 0
    for name in ("spectra.csv", "diagnostics.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert len(read_spectra_csv(a / "spectra.csv")) == 11


def test_run_writes_figures(tmp_path, capsys):
    cfg = write_config(tmp_path, t_end=0.1, record_dt=0.05, dt_max=0.05)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "spectra.png").stat().st_size > 0 and (out / "diagnostics.png").stat().st_size > 0


def test_invalid_config_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    raw = json.loads(shipped_config_path("minimal").read_text())
    raw["diagnostics"] = {"theta": 0.5}
    p.write_text(json.dumps(raw))
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError" and any("theta" in v for v in err["violations"])


def test_diagnose_corrupt_trajectory_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, t_end=0.1, record_dt=0.05, dt_max=0.05)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--no-plots"]) == 0
    path = out / "spectra.csv"
    text = path.read_text()
    path.write_text(text[: len(text) // 2])
    capsys.readouterr()
    assert main(["diagnose", "--trajectory", str(path), "--config", str(cfg), "--no-plots"]) == 2
    assert json.loads(capsys.readouterr().err)["exit_code"] == 2
    assert main(["diagnose", "--trajectory", str(tmp_path / "none.csv"), "--config", str(cfg)]) == 2


def test_diagnose_report(tmp_path, capsys):
    cfg = write_config(tmp_path, t_end=0.2, record_dt=0.05, dt_max=0.05)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--no-plots"]) == 0
    assert main(["diagnose", "--trajectory", str(out / "spectra.csv"), "--config", str(cfg),
                 "--no-plots", "--no-rerun"]) == 0
    rep = json.loads((out / "diagnose_report.json").read_text())
    for key in ("definitions", "invariants", "condensation", "time_sets", "growth_sets", "condensation_bound"):
        assert key in rep
    assert rep["invariants"]["max_rel_mass_drift"] <= 1e-10


def test_verify_exit_codes(tmp_path, capsys):
    cfg = str(shipped_config_path("positive_control"))
    assert main(["verify", "--config", cfg, "--suite", "equilibria", "--suite", "inclusion"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["passed"] and len(doc["suites"]) == 2
    assert main(["verify", "--config", cfg, "--suite", "nope"]) == 1


def test_kernel_check(tmp_path, capsys):
    p = tmp_path / "k.json"
    raw = json.loads(shipped_config_path("minimal").read_text())
    raw["kernel_check"] = {"count": 3}
    p.write_text(json.dumps(raw))
    assert main(["kernel-check", "--config", str(p), "--out", str(tmp_path / "k_report.json")]) == 0
    rep = json.loads((tmp_path / "k_report.json").read_text())
    assert rep["passed"] and len(rep["details"]["rows"]) == 3


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
