from __future__ import annotations

import json
from dataclasses import replace

import pytest

from wavekin import integrator as it
from wavekin.config import (SHIPPED_CONFIGS, build_problem, config_from_dict, load_json, parse_config,
                            shipped_config_path, theory_params)
from wavekin.errors import ConfigError

MINIMAL = {
    "dispersion": {"form": "power-law", "alpha": 2.0},
    "grid": {"n_cells": 64, "omega_max": 1.0},
    "profile": {"kind": "flat", "lo": 0.0, "hi": 1.0},
}


def with_changes(**blocks):
    raw = json.loads(json.dumps(MINIMAL))
    for name, change in blocks.items():
        raw.setdefault(name, {}).update(change)
    return raw


def test_minimal_parses():
    cfg = config_from_dict(MINIMAL)
    assert cfg.grid.n_cells == 64 and cfg.model.alpha == 2.0
    assert cfg.diagnostics.epsilon == pytest.approx(0.75)
    p = build_problem(cfg)
    assert p.detector is not None and p.detector.C_F == pytest.approx(0.5)
    traj = it.integrate(p.initial, p.table, replace(p.control, t_end=0.0), p.detector)
    assert traj.termination == it.HORIZON


@pytest.mark.parametrize("name", SHIPPED_CONFIGS)
def test_shipped_configs_parse(name):
    cfg = parse_config(shipped_config_path(name))
    assert cfg.source.endswith(f"{name}.json")


def test_unknown_shipped_config():
    with pytest.raises(ConfigError):
        shipped_config_path("nope")


def test_theta_range_rejected():
    with pytest.raises(ConfigError, match="1/100"):
        config_from_dict(with_changes(diagnostics={"theta": 0.5}))


def test_epsilon_outside_window_reports_endpoints():
    with pytest.raises(ConfigError) as err:
        config_from_dict(with_changes(diagnostics={"epsilon": 1.2}))
    assert "(0.5, 1.0)" in str(err.value)
    with pytest.raises(ConfigError) as err:
        config_from_dict(with_changes(dispersion={"alpha": 1.5}, diagnostics={"epsilon": 1.0}))
    assert "1.238095238095238" in str(err.value)


def test_all_violations_collected():
    raw = with_changes(grid={"omega_max": -1.0}, diagnostics={"theta": 0.5, "nu": 0.5})
    raw["bogus"] = 1
    raw["step"] = {"cfl": 3.0, "dt_stuff": 1}
    with pytest.raises(ConfigError) as err:
        config_from_dict(raw)
    msgs = err.value.violations
    for frag in ("bogus", "omega_max", "theta", "nu", "cfl", "dt_stuff"):
        assert any(frag in m for m in msgs), frag


def test_missing_block():
    raw = dict(MINIMAL)
    del raw["grid"]
    with pytest.raises(ConfigError, match="grid"):
        config_from_dict(raw)


def test_json_syntax_error_has_location(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{\n  "grid": {"n_cells": 64,,}\n}\n')
    with pytest.raises(ConfigError, match="line 2"):
        load_json(p)
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.json")


def test_detector_range_checked():
    with pytest.raises(ConfigError, match="n_range"):
        config_from_dict(with_changes(detector={"n_range": [2, 20]}))


def test_bad_dispersion_rejected():
    with pytest.raises(ConfigError, match="beta"):
        config_from_dict(with_changes(dispersion={"alpha": 1.5, "beta": 0.9}))


def test_theory_params_defaults():
    cfg = parse_config(shipped_config_path("positive_control"))
    tp = theory_params(cfg, 1.0)
    assert tp.spec.R == pytest.approx(cfg.grid.omega_max / 2)
    assert tp.spec.N == 10
    assert tp.supersolution_level == 6
    assert tp.growth.epsilon == pytest.approx(1.3)
