from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavekin.dispersion import DispersionModel, validate_assumptions
from wavekin.errors import ConfigError, DomainError, RangeError

P2 = DispersionModel.power_law(2.0)
P15 = DispersionModel.power_law(1.5)


@pytest.mark.parametrize("m, r, w", [(P2, 2.0, 4.0), (P15, 0.0, 0.0), (P15, 4.0, 8.0)])
def test_omega_of_k_values(m, r, w):
    assert m.omega_of_k(r) == pytest.approx(w, rel=1e-15)


@pytest.mark.parametrize("m, w, r", [(P2, 9.0, 3.0), (P2, 0.0, 0.0), (P15, 8.0, 4.0)])
def test_k_of_omega_values(m, w, r):
    assert m.k_of_omega(w) == pytest.approx(r, rel=1e-14)


def test_mho_values():
    assert np.all(P2.mho(np.array([0.0, 0.3, 7.0, 1e4])) == 0.5)
    assert P15.mho(1.0) == pytest.approx(2 / 3, rel=1e-15)
    assert P15.mho(8.0) == pytest.approx(4 / 3, rel=1e-14)


def test_f_F_weight_values():
    assert P2.f_F_weight(4.0) == pytest.approx(1.0, rel=1e-15)
    assert P2.f_F_weight(0.0) == 0.0
    assert P15.f_F_weight(8.0) == pytest.approx(16 / 3, rel=1e-14)


def test_negative_inputs_rejected():
    with pytest.raises(DomainError):
        P2.omega_of_k(-1.0)
    with pytest.raises(DomainError):
        P15.k_of_omega(-0.5)
    with pytest.raises(DomainError):
        P15.mho(np.array([1.0, -1.0]))


def test_round_trip_power_law(rng):
    for m in (P2, P15):
        w = rng.uniform(0, 1e4, 1000)
        back = m.omega_of_k(m.k_of_omega(w))
        assert np.all(np.abs(back - w) <= 1e-12 * np.maximum(w, 1.0))


def test_mho_monotone(rng):
    for m in (P2, P15):
        w = np.sort(rng.uniform(0, 100, 500))
        mh = m.mho(w)
        assert np.all(mh[:-1] <= mh[1:] + 1e-14)


def test_validation_reports():
    assert validate_assumptions(P2).passed
    assert validate_assumptions(DispersionModel.power_law(2.0, C_omega=1.0, beta=0.0, C_mho_check=0.5)).passed
    assert validate_assumptions(DispersionModel.power_law(1.5, beta=1 / 3, C_mho_check=2 / 3)).passed
    rep = validate_assumptions(DispersionModel.power_law(1.5, beta=0.9))
    assert not rep.passed
    assert [c.name for c in rep.failures()] == ["beta"]


def test_validation_sample_count():
    with pytest.raises(DomainError):
        validate_assumptions(P2, sample_count=1)


def _table_model(alpha=1.5, n=200, r_max=50.0):
    r = np.linspace(0.0, r_max, n)
    return DispersionModel.table(r, r**alpha, alpha)


def test_table_matches_power_law():
    tm = _table_model()
    w = np.linspace(1.0, 100.0, 50)
    assert np.allclose(tm.k_of_omega(w), P15.k_of_omega(w), rtol=1e-4)
    # PCHIP slopes are only approximately C1-accurate, so mho agrees to about 1%
    assert np.allclose(tm.mho(w), P15.mho(w), rtol=1e-2)
    back = tm.omega_of_k(tm.k_of_omega(w))
    assert np.all(np.abs(back - w) <= 1e-12 * np.maximum(w, 1.0))


def test_table_range_and_shape_errors():
    tm = _table_model(r_max=2.0)
    with pytest.raises(RangeError):
        tm.k_of_omega(100.0)
    with pytest.raises(RangeError):
        tm.omega_of_k(3.0)
    with pytest.raises(ConfigError):
        DispersionModel.table([0, 1, 2], [0, 1, 4], 2.0)
    with pytest.raises(ConfigError):
        DispersionModel.table([0, 1, 1, 2], [0, 1, 2, 4], 2.0)


def test_nonmonotone_table_is_a_validation_failure():
    r = np.linspace(0, 4, 20)
    w = r**2
    w[10] = w[9] - 0.1
    tm = DispersionModel.table(r, w, 2.0)
    rep = validate_assumptions(tm)
    assert not rep.passed
    assert "table omega samples strictly increasing" in [c.name for c in rep.failures()]


@given(st.floats(1.05, 2.0), st.floats(1e-6, 1e3))
def test_power_law_properties(alpha, w):
    m = DispersionModel.power_law(alpha)
    r = m.k_of_omega(w)
    assert m.omega_of_k(r) == pytest.approx(w, rel=1e-12)
    assert m.mho(w) == pytest.approx(w ** ((2 - alpha) / alpha) / alpha, rel=1e-12)
    assert m.f_F_weight(w) == pytest.approx(r * m.mho(w), rel=1e-14)
