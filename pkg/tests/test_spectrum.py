from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from wavekin.errors import ConfigError, DomainError, StateError
from wavekin.spectrum import (Grid, ProfileSpec, Spectrum, energy, init_from_profile, interval_mass,
                              lyapunov_phi, mass, read_spectra_csv, test_functional as functional,
                              write_spectra_csv)


def test_grid_resonance_exactness():
    g = Grid.from_omega_max(64, 1.0)
    w = g.centers
    i, j, k = 5, 17, 9
    assert w[i] + w[j] == w[k] + w[i + j - k]


def test_grid_validation():
    with pytest.raises(ConfigError):
        Grid(3, 0.1)
    with pytest.raises(ConfigError):
        Grid(8, 0.0)


def test_spectrum_rejects_negative_and_nan():
    g = Grid(4, 0.25)
    with pytest.raises(StateError):
        Spectrum(g, np.array([1.0, -1.0, 0.0, 0.0]))
    with pytest.raises(StateError):
        Spectrum(g, np.array([1.0, np.nan, 0.0, 0.0]))
    with pytest.raises(StateError):
        Spectrum(g, np.zeros(4), condensate=-0.1)


def test_power_profile_cumulative():
    spec = ProfileSpec("power-concentrated", C_ini=1.0, c_ini=1.5, r0=0.25)
    assert spec.cumulative(np.array(0.04)) == pytest.approx(0.008, rel=1e-14)
    g = Grid.from_omega_max(1000, 1.0)
    s = init_from_profile(g, spec)
    assert interval_mass(s, 0.0, 0.04) == pytest.approx(0.008, rel=1e-12)
    assert mass(s) == pytest.approx(0.25**1.5, rel=1e-10)


def test_power_profile_with_tail_mass():
    spec = ProfileSpec("power-concentrated", C_ini=2.0, c_ini=0.5, r0=0.1, tail_amplitude=0.3, tail_scale=0.2)
    g = Grid.from_omega_max(512, 1.0)
    s = init_from_profile(g, spec)
    tail, _ = integrate.quad(lambda x: 0.3 * math.exp(-(x - 0.1) / 0.2), 0.1, 1.0)
    assert mass(s) == pytest.approx(2.0 * 0.1**0.5 + tail, rel=1e-10)


def test_flat_zero_profile():
    s = init_from_profile(Grid(16, 0.1), ProfileSpec("flat", amplitude=0.0))
    assert np.all(s.F == 0) and s.condensate == 0


def test_gaussian_bump_mass():
    spec = ProfileSpec("gaussian-bump", center=0.5, width=0.05, amplitude=2.0)
    s = init_from_profile(Grid.from_omega_max(4096, 1.0), spec)
    quad, _ = integrate.quad(lambda x: 2.0 * math.exp(-0.5 * ((x - 0.5) / 0.05) ** 2), 0.0, 1.0)
    assert mass(s) == pytest.approx(2.0 * 0.05 * math.sqrt(2 * math.pi), abs=1e-6)
    assert mass(s) == pytest.approx(quad, rel=1e-10)


def test_profile_violations():
    with pytest.raises(ConfigError) as exc:
        init_from_profile(Grid(8, 0.1), ProfileSpec("power-concentrated", c_ini=-1.0, r0=2.0))
    assert len(exc.value.violations) == 2
    with pytest.raises(ConfigError):
        init_from_profile(Grid(8, 0.1), ProfileSpec("gaussian-bump", amplitude=-1.0))
    with pytest.raises(ConfigError):
        ProfileSpec("triangle").violations() and init_from_profile(Grid(8, 0.1), ProfileSpec("triangle"))


def test_profile_mass_normalization():
    s = init_from_profile(Grid.from_omega_max(64, 1.0), ProfileSpec("two-bump", center=0.6, center2=0.2, mass=3.0))
    assert mass(s) == pytest.approx(3.0, rel=1e-14)


def test_mass_examples():
    assert mass(Spectrum(Grid(10, 0.1), np.ones(10))) == pytest.approx(1.0, rel=1e-15)
    assert mass(Spectrum(Grid(10, 0.1), np.zeros(10), 0.3)) == 0.3


def test_energy_examples():
    g = Grid(10, 0.1)
    F = np.zeros(10)
    F[3] = 1 / 0.1
    assert energy(Spectrum(g, F)) == pytest.approx(g.centers[3], rel=1e-15)
    assert energy(Spectrum(g, np.zeros(10), 0.7)) == 0.0
    assert energy(Spectrum(Grid(100, 0.01), np.ones(100))) == pytest.approx(0.5, abs=1e-15)


def test_interval_mass_examples():
    s = Spectrum(Grid(10, 0.1), np.ones(10))
    assert interval_mass(s, 0.25, 0.75) == pytest.approx(0.5, rel=1e-14)
    assert interval_mass(Spectrum(Grid(10, 0.1), np.zeros(10), 0.2), 0.0, 0.5) == 0.2
    F = np.zeros(10)
    F[:2] = [2.0, 4.0]
    assert interval_mass(Spectrum(Grid(10, 0.1), F), 0.05, 0.15) == pytest.approx(0.3, rel=1e-14)
    with pytest.raises(DomainError):
        interval_mass(s, 0.5, 0.5)


@given(st.lists(st.floats(0, 10), min_size=8, max_size=8), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_interval_mass_additive(F, x, y, z):
    a, b, c = sorted((x, y, z))
    if not (a < b < c):
        return
    s = Spectrum(Grid(8, 0.125), np.array(F))
    total = interval_mass(s, a, b) + interval_mass(s, b, c)
    assert interval_mass(s, a, c) == pytest.approx(total, abs=1e-14 * max(mass(s), 1.0))


def test_lyapunov_examples():
    assert lyapunov_phi(Spectrum(Grid(8, 0.1), np.zeros(8), 2.0)) == 0.0
    g = Grid(4, 2 * (math.e - 1))  # cell 0 centered at e - 1
    F = np.zeros(4)
    F[0] = 1 / g.h_grid
    assert lyapunov_phi(Spectrum(g, F)) == pytest.approx(1.0, rel=1e-14)


@given(st.lists(st.floats(0, 100), min_size=6, max_size=6))
def test_lyapunov_bounds(F):
    s = Spectrum(Grid(6, 0.3), np.array(F))
    phi = lyapunov_phi(s)
    assert 0 <= phi <= mass(s) * math.log(s.grid.omega_max + 1) * (1 + 1e-12)
    assert (phi == 0) == (mass(s) == 0)


def test_functional_consistency():
    rng = np.random.default_rng(0)
    s = Spectrum(Grid(16, 0.05), rng.random(16), 0.4)
    assert functional(s, lambda w: np.ones_like(w)) == pytest.approx(mass(s), rel=1e-14)
    assert functional(s, lambda w: w) == pytest.approx(energy(s), rel=1e-14)


def test_functional_hat_tail_cell_exact():
    g = Grid(16, 0.1)
    L = g.h_grid / 2
    s = Spectrum(g, np.full(16, 3.0))
    hat = lambda w: np.maximum(L - w, 0.0)
    # the midpoint rule samples only the cell centers, where the hat vanishes
    assert functional(s, hat) == 0.0
    assert functional(s, hat, quadrature="cell-exact") == pytest.approx(L**2 / 2 * 3.0, rel=1e-10)
    with pytest.raises(DomainError):
        functional(s, hat, quadrature="simpson")


def test_csv_round_trip(tmp_path):
    g = Grid.from_omega_max(8, 0.1)
    rng = np.random.default_rng(1)
    snaps = [Spectrum(g, rng.random(8), 0.0, 0.0), Spectrum(g, rng.random(8), 0.25, 0.5)]
    p = tmp_path / "s.csv"
    write_spectra_csv(p, snaps)
    back = read_spectra_csv(p)
    assert len(back) == 2
    for a, b in zip(snaps, back):
        assert a.grid == b.grid and a.t == b.t and a.condensate == b.condensate
        assert np.array_equal(a.F, b.F)


def test_csv_corrupt(tmp_path):
    g = Grid.from_omega_max(8, 1.0)
    p = tmp_path / "s.csv"
    write_spectra_csv(p, [Spectrum(g, np.ones(8))])
    lines = p.read_text().splitlines()
    (tmp_path / "trunc.csv").write_text("\n".join(lines[:5]) + "\n")
    with pytest.raises(StateError):
        read_spectra_csv(tmp_path / "trunc.csv")
    (tmp_path / "junk.csv").write_text(lines[0] + "\n0.0,0,abc,1\n")
    with pytest.raises(StateError):
        read_spectra_csv(tmp_path / "junk.csv")
    (tmp_path / "nohead.csv").write_text("\n".join(lines[1:]) + "\n")
    with pytest.raises(StateError):
        read_spectra_csv(tmp_path / "nohead.csv")
