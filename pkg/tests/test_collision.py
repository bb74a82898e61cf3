from __future__ import annotations

import itertools
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavekin import collision
from wavekin.dispersion import DispersionModel
from wavekin.errors import DomainError, StateError
from wavekin.spectrum import Grid, Spectrum

from conftest import table_for


def lower_half(rng, n):
    F = rng.random(n)
    F[n // 2:] = 0.0
    return F


def test_alpha2_weights_closed_form():
    grid, tab = table_for(16, DispersionModel.power_law(2.0))
    w = grid.centers
    for i, j, k in itertools.product(range(16), repeat=3):
        l = i + j - k
        if 0 <= l < 16:
            expect = min(math.sqrt(w[i]), math.sqrt(w[j]), math.sqrt(w[k]), math.sqrt(w[l])) / 16
            assert tab.weight_at(i, j, k) == pytest.approx(expect, rel=1e-14)


def test_weight_symmetry_and_truncation(model):
    n = 12
    _, tab = table_for(n, model)
    for i, j, k in itertools.product(range(n), repeat=3):
        l = i + j - k
        if 0 <= l < n:
            # the pair swaps reorder a floating-point product, so agree to rounding
            assert tab.weight_at(i, j, k) == pytest.approx(tab.weight_at(j, i, k), rel=1e-14)
            assert tab.weight_at(i, j, k) == pytest.approx(tab.weight_at(i, j, l), rel=1e-14)
            assert tab.weight_at(i, j, k) >= 0
        else:
            assert tab.weight_at(i, j, k) == 0.0


def test_on_the_fly_matches_table(model, rng):
    grid = Grid.from_omega_max(24, 1.0)
    t1 = collision.build_kernel_table(grid, model, mode="table")
    t2 = collision.build_kernel_table(grid, model, mode="on-the-fly")
    F = rng.random(24)
    assert np.array_equal(collision.rhs_array(F, t1), collision.rhs_array(F, t2))


def test_table_fallback_warns(model):
    grid = Grid.from_omega_max(16, 1.0)
    with pytest.warns(RuntimeWarning):
        tab = collision.build_kernel_table(grid, model, mode="table", max_table_bytes=1000)
    assert tab.on_the_fly
    assert collision.build_kernel_table(grid, model, max_table_bytes=1000).on_the_fly
    with pytest.raises(DomainError):
        collision.build_kernel_table(grid, model, mode="sparse")


def test_table_range_check():
    r = np.linspace(0, 2, 50)
    tm = DispersionModel.table(r, r**2, 2.0)
    with pytest.raises(DomainError):
        collision.build_kernel_table(Grid.from_omega_max(8, 10.0), tm)


def test_dump_csv(tmp_path):
    _, tab = table_for(6, DispersionModel.power_law(1.5))
    p = tmp_path / "w.csv"
    tab.dump_csv(p)
    rows = p.read_text().splitlines()
    assert rows[0] == "i,j,k,W"
    i, j, k, W = rows[7].split(",")
    assert float(W) == tab.weight_at(int(i), int(j), int(k))


@pytest.mark.parametrize("n", [8, 32, 64])
def test_equilibria_annihilated(model, n):
    grid, tab = table_for(n, model)
    c = 1.7
    Wmax = float(np.max(tab.W))
    for F in (c * tab.weight, c * tab.weight / grid.centers):
        r = collision.rhs_array(F, tab)
        scale = np.max(collision.rhs_magnitude(F, tab))
        assert np.max(np.abs(r)) <= 1e-12 * scale
        fmax = np.max(F / tab.weight)
        assert np.max(np.abs(r)) <= 1e-12 * fmax**3 * Wmax


def test_single_cell_oracle():
    m = DispersionModel.power_law(2.0)
    grid, tab = table_for(8, m)
    F = np.zeros(8)
    F[3] = 1.0
    s = Spectrum(grid, F)
    assert np.allclose(collision.collision_rhs(s, tab), collision.brute_force_rhs(s, m), rtol=0, atol=1e-13)


def test_oracle_equivalence(model, rng):
    for n in (4, 8, 16):
        grid, tab = table_for(n, model)
        for _ in range(10):
            s = Spectrum(grid, rng.random(n))
            fast = collision.collision_rhs(s, tab)
            slow = collision.brute_force_rhs(s, model)
            assert np.max(np.abs(fast - slow)) <= 1e-12 * np.max(np.abs(slow))


def test_brute_force_limits_and_zero(model):
    grid = Grid.from_omega_max(8, 1.0)
    assert np.all(collision.brute_force_rhs(Spectrum(grid, np.zeros(8)), model) == 0)
    with pytest.raises(DomainError):
        collision.brute_force_rhs(Spectrum(Grid.from_omega_max(65, 1.0), np.ones(65)), model)


def test_cubic_homogeneity(model, rng):
    grid, tab = table_for(8, model)
    s = Spectrum(grid, rng.random(8))
    r1 = collision.brute_force_rhs(s, model)
    r2 = collision.brute_force_rhs(Spectrum(grid, 2 * s.F), model)
    assert np.allclose(r2, 8 * r1, rtol=1e-13, atol=0)


def test_rhs_input_checks(model):
    grid, tab = table_for(8, model)
    with pytest.raises(StateError):
        collision.collision_rhs(Spectrum(Grid.from_omega_max(9, 1.0), np.ones(9)), tab)


def test_conservation_random(model, rng):
    grid, tab = table_for(32, model)
    w, h = grid.centers, grid.h_grid
    for _ in range(200):
        r = collision.collision_rhs(Spectrum(grid, rng.random(32) * rng.random()), tab)
        assert abs(np.sum(r * h)) <= 1e-12 * np.sum(np.abs(r) * h)
        assert abs(np.sum(r * w * h)) <= 1e-12 * np.sum(np.abs(r) * w * h)


def test_weak_strong_consistency(model, rng):
    grid, tab = table_for(24, model)
    w, h = grid.centers, grid.h_grid
    for deg in range(4):
        for _ in range(5):
            s = Spectrum(grid, rng.random(24))
            coef = rng.normal(size=deg + 1)
            rho = lambda x: np.polyval(coef, x)
            strong = math.fsum(collision.collision_rhs(s, tab) * rho(w) * h)
            weak = collision.weak_rhs(s, tab, rho)
            assert abs(weak - strong) <= 1e-10 * np.max(s.F) ** 3


def test_weak_conservation_and_signs(model, rng):
    grid, tab = table_for(32, model)
    for _ in range(100):
        s = Spectrum(grid, lower_half(rng, 32))
        m = collision.weak_rhs(s, tab, np.ones_like)
        e = collision.weak_rhs(s, tab, lambda x: x)
        scale = collision.weak_rhs(s, tab, np.log1p)
        assert abs(m) <= 1e-12 and abs(e) <= 1e-12
        assert scale <= 1e-12
        for L in (0.05, 0.25, 0.5):
            assert collision.weak_rhs(s, tab, lambda x: np.maximum(L - x, 0.0)) >= -1e-12


def test_truncation_can_flip_log_sign_on_full_support():
    # mass at the top edge loses the partners that would carry it past omega_max
    m = DispersionModel.power_law(1.5)
    grid, tab = table_for(32, m)
    F = np.zeros(32)
    F[-4:] = 1.0
    F[0] = 1.0
    assert collision.weak_rhs(Spectrum(grid, F), tab, np.log1p) > 0


def _dissipation_direct(s, model):
    g = s.grid
    w = g.centers
    n = g.n_cells
    f = s.F / model.f_F_weight(w)
    total = []
    for i, j, k in itertools.product(range(n), repeat=3):
        if w[i] + w[j] - w[k] < 0:
            continue
        lo, mid, hi = sorted((w[i], w[j], w[k]))
        top = hi - lo + mid
        if top > g.omega_max or mid == lo:
            continue
        val = (f[i] * f[j] * f[k] * model.mho(hi) * model.mho(lo) * model.mho(mid) * model.mho(top)
               * model.k_of_omega(lo) * (mid - lo) ** 2 / ((2 * mid - lo) ** 2 + 1))
        total.append(val)
    return math.fsum(total) * g.h_grid**3


def test_dissipation_examples(model):
    grid, tab = table_for(8, model)
    assert collision.dissipation_D(Spectrum(grid, np.zeros(8)), tab) == 0.0
    one = np.zeros(8)
    one[2] = 1.0
    assert collision.dissipation_D(Spectrum(grid, one), tab) == 0.0
    two = np.zeros(8)
    two[1], two[4] = 1.0, 0.5
    s = Spectrum(grid, two)
    assert collision.dissipation_D(s, tab) == pytest.approx(_dissipation_direct(s, model), rel=1e-13)
    assert collision.dissipation_D(s, tab) > 0


def test_rhs_deterministic(model, rng):
    _, tab = table_for(48, model)
    F = rng.random(48)
    a = collision.rhs_array(F, tab)
    b = collision.rhs_array(F.copy(), tab)
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("r", [(1.0, 2.0, 3.0, 4.0), (0.5, 0.5, 0.5, 0.5)])
def test_min_kernel_examples(r):
    res = collision.min_kernel_oracle(*r)
    assert res.converged
    assert res.value == pytest.approx(math.pi / 4 * min(r), rel=1e-2)


def test_min_kernel_general_closed_form():
    r = (1.0, 1.0, 1.0, 5.0)
    assert not collision.admissible_quadruple(r)
    res = collision.min_kernel_oracle(*r)
    assert res.general_closed_form == 0.0
    assert abs(res.value) <= 1e-6 * math.pi / 4 * min(r)
    with pytest.raises(DomainError):
        collision.min_kernel_oracle(1.0, 0.0, 1.0, 1.0)


@given(st.lists(st.floats(0.1, 10.0), min_size=4, max_size=4))
def test_closed_form_reduces_to_min(r):
    if collision.admissible_quadruple(r):
        assert collision.sine_product_closed_form(r) == pytest.approx(math.pi / 4 * min(r), rel=1e-12)


def test_random_admissible_quadruples(rng):
    qs = collision.random_admissible_quadruples(rng, 25)
    assert len(qs) == 25 and all(collision.admissible_quadruple(q) for q in qs)
    assert all(0.1 <= x <= 10 for q in qs for x in q)


_THREAD_PROBE = """
import hashlib, numpy as np
from wavekin import set_threads, collision
from wavekin.dispersion import DispersionModel
from wavekin.spectrum import Grid
set_threads()
g = Grid.from_omega_max(96, 1.0)
for mode in ("table", "on-the-fly"):
    t = collision.build_kernel_table(g, DispersionModel.power_law(1.5), mode=mode)
    F = np.random.default_rng(1).random(96)
    print(hashlib.sha256(collision.rhs_array(F, t).tobytes()).hexdigest())
"""


def test_rhs_independent_of_thread_count():
    out = []
    for n in ("1", "3"):
        env = dict(os.environ, NUMBA_NUM_THREADS="4", WAVEKIN_THREADS=n)
        res = subprocess.run([sys.executable, "-c", _THREAD_PROBE], env=env, capture_output=True, text=True,
                             check=True)
        out.append(res.stdout)
    assert out[0] == out[1] and len(out[0].split()) == 2
