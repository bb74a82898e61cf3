from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wavekin import collision
from wavekin.dispersion import DispersionModel
from wavekin.spectrum import Grid

settings.register_profile("wavekin", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("wavekin")

ALPHAS = (2.0, 1.5)


@pytest.fixture(params=ALPHAS, ids=lambda a: f"alpha={a}")
def model(request):
    return DispersionModel.power_law(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def table_for(n: int, model, omega_max: float = 1.0):
    grid = Grid.from_omega_max(n, omega_max)
    return grid, collision.build_kernel_table(grid, model)
