from pathlib import Path

import numpy as np
import pytest

from ifr.fda.basis import BasisSpec
from ifr.models.run_models import SIM_CASES, SimConfig
from ifr.services.simulation import generate


@pytest.fixture
def cubic8():
    return BasisSpec.clamped((0.0, 1.0), num_basis=8, order=4)


@pytest.fixture
def grid100():
    return np.linspace(0.0, 1.0, 100)


@pytest.fixture
def small_config():
    return SimConfig(n=40, grid_size=50, num_basis=8, mc=2, mcm_b=4, seed=11)


@pytest.fixture
def sim_data(small_config):
    return generate(small_config, SIM_CASES[1], seed=3)


@pytest.fixture
def write_csv(tmp_path):
    def _write(text: str, name: str = "panel.csv") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
