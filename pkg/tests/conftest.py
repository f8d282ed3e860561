"""Test fixtures for the raman-memory tests."""

import pytest

from raman_memory.config import RunConfig, load_run_config
from raman_memory.grid import make_grid
from raman_memory.modes import decompose
from raman_memory.propagator import ControlField


@pytest.fixture
def grid_c2():
    """Midpoint grid with 200 nodes on [0, 2]."""
    return make_grid(200, 2.0)


@pytest.fixture
def modes_c2():
    """Ten leading memory modes at C = 2 on a 200-node grid."""
    return decompose(2.0, 200, 10)


@pytest.fixture
def cw_control():
    """Continuous-wave control at C = 2."""
    return ControlField.constant(2.0, n=201)


@pytest.fixture
def gaussian_control():
    """Gaussian control pulse at C = 2 centred in the window."""
    return ControlField.gaussian(2.0, center=0.5, width=0.15, n=201)


@pytest.fixture
def small_config(tmp_path) -> RunConfig:
    """Run configuration with coarse meshes and short sweeps, writing into tmp_path."""
    return load_run_config(
        overrides={
            "output_dir": str(tmp_path / "results"),
            "modes": {"n": 60, "n_modes": 3, "couplings": {"start": 0.5, "stop": 2.0, "step": 0.5}},
            "readin": {"n": 100, "n_modes": 5, "n_tau": 80, "n_z": 80},
            "retrieval": {"n_readout": 60, "n_modes": 5, "couplings": {"start": 1.0, "stop": 2.0, "step": 1.0}, "readout_couplings": {"start": 1.0, "stop": 3.0, "step": 1.0}},
            "transverse": {"n_radial": 80, "n_modes": 4},
        }
    )
