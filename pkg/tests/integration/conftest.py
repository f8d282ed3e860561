"""Fixtures for end-to-end runs of the command line."""

import json

import pytest
import yaml


@pytest.fixture
def coarse_config_file(tmp_path):
    """YAML run configuration with coarse meshes and short sweeps."""
    document = {
        "modes": {"n": 60, "n_modes": 3, "couplings": {"start": 0.5, "stop": 2.0, "step": 0.5}, "dump_couplings": [1.0, 2.0]},
        "readin": {"n": 100, "n_modes": 5, "n_tau": 80, "n_z": 80},
        "retrieval": {
            "n_readout": 60,
            "n_modes": 5,
            "couplings": {"start": 1.0, "stop": 2.0, "step": 1.0},
            "readout_couplings": {"start": 1.0, "stop": 3.0, "step": 1.0},
        },
        "transverse": {"n_radial": 80, "n_modes": 4},
    }
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(document))
    return path


@pytest.fixture
def stdout_document(capsys):
    """Parse the JSON status line printed by the last command."""

    def read() -> dict:
        return json.loads(capsys.readouterr().out.strip().splitlines()[-1])

    return read
