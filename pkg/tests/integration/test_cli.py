"""End-to-end runs of the raman-memory command line on coarse meshes."""

import json
from unittest.mock import patch

import pytest

from raman_memory.cli import run_cli
from raman_memory.verify import check_kernels, check_modes

pytestmark = pytest.mark.integration


def run_in(tmp_path, config_file, *argv) -> int:
    """Run the command line with the coarse configuration into tmp_path/out."""
    return run_cli(["--config", str(config_file), "--output-dir", str(tmp_path / "out"), *argv])


def test_modes_writes_curve_and_mode_tables(tmp_path, coarse_config_file, stdout_document):
    """Test the modes command output set."""
    assert run_in(tmp_path, coarse_config_file, "modes", "--dump-kernels") == 0
    out = tmp_path / "out"
    names = sorted(path.name for path in out.iterdir())
    assert names == [
        "kernel_G0_C1.csv",
        "kernel_G0_C2.csv",
        "kernel_G1_C1.csv",
        "kernel_G1_C2.csv",
        "modes_C1.csv",
        "modes_C2.csv",
        "singular_values.csv",
    ]
    curve = (out / "singular_values.csv").read_text().splitlines()
    assert curve[0].startswith("C,")
    assert len(curve) == 1 + 4 * 3
    document = stdout_document()
    assert document["status"] == "ok"
    assert document["summary"]["failed_couplings"] == []


def test_reruns_are_byte_identical(tmp_path, coarse_config_file):
    """Test that the same configuration reproduces every file exactly."""
    assert run_in(tmp_path, coarse_config_file, "retrieval-map") == 0
    first = {path.name: path.read_bytes() for path in (tmp_path / "out").iterdir()}
    assert run_in(tmp_path, coarse_config_file, "retrieval-map") == 0
    second = {path.name: path.read_bytes() for path in (tmp_path / "out").iterdir()}
    assert first == second
    assert set(first) == {"retrieval_map.csv", "overlaps_C2_Cr2.csv"}


def test_retrieval_map_values(tmp_path, coarse_config_file, stdout_document):
    """Test the map layout and that every cell lies in [0, 1]."""
    assert run_in(tmp_path, coarse_config_file, "retrieval-map") == 0
    lines = (tmp_path / "out" / "retrieval_map.csv").read_text().splitlines()
    assert lines[0] == "C,Cr,N"
    assert len(lines) == 1 + 2 * 3
    assert all(0.0 <= float(line.split(",")[2]) <= 1.0 for line in lines[1:])
    assert stdout_document()["summary"]["cells"] == 6


def test_transverse_json_document(tmp_path, coarse_config_file, stdout_document):
    """Test --json output of the transverse command."""
    assert run_cli(["--config", str(coarse_config_file), "--output-dir", str(tmp_path / "json"), "--json", "transverse"]) == 0
    document = json.loads((tmp_path / "json" / "transverse.json").read_text())
    assert document["command"] == "transverse"
    assert set(document["tables"]) == {"transverse_modes", "transverse_sigmas"}
    assert len(document["tables"]["transverse_sigmas"]["rows"]) == 4
    assert 0.7 < document["summary"]["sigma_1"] < 0.85
    assert stdout_document()["files"] == [str(tmp_path / "json" / "transverse.json")]


@pytest.mark.slow
def test_readin_stores_the_photon(tmp_path, coarse_config_file, stdout_document):
    """Test the readin command on a moderate mesh."""
    assert run_in(tmp_path, coarse_config_file, "readin", "--n-tau", "200", "--n-z", "200") == 0
    summary = stdout_document()["summary"]
    assert summary["overlap"] >= 0.98
    assert summary["efficiency"] > 0.85
    assert summary["energy_error"] < 1e-3
    assert (tmp_path / "out" / "control_shape.csv").exists()
    assert (tmp_path / "out" / "readin_intensity.csv").exists()
    assert not (tmp_path / "out" / "readin_field.csv").exists()


def test_readin_field_dump(tmp_path, coarse_config_file):
    """Test that --dump-field adds the cell-centred signal and spin-wave table."""
    assert run_in(tmp_path, coarse_config_file, "readin", "--dump-field", "--overlap-threshold", "0.5") == 0
    lines = (tmp_path / "out" / "readin_field.csv").read_text().splitlines()
    assert lines[0] == "tau,z,re_A,im_A,re_B,im_B"
    assert len(lines) == 1 + 80 * 80


def test_bad_configuration_exits_with_status_one(tmp_path, stdout_document):
    """Test that an invalid YAML value fails validation with exit status 1."""
    path = tmp_path / "bad.yaml"
    path.write_text("modes:\n  n: 0\n")
    assert run_in(tmp_path, path, "modes") == 1
    document = stdout_document()
    assert document["exit_code"] == 1
    assert "modes.n" in document["error"]["details"]["fields"]
    assert not (tmp_path / "out").exists()


def test_threshold_failure_exits_with_status_three(tmp_path, coarse_config_file, stdout_document):
    """Test that verify writes its report and exits 3 when a threshold is missed."""
    coarse_config_file.write_text(coarse_config_file.read_text() + "thresholds:\n  dominant_lambda: 1.5\n")
    with patch("raman_memory.verify.CHECK_GROUPS", (check_modes, check_kernels)):
        assert run_in(tmp_path, coarse_config_file, "verify", "--n", "60") == 3
    report = json.loads((tmp_path / "out" / "verify_report.json").read_text())
    assert report["status"] == "failed"
    assert "dominant_lambda" in report["failed"]
    assert stdout_document()["error"]["code"] == "THRESHOLD_ERROR"
