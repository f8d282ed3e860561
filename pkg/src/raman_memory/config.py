"""Configuration settings for raman-memory.

Process-wide settings come from environment variables and are read once at import time.
Run parameters come from a YAML file validated into RunConfig, with command-line flags
applied on top.

Environment variables:
- RAMAN_MEMORY_OUTPUT_DIR: Directory for result files (default: "results")
- RAMAN_MEMORY_CONFIG: Path to a YAML run configuration (default: None)
- RAMAN_MEMORY_WORKERS: Maximum number of concurrent sweep tasks (default: 4)
- RAMAN_MEMORY_LOG_LEVEL: Root log level (default: "INFO")
"""

import logging
import os
from pathlib import Path
from typing import Any, Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from raman_memory.errors import DomainError

logger = logging.getLogger(__name__)

# Process settings
OUTPUT_DIR = os.environ.get("RAMAN_MEMORY_OUTPUT_DIR", "results")
RUN_CONFIG_PATH = os.environ.get("RAMAN_MEMORY_CONFIG", None)
MAX_WORKERS = max(1, int(os.environ.get("RAMAN_MEMORY_WORKERS", "4")))
LOG_LEVEL = os.environ.get("RAMAN_MEMORY_LOG_LEVEL", "INFO").upper()

# Defaults shared by several commands
DEFAULT_GRID_SIZE = 500
DEFAULT_READOUT_SIZE = 2000
DEFAULT_COUPLING = 2.0
DEFAULT_DURATION = 1.0


class StrictModel(BaseModel):
    """Base for config records: unknown keys are errors, values are immutable."""

    model_config = ConfigDict(extra="forbid", frozen=True)


class SweepRange(StrictModel):
    """Inclusive arithmetic range start, start + step, ..., stop."""

    start: float = Field(gt=0)
    stop: float = Field(gt=0)
    step: float = Field(gt=0)

    @model_validator(mode="after")
    def check_order(self) -> "SweepRange":
        """Reject empty ranges."""
        if self.stop < self.start:
            raise ValueError(f"stop ({self.stop}) must not be below start ({self.start})")
        return self

    def values(self) -> list[float]:
        """Range samples, rounded so the same config always yields the same floats."""
        count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + k * self.step, 10) for k in range(count)]


class ModesConfig(StrictModel):
    """Parameters of the `modes` command."""

    n: int = Field(default=DEFAULT_GRID_SIZE, ge=1)
    n_modes: int = Field(default=5, ge=1)
    couplings: SweepRange = SweepRange(start=0.1, stop=10.0, step=0.1)
    dump_couplings: list[float] = Field(default_factory=lambda: [DEFAULT_COUPLING])
    dump_kernels: bool = False

    @model_validator(mode="after")
    def check_modes(self) -> "ModesConfig":
        """Mode count cannot exceed the grid size."""
        if self.n_modes > self.n:
            raise ValueError(f"n_modes ({self.n_modes}) exceeds grid size n ({self.n})")
        if any(c <= 0 for c in self.dump_couplings):
            raise ValueError("dump_couplings must be positive")
        return self


class ReadinConfig(StrictModel):
    """Parameters of the `readin` command: the Gaussian signal photon and the meshes."""

    c: float = Field(default=DEFAULT_COUPLING, gt=0)
    n: int = Field(default=DEFAULT_GRID_SIZE, ge=2)
    n_modes: int = Field(default=20, ge=1)
    n_tau: int = Field(default=400, ge=2)
    n_z: int = Field(default=400, ge=2)
    sigma: float = Field(default=0.125, gt=0)
    tau0: float = Field(default=0.5 * DEFAULT_DURATION, ge=0)
    duration: float = Field(default=DEFAULT_DURATION, gt=0)
    overlap_threshold: float = Field(default=0.98, gt=0, le=1)
    dump_field: bool = False

    @model_validator(mode="after")
    def check_center(self) -> "ReadinConfig":
        """The photon centre must lie inside the pulse window."""
        if self.tau0 > self.duration:
            raise ValueError(f"tau0 ({self.tau0}) lies beyond duration ({self.duration})")
        return self


class RetrievalConfig(StrictModel):
    """Parameters of the `retrieval-map` command."""

    n_readout: int = Field(default=DEFAULT_READOUT_SIZE, ge=2)
    n_modes: int = Field(default=20, ge=1)
    couplings: SweepRange = SweepRange(start=0.2, stop=6.0, step=0.2)
    readout_couplings: SweepRange = SweepRange(start=0.2, stop=14.0, step=0.2)
    overlap_points: list[tuple[float, float]] = Field(default_factory=lambda: [(DEFAULT_COUPLING, DEFAULT_COUPLING)])


class TransverseConfig(StrictModel):
    """Parameters of the `transverse` command."""

    c: float = Field(default=DEFAULT_COUPLING, gt=0)
    n_radial: int = Field(default=400, ge=2)
    n_modes: int = Field(default=10, ge=1)
    normalization: Literal["flux", "hilbert-schmidt"] = "flux"


class VerifyConfig(StrictModel):
    """Mesh sizes and sample counts used by the `verify` command."""

    n: int = Field(default=DEFAULT_GRID_SIZE, ge=2)
    n_propagation: int = Field(default=400, ge=2)
    n_stokes: int = Field(default=300, ge=2)
    flux_trials: int = Field(default=50, ge=1)
    flux_mesh: int = Field(default=120, ge=2)
    seed: int = 20240611


class ThresholdConfig(StrictModel):
    """Acceptance thresholds; residuals must stay at or below, efficiencies at or above."""

    circle: float = 1e-12
    orthonormality: float = 1e-8
    reconstruction: float = 1e-8
    composition: float = 5e-2
    dominant_lambda: float = 0.95
    monotonicity: float = 1e-6
    unitarity: float = 5e-3
    oracle: float = 1e-3
    flux: float = 1e-3
    symplectic: float = 1e-2
    readin_efficiency: float = 0.9
    energy_split: float = 1e-3
    parseval: float = 1e-6
    retrieval_target: float = 0.95
    retrieval_min_readout: float = 10.0
    ridge_low: float = 1.5
    ridge_high: float = 2.5
    transverse_sigma: float = 0.995
    transverse_sigma_tolerance: float = 0.01
    waist: float = 1.45
    waist_tolerance: float = 0.05


class RunConfig(StrictModel):
    """Complete run configuration; every field has a working default."""

    output_dir: Path = Path(OUTPUT_DIR)
    modes: ModesConfig = ModesConfig()
    readin: ReadinConfig = ReadinConfig()
    retrieval: RetrievalConfig = RetrievalConfig()
    transverse: TransverseConfig = TransverseConfig()
    verify: VerifyConfig = VerifyConfig()
    thresholds: ThresholdConfig = ThresholdConfig()


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def format_validation_errors(error: ValidationError) -> dict[str, str]:
    """Map dotted field paths to pydantic's messages."""
    return {".".join(str(part) for part in item["loc"]) or "config": item["msg"] for item in error.errors()}


def load_run_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Load and validate the run configuration.

    Precedence: model defaults, then the YAML file, then overrides (command-line flags).

    Args:
        path: YAML file; falls back to RAMAN_MEMORY_CONFIG when None
        overrides: Nested dict of values that win over the file

    Returns:
        Validated RunConfig

    Raises:
        DomainError: If the file cannot be read or any field is invalid
    """
    path = path or RUN_CONFIG_PATH
    data: dict[str, Any] = {}
    if path:
        config_path = Path(path)
        try:
            with open(config_path) as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise DomainError(f"Cannot read run configuration {config_path}: {e}", {"path": str(config_path)}) from e
        if not isinstance(data, dict):
            raise DomainError(f"Run configuration {config_path} must be a mapping", {"path": str(config_path)})
        logger.info(f"Loaded run configuration from {config_path}")

    data = _merge(_merge(RunConfig().model_dump(), data), overrides or {})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        fields = format_validation_errors(e)
        raise DomainError(f"Invalid run configuration: {len(fields)} field error(s)", {"fields": fields}) from e
