"""Acceptance checks for the `verify` command.

Every numerical module contributes a group of checks. Each check records the measured value
and its bounds from ThresholdConfig; the report also carries the wall time and the largest
resident set size sampled between groups.
"""

import asyncio
import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import psutil

from raman_memory.config import DEFAULT_COUPLING, MAX_WORKERS, RunConfig, SweepRange
from raman_memory.errors import ThresholdError
from raman_memory.grid import make_grid
from raman_memory.kernels import apply_readin, composition_residual
from raman_memory.modematch import Wavepacket, shape_control, simulate_readin
from raman_memory.modes import decompose, reconstruct_kernel
from raman_memory.propagator import (
    BoundaryConditions,
    ControlField,
    check_symplectic,
    check_unitarity,
    flux_balance,
    greens_matrices,
    propagate_direct,
    stokes_matrices,
)
from raman_memory.readout import retrieval_point, retrieval_probability, retrieval_threshold, ridge
from raman_memory.transverse import gaussian_waist_fit, paraxial_modes

logger = logging.getLogger(__name__)

CIRCLE_COUPLINGS = (0.5, 1.0, 2.0, 5.0)
ORTHONORMALITY_MODES = 20
SYMPLECTIC_COUPLING = 1.0
RIDGE_READOUT = 8.0
THRESHOLD_SCAN = SweepRange(start=0.5, stop=16.0, step=0.5)
RIDGE_SCAN = SweepRange(start=0.5, stop=5.0, step=0.25)


@dataclass(frozen=True)
class CheckResult:
    """One measured quantity and its acceptance bounds.

    A check without bounds is informational and always passes. NaN never passes.

    Attributes:
        name: Check identifier
        value: Measured value
        lower: Minimum accepted value
        upper: Maximum accepted value
        strict: Whether the lower bound is exclusive
        detail: Note on how the value came about
    """

    name: str
    value: float
    lower: float | None = None
    upper: float | None = None
    strict: bool = False
    detail: str | None = None

    @property
    def passed(self) -> bool:
        """Whether the value lies inside its bounds."""
        if math.isnan(self.value):
            return False
        if self.lower is not None and (self.value <= self.lower if self.strict else self.value < self.lower):
            return False
        return self.upper is None or self.value <= self.upper

    def to_dict(self) -> dict[str, Any]:
        """Report entry."""
        return {"name": self.name, "value": self.value, "lower": self.lower, "upper": self.upper, "strict": self.strict, "passed": self.passed, "detail": self.detail}


@dataclass
class VerifyReport:
    """Outcome of a verify run."""

    checks: list[CheckResult] = field(default_factory=list)
    elapsed_seconds: float = 0.0
    peak_rss_mb: float = 0.0

    @property
    def passed(self) -> bool:
        """Whether every check passed."""
        return all(check.passed for check in self.checks)

    @property
    def failed(self) -> list[CheckResult]:
        """Checks outside their bounds."""
        return [check for check in self.checks if not check.passed]

    def to_document(self) -> dict[str, Any]:
        """JSON document written as verify_report.json."""
        return {
            "status": "passed" if self.passed else "failed",
            "checks": [check.to_dict() for check in self.checks],
            "failed": [check.name for check in self.failed],
            "elapsed_seconds": round(self.elapsed_seconds, 3),
            "peak_rss_mb": round(self.peak_rss_mb, 1),
        }


def check_modes(config: RunConfig) -> list[CheckResult]:
    """Singular-value circle, orthonormality, kernel reconstruction and the λ₁ curve."""
    n = config.verify.n
    limits = config.thresholds

    circle = max(decompose(c, n, n).circle_residual() for c in CIRCLE_COUPLINGS)
    orthonormality = decompose(DEFAULT_COUPLING, n, ORTHONORMALITY_MODES).orthonormality_residual()
    reconstruction = reconstruct_kernel(decompose(DEFAULT_COUPLING, n, n))
    dominant = float(decompose(DEFAULT_COUPLING, n, 1).lambdas[0])

    curve = np.array([decompose(c, n, 1).lambdas[0] for c in config.modes.couplings.values()])
    decrease = float(max(np.max(curve[:-1] - curve[1:], initial=0.0), 0.0))

    return [
        CheckResult("singular_value_circle", circle, upper=limits.circle),
        CheckResult("mode_orthonormality", orthonormality, upper=limits.orthonormality),
        CheckResult("kernel_reconstruction", reconstruction.g0_residual, upper=limits.reconstruction),
        CheckResult("kernel_diagonalization", reconstruction.g1_residual, upper=limits.composition),
        CheckResult("dominant_lambda", dominant, lower=limits.dominant_lambda),
        CheckResult("lambda_monotonicity", decrease, upper=limits.monotonicity),
    ]


def check_kernels(config: RunConfig) -> list[CheckResult]:
    """Normalization of the discretised scattering matrix."""
    residual = composition_residual(make_grid(config.verify.n, DEFAULT_COUPLING))
    return [CheckResult("kernel_composition", residual, upper=config.thresholds.composition)]


def check_unitarity_all(config: RunConfig) -> list[CheckResult]:
    """Unitarity of the extracted propagator for CW, Gaussian and random smooth controls."""
    n = config.verify.n_propagation
    controls = {
        "cw": ControlField.constant(DEFAULT_COUPLING, n=n + 1),
        "gaussian": ControlField.gaussian(DEFAULT_COUPLING, center=0.5, width=0.15, n=n + 1),
        "random": ControlField.random_smooth(DEFAULT_COUPLING, seed=config.verify.seed, n=n + 1),
    }
    return [
        CheckResult(f"unitarity_{name}", check_unitarity(greens_matrices(control, n, n)), upper=config.thresholds.unitarity)
        for name, control in controls.items()
    ]


def check_oracle(config: RunConfig) -> list[CheckResult]:
    """Direct CW propagation against the Bessel-kernel solution."""
    n = config.verify.n_propagation
    grid = make_grid(n, DEFAULT_COUPLING)
    control = ControlField.constant(DEFAULT_COUPLING, n=n + 1)
    tau = (np.arange(n) + 0.5) / n
    a_in = np.exp(-(((tau - 0.5) / 0.15) ** 2)).astype(complex)

    solution = propagate_direct(control, BoundaryConditions(a_in=a_in, b_in=np.zeros(n, dtype=complex)), n, n)
    expected, _ = apply_readin(grid, a_in, np.zeros(n, dtype=complex))
    error = float(np.max(np.abs(solution.a_out - expected)))
    return [CheckResult("oracle_cw", error, upper=config.thresholds.oracle)]


def check_flux(config: RunConfig) -> list[CheckResult]:
    """Flux conservation over random controls and boundary conditions."""
    settings = config.verify
    rng = np.random.default_rng(settings.seed)
    m = settings.flux_mesh
    worst = 0.0
    for _ in range(settings.flux_trials):
        control = ControlField.random_smooth(float(rng.uniform(0.5, 5.0)), seed=int(rng.integers(2**31)), n=m + 1)
        bc = BoundaryConditions(
            a_in=rng.standard_normal(m) + 1j * rng.standard_normal(m),
            b_in=rng.standard_normal(m) + 1j * rng.standard_normal(m),
        )
        flux_in, flux_out = flux_balance(propagate_direct(control, bc, m, m))
        worst = max(worst, abs(flux_out - flux_in) / flux_in)
    return [CheckResult("flux_conservation", worst, upper=config.thresholds.flux)]


def check_stokes(config: RunConfig) -> list[CheckResult]:
    """Flux-difference (symplectic) conditions of the Stokes map."""
    n = config.verify.n_stokes
    blocks = stokes_matrices(ControlField.constant(SYMPLECTIC_COUPLING, n=n + 1), n, n)
    return [CheckResult("symplectic", check_symplectic(blocks.c_blocks, blocks.s_blocks), upper=config.thresholds.symplectic)]


def check_readin(config: RunConfig) -> list[CheckResult]:
    """Storage of the Gaussian photon with a modematched control."""
    settings = config.readin
    decomp = decompose(settings.c, settings.n, settings.n_modes)
    photon = Wavepacket.gaussian(settings.sigma, settings.tau0, settings.duration, n=settings.n_tau + 1)
    shaped = shape_control(photon, decomp, settings.overlap_threshold)
    result = simulate_readin(photon, shaped.control, settings.n_tau, settings.n_z)
    return [
        CheckResult("readin_efficiency", result.efficiency, lower=config.thresholds.readin_efficiency),
        CheckResult("readin_energy_split", result.energy_error, upper=config.thresholds.energy_split),
    ]


def check_readout(config: RunConfig) -> list[CheckResult]:
    """Parseval bound, the readout-coupling threshold and the ridge of the retrieval map."""
    limits = config.thresholds
    n_modes = config.retrieval.n_modes
    template = make_grid(config.retrieval.n_readout, 1.0)

    full = retrieval_point(DEFAULT_COUPLING, DEFAULT_COUPLING, template.n, template)
    threshold = retrieval_threshold(DEFAULT_COUPLING, THRESHOLD_SCAN.values(), limits.retrieval_target, n_modes, template)
    best = ridge(RIDGE_SCAN.values(), RIDGE_READOUT, n_modes, template)
    detail = None if threshold is None else f"reached at Cr={threshold:g}"
    if threshold is None:
        scan = THRESHOLD_SCAN.values()
        values = [retrieval_probability(DEFAULT_COUPLING, c_r, n_modes, template) for c_r in scan]
        k = int(np.argmax(values))
        detail = f"not reached below Cr_max={scan[-1]:g}; best N={values[k]:.6f} at Cr={scan[k]:g}"
    return [
        CheckResult("parseval", max(full.parseval_sum - 1.0, 0.0), upper=limits.parseval),
        CheckResult("retrieval_threshold", math.inf if threshold is None else threshold, lower=limits.retrieval_min_readout, strict=True, detail=detail),
        CheckResult("retrieval_ridge", best, lower=limits.ridge_low, upper=limits.ridge_high),
    ]


def check_transverse(config: RunConfig) -> list[CheckResult]:
    """Dominant transverse singular value and the Gaussian waist of its mode."""
    settings = config.transverse
    limits = config.thresholds
    decomp = paraxial_modes(settings.c, settings.n_radial, settings.n_modes, normalization="hilbert-schmidt")
    fit = gaussian_waist_fit(decomp)
    sigma = float(decomp.hilbert_schmidt_sigmas[0])
    return [
        CheckResult(
            "transverse_sigma",
            sigma,
            lower=limits.transverse_sigma - limits.transverse_sigma_tolerance,
            upper=limits.transverse_sigma + limits.transverse_sigma_tolerance,
        ),
        CheckResult("transverse_sigma_flux", float(decomp.flux_sigmas[0])),
        CheckResult("transverse_orthonormality", decomp.orthonormality_residual(), upper=limits.orthonormality),
        CheckResult("transverse_waist", fit.waist, lower=limits.waist - limits.waist_tolerance, upper=limits.waist + limits.waist_tolerance),
    ]


CHECK_GROUPS: tuple[Callable[[RunConfig], list[CheckResult]], ...] = (
    check_modes,
    check_kernels,
    check_unitarity_all,
    check_oracle,
    check_flux,
    check_stokes,
    check_readin,
    check_readout,
    check_transverse,
)


async def run_verification(config: RunConfig, workers: int = MAX_WORKERS) -> VerifyReport:
    """Run every check group concurrently and collect the report.

    Args:
        config: Run configuration holding meshes and thresholds
        workers: Maximum number of groups running at once

    Returns:
        VerifyReport with checks in group order
    """
    process = psutil.Process()
    peak = [process.memory_info().rss]
    semaphore = asyncio.Semaphore(workers)
    start = time.perf_counter()

    async def run_group(group: Callable[[RunConfig], list[CheckResult]]) -> list[CheckResult]:
        async with semaphore:
            logger.info(f"Running {group.__name__}")
            results = await asyncio.to_thread(group, config)
            peak.append(process.memory_info().rss)
            for result in results:
                logger.debug(f"{result.name} = {result.value:.6g} ({'ok' if result.passed else 'FAILED'})")
            return results

    groups = await asyncio.gather(*(run_group(group) for group in CHECK_GROUPS))
    report = VerifyReport(
        checks=[check for results in groups for check in results],
        elapsed_seconds=time.perf_counter() - start,
        peak_rss_mb=max(peak) / 2**20,
    )
    logger.info(f"Verification finished in {report.elapsed_seconds:.1f}s: {len(report.checks) - len(report.failed)}/{len(report.checks)} checks passed")
    return report


def require_passed(report: VerifyReport) -> None:
    """Raise ThresholdError listing the failed checks, if any."""
    if report.passed:
        return
    failed = {check.name: check.value for check in report.failed}
    raise ThresholdError(f"{len(failed)} acceptance check(s) failed: {', '.join(failed)}", {"failed": failed})
