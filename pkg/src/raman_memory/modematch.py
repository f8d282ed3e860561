"""Modematching: shaping the control so the dominant memory mode matches a signal photon.

In pulse-area coordinates ε(τ) = C·∫₀^τ|ε|²/E the dynamics do not depend on the control
shape, and the temporal input modes are

    Φᵢ(τ) = √(C/E)·ε(τ)·φᵢ[C − ε(τ)].

Shaping inverts this relation for i = 1: equating cumulative intensities of the target and
of φ₁² gives ε(τ), and its derivative gives the control intensity.
"""

import asyncio
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize

from raman_memory.config import MAX_WORKERS
from raman_memory.errors import DomainError, UnreachableShapeError
from raman_memory.modes import ModeDecomposition
from raman_memory.outputs import Table
from raman_memory.propagator import BoundaryConditions, ControlField, FieldSolution, propagate_direct

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-10
WEAK_MODE_FRACTION = 1e-6
INTENSITY_CAP = 1e3
SPLINE_KNOTS = 16


@dataclass(frozen=True)
class Wavepacket:
    """Unit-norm complex amplitude ξ(τ) on a uniform mesh over [0, duration]."""

    samples: NDArray[np.complex128] = field(repr=False)
    duration: float = 1.0

    def __post_init__(self):
        """Check the trapezoidal norm and freeze the samples."""
        samples = np.asarray(self.samples, dtype=complex)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size < 2:
            raise DomainError("Wavepacket needs at least two samples", {"shape": samples.shape})
        if self.duration <= 0:
            raise DomainError(f"Wavepacket duration must be positive, got {self.duration}")
        norm = trapezoid(np.abs(samples) ** 2, self.mesh)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise DomainError(f"Wavepacket must have unit norm, got {norm}", {"norm": float(norm)})
        samples.setflags(write=False)

    @classmethod
    def normalized(cls, samples: ArrayLike, duration: float = 1.0) -> "Wavepacket":
        """Scale arbitrary samples to unit norm."""
        samples = np.asarray(samples, dtype=complex)
        norm = trapezoid(np.abs(samples) ** 2, np.linspace(0.0, duration, samples.size))
        if not norm > 0:
            raise DomainError("Wavepacket samples are identically zero")
        return cls(samples=samples / np.sqrt(norm), duration=duration)

    @classmethod
    def gaussian(cls, sigma: float, tau0: float, duration: float = 1.0, n: int = 401) -> "Wavepacket":
        """Photon ξ ∝ exp{−2 ln2·[(τ − τ0)/σ]²}; σ is the intensity FWHM."""
        if sigma <= 0:
            raise DomainError(f"Wavepacket width must be positive, got {sigma}")
        tau = np.linspace(0.0, duration, n)
        return cls.normalized(np.exp(-2.0 * np.log(2.0) * ((tau - tau0) / sigma) ** 2), duration)

    @property
    def n(self) -> int:
        """Number of samples."""
        return self.samples.size

    @property
    def mesh(self) -> NDArray[np.float64]:
        """Uniform sample times."""
        return np.linspace(0.0, self.duration, self.n)

    def resample(self, n: int) -> "Wavepacket":
        """Interpolate onto a uniform mesh with n samples and renormalize."""
        tau = np.linspace(0.0, self.duration, n)
        mesh = self.mesh
        values = np.interp(tau, mesh, self.samples.real) + 1j * np.interp(tau, mesh, self.samples.imag)
        return Wavepacket.normalized(values, self.duration)


@dataclass(frozen=True)
class ShapedControl:
    """Outcome of shape_control.

    Attributes:
        control: Real nonnegative control envelope
        overlap: |∫Φ₁*ξ dτ|² achieved
        method: "inversion" or "optimizer"
        capped: Whether the intensity cap was applied where φ₁ nearly vanishes
    """

    control: ControlField
    overlap: float
    method: Literal["inversion", "optimizer"]
    capped: bool = False


@dataclass(frozen=True)
class ReadinResult:
    """Storage of a signal photon.

    Attributes:
        efficiency: Stored fraction ∫|B(T,z)|²dz
        transmitted: Leaked fraction ∫|A(τ,L)|²dτ
        intensity_map: |A|² on (τ-cell centre, z face)
        solution: The underlying propagation run
    """

    efficiency: float
    transmitted: float
    intensity_map: NDArray[np.float64] = field(repr=False)
    solution: FieldSolution = field(repr=False)

    @property
    def stored_spin_wave(self) -> NDArray[np.complex128]:
        """B(T, z) on the z-cell centres."""
        return self.solution.b_out

    @property
    def energy_error(self) -> float:
        """|efficiency + transmitted − 1|."""
        return abs(self.efficiency + self.transmitted - 1.0)


def pulse_area(control: ControlField, tau: ArrayLike) -> float | NDArray[np.float64]:
    """Normalized control pulse area ε(τ) = C·∫₀^τ|ε|²dτ′ / E.

    Args:
        control: Control envelope
        tau: Times in [0, duration]

    Returns:
        Pulse area at tau; ε(0) = 0 and ε(T) = C

    Raises:
        DomainError: If any time lies outside [0, duration]
    """
    tau_arr = np.asarray(tau, dtype=float)
    slack = 1e-12 * control.duration
    if np.any(tau_arr < -slack) or np.any(tau_arr > control.duration + slack):
        raise DomainError(f"Time outside the pulse window [0, {control.duration}]")

    cumulative = cumulative_trapezoid(np.abs(control.samples) ** 2, control.mesh, initial=0.0)
    if cumulative[-1] == 0.0:
        area = np.zeros_like(tau_arr)
    else:
        area = np.interp(tau_arr, control.mesh, control.c * cumulative / cumulative[-1])
    return float(area) if area.ndim == 0 else area


def _check_coupling(decomp: ModeDecomposition, control: ControlField) -> None:
    if abs(decomp.c - control.c) > 1e-12 * max(1.0, decomp.c):
        raise DomainError(f"Control coupling {control.c} does not match the decomposition ({decomp.c})", {"control_c": control.c, "modes_c": decomp.c})


def mode_in_time(decomp: ModeDecomposition, i: int, control: ControlField) -> Wavepacket:
    """Temporal input mode Φᵢ(τ) = √(C/E)·ε(τ)·φᵢ[C − ε(τ)] on the control mesh.

    Args:
        decomp: Mode decomposition at the control's coupling
        i: Zero-based mode index
        control: Control envelope with E > 0

    Returns:
        Unit-normalized Wavepacket

    Raises:
        DomainError: If the couplings differ or the control is switched off
    """
    _check_coupling(decomp, control)
    if control.gamma == 0.0:
        raise DomainError("Input modes are undefined for a switched-off control")
    area = pulse_area(control, control.mesh)
    argument = np.clip(decomp.c - area, 0.0, decomp.c)
    samples = np.sqrt(decomp.c / control.energy) * control.samples * decomp.mode_function(i, argument)
    return Wavepacket.normalized(samples, control.duration)


def overlap(mode: Wavepacket, target: Wavepacket) -> float:
    """Mode overlap |∫mode*·target dτ|² (trapezoidal).

    Raises:
        DomainError: If the packets live on different meshes
    """
    if mode.n != target.n or mode.duration != target.duration:
        raise DomainError("Wavepackets live on different meshes", {"n": (mode.n, target.n)})
    return float(abs(trapezoid(np.conj(mode.samples) * target.samples, mode.mesh)) ** 2)


def _matched_overlap(decomp: ModeDecomposition, control: ControlField, target: Wavepacket) -> float:
    return overlap(mode_in_time(decomp, 0, control), target)


def _invert(target: Wavepacket, decomp: ModeDecomposition) -> tuple[NDArray[np.float64], bool]:
    """Cumulative inversion Q(ε(τ)) = P(τ); returns the control intensity and the cap flag."""
    c = decomp.c
    tau = target.mesh
    u = np.linspace(0.0, c, 4 * max(decomp.grid.n, target.n) + 1)
    density = decomp.mode_function(0, c - u) ** 2
    q = cumulative_trapezoid(density, u, initial=0.0)
    q = q / q[-1] + 1e-14 * u / c

    weight = np.abs(target.samples) ** 2
    p = cumulative_trapezoid(weight, tau, initial=0.0)
    p = p / p[-1] * q[-1]

    area = np.interp(p, q, u)
    intensity = np.clip(np.gradient(area, tau), 0.0, None)

    capped = False
    positive = intensity[intensity > 0]
    if positive.size:
        cap = INTENSITY_CAP * float(np.median(positive))
        weak = decomp.mode_function(0, np.clip(c - area, 0.0, c)) ** 2 < WEAK_MODE_FRACTION * density.max()
        over = weak & (intensity > cap)
        if np.any(over):
            intensity[over] = cap
            capped = True
            logger.warning(f"Capped control intensity at {cap:.3g} on {int(over.sum())} samples where the memory mode vanishes")
    return intensity, capped


def _optimize(target: Wavepacket, decomp: ModeDecomposition, start: NDArray[np.float64]) -> tuple[ControlField, float]:
    """Derivative-free search over log-intensities at spline knots."""
    tau = target.mesh
    knots = np.linspace(0.0, target.duration, SPLINE_KNOTS)
    floor = 1e-6 * max(float(start.max()), 1e-12)
    x0 = np.log(np.maximum(np.interp(knots, tau, start), floor))

    def control_for(params: NDArray) -> ControlField:
        log_intensity = PchipInterpolator(knots, params)(tau)
        return ControlField.from_intensity(np.exp(log_intensity - log_intensity.max()), c=decomp.c, duration=target.duration)

    def objective(params: NDArray) -> float:
        return -_matched_overlap(decomp, control_for(params), target)

    result = minimize(objective, x0, method="Nelder-Mead", options={"maxiter": 4000, "xatol": 1e-6, "fatol": 1e-9})
    logger.debug(f"Spline optimizer finished after {result.nit} iterations: overlap={-result.fun:.6f}")
    return control_for(result.x), float(-result.fun)


def shape_control(target: Wavepacket, decomp: ModeDecomposition, overlap_threshold: float = 0.98) -> ShapedControl:
    """Shape a real control so that the dominant input mode reproduces the target.

    The target phase is absorbed into the photon reference; only |ξ| is matched. If the
    inversion falls short of the threshold, a 16-knot spline parameterization of the
    intensity is optimized with Nelder-Mead, starting from the inverted shape.

    Args:
        target: Signal photon wavepacket
        decomp: Mode decomposition at the desired coupling
        overlap_threshold: Minimum acceptable |∫Φ₁*ξ|²

    Returns:
        ShapedControl on the target's mesh

    Raises:
        UnreachableShapeError: If neither method reaches the threshold
    """
    envelope = Wavepacket.normalized(np.abs(target.samples), target.duration)
    intensity, capped = _invert(envelope, decomp)
    if not np.any(intensity > 0):
        raise UnreachableShapeError("Inversion produced an empty control", best_overlap=0.0)

    control = ControlField.from_intensity(intensity, c=decomp.c, duration=target.duration)
    achieved = _matched_overlap(decomp, control, envelope)
    logger.info(f"Inverted control shape: overlap={achieved:.6f}" + (" (capped)" if capped else ""))
    if achieved >= overlap_threshold:
        return ShapedControl(control=control, overlap=achieved, method="inversion", capped=capped)

    logger.warning(f"Inversion overlap {achieved:.4f} below {overlap_threshold}; falling back to spline optimization")
    optimized, best = _optimize(envelope, decomp, intensity)
    if best >= overlap_threshold:
        return ShapedControl(control=optimized, overlap=best, method="optimizer", capped=capped)

    raise UnreachableShapeError(
        f"No control reaches overlap {overlap_threshold} with the target",
        best_overlap=max(best, achieved),
        details={"threshold": overlap_threshold, "c": decomp.c},
    )


async def shape_batch(targets: Sequence[Wavepacket], decomp: ModeDecomposition, overlap_threshold: float = 0.98, workers: int = MAX_WORKERS) -> list[ShapedControl]:
    """Shape controls for several targets concurrently; results keep the input order."""
    semaphore = asyncio.Semaphore(workers)

    async def shape(target: Wavepacket) -> ShapedControl:
        async with semaphore:
            return await asyncio.to_thread(shape_control, target, decomp, overlap_threshold)

    return list(await asyncio.gather(*(shape(target) for target in targets)))


def simulate_readin(photon: Wavepacket, control: ControlField, n_tau: int, n_z: int) -> ReadinResult:
    """Propagate a signal photon into an empty memory.

    The photon is interpolated onto the τ-cell centres and normalized to unit flux; the spin
    wave starts in vacuum. Since the equations are linear, |A|² of this classical run is the
    single-photon intensity ⟨A†A⟩.

    Args:
        photon: Signal wavepacket on the control's window
        control: Control envelope
        n_tau: Number of τ cells
        n_z: Number of z cells

    Returns:
        ReadinResult with stored and transmitted fractions
    """
    if abs(photon.duration - control.duration) > 1e-12:
        raise DomainError("Photon and control windows differ", {"photon": photon.duration, "control": control.duration})
    if n_tau < 2:
        raise DomainError(f"Need at least two τ cells, got {n_tau}")

    centers = (np.arange(n_tau) + 0.5) * control.duration / n_tau
    a_in = np.interp(centers, photon.mesh, photon.samples.real) + 1j * np.interp(centers, photon.mesh, photon.samples.imag)
    a_in = a_in / np.sqrt(control.duration / n_tau * np.sum(np.abs(a_in) ** 2))

    solution = propagate_direct(control, BoundaryConditions(a_in=a_in, b_in=np.zeros(n_z, dtype=complex)), n_tau, n_z)
    _, _, transmitted, efficiency = solution.fluxes()
    logger.info(f"Readin at C={control.c}: efficiency={efficiency:.6f}, transmitted={transmitted:.6f}")
    return ReadinResult(efficiency=efficiency, transmitted=transmitted, intensity_map=np.abs(solution.a) ** 2, solution=solution)


def mode_overlaps(photon: Wavepacket, control: ControlField, decomp: ModeDecomposition) -> NDArray[np.complex128]:
    """Amplitudes ⟨Φᵢ, ξ⟩ of the photon in every retained input mode."""
    amplitudes = np.empty(decomp.n_modes, dtype=complex)
    for i in range(decomp.n_modes):
        mode = mode_in_time(decomp, i, control)
        if mode.n != photon.n:
            mode = mode.resample(photon.n)
        amplitudes[i] = trapezoid(np.conj(mode.samples) * photon.samples, photon.mesh)
    return amplitudes


def predicted_efficiency(photon: Wavepacket, control: ControlField, decomp: ModeDecomposition) -> float:
    """Beamsplitter prediction Σᵢλᵢ²|⟨Φᵢ, ξ⟩|² of the storage efficiency."""
    amplitudes = mode_overlaps(photon, control, decomp)
    return float(np.sum(decomp.lambdas**2 * np.abs(amplitudes) ** 2))


def control_table(control: ControlField) -> Table:
    """Control intensity profile as tau,intensity."""
    return Table(["tau", "intensity"], np.column_stack([control.mesh, np.abs(control.samples) ** 2]).tolist())


def readin_table(result: ReadinResult) -> Table:
    """Signal intensity map as tau,z,intensity."""
    tt, zz = np.meshgrid(result.solution.tau_centers, result.solution.z_faces, indexing="ij")
    return Table(["tau", "z", "intensity"], np.column_stack([tt.ravel(), zz.ravel(), result.intensity_map.ravel()]).tolist())
