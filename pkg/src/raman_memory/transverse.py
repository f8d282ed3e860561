"""Transverse (paraxial) modes of the memory at unit Fresnel number.

Diffraction inside the medium is modelled by the kernel R(ρ, x) = N·exp(−iC|ρ|²/x)/x with x
replaced by C, which makes it independent of position. For cylindrically symmetric fields
the angular integral gives

    (R f)(ρ) = (N/C)·2π·e^{−iρ²} ∫ e^{−iρ′²} J0(2ρρ′) f(ρ′) ρ′dρ′

on the aperture ρ <= 1. In u = ρ² the area element is π du, and the radial operator is the
C = 1 memory kernel dressed by the chirp e^{−iu}. It is discretized on a midpoint mesh in u.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg
from scipy.optimize import curve_fit

from raman_memory.errors import DomainError, NumericalError
from raman_memory.grid import Grid, bessel_j
from raman_memory.kernels import scattering_matrix
from raman_memory.outputs import Table

logger = logging.getLogger(__name__)

Normalization = Literal["flux", "hilbert-schmidt"]

RHO_MAX = 1.0
MONOTONE_TOLERANCE = 1e-3
CONTROL_WAIST_FACTOR = 3.0


@dataclass(frozen=True)
class TransverseDecomposition:
    """Singular values and modes of the radial diffraction operator.

    Attributes:
        c: Coupling parameter the decomposition was requested for
        rho: Radial mesh (ρ = √u at the u-cell centres)
        sigmas: |σⱼ| under the chosen normalization, descending
        radial_modes: Input modes, one per row, orthonormal under 2πρdρ
        output_modes: Matching output modes, one per row
        phases: Phase of each complex-symmetric (Takagi) value
        normalization: "flux" (N = C/π) or "hilbert-schmidt" (Σσ² = 1)
        total_coupling: √(Σσ²) of the full flux-normalized spectrum
        matrix: Radial operator in area-weighted coordinates (flux normalization)
    """

    c: float
    rho: NDArray[np.float64] = field(repr=False)
    sigmas: NDArray[np.float64]
    radial_modes: NDArray[np.complex128] = field(repr=False)
    output_modes: NDArray[np.complex128] = field(repr=False)
    phases: NDArray[np.float64] = field(repr=False)
    normalization: Normalization = "flux"
    total_coupling: float = 1.0
    matrix: NDArray[np.complex128] | None = field(default=None, repr=False)

    @property
    def n_radial(self) -> int:
        """Number of radial samples."""
        return self.rho.size

    @property
    def area_weight(self) -> float:
        """Area element π·Δu of one radial cell."""
        return np.pi * RHO_MAX**2 / self.n_radial

    @property
    def flux_sigmas(self) -> NDArray[np.float64]:
        """Singular values under the flux-preserving normalization."""
        if self.normalization == "flux":
            return self.sigmas
        return self.sigmas * self.total_coupling

    @property
    def hilbert_schmidt_sigmas(self) -> NDArray[np.float64]:
        """Singular values scaled so the full spectrum has unit Hilbert-Schmidt norm."""
        return self.flux_sigmas / self.total_coupling

    def orthonormality_residual(self) -> float:
        """Max deviation of the area-weighted Gram matrix of the input modes from I."""
        gram = self.area_weight * (self.radial_modes.conj() @ self.radial_modes.T)
        return float(np.max(np.abs(gram - np.eye(self.radial_modes.shape[0]))))


def radial_matrix(n_radial: int) -> tuple[NDArray[np.float64], NDArray[np.complex128]]:
    """Flux-normalized radial operator (1/n)·e^{−i(u_k + u_l)}·J0(2√(u_k u_l)).

    Returns:
        Tuple (rho, matrix) on the u-midpoint mesh
    """
    u = (np.arange(n_radial) + 0.5) * RHO_MAX**2 / n_radial
    chirp = np.exp(-1j * u)
    kernel = bessel_j(0, 2.0 * np.sqrt(np.outer(u, u)))
    return np.sqrt(u), (chirp[:, np.newaxis] * kernel * chirp[np.newaxis, :]) / n_radial


def paraxial_modes(c: float, n_radial: int, n_modes: int, normalization: Normalization = "flux") -> TransverseDecomposition:
    """Decompose the radial diffraction operator on the unit aperture.

    Args:
        c: Coupling parameter (positive)
        n_radial: Number of radial samples
        n_modes: Number of modes to keep
        normalization: "flux" makes the infinite-aperture operator unitary; "hilbert-schmidt"
            rescales the spectrum to Σσⱼ² = 1

    Returns:
        TransverseDecomposition with the leading n_modes singular values and modes

    Raises:
        DomainError: On invalid arguments
        NumericalError: If the SVD fails or does not reproduce the operator
    """
    if c <= 0:
        raise DomainError(f"Coupling must be positive, got {c}")
    if not 1 <= n_modes <= n_radial:
        raise DomainError(f"n_modes must be in [1, {n_radial}], got {n_modes}", {"n_modes": n_modes, "n_radial": n_radial})
    if normalization not in ("flux", "hilbert-schmidt"):
        raise DomainError(f"Unknown normalization {normalization!r}")

    rho, matrix = radial_matrix(n_radial)
    try:
        left, values, right_h = linalg.svd(matrix)
    except linalg.LinAlgError as e:
        raise NumericalError(f"Radial SVD failed: {e}", {"n_radial": n_radial}) from e

    residual = float(np.max(np.abs((left * values) @ right_h - matrix)))
    if residual > 1e-10:
        raise NumericalError("Radial SVD residual too large", {"residual": residual})

    right = right_h.conj()[:n_modes]
    left = left.T[:n_modes]
    # Fix each global phase so the de-chirped mode integrates to a positive real number
    dechirped = right @ np.exp(-1j * rho**2)
    rotation = np.exp(-1j * np.angle(dechirped))
    right = right * rotation[:, np.newaxis]
    left = left * rotation[:, np.newaxis]

    # Complex symmetry ties the output modes to conjugated input modes up to a phase
    phases = np.angle(np.sum(right * left, axis=1))
    total = float(np.sqrt(np.sum(values**2)))
    sigmas = values[:n_modes] if normalization == "flux" else values[:n_modes] / total

    area_weight = np.pi * RHO_MAX**2 / n_radial
    logger.debug(f"Transverse modes n_radial={n_radial}: sigma_1={values[0]:.6f} (flux), {values[0] / total:.6f} (Hilbert-Schmidt)")
    return TransverseDecomposition(
        c=float(c),
        rho=rho,
        sigmas=sigmas,
        radial_modes=right / np.sqrt(area_weight),
        output_modes=left / np.sqrt(area_weight),
        phases=phases,
        normalization=normalization,
        total_coupling=total,
        matrix=matrix,
    )


@dataclass(frozen=True)
class WaistFit:
    """Gaussian fit a·exp(−ρ²/w²) of the dominant mode magnitude."""

    waist: float
    amplitude: float
    control_waist: float


def _gaussian(rho: NDArray, amplitude: float, waist: float) -> NDArray:
    return amplitude * np.exp(-((rho / waist) ** 2))


def gaussian_waist_fit(decomp: TransverseDecomposition) -> WaistFit:
    """Least-squares fit of |φ₁(ρ)| to a·exp(−ρ²/w²) over ρ ∈ [0, 1].

    Samples sit uniformly in ρ², so each residual is weighted by √(Δρ) to make the fit
    uniform in ρ.

    Raises:
        NumericalError: If |φ₁| is not monotonically decreasing, or the fit fails
    """
    rho = decomp.rho
    magnitude = np.abs(decomp.radial_modes[0])
    rises = np.diff(magnitude)
    if np.any(rises > MONOTONE_TOLERANCE * magnitude.max()):
        raise NumericalError("Dominant mode magnitude is not monotone; a Gaussian fit is meaningless", {"max_rise": float(rises.max())})

    spacing = 1.0 / (2.0 * decomp.n_radial * rho)
    try:
        params, _ = curve_fit(_gaussian, rho, magnitude, p0=(float(magnitude.max()), 1.0), sigma=1.0 / np.sqrt(spacing), maxfev=10000)
    except (RuntimeError, ValueError) as e:
        raise NumericalError(f"Gaussian waist fit failed: {e}") from e

    amplitude, waist = float(params[0]), abs(float(params[1]))
    logger.info(f"Dominant transverse mode waist w={waist:.4f}, control waist >= {CONTROL_WAIST_FACTOR * waist:.4f}")
    return WaistFit(waist=waist, amplitude=amplitude, control_waist=CONTROL_WAIST_FACTOR * waist)


def gaussian_decomposition(waist: float, n_radial: int) -> TransverseDecomposition:
    """Single-mode decomposition holding an exact normalized Gaussian; a fit reference."""
    u = (np.arange(n_radial) + 0.5) * RHO_MAX**2 / n_radial
    rho = np.sqrt(u)
    mode = np.exp(-u / waist**2).astype(complex)
    mode /= np.sqrt(np.pi / n_radial * np.sum(np.abs(mode) ** 2))
    return TransverseDecomposition(
        c=1.0, rho=rho, sigmas=np.ones(1), radial_modes=mode[np.newaxis, :], output_modes=mode[np.newaxis, :], phases=np.zeros(1)
    )


def compose_transfer(transverse: TransverseDecomposition, grid: Grid, alpha0: ArrayLike, beta0: ArrayLike) -> tuple[NDArray, NDArray]:
    """Apply the factorized transverse × longitudinal memory map to 2-D inputs.

    Args:
        transverse: Decomposition whose radial operator is applied (flux normalization)
        grid: Longitudinal grid on [0, C]
        alpha0: Incident signal, shape (grid.n, n_radial), in area-weighted radial samples
        beta0: Initial spin wave, same shape

    Returns:
        Tuple (transmitted signal, stored spin wave), each (grid.n, n_radial)
    """
    if transverse.matrix is None:
        raise DomainError("Decomposition carries no radial operator")
    alpha0 = np.asarray(alpha0, dtype=complex)
    beta0 = np.asarray(beta0, dtype=complex)
    expected = (grid.n, transverse.n_radial)
    if alpha0.shape != expected or beta0.shape != expected:
        raise DomainError(f"Inputs must have shape {expected}", {"alpha0": alpha0.shape, "beta0": beta0.shape})
    stacked = scattering_matrix(grid) @ np.vstack([alpha0, beta0]) @ transverse.matrix.T
    return stacked[: grid.n], stacked[grid.n :]


def beamsplitter_amplitudes(
    lambdas: ArrayLike, mus: ArrayLike, sigmas: ArrayLike, a: ArrayLike, b: ArrayLike
) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Mode-by-mode outputs σⱼ(μᵢaᵢⱼ + λᵢbᵢⱼ) and σⱼ(μᵢbᵢⱼ − λᵢaᵢⱼ).

    Args:
        lambdas: Longitudinal λᵢ
        mus: Longitudinal μᵢ
        sigmas: Transverse σⱼ
        a: Signal amplitudes aᵢⱼ
        b: Spin-wave amplitudes bᵢⱼ

    Returns:
        Tuple (signal amplitudes, spin-wave amplitudes)
    """
    lam = np.asarray(lambdas)[:, np.newaxis]
    mu = np.asarray(mus)[:, np.newaxis]
    sig = np.asarray(sigmas)[np.newaxis, :]
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return sig * (mu * a + lam * b), sig * (mu * b - lam * a)


def transverse_tables(decomp: TransverseDecomposition) -> tuple[Table, Table]:
    """rho,re_phi_1,im_phi_1,... mode table and j,sigma table."""
    header = ["rho"]
    columns = [decomp.rho]
    for j, mode in enumerate(decomp.radial_modes):
        header += [f"re_phi_{j + 1}", f"im_phi_{j + 1}"]
        columns += [mode.real, mode.imag]
    modes = Table(header, np.column_stack(columns).tolist())
    sigmas = Table(["j", "sigma"], [[j + 1, s] for j, s in enumerate(decomp.sigmas)])
    return modes, sigmas
