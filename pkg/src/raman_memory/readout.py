"""Readout of the stored spin wave and the photon retrieval probability.

A perfectly modematched readin leaves λ₁φ₁(Cz) in the ensemble. Co-propagating readout at
coupling Cʳ sees this spin wave as its initial condition, expanded in the readout modes
φᵢʳ[Cʳ(1 − z)] with overlaps fᵢ; each component is converted back to light with amplitude
λᵢʳ, giving 𝒩 = λ₁²Σᵢλᵢʳ²fᵢ².

Readin and readout use midpoint grids with the same node count (the retrieval-map readout
mesh, 2000 nodes by default), so the readout argument Cʳ(1 − z_m) of z-node m is exactly
readout node n − 1 − m and every overlap is an inner product of orthonormal vectors.
"""

import asyncio
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from raman_memory.config import MAX_WORKERS
from raman_memory.errors import DomainError, RamanMemoryError
from raman_memory.grid import Grid
from raman_memory.modes import decompose
from raman_memory.outputs import Table

logger = logging.getLogger(__name__)

PARSEVAL_SLACK = 1e-6


@dataclass(frozen=True)
class RetrievalPoint:
    """Retrieval probability at one (C, Cʳ) pair.

    Attributes:
        c: Readin coupling
        c_r: Readout coupling
        overlaps: fᵢ for the retained readout modes
        n: Retrieval probability
        readout_lambdas: λᵢʳ matching the overlaps
        stored_fraction: Norm of the stored spin wave, λ₁² for a perfect readin
        tail_bound: Upper bound on the truncated remainder, λʳ_{k+1}²·(1 − Σfᵢ²)
        error: Failure message when the cell could not be computed
    """

    c: float
    c_r: float
    overlaps: NDArray[np.float64] = field(repr=False)
    n: float
    readout_lambdas: NDArray[np.float64] = field(repr=False)
    stored_fraction: float = float("nan")
    tail_bound: float = 0.0
    error: str | None = None

    @property
    def ok(self) -> bool:
        """Whether the cell was computed."""
        return self.error is None

    @property
    def parseval_sum(self) -> float:
        """Σᵢfᵢ² over the retained modes."""
        return float(np.sum(np.abs(self.overlaps) ** 2))


def _check_couplings(c: float, c_r: float, n_modes: int, grid: Grid) -> None:
    if c <= 0 or c_r <= 0:
        raise DomainError(f"Couplings must be positive, got C={c}, Cr={c_r}", {"c": c, "c_r": c_r})
    if not 1 <= n_modes <= grid.n:
        raise DomainError(f"Mode count {n_modes} exceeds the grid resolution {grid.n}", {"n_modes": n_modes, "n": grid.n})


def _readout_projection(readout_vectors: NDArray, samples: NDArray) -> NDArray:
    """Overlaps of flux-normalized z samples with the reversed readout vectors."""
    return readout_vectors[:, ::-1] @ samples


def overlaps(c: float, c_r: float, n_modes: int, grid: Grid) -> NDArray[np.float64]:
    """Overlaps fᵢ = √(CʳC)∫₀¹φᵢʳ[Cʳ(1 − z)]φ₁(Cz)dz of the stored mode with the readout modes.

    Args:
        c: Readin coupling
        c_r: Readout coupling
        n_modes: Number of readout modes
        grid: Resolution template; its node count sets both midpoint meshes

    Returns:
        Array of n_modes overlaps

    Raises:
        DomainError: If a coupling is not positive or n_modes exceeds the resolution
    """
    _check_couplings(c, c_r, n_modes, grid)
    stored = decompose(float(c), grid.n, 1)
    readout = decompose(float(c_r), grid.n, n_modes)
    return _readout_projection(readout.vectors, stored.vectors[0])


def retrieval_point(c: float, c_r: float, n_modes: int, grid: Grid) -> RetrievalPoint:
    """Retrieval probability with its overlaps and truncation bound.

    Args:
        c: Readin coupling
        c_r: Readout coupling
        n_modes: Number of readout modes kept in the sum
        grid: Resolution template

    Returns:
        RetrievalPoint
    """
    _check_couplings(c, c_r, n_modes, grid)
    stored = decompose(float(c), grid.n, 1)
    extra = min(n_modes + 1, grid.n)
    readout = decompose(float(c_r), grid.n, extra)
    f = _readout_projection(readout.vectors[:n_modes], stored.vectors[0])
    lam_r = readout.lambdas[:n_modes]

    stored_fraction = float(stored.lambdas[0] ** 2)
    probability = stored_fraction * float(np.sum(lam_r**2 * f**2))
    captured = float(np.sum(f**2))
    tail = float(readout.lambdas[n_modes] ** 2 * max(0.0, 1.0 - captured)) if extra > n_modes else 0.0
    if captured > 1.0 + PARSEVAL_SLACK:
        logger.warning(f"Overlap sum {captured:.8f} exceeds 1 at C={c}, Cr={c_r}")
    return RetrievalPoint(
        c=float(c),
        c_r=float(c_r),
        overlaps=f,
        n=min(max(probability, 0.0), 1.0),
        readout_lambdas=lam_r.copy(),
        stored_fraction=stored_fraction,
        tail_bound=stored_fraction * tail,
    )


def retrieval_probability(c: float, c_r: float, n_modes: int, grid: Grid) -> float:
    """Photon retrieval probability 𝒩 = λ₁²Σᵢλᵢʳ²fᵢ²."""
    point = retrieval_point(c, c_r, n_modes, grid)
    logger.debug(f"N(C={c}, Cr={c_r}) = {point.n:.6f} (tail <= {point.tail_bound:.2e})")
    return point.n


def retrieval_from_spin_wave(spin_wave: ArrayLike, c: float, c_r: float, n_modes: int) -> RetrievalPoint:
    """Retrieval of an arbitrary stored spin wave, e.g. B(T, z) from simulate_readin.

    Args:
        spin_wave: B samples on the z-cell centres of a uniform mesh over [0, 1]
        c: Readin coupling, recorded in the result
        c_r: Readout coupling
        n_modes: Number of readout modes

    Returns:
        RetrievalPoint whose stored_fraction is ∫|B|²dz
    """
    samples = np.asarray(spin_wave, dtype=complex)
    n_z = samples.size
    if c_r <= 0 or not 1 <= n_modes <= n_z:
        raise DomainError(f"Invalid readout request Cr={c_r}, n_modes={n_modes} for {n_z} samples")
    readout = decompose(float(c_r), n_z, min(n_modes + 1, n_z))
    flux_samples = samples / np.sqrt(n_z)
    f = _readout_projection(readout.vectors[:n_modes], flux_samples)
    lam_r = readout.lambdas[:n_modes]
    stored_fraction = float(np.sum(np.abs(flux_samples) ** 2))
    probability = float(np.sum(lam_r**2 * np.abs(f) ** 2))
    remainder = max(0.0, stored_fraction - float(np.sum(np.abs(f) ** 2)))
    tail = float(readout.lambdas[n_modes] ** 2 * remainder) if readout.n_modes > n_modes else 0.0
    return RetrievalPoint(
        c=float(c), c_r=float(c_r), overlaps=np.abs(f), n=probability, readout_lambdas=lam_r.copy(), stored_fraction=stored_fraction, tail_bound=tail
    )


def _failed_point(c: float, c_r: float, message: str) -> RetrievalPoint:
    empty = np.zeros(0)
    return RetrievalPoint(c=c, c_r=c_r, overlaps=empty, n=float("nan"), readout_lambdas=empty, error=message)


def _map_cell(c: float, c_r: float, n_modes: int, grid: Grid) -> RetrievalPoint:
    try:
        return retrieval_point(c, c_r, n_modes, grid)
    except RamanMemoryError as e:
        logger.warning(f"Retrieval cell C={c}, Cr={c_r} failed: {e.message}")
        return _failed_point(c, c_r, e.message)


async def retrieval_map(
    c_range: Sequence[float], c_r_range: Sequence[float], n_modes: int, grid: Grid, workers: int = MAX_WORKERS
) -> list[RetrievalPoint]:
    """Evaluate 𝒩 on the full (C, Cʳ) grid.

    Cells run concurrently; failed cells are kept with NaN and their error. The result is
    ordered by C, then Cʳ.

    Args:
        c_range: Readin couplings
        c_r_range: Readout couplings
        n_modes: Readout modes per cell
        grid: Resolution template
        workers: Maximum concurrent cells

    Returns:
        List of RetrievalPoint, len(c_range)·len(c_r_range) long
    """
    cells = [(float(c), float(c_r)) for c in c_range for c_r in c_r_range]
    if any(c <= 0 or c_r <= 0 for c, c_r in cells):
        raise DomainError("Coupling ranges must be positive")

    semaphore = asyncio.Semaphore(workers)

    async def evaluate(c: float, c_r: float) -> RetrievalPoint:
        async with semaphore:
            return await asyncio.to_thread(_map_cell, c, c_r, n_modes, grid)

    logger.info(f"Evaluating retrieval map on {len(cells)} cells (n={grid.n}, {n_modes} modes)")
    return list(await asyncio.gather(*(evaluate(c, c_r) for c, c_r in cells)))


def retrieval_threshold(c: float, c_r_values: Sequence[float], target: float, n_modes: int, grid: Grid) -> float | None:
    """Smallest readout coupling in c_r_values (ascending) with 𝒩 >= target, or None."""
    for c_r in sorted(c_r_values):
        if retrieval_probability(c, c_r, n_modes, grid) >= target:
            return float(c_r)
    return None


def ridge(c_values: Sequence[float], c_r: float, n_modes: int, grid: Grid) -> float:
    """Readin coupling maximizing 𝒩 at fixed readout coupling."""
    values = [retrieval_probability(c, c_r, n_modes, grid) for c in c_values]
    return float(c_values[int(np.argmax(values))])


def retrieval_table(points: Sequence[RetrievalPoint]) -> Table:
    """C,Cr,N table of a retrieval map."""
    return Table(["C", "Cr", "N"], [[p.c, p.c_r, p.n] for p in points])


def overlaps_table(point: RetrievalPoint) -> Table:
    """i,f_i,lambda_r_i for one cell."""
    rows = [[i + 1, f, lam] for i, (f, lam) in enumerate(zip(point.overlaps, point.readout_lambdas, strict=True))]
    return Table(["i", "f_i", "lambda_r_i"], rows)

