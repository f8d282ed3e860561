"""Memory modes: the eigenproblem ∫₀^C J0(2√(xy))φᵢ(y)dy = λᵢφᵢ(x).

The same real mode set diagonalizes both kernels. G0 carries the beamsplitter
transmission amplitudes λᵢ and G1 the reflection amplitudes μᵢ = √(1 − λᵢ²); the input
modes are the stored modes evaluated at the time-reversed argument C − x.
"""

import asyncio
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from raman_memory.config import MAX_WORKERS
from raman_memory.errors import DomainError, NumericalError, RamanMemoryError
from raman_memory.grid import Grid, bessel_j, make_grid
from raman_memory.kernels import g0_matrix, g1_matrix
from raman_memory.outputs import Table

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-12
SIGN_TOLERANCE = 1e-10
# Modes whose singular value falls below this are numerically degenerate with the null space
RESOLVED_LAMBDA = 1e-3


@dataclass(frozen=True)
class ModeDecomposition:
    """Modes and singular-value pairs of the memory kernel at one coupling C.

    Attributes:
        c: Coupling parameter
        grid: Grid the modes are sampled on
        modes: Array (n_modes, n) of mode samples, orthonormal under the grid quadrature
        lambdas: Singular values |eigenvalue|, descending
        mus: Complementary amplitudes √(1 − λ²)
        eigenvalues: Signed eigenvalues of the J0 kernel, same order as lambdas
    """

    c: float
    grid: Grid = field(repr=False)
    modes: NDArray[np.float64] = field(repr=False)
    lambdas: NDArray[np.float64]
    mus: NDArray[np.float64]
    eigenvalues: NDArray[np.float64] = field(repr=False)

    def __post_init__(self):
        """Freeze all arrays; decompositions are cached and shared."""
        for array in (self.modes, self.lambdas, self.mus, self.eigenvalues):
            array.setflags(write=False)

    @property
    def n_modes(self) -> int:
        """Number of retained modes."""
        return self.modes.shape[0]

    @property
    def signs(self) -> NDArray[np.float64]:
        """Sign of each eigenvalue; the output-mode copy absorbs it."""
        return np.where(self.eigenvalues < 0, -1.0, 1.0)

    @property
    def vectors(self) -> NDArray[np.float64]:
        """Modes as orthonormal Euclidean vectors, one per row (√w·φ)."""
        return self.modes * np.sqrt(self.grid.weights)[np.newaxis, :]

    def mode_function(self, i: int, x: ArrayLike) -> NDArray[np.float64]:
        """Evaluate mode i at arbitrary points of [0, C].

        Linear interpolation between nodes; the endpoint values come from the Nyström
        extension φ(x) = Σⱼ wⱼJ0(2√(x yⱼ))φ(yⱼ) / eigenvalue.

        Args:
            i: Zero-based mode index
            x: Points in [0, C]

        Returns:
            Mode values at x
        """
        self._check_index(i)
        x = np.asarray(x, dtype=float)
        if np.any(x < -1e-12 * max(1.0, self.c)) or np.any(x > self.c * (1 + 1e-12)):
            raise DomainError(f"Mode argument outside [0, {self.c}]")
        knots, values = self._extended_samples(i)
        return np.interp(x, knots, values)

    def input_mode(self, i: int) -> NDArray[np.float64]:
        """Time-reversed mode φᵢ(C − x) on the grid nodes."""
        self._check_index(i)
        return self.modes[i, self.grid.reversed_index]

    def orthonormality_residual(self) -> float:
        """Max-norm deviation of the quadrature Gram matrix from the identity."""
        gram = (self.modes * self.grid.weights) @ self.modes.T
        return float(np.max(np.abs(gram - np.eye(self.n_modes))))

    def circle_residual(self) -> float:
        """Max deviation of λᵢ² + μᵢ² from 1."""
        return float(np.max(np.abs(self.lambdas**2 + self.mus**2 - 1.0)))

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.n_modes:
            raise DomainError(f"Mode index {i} outside [0, {self.n_modes})", {"index": i, "n_modes": self.n_modes})

    def _extended_samples(self, i: int) -> tuple[NDArray, NDArray]:
        nodes = self.grid.nodes
        phi = self.modes[i]
        ends = np.array([0.0, self.c])
        if abs(self.eigenvalues[i]) > 1e-8:
            kernel = bessel_j(0, 2.0 * np.sqrt(np.outer(ends, nodes))) * self.grid.weights
            end_values = kernel @ phi / self.eigenvalues[i]
        else:
            end_values = np.array([phi[0], phi[-1]])
        return np.concatenate([[0.0], nodes, [self.c]]), np.concatenate([[end_values[0]], phi, [end_values[1]]])


@dataclass(frozen=True)
class KernelReconstruction:
    """Residuals of rebuilding the kernels from a decomposition.

    Attributes:
        g0_residual: Max-norm error of Σ φᵢ(ε)·eᵢ·φᵢ(C − x) against the direct G0·R entries
        g1_residual: Deviation of G1 from diag(±μᵢ) in the resolved input/output mode pairs
        resolved_modes: Number of modes with λ >= RESOLVED_LAMBDA used for g1_residual
    """

    g0_residual: float
    g1_residual: float
    resolved_modes: int

    @property
    def residual(self) -> float:
        """Spectral reconstruction residual of the coupling kernel."""
        return self.g0_residual


def _fix_signs(vectors: NDArray[np.float64], weights: NDArray[np.float64]) -> NDArray[np.float64]:
    """Make ∫φ >= 0, or the first nonzero sample positive when the integral vanishes."""
    integrals = np.sqrt(weights) @ vectors
    for j in range(vectors.shape[1]):
        column = vectors[:, j]
        if abs(integrals[j]) >= SIGN_TOLERANCE:
            flip = integrals[j] < 0
        else:
            nonzero = np.flatnonzero(np.abs(column) > SIGN_TOLERANCE)
            flip = nonzero.size > 0 and column[nonzero[0]] < 0
        if flip:
            vectors[:, j] = -column
    return vectors


def solve_modes(grid: Grid, n_modes: int) -> ModeDecomposition:
    """Solve the memory eigenproblem on a grid.

    The kernel K_ij = w_j·J0(2√(x_i x_j)) is brought to the symmetric form D^½KD^-½ and
    handed to a symmetric eigen-solver. Eigenvalues may be negative; the singular values are
    their magnitudes, ordered by magnitude.

    Args:
        grid: Quadrature grid on [0, C]
        n_modes: Number of modes to keep, at most grid.n

    Returns:
        ModeDecomposition with the n_modes largest singular values

    Raises:
        DomainError: If n_modes is not in [1, grid.n]
        NumericalError: If the eigen-solve fails or its residual is too large
    """
    if not 1 <= n_modes <= grid.n:
        raise DomainError(f"n_modes must be in [1, {grid.n}], got {n_modes}", {"n_modes": n_modes, "n": grid.n})

    kernel = g0_matrix(grid).entries
    root_w = np.sqrt(grid.weights)
    symmetric = root_w[:, np.newaxis] * kernel / root_w[np.newaxis, :]
    asymmetry = float(np.max(np.abs(symmetric - symmetric.T)))
    if asymmetry > SYMMETRY_TOLERANCE:
        raise NumericalError("Symmetrized kernel is not symmetric", {"residual": asymmetry})
    symmetric = 0.5 * (symmetric + symmetric.T)

    try:
        values, vectors = linalg.eigh(symmetric)
    except linalg.LinAlgError as e:
        raise NumericalError(f"Eigen-solve failed: {e}", {"c": grid.c, "n": grid.n}) from e

    order = np.argsort(-np.abs(values), kind="stable")[:n_modes]
    values = values[order]
    vectors = _fix_signs(vectors[:, order].copy(), grid.weights)

    residual = float(np.max(np.abs(symmetric @ vectors - vectors * values)))
    if not np.isfinite(residual) or residual > 1e-8:
        raise NumericalError("Eigen-solve residual too large", {"residual": residual, "c": grid.c, "n": grid.n})

    # Discretization can push the dominant value a hair past 1 at large C
    lambdas = np.minimum(np.abs(values), 1.0)
    mus = np.sqrt(1.0 - lambdas**2)
    modes = (vectors / root_w[:, np.newaxis]).T

    logger.debug(f"Solved modes c={grid.c} n={grid.n}: lambda_1={lambdas[0]:.6f}, residual={residual:.2e}")
    return ModeDecomposition(c=grid.c, grid=grid, modes=np.ascontiguousarray(modes), lambdas=lambdas, mus=mus, eigenvalues=values)


@lru_cache(maxsize=256)
def decompose(c: float, n: int, n_modes: int) -> ModeDecomposition:
    """Cached solve_modes on the default midpoint grid; shared by the sweeps."""
    return solve_modes(make_grid(n, c), n_modes)


def reconstruct_kernel(decomp: ModeDecomposition) -> KernelReconstruction:
    """Rebuild both kernels from the modes and compare against direct construction.

    G0 is reassembled from every retained mode with the (C − x) reversal, so at full rank the
    residual is rounding error. G1 shares the same modes with μᵢ in place of λᵢ; this is
    checked on the resolved modes, where the projection Vᵀ·G1·R·V must be diagonal with
    magnitudes μᵢ.

    Args:
        decomp: Decomposition to check; full rank (n_modes = grid.n) for the exact G0 test

    Returns:
        KernelReconstruction with both residuals
    """
    grid = decomp.grid
    rev = grid.reversed_index
    g0_reversed = g0_matrix(grid).entries[:, rev]
    weighted_inputs = decomp.modes[:, rev] * grid.weights[np.newaxis, :]
    rebuilt = (decomp.modes.T * decomp.eigenvalues) @ weighted_inputs
    g0_residual = float(np.max(np.abs(rebuilt - g0_reversed)))

    resolved = int(np.count_nonzero(decomp.lambdas >= RESOLVED_LAMBDA))
    if resolved:
        vectors = decomp.vectors[:resolved]
        projection = vectors @ g1_matrix(grid).entries @ vectors[:, rev].T
        diagonal = np.diag(projection)
        off_diagonal = projection - np.diag(diagonal)
        g1_residual = float(max(np.max(np.abs(off_diagonal), initial=0.0), np.max(np.abs(np.abs(diagonal) - decomp.mus[:resolved]))))
    else:
        g1_residual = 0.0

    logger.debug(f"Kernel reconstruction c={decomp.c}: g0={g0_residual:.2e}, g1={g1_residual:.2e} over {resolved} modes")
    return KernelReconstruction(g0_residual=g0_residual, g1_residual=g1_residual, resolved_modes=resolved)


@dataclass(frozen=True)
class SingularValueRow:
    """One (C, i) row of the singular-value curve; failed solves carry NaN and the error."""

    c: float
    i: int
    lam: float
    mu: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        """Whether the solve for this C succeeded."""
        return self.error is None


def _curve_rows(c: float, n_modes: int, n: int) -> list[SingularValueRow]:
    try:
        decomp = decompose(float(c), n, n_modes)
    except RamanMemoryError as e:
        logger.warning(f"Mode solve failed at C={c}: {e.message}")
        return [SingularValueRow(c=float(c), i=i + 1, lam=float("nan"), mu=float("nan"), error=e.message) for i in range(n_modes)]
    return [SingularValueRow(c=float(c), i=i + 1, lam=float(decomp.lambdas[i]), mu=float(decomp.mus[i])) for i in range(n_modes)]


async def singular_value_curve(c_values: ArrayLike, n_modes: int, n: int, workers: int = MAX_WORKERS) -> list[SingularValueRow]:
    """Tabulate the leading singular values over a range of couplings.

    Distinct C values are solved concurrently; rows come back in input order.

    Args:
        c_values: Positive couplings
        n_modes: Modes per coupling
        n: Grid size
        workers: Maximum number of concurrent solves

    Returns:
        Rows (C, i, λᵢ, μᵢ) with 1-based mode labels
    """
    c_values = [float(c) for c in np.atleast_1d(c_values)]
    if any(c <= 0 for c in c_values):
        raise DomainError("Coupling values must be positive", {"c_values": c_values})

    semaphore = asyncio.Semaphore(workers)

    async def solve(c: float) -> list[SingularValueRow]:
        async with semaphore:
            return await asyncio.to_thread(_curve_rows, c, n_modes, n)

    logger.info(f"Computing singular values for {len(c_values)} couplings (n={n}, {n_modes} modes)")
    tables = await asyncio.gather(*(solve(c) for c in c_values))
    return [row for table in tables for row in table]


def singular_values_table(rows: list[SingularValueRow]) -> Table:
    """C,i,lambda,mu table of a singular-value sweep."""
    return Table(["C", "i", "lambda", "mu"], [[row.c, row.i, row.lam, row.mu] for row in rows])


def modes_table(decomp: ModeDecomposition, n_modes: int | None = None) -> Table:
    """x,phi_1,...,phi_k samples on the grid nodes."""
    k = decomp.n_modes if n_modes is None else min(n_modes, decomp.n_modes)
    header = ["x", *(f"phi_{i + 1}" for i in range(k))]
    return Table(header, np.column_stack([decomp.grid.nodes, decomp.modes[:k].T]).tolist())
