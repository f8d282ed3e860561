"""Dispersionless Green's-function kernels of the Raman memory.

Two kernels describe storage when the control and signal travel at the same speed:

- G0(p, q) = J0(2√(pq)) couples light to the spin wave and back,
- G1(p, q) = δ(p) − Θ(p)√(q/p)·J1(2√(pq)) is the causal transmission kernel.

Both are discretized on a midpoint Grid as dense matrices acting on node samples, so a
matrix-vector product evaluates the integral ∫K(ε, x)f(x)dx at every node ε.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from raman_memory.errors import DomainError
from raman_memory.grid import Grid, bessel_j
from raman_memory.outputs import Table

logger = logging.getLogger(__name__)

KernelKind = Literal["G0", "G1"]


@dataclass(frozen=True)
class KernelMatrix:
    """Dense discretization of one kernel over a Grid."""

    grid: Grid
    entries: NDArray[np.float64] = field(repr=False)
    kind: KernelKind

    def __post_init__(self):
        """Freeze the entries."""
        self.entries.setflags(write=False)

    @property
    def unweighted(self) -> NDArray[np.float64]:
        """Kernel values without the quadrature weights, K_ij / w_j."""
        return self.entries / self.grid.weights[np.newaxis, :]


def causal_kernel(p: ArrayLike, c: float) -> NDArray[np.float64]:
    """Evaluate √(c/p)·J1(2√(pc)) for p >= 0, with its limit c at p = 0."""
    p = np.asarray(p, dtype=float)
    values = np.full(p.shape, float(c))
    positive = p > 0
    root = np.sqrt(p[positive] * c)
    values[positive] = np.sqrt(c / p[positive]) * bessel_j(1, 2.0 * root)
    return values


def g0_matrix(grid: Grid) -> KernelMatrix:
    """Build the coupling kernel entries w_j·J0(2√(x_i x_j)).

    Args:
        grid: Quadrature grid on [0, C]

    Returns:
        KernelMatrix of kind G0
    """
    x = grid.nodes
    entries = bessel_j(0, 2.0 * np.sqrt(np.outer(x, x))) * grid.weights[np.newaxis, :]
    return KernelMatrix(grid=grid, entries=np.asarray(entries), kind="G0")


def g1_matrix(grid: Grid) -> KernelMatrix:
    """Build the causal transmission kernel.

    The delta term becomes the identity. Below the diagonal the entries are
    −w_j·√(C/(x_i − x_j))·J1(2√((x_i − x_j)C)); on the diagonal the analytic limit C is
    weighted by half a cell. Entries above the diagonal vanish.

    Args:
        grid: Quadrature grid on [0, C]

    Returns:
        KernelMatrix of kind G1
    """
    x = grid.nodes
    lag = x[:, np.newaxis] - x[np.newaxis, :]
    causal = np.tril(causal_kernel(np.clip(lag, 0.0, None), grid.c), k=-1) * grid.weights[np.newaxis, :]
    causal[np.diag_indices(grid.n)] = 0.5 * grid.weights * grid.c
    return KernelMatrix(grid=grid, entries=np.eye(grid.n) - causal, kind="G1")


def reversal_matrix(grid: Grid) -> NDArray[np.float64]:
    """Exchange matrix implementing the argument reversal x -> C - x on the nodes."""
    return np.eye(grid.n)[grid.reversed_index]


def scattering_matrix(grid: Grid) -> NDArray[np.float64]:
    """Discretized memory map acting on stacked (α0, β0) node samples.

    Returns:
        The 2n×2n matrix [[G1, G0·R], [−G0·R, G1]]
    """
    g0 = g0_matrix(grid).entries
    g1 = g1_matrix(grid).entries
    g0_reversed = g0[:, grid.reversed_index]
    return np.block([[g1, g0_reversed], [-g0_reversed, g1]])


def composition_residual(grid: Grid) -> float:
    """Max-norm deviation of UᵀU from the identity for the discretized memory map.

    The residual measures how well the discrete kernels honor the normalization conditions
    G1ᵀG1 + (G0R)ᵀ(G0R) = I; it vanishes as the grid is refined.
    """
    u = scattering_matrix(grid)
    residual = float(np.max(np.abs(u.T @ u - np.eye(2 * grid.n))))
    logger.debug(f"Kernel composition residual n={grid.n} c={grid.c}: {residual:.3e}")
    return residual


def apply_readin(grid: Grid, alpha0: ArrayLike, beta0: ArrayLike) -> tuple[NDArray, NDArray]:
    """Evaluate the dispersionless scattering relations on node samples.

    Args:
        grid: Quadrature grid on [0, C]
        alpha0: Incident signal in pulse-area coordinates
        beta0: Initial spin wave in the scaled position coordinate

    Returns:
        Tuple of (transmitted signal, final spin wave) on the nodes
    """
    alpha0 = np.asarray(alpha0)
    beta0 = np.asarray(beta0)
    if alpha0.shape[0] != grid.n or beta0.shape[0] != grid.n:
        raise DomainError(f"Boundary samples must have {grid.n} entries", {"alpha0": alpha0.shape, "beta0": beta0.shape})
    out = scattering_matrix(grid) @ np.concatenate([alpha0, beta0])
    return out[: grid.n], out[grid.n :]


def kernel_table(kernel: KernelMatrix) -> Table:
    """Kernel entries row-major, preceded by an n, c, kind row."""
    rows: list[list] = [[kernel.grid.n, kernel.grid.c, kernel.kind]]
    rows.extend(kernel.entries.tolist())
    return Table(["n", "c", "kind"], rows)
