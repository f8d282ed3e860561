"""Quadrature grids on [0, C] and the Bessel functions used by every kernel.

All grids are uniform midpoint rules: node i sits at (i + 1/2)·C/n and carries weight C/n.
Nodes never touch the endpoints, where the causal kernel has its square-root factor.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from raman_memory.errors import DomainError

logger = logging.getLogger(__name__)

BESSEL_ORDERS = (0, 1)


@dataclass(frozen=True)
class Grid:
    """Uniform midpoint quadrature mesh on [0, c]."""

    n: int
    c: float
    nodes: NDArray[np.float64] = field(repr=False)
    weights: NDArray[np.float64] = field(repr=False)

    def __post_init__(self):
        """Freeze the sample arrays so the grid can be shared between tasks."""
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def spacing(self) -> float:
        """Cell width C/n."""
        return self.c / self.n

    @property
    def reversed_index(self) -> NDArray[np.intp]:
        """Index map of the reflection x -> C - x (node i lands exactly on node n-1-i)."""
        return np.arange(self.n - 1, -1, -1)

    def integrate(self, values: ArrayLike) -> complex | float:
        """Midpoint-rule integral of samples taken on the nodes."""
        return integrate(self, values)


def make_grid(n: int, c: float) -> Grid:
    """Build the uniform midpoint grid with n nodes on [0, c].

    Args:
        n: Number of nodes, at least 1
        c: Right endpoint (the coupling parameter), strictly positive

    Returns:
        Grid with nodes (i + 1/2)·c/n and weights c/n

    Raises:
        DomainError: If n < 1 or c <= 0
    """
    if int(n) != n or n < 1:
        raise DomainError(f"Grid needs at least one node, got n={n}", {"n": n})
    if not np.isfinite(c) or c <= 0:
        raise DomainError(f"Grid endpoint must be positive, got c={c}", {"c": c})

    n = int(n)
    h = c / n
    nodes = (np.arange(n) + 0.5) * h
    weights = np.full(n, h)
    logger.debug(f"Built midpoint grid n={n} c={c}")
    return Grid(n=n, c=float(c), nodes=nodes, weights=weights)


def integrate(grid: Grid, values: ArrayLike) -> complex | float:
    """Integrate node samples with the grid weights.

    Args:
        grid: Quadrature grid
        values: Samples on grid.nodes (last axis)

    Returns:
        The weighted sum over the last axis
    """
    values = np.asarray(values)
    if values.shape[-1] != grid.n:
        raise DomainError(f"Expected {grid.n} samples, got {values.shape[-1]}")
    return values @ grid.weights


def bessel_j(order: int, x: ArrayLike) -> float | NDArray[np.float64]:
    """Bessel function of the first kind of order 0 or 1.

    Args:
        order: 0 or 1
        x: Nonnegative argument, scalar or array

    Returns:
        J_order(x), with the same shape as x

    Raises:
        DomainError: If order is not 0 or 1, or x has negative entries
    """
    if order not in BESSEL_ORDERS:
        raise DomainError(f"Bessel order must be 0 or 1, got {order}", {"order": order})
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise DomainError("Bessel argument must be nonnegative")

    values = special.j0(x_arr) if order == 0 else special.j1(x_arr)
    if values.ndim == 0:
        return float(values)
    return values
