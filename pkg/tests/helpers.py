"""Independent reference implementations used as test oracles."""

import math

import numpy as np


def bessel_series(order: int, x: float, terms: int = 80) -> float:
    """Jₙ(x) from its power series Σₖ (−1)ᵏ(x/2)^(2k+n) / (k!(k+n)!); accurate for x <= 10."""
    half = x / 2.0
    total = 0.0
    for k in range(terms):
        total += (-1) ** k * half ** (2 * k + order) / (math.factorial(k) * math.factorial(k + order))
    return total


def trapezoid_kernel_apply(kernel, nodes: np.ndarray, values: np.ndarray) -> np.ndarray:
    """∫₀^xᵢ kernel(xᵢ − y)·f(y)dy on a fine uniform mesh, by the trapezoidal rule."""
    result = np.zeros(nodes.size)
    for i, x in enumerate(nodes):
        y = np.linspace(0.0, x, 2001)
        f = np.interp(y, nodes, values)
        result[i] = np.trapezoid(kernel(x - y) * f, y)
    return result


def squeezer_blocks(r: float, n: int = 1) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
    """Linear and antilinear blocks of the two-mode squeezer A' = cosh r·A + sinh r·B*, B' = cosh r·B + sinh r·A*."""
    eye = np.eye(n)
    return (np.cosh(r) * eye, np.cosh(r) * eye), (np.sinh(r) * eye, -np.sinh(r) * eye)
