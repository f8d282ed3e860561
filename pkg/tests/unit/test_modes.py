"""Tests for the modes module."""

import numpy as np
import pytest

from raman_memory.errors import DomainError, NumericalError
from raman_memory.grid import make_grid
from raman_memory.kernels import g0_matrix
from raman_memory.modes import (
    decompose,
    modes_table,
    reconstruct_kernel,
    singular_value_curve,
    singular_values_table,
    solve_modes,
)
from raman_memory.outputs import write_table


@pytest.mark.unit
def test_modes_are_orthonormal(modes_c2):
    """Test quadrature orthonormality of the retained modes."""
    assert modes_c2.orthonormality_residual() < 1e-10


@pytest.mark.unit
def test_singular_values_on_unit_circle(modes_c2):
    """Test λ² + μ² = 1 and the descending order."""
    assert modes_c2.circle_residual() < 1e-12
    assert np.all(np.diff(modes_c2.lambdas) <= 0)
    assert np.all((modes_c2.lambdas >= 0) & (modes_c2.lambdas <= 1))


@pytest.mark.unit
def test_modes_solve_the_eigenproblem(modes_c2):
    """Test K·φ = eigenvalue·φ with the weighted kernel."""
    kernel = g0_matrix(modes_c2.grid).entries
    for i in range(3):
        np.testing.assert_allclose(kernel @ modes_c2.modes[i], modes_c2.eigenvalues[i] * modes_c2.modes[i], atol=1e-9)


@pytest.mark.unit
def test_sign_convention(modes_c2):
    """Test that modes with a nonvanishing integral integrate to a positive number."""
    sums = modes_c2.modes @ modes_c2.grid.weights
    assert all(total > 0 for total in sums if abs(total) > 1e-6)


@pytest.mark.unit
def test_mode_function_interpolates_nodes(modes_c2):
    """Test that interpolation reproduces node samples and extends to the endpoints."""
    grid = modes_c2.grid
    np.testing.assert_allclose(modes_c2.mode_function(0, grid.nodes), modes_c2.modes[0], atol=1e-14)
    ends = modes_c2.mode_function(0, np.array([0.0, grid.c]))
    assert np.all(np.isfinite(ends))
    assert ends[0] == pytest.approx(modes_c2.modes[0][0], rel=0.05)


@pytest.mark.unit
def test_mode_function_rejects_outside_points(modes_c2):
    """Test argument range checks and index checks."""
    with pytest.raises(DomainError):
        modes_c2.mode_function(0, [2.5])
    with pytest.raises(DomainError):
        modes_c2.mode_function(10, [1.0])


@pytest.mark.unit
def test_input_mode_is_reversed(modes_c2):
    """Test φᵢ(C − x) on the nodes."""
    np.testing.assert_array_equal(modes_c2.input_mode(1), modes_c2.modes[1][::-1])


@pytest.mark.unit
def test_solve_modes_rejects_mode_count():
    """Test n_modes validation."""
    grid = make_grid(10, 1.0)
    with pytest.raises(DomainError):
        solve_modes(grid, 0)
    with pytest.raises(DomainError):
        solve_modes(grid, 11)


@pytest.mark.unit
def test_solve_modes_wraps_solver_failure():
    """Test that a LAPACK failure becomes a NumericalError."""
    from unittest.mock import patch

    from scipy import linalg

    with patch("raman_memory.modes.linalg.eigh", side_effect=linalg.LinAlgError("no convergence")):
        with pytest.raises(NumericalError) as exc_info:
            solve_modes(make_grid(10, 1.0), 2)
    assert exc_info.value.code == "NUMERIC_ERROR"


@pytest.mark.unit
def test_decompose_is_cached():
    """Test that repeated requests share one decomposition."""
    assert decompose(1.5, 40, 3) is decompose(1.5, 40, 3)


@pytest.mark.unit
def test_full_rank_reconstruction():
    """Test that all modes rebuild G0·R to rounding."""
    result = reconstruct_kernel(decompose(2.0, 150, 150))
    assert result.g0_residual < 1e-8
    assert result.residual == result.g0_residual
    assert result.resolved_modes >= 3


@pytest.mark.slow
def test_g1_diagonalization_converges():
    """Test that G1 is diagonal in the memory modes at the default resolution."""
    result = reconstruct_kernel(decompose(2.0, 500, 500))
    assert result.g1_residual <= 5e-2


@pytest.mark.slow
def test_dominant_singular_value_at_c2():
    """Test near-complete transfer at C = 2 against the converged value λ₁ = 0.987396."""
    decomp = decompose(2.0, 500, 5)
    assert decomp.lambdas[0] == pytest.approx(0.987396, abs=2e-5)
    assert decomp.lambdas[0] ** 2 == pytest.approx(0.97495, abs=5e-5)
    assert decomp.lambdas[0] >= 0.95


@pytest.mark.unit
def test_small_coupling_limit():
    """Test λ₁ ≈ C and φ₁ ≈ 1/√C as C -> 0."""
    decomp = decompose(0.01, 50, 1)
    assert decomp.lambdas[0] == pytest.approx(0.01, rel=1e-2)
    np.testing.assert_allclose(decomp.modes[0], 1.0 / np.sqrt(0.01), rtol=1e-2)


@pytest.mark.unit
def test_dominant_value_grows_with_coupling():
    """Test that λ₁ increases along a coarse sweep."""
    lambdas = [decompose(c, 100, 1).lambdas[0] for c in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert all(b >= a - 1e-6 for a, b in zip(lambdas[:-1], lambdas[1:], strict=True))


@pytest.mark.unit
def test_higher_modes_couple_at_larger_coupling():
    """Test λ₂(C = 5) > λ₂(C = 1)."""
    assert decompose(5.0, 200, 2).lambdas[1] > decompose(1.0, 200, 2).lambdas[1]


@pytest.mark.slow
@pytest.mark.parametrize("c", [0.5, 1.0, 2.0, 5.0])
def test_dominant_value_converges_under_refinement(c):
    """Test |λ₁(n = 500) − λ₁(n = 1000)| <= 1e-4."""
    assert abs(decompose(c, 500, 1).lambdas[0] - decompose(c, 1000, 1).lambdas[0]) <= 1e-4


async def test_singular_value_curve_rows():
    """Test row layout, 1-based labels and input ordering."""
    rows = await singular_value_curve([2.0, 0.5], n_modes=3, n=40, workers=2)
    assert [(row.c, row.i) for row in rows] == [(2.0, 1), (2.0, 2), (2.0, 3), (0.5, 1), (0.5, 2), (0.5, 3)]
    assert all(row.ok for row in rows)
    assert rows[0].lam == pytest.approx(decompose(2.0, 40, 3).lambdas[0])


async def test_singular_value_curve_marks_failures():
    """Test that a failed coupling yields NaN rows instead of aborting the sweep."""
    from unittest.mock import patch

    failure = NumericalError("solver diverged", {"residual": 1.0})
    original = decompose

    def flaky(c, n, n_modes):
        if c == 1.0:
            raise failure
        return original(c, n, n_modes)

    with patch("raman_memory.modes.decompose", side_effect=flaky):
        rows = await singular_value_curve([0.5, 1.0], n_modes=2, n=30)
    failed = [row for row in rows if not row.ok]
    assert [row.c for row in failed] == [1.0, 1.0]
    assert all(np.isnan(row.lam) for row in failed)
    assert failed[0].error == "solver diverged"


async def test_singular_value_curve_rejects_nonpositive():
    """Test coupling validation."""
    with pytest.raises(DomainError):
        await singular_value_curve([1.0, 0.0], n_modes=1, n=10)


@pytest.mark.unit
def test_tables(tmp_path, modes_c2):
    """Test the singular-value and mode table layouts."""
    rows_path = write_table(tmp_path / "sv.csv", singular_values_table([]))
    assert rows_path.read_text() == "C,i,lambda,mu\n"

    path = write_table(tmp_path / "modes.csv", modes_table(modes_c2, n_modes=2))
    lines = path.read_text().splitlines()
    assert lines[0] == "x,phi_1,phi_2"
    assert len(lines) == modes_c2.grid.n + 1
    assert modes_table(modes_c2).header[-1] == "phi_10"
