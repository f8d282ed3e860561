"""Tests for the readout module."""

from unittest.mock import patch

import numpy as np
import pytest

from raman_memory.errors import DomainError, NumericalError
from raman_memory.grid import make_grid
from raman_memory.modes import decompose
from raman_memory.outputs import write_table
from raman_memory.readout import (
    overlaps,
    overlaps_table,
    retrieval_from_spin_wave,
    retrieval_map,
    retrieval_point,
    retrieval_probability,
    retrieval_table,
    retrieval_threshold,
    ridge,
)


@pytest.fixture
def template():
    """Resolution template with 120 nodes."""
    return make_grid(120, 1.0)


@pytest.mark.unit
def test_full_overlap_set_is_complete(template):
    """Test Parseval: the full readout basis captures the whole stored mode."""
    f = overlaps(2.0, 3.0, template.n, template)
    assert np.sum(f**2) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.unit
def test_truncated_overlaps_respect_parseval(template):
    """Test Σfᵢ² <= 1 for a truncated basis."""
    point = retrieval_point(2.0, 5.0, 10, template)
    assert point.parseval_sum <= 1.0 + 1e-6
    assert point.overlaps.shape == (10,)
    assert point.readout_lambdas.shape == (10,)
    assert point.tail_bound >= 0.0


@pytest.mark.unit
def test_retrieval_probability_bounds(template):
    """Test 0 <= 𝒩 <= λ₁² of the readin."""
    n = retrieval_probability(2.0, 2.0, 10, template)
    stored = decompose(2.0, template.n, 1).lambdas[0] ** 2
    assert 0.0 < n < stored


@pytest.mark.unit
def test_retrieval_grows_with_readout_coupling(template):
    """Test that a stronger readout retrieves more."""
    weak = retrieval_probability(2.0, 1.0, 10, template)
    strong = retrieval_probability(2.0, 8.0, 10, template)
    assert strong > weak


@pytest.mark.unit
def test_retrieval_point_validation(template):
    """Test coupling and mode-count validation."""
    with pytest.raises(DomainError):
        retrieval_point(-1.0, 2.0, 5, template)
    with pytest.raises(DomainError):
        retrieval_point(2.0, 0.0, 5, template)
    with pytest.raises(DomainError):
        retrieval_point(2.0, 2.0, template.n + 1, template)


@pytest.mark.unit
def test_retrieval_from_perfect_spin_wave(template):
    """Test that the stored λ₁φ₁ spin wave reproduces the modematched probability."""
    stored = decompose(2.0, template.n, 1)
    spin_wave = stored.lambdas[0] * np.sqrt(template.n) * stored.vectors[0]
    point = retrieval_from_spin_wave(spin_wave, 2.0, 4.0, 10)
    assert point.stored_fraction == pytest.approx(stored.lambdas[0] ** 2)
    assert point.n == pytest.approx(retrieval_probability(2.0, 4.0, 10, template), abs=1e-12)


@pytest.mark.unit
def test_retrieval_from_spin_wave_validation():
    """Test readout request validation."""
    with pytest.raises(DomainError):
        retrieval_from_spin_wave(np.ones(10), 2.0, 2.0, 11)
    with pytest.raises(DomainError):
        retrieval_from_spin_wave(np.ones(10), 2.0, -2.0, 3)


async def test_retrieval_map_order(template):
    """Test that cells come back ordered by C, then Cʳ."""
    points = await retrieval_map([1.0, 2.0], [0.5, 1.5, 2.5], 5, template, workers=3)
    assert [(p.c, p.c_r) for p in points] == [(1.0, 0.5), (1.0, 1.5), (1.0, 2.5), (2.0, 0.5), (2.0, 1.5), (2.0, 2.5)]
    assert all(p.ok for p in points)
    assert points[4].n == pytest.approx(retrieval_probability(2.0, 1.5, 5, template))


async def test_retrieval_map_keeps_failed_cells(template):
    """Test that a failing cell is marked with NaN instead of aborting the map."""
    original = retrieval_point

    def flaky(c, c_r, n_modes, grid):
        if c_r == 1.5:
            raise NumericalError("eigen-solve failed")
        return original(c, c_r, n_modes, grid)

    with patch("raman_memory.readout.retrieval_point", side_effect=flaky):
        points = await retrieval_map([1.0], [0.5, 1.5], 5, template)
    assert points[0].ok
    assert not points[1].ok
    assert np.isnan(points[1].n)
    assert points[1].error == "eigen-solve failed"


async def test_retrieval_map_rejects_nonpositive(template):
    """Test range validation."""
    with pytest.raises(DomainError):
        await retrieval_map([0.0, 1.0], [1.0], 5, template)


@pytest.mark.unit
def test_threshold_and_ridge_on_coarse_grid(template):
    """Test the threshold search and the ridge location on a coarse template."""
    assert retrieval_threshold(2.0, [0.5, 1.0], 0.99, 10, template) is None
    found = retrieval_threshold(2.0, [16.0, 1.0, 4.0], 0.5, 10, template)
    assert found in (1.0, 4.0)
    best = ridge([1.0, 2.0, 3.0], 8.0, 10, template)
    assert best in (1.0, 2.0, 3.0)


@pytest.mark.slow
def test_readout_threshold_exceeds_ten():
    """Test that at C = 2 reaching 𝒩 >= 0.95 needs a readout coupling above 10."""
    grid = make_grid(2000, 1.0)
    scan = [0.5 * k for k in range(1, 33)]
    threshold = retrieval_threshold(2.0, scan, 0.95, 20, grid)
    assert threshold is None or threshold > 10.0


@pytest.mark.slow
def test_retrieval_ridge_near_c2():
    """Test that at Cʳ = 8 the optimal readin coupling lies near 2."""
    grid = make_grid(500, 1.0)
    c_values = [0.5 + 0.25 * k for k in range(19)]
    assert 1.5 <= ridge(c_values, 8.0, 20, grid) <= 2.5



@pytest.mark.unit
def test_overlaps_match_mode_functions(template):
    """Test fᵢ against √(CʳC)∫φᵢʳ[Cʳ(1 − z)]φ₁(Cz)dz evaluated from the mode functions."""
    stored = decompose(2.0, template.n, 1)
    readout = decompose(3.0, template.n, 4)
    z = template.nodes
    expected = [
        np.sqrt(6.0) * template.integrate(readout.mode_function(i, 3.0 * (1.0 - z)) * stored.mode_function(0, 2.0 * z)) for i in range(4)
    ]
    np.testing.assert_allclose(overlaps(2.0, 3.0, 4, template), expected, atol=1e-10)


@pytest.mark.unit
def test_overlaps_invariant_under_joint_reversal(template):
    """Test that reversing both mode arguments only relabels the z integration."""
    stored = decompose(2.0, template.n, 1).vectors[0]
    readout = decompose(5.0, template.n, 6).vectors
    np.testing.assert_allclose(readout @ stored[::-1], overlaps(2.0, 5.0, 6, template), atol=1e-13)


@pytest.mark.unit
def test_flat_spin_wave_overlaps_lowest_readout_mode():
    """Test f₁ >= 0.95 for the nearly flat spin wave stored at C = Cʳ = 0.2."""
    assert overlaps(0.2, 0.2, 5, make_grid(200, 1.0))[0] >= 0.95


@pytest.mark.unit
def test_asymmetric_spin_wave_loses_overlap():
    """Test that f₁ at Cʳ = 2 falls when the readin coupling grows from 2 to 6."""
    grid = make_grid(200, 1.0)
    assert abs(overlaps(6.0, 2.0, 1, grid)[0]) < abs(overlaps(2.0, 2.0, 1, grid)[0])


@pytest.mark.slow
@pytest.mark.parametrize("c, c_r", [(0.2, 0.2), (0.2, 12.0), (2.0, 2.0), (2.0, 12.0), (6.0, 2.0), (12.0, 12.0)])
def test_mode_truncation_converges(c, c_r):
    """Test |𝒩(20 modes) − 𝒩(40 modes)| <= 1e-3."""
    grid = make_grid(500, 1.0)
    assert abs(retrieval_probability(c, c_r, 20, grid) - retrieval_probability(c, c_r, 40, grid)) <= 1e-3


@pytest.mark.slow
def test_repeating_readin_for_readout_is_poor():
    """Test 𝒩(C = 2, Cʳ = 2) against its converged value 0.5168."""
    n = retrieval_probability(2.0, 2.0, 20, make_grid(2000, 1.0))
    assert n < 0.95
    assert n == pytest.approx(0.5168, abs=2e-3)


@pytest.mark.slow
def test_readout_mesh_refinement_at_strong_readout():
    """Test that 𝒩(2, 16) settles near the direct-propagation value 0.9112 on the 2000-node mesh."""
    coarse = retrieval_probability(2.0, 16.0, 20, make_grid(1000, 1.0))
    fine = retrieval_probability(2.0, 16.0, 20, make_grid(2000, 1.0))
    assert abs(fine - coarse) <= 3e-3
    assert abs(fine - 0.9112) < abs(coarse - 0.9112)
    assert fine >= 0.905


@pytest.mark.unit
def test_tables(tmp_path, template):
    """Test the map and overlap table layouts."""
    point = retrieval_point(2.0, 2.0, 3, template)
    table = overlaps_table(point)
    assert table.header == ["i", "f_i", "lambda_r_i"]
    assert [row[0] for row in table.rows] == [1, 2, 3]

    lines = write_table(tmp_path / "map.csv", retrieval_table([point])).read_text().splitlines()
    assert lines == ["C,Cr,N", f"2,2,{format(point.n, '.12g')}"]
