import numpy as np
import pytest

from scripts.models.kernel import (
    FAR_CELLS,
    Cells,
    _gauss_legendre,
    potential_integrals,
    potential_matrix,
    segment_distances,
)
from scripts.models.mom import Wire

LAM = 0.125
K = 2 * np.pi / LAM


def _dipole_cells(center=(0.0, 0.0, 0.0), axis=(0.0, 0.0, 1.0), pulses=11) -> Cells:
    c = np.asarray(center, float)
    half = np.asarray(axis, float) * LAM / 4
    return Wire("w", c - half, c + half, LAM / 1000, pulses).current_cells()


def test_gauss_legendre_maps_to_unit_interval():
    nodes, weights = _gauss_legendre(4)
    assert np.all((nodes > 0) & (nodes < 1))
    assert weights.sum() == pytest.approx(1.0)
    # exact for cubics
    assert np.sum(weights * nodes**3) == pytest.approx(0.25)


def test_self_term_matches_high_order_rule():
    cells = _dipole_cells()
    matrix = potential_matrix(cells, cells, K, same=True)
    reference = potential_integrals(cells.centers[:1], cells.take(slice(0, 1)), K, order=24)

    assert matrix[0, 0] == pytest.approx(reference[0, 0], rel=1e-6)


def test_potential_matrix_is_symmetric():
    a = _dipole_cells()
    b = _dipole_cells(center=(0.02, 0.03, 0.0), axis=(0.0, 0.6, 0.8), pulses=7)
    cells = Cells.concat([a, b])

    matrix = potential_matrix(cells, cells, K, same=True)
    np.testing.assert_allclose(matrix, matrix.T, rtol=1e-14, atol=0)

    across = potential_matrix(a, b, K)
    np.testing.assert_allclose(across, potential_matrix(b, a, K).T, rtol=1e-14, atol=0)


def test_far_rule_close_to_accurate_integral():
    cells = _dipole_cells(pulses=11)
    cell = cells.take(slice(5, 6))
    shift = np.array([[2 * FAR_CELLS * cell.length[0], 0.0, 0.0]])
    far = Cells(cell.start + shift, cell.direction, cell.length, cell.radius)

    banded = potential_matrix(far, cell, K)[0, 0]
    accurate = potential_integrals(far.centers, cell, K, order=16)[0, 0]

    assert abs(banded - accurate) / abs(accurate) < 5e-3


def test_segment_distances():
    p0 = np.array([[0.0, 0, 0], [0.0, 0, 0], [0.0, 0, 0]])
    p1 = np.array([[1.0, 0, 0], [1.0, 0, 0], [1.0, 0, 0]])
    q0 = np.array([[0.0, 1, 0], [0.5, -1, 0], [2.0, 0, 0]])
    q1 = np.array([[1.0, 1, 0], [0.5, 1, 0], [3.0, 0, 0]])

    np.testing.assert_allclose(segment_distances(p0, p1, q0, q1), [1.0, 0.0, 1.0], atol=1e-12)
