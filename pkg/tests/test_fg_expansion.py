import numpy as np
import pytest

from common.errors import IndeterminacyError, InsufficientOrderError
from fg_expansion.power_series import TensorSeries, matrix_inverse, sqrt_det_ratio
from fg_expansion.recursion import DETERMINED, FREE, TRACE_ONLY, fg_expand
from fg_expansion.volume_series import volume_series
from manifold.curvature import curvature_pack
from manifold.metric_families import FlatTorus, RoundSphere


def test_matrix_inverse_of_geometric_series():
    eye = np.eye(2)
    series = TensorSeries(np.stack([eye, -eye, 0 * eye, 0 * eye]))
    inverse = matrix_inverse(series)
    for j in range(4):
        np.testing.assert_allclose(inverse[j], eye, atol=1e-14)


def test_sqrt_det_ratio_of_hyperbolic_metric():
    eye = np.eye(3)
    series = TensorSeries(np.stack([eye, 0 * eye, -2 * eye, 0 * eye, eye, 0 * eye, 0 * eye]))
    density = sqrt_det_ratio(series)
    np.testing.assert_allclose(density.c, [1, 0, -3, 0, 3, 0, -1], atol=1e-12)


def test_quarter_three_sphere_reproduces_hyperbolic_series():
    g0 = RoundSphere(3, radius=0.5)
    ps = fg_expand(g0, 4, nodes=6)
    metric0 = ps.coefficient(0)
    np.testing.assert_allclose(ps.coefficient(2), -2.0 * metric0, atol=1e-8)
    np.testing.assert_allclose(ps.coefficient(4), metric0, atol=1e-8)
    assert np.abs(ps.coefficient(1)).max() < 1e-9
    assert np.abs(ps.coefficient(3)).max() < 1e-9
    assert ps.flags[3] == FREE
    assert ps.flags[2] == DETERMINED


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_second_coefficient_is_minus_schouten(n):
    g0 = RoundSphere(n, radius=0.5)
    ps = fg_expand(g0, 2, nodes=3)
    pack = curvature_pack(g0, ps.grid.points, with_bach=False)
    np.testing.assert_allclose(ps.coefficient(2), -pack.require("schouten"), atol=1e-8)


def test_two_sphere_trace_and_obstruction(quarter_sphere):
    ps = fg_expand(quarter_sphere, 2, nodes=8)
    np.testing.assert_allclose(ps.trace(2), -4.0, atol=1e-8)
    assert ps.flags[2] == TRACE_ONLY
    assert np.abs(ps.log_coefficient).max() < 1e-8


def test_flat_torus_has_trivial_expansion():
    ps = fg_expand(FlatTorus(3), 3, nodes=4)
    assert np.abs(ps.coefficients[1:]).max() == 0.0
    np.testing.assert_allclose(ps.residual, 0.0, atol=1e-12)


def test_even_dimension_stops_at_n(quarter_sphere):
    with pytest.raises(IndeterminacyError):
        fg_expand(quarter_sphere, 3, nodes=4)


def test_strict_odd_dimension_stops_at_n():
    with pytest.raises(IndeterminacyError):
        fg_expand(RoundSphere(3, radius=0.5), 4, nodes=3, strict=True)


def test_coefficient_beyond_order():
    ps = fg_expand(RoundSphere(3, radius=0.5), 2, nodes=3)
    with pytest.raises(InsufficientOrderError):
        ps.coefficient(3)


def test_hyperbolic_volume_coefficients():
    ps = fg_expand(RoundSphere(3, radius=0.5), 2, nodes=4)
    series = volume_series(ps)
    np.testing.assert_allclose(series.v(2), -3.0, atol=1e-8)


def test_four_sphere_volume_coefficient_two_routes():
    ps = fg_expand(RoundSphere(4, radius=0.5), 4, nodes=4)
    series = volume_series(ps)
    np.testing.assert_allclose(series.v(4), 6.0, atol=1e-6)
    np.testing.assert_allclose(series.closed_forms[4], 6.0, atol=1e-6)
    assert series.discrepancy[4] < 1e-6


def test_six_sphere_volume_coefficient_two_routes():
    ps = fg_expand(RoundSphere(6, radius=0.5), 6, nodes=3)
    series = volume_series(ps)
    np.testing.assert_allclose(series.v(6), -20.0, atol=1e-7)
    np.testing.assert_allclose(series.closed_forms[6], -20.0, atol=1e-7)
    assert series.discrepancy[6] < 1e-7


def test_flat_torus_volume_coefficients_vanish():
    ps = fg_expand(FlatTorus(2), 2, nodes=4)
    series = volume_series(ps)
    assert np.abs(series.taylor[1:]).max() == 0.0


def test_volume_coefficient_beyond_series():
    ps = fg_expand(RoundSphere(3, radius=0.5), 2, nodes=3)
    with pytest.raises(InsufficientOrderError):
        volume_series(ps, order=4)


def test_quarter_three_sphere_closed_form_at_default_resolution():
    g0 = RoundSphere(3, radius=0.5)
    ps = fg_expand(g0, 4)
    metric0 = ps.coefficient(0)
    assert np.abs(ps.coefficient(2) + 2.0 * metric0).max() < 1e-8
    assert np.abs(ps.coefficient(4) - metric0).max() < 1e-8
