import math

import numpy as np
import pytest

from area_renorm.anomaly import area_anomaly, area_anomaly_report
from area_renorm.equivariant import LATITUDE, TORUS, RotationalBoundary, equivariant_minimal_graph
from area_renorm.minimal_graphs import geodesic_between, totally_geodesic
from area_renorm.renormalized_area import area_gauge_comparison, renormalized_area
from area_renorm.submanifold import (
    Embedding,
    equatorial_sphere,
    flat_slice,
    k2_integrand,
    k2_log_coefficient,
    latitude,
    submanifold_geometry,
    willmore_integrand,
)
from common.errors import (
    DegenerateEndpointsError,
    DimensionUnsupportedError,
    DomainError,
    ImmersionError,
    SymmetryError,
)
from gauge.normal_form import hyperbolic_normal_form
from gauge.special_defining import solve_special_defining
from manifold.conformal_factor import parse_upsilon
from manifold.fields import ScalarField
from manifold.metric_families import FlatTorus, RoundSphere, sphere_chart_to_unit
from manifold.quadrature import torus_grid


def _omega(n, expr, nodes):
    nf = hyperbolic_normal_form(n, nodes)
    upsilon = parse_upsilon(expr, n)
    return solve_special_defining(nf, ScalarField(values=upsilon.value(nf.grid.points), grid=nf.grid))


# submanifold geometry


def test_equatorial_sphere_in_quarter_three_sphere():
    patch = submanifold_geometry(equatorial_sphere(2, 3, nodes=10), RoundSphere(3, 0.5))
    assert np.abs(patch.second_fundamental_form).max() < 1e-6
    assert np.abs(patch.mean_curvature).max() < 1e-6
    np.testing.assert_allclose(patch.schouten_trace, 4.0, atol=1e-8)
    assert patch.area == pytest.approx(math.pi, rel=1e-10)
    assert k2_log_coefficient(patch) == pytest.approx(-2 * math.pi, rel=1e-8)


def _latitude_curvature_oracle(theta0: float, h: float = 1e-3) -> float:
    """Geodesic curvature of a latitude circle from second differences of the curve in R^3."""
    phi = np.array([-h, 0.0, h])
    curve = np.stack(
        [np.full(3, math.cos(theta0)), math.sin(theta0) * np.cos(phi), math.sin(theta0) * np.sin(phi)], axis=1
    )
    velocity = (curve[2] - curve[0]) / (2 * h)
    acceleration = (curve[2] - 2 * curve[1] + curve[0]) / h**2
    curvature = acceleration / (velocity @ velocity)
    tangential = curvature - (curvature @ curve[1]) * curve[1]
    return float(np.linalg.norm(tangential))


def test_latitude_mean_curvature_matches_oracle():
    theta0 = math.pi / 3
    patch = submanifold_geometry(latitude(theta0, 2, nodes=16), RoundSphere(2, 1.0))
    oracle = _latitude_curvature_oracle(theta0)
    np.testing.assert_allclose(np.sqrt(patch.mean_curvature_norm2), oracle, atol=1e-6)
    assert oracle == pytest.approx(1 / math.tan(theta0), abs=1e-6)


def test_flat_slice_has_zero_log_coefficient():
    patch = submanifold_geometry(flat_slice(2, 3, nodes=8), FlatTorus(3))
    assert abs(k2_log_coefficient(patch)) < 1e-12
    assert patch.area == pytest.approx(4 * math.pi**2)


def test_log_coefficient_formula_needs_surfaces():
    patch = submanifold_geometry(equatorial_sphere(1, 3, nodes=8), RoundSphere(3, 0.5))
    with pytest.raises(DimensionUnsupportedError):
        k2_log_coefficient(patch)


def test_log_integrand_is_willmore_in_flat_torus():
    grid = torus_grid([2 * math.pi, 2 * math.pi], 16)
    wavy = Embedding(
        dimension=2,
        ambient_dimension=3,
        chart_map=lambda p: np.column_stack([p[:, 0], p[:, 1], 0.2 * np.sin(p[:, 0])]),
        grid=grid,
        coordinate_weights=grid.weights,
        label="wavy T^2 in T^3",
    )
    patch = submanifold_geometry(wavy, FlatTorus(3))
    x = grid.points[:, 0]
    expected = (0.2 * np.sin(x)) ** 2 / (1.0 + (0.2 * np.cos(x)) ** 2) ** 3
    np.testing.assert_allclose(willmore_integrand(patch), expected, atol=1e-7)
    np.testing.assert_allclose(k2_integrand(patch), -willmore_integrand(patch) / 8.0, atol=1e-15)
    assert k2_log_coefficient(patch) == pytest.approx(-patch.integrate(expected) / 8.0, rel=1e-6)


def test_degenerate_immersion():
    grid = torus_grid([2 * math.pi], 8)
    collapsed = Embedding(
        dimension=1,
        ambient_dimension=2,
        chart_map=lambda p: np.tile([1.0, 0.5], (np.atleast_2d(p).shape[0], 1)),
        grid=grid,
        coordinate_weights=grid.weights,
        label="collapsed curve",
    )
    with pytest.raises(ImmersionError):
        submanifold_geometry(collapsed, RoundSphere(2, 0.5))


# minimal graphs and renormalized areas


def test_diameter_geodesic():
    graph = geodesic_between([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0])
    assert graph.is_diameter
    fit = renormalized_area(graph)
    assert fit.log_coefficient == pytest.approx(2.0, abs=1e-8)
    assert abs(fit.constant) < 1e-8
    assert graph.boundary_orthogonality() < 1e-10


def test_quarter_circle_geodesic():
    graph = geodesic_between([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    fit = renormalized_area(graph)
    assert fit.crosschecks["A_closed"] == pytest.approx(-math.log(2.0))
    assert fit.constant == pytest.approx(-math.log(2.0), abs=1e-6)
    assert fit.log_coefficient == pytest.approx(2.0, abs=1e-6)
    assert max(graph.parity_defects().values()) < 1e-8


def test_coincident_endpoints():
    with pytest.raises(DegenerateEndpointsError):
        geodesic_between([0.0, 1.0, 0.0], [0.0, 1.0, 0.0])


def test_totally_geodesic_plane():
    graph = totally_geodesic(1, 2)
    eps = np.array([0.01, 0.1, 0.5])
    np.testing.assert_allclose(graph.area_profile(eps), math.pi * (1 / eps + eps) - 2 * math.pi, rtol=1e-12)
    fit = renormalized_area(graph)
    assert fit.constant == pytest.approx(-2 * math.pi, abs=1e-6)


def test_totally_geodesic_three_space():
    fit = renormalized_area(totally_geodesic(2, 3, nodes=12))
    assert fit.log_coefficient == pytest.approx(-2 * math.pi, abs=1e-5)
    assert fit.crosschecks["K_formula"] == pytest.approx(-2 * math.pi, abs=1e-5)
    assert fit.crosschecks["K_density"] == pytest.approx(-2 * math.pi)
    assert fit.divergent(0) == pytest.approx(fit.crosschecks["b0_expected"], rel=1e-8)


def test_totally_geodesic_ray():
    fit = renormalized_area(totally_geodesic(0, 2))
    assert fit.log_coefficient == pytest.approx(2.0, abs=1e-8)


def test_totally_geodesic_out_of_range():
    with pytest.raises(DomainError):
        totally_geodesic(3, 3)


def test_renormalized_area_rejects_wrong_k():
    with pytest.raises(DomainError):
        renormalized_area(totally_geodesic(1, 2), k=2)


def test_cutoffs_beyond_apex():
    graph = geodesic_between([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    with pytest.raises(DomainError):
        renormalized_area(graph, epsilons=np.linspace(0.05, 0.6, 24))


# equivariant shooting


def test_latitude_recovers_totally_geodesic_plane():
    graph = equivariant_minimal_graph(RotationalBoundary(kind=LATITUDE, angle=1.0), 2)
    assert graph.plane_deviation() < 1e-6
    assert graph.residual < 1e-7
    assert graph.boundary_orthogonality() < 1e-6
    fit = renormalized_area(graph)
    assert fit.constant == pytest.approx(-2 * math.pi, abs=1e-5)


def test_equatorial_latitude_is_flat():
    graph = equivariant_minimal_graph(RotationalBoundary(kind=LATITUDE, angle=0.5 * math.pi), 2)
    assert graph.max_graph() < 1e-8


def test_torus_log_coefficient_two_routes():
    graph = equivariant_minimal_graph(RotationalBoundary(kind=TORUS, angle=0.25 * math.pi), 3)
    fit = renormalized_area(graph)
    assert fit.crosschecks["K_closed"] == pytest.approx(-(math.pi**2))
    assert fit.crosschecks["K_formula"] == pytest.approx(-(math.pi**2), rel=1e-6)
    assert abs(fit.log_coefficient - fit.crosschecks["K_formula"]) < 1e-3


def test_torus_needs_three_sphere():
    with pytest.raises(SymmetryError):
        equivariant_minimal_graph(RotationalBoundary(kind=TORUS, angle=0.5), 2)


def test_latitude_angle_out_of_range():
    with pytest.raises(DomainError):
        equivariant_minimal_graph(RotationalBoundary(kind=LATITUDE, angle=4.0), 2)


# area anomaly


def test_point_anomaly_two_routes(zonal_upsilon):
    chart = np.array([[0.7, 0.3], [2.0, 2.5]])
    p, q = sphere_chart_to_unit(chart)
    graph = geodesic_between(p, q)
    expected = 0.1 * (math.cos(0.7) + math.cos(2.0))
    assert area_anomaly(graph.boundary_points(), zonal_upsilon, 0) == pytest.approx(expected, rel=1e-10)
    report = area_anomaly_report(graph, zonal_upsilon, nodes=16)
    assert report.discrepancy < 1e-5


def test_surface_anomaly_constant_upsilon():
    tau = 0.1
    embedding = equatorial_sphere(2, 3, nodes=10)
    value = area_anomaly(embedding, parse_upsilon(str(tau), 3), 2)
    assert value == pytest.approx(-2 * math.pi * tau, rel=1e-6)


def test_surface_anomaly_constant_upsilon_gauge_route():
    report = area_anomaly_report(totally_geodesic(2, 3, nodes=8), parse_upsilon("0.1", 3), nodes=8)
    assert report.anomaly_integral == pytest.approx(-0.2 * math.pi, rel=1e-6)
    assert report.discrepancy < 1e-5


def test_surface_anomaly_normal_gradient():
    value = area_anomaly(equatorial_sphere(2, 3, nodes=8), parse_upsilon("0.1*cos(x1)", 3), 2)
    assert value == pytest.approx(-0.01 * math.pi, rel=1e-5)


def test_anomaly_of_zero_upsilon():
    assert area_anomaly(equatorial_sphere(2, 3, nodes=6), parse_upsilon("0", 3), 2) == 0.0


def test_anomaly_unsupported_k():
    with pytest.raises(DimensionUnsupportedError):
        area_anomaly(equatorial_sphere(1, 2, nodes=6), parse_upsilon("0.1", 2), 1)


def test_odd_area_is_gauge_invariant():
    omega = _omega(2, "0.05*cos(2*x1)", nodes=16)
    comparison = area_gauge_comparison(totally_geodesic(1, 2, nodes=16), omega)
    assert abs(comparison.area_change) < 1e-5
    assert comparison.log_change is None
