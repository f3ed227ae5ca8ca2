import math

import numpy as np
import pytest

from common.errors import DimensionUnsupportedError, DomainError, FitDegeneracyError, ResolutionError
from fg_expansion.recursion import fg_expand
from gauge.normal_form import SeriesNormalForm, hyperbolic_normal_form
from gauge.special_defining import change_of_gauge, solve_special_defining
from manifold.conformal_factor import parse_upsilon
from manifold.fields import ScalarField
from manifold.metric_families import FlatTorus, RoundSphere
from volume_renorm.anomaly import constant_rescale_slope, volume_anomaly
from volume_renorm.fitting import epsilon_grid, fit_expansion, parity_tail
from volume_renorm.identities import L_identity_sides
from volume_renorm.profile import gauge_volume_difference, volume_profile
from volume_renorm.radial import integrate_between, integrate_radial
from volume_renorm.renormalized_volume import (
    gauge_comparison,
    hyperbolic_profile,
    hyperbolic_reference,
    renormalized_volume,
    subtraction_route,
)


@pytest.mark.parametrize(
    "n, expected",
    [
        (1, -2 * math.pi),
        (2, -2 * math.pi),
        (3, 4 * math.pi**2 / 3),
        (4, math.pi**2),
        (5, -8 * math.pi**3 / 15),
        (6, -(math.pi**3) / 3),
    ],
)
def test_hyperbolic_reference(n, expected):
    assert hyperbolic_reference(n) == pytest.approx(expected, rel=1e-14)


def test_hyperbolic_plane_profile():
    eps = np.array([0.01, 0.1, 0.5])
    expected = math.pi * (1 / eps + eps) - 2 * math.pi
    np.testing.assert_allclose(hyperbolic_profile(1, eps), expected, rtol=1e-13)


def test_radial_rules():
    assert float(integrate_radial(lambda r: np.array([r**-2]), 0.01, 0.5)[0]) == pytest.approx(98.0, rel=1e-13)
    lo, hi = np.array([0.01, 0.02]), np.array([0.02, 0.01])
    np.testing.assert_allclose(integrate_between(lambda r: 1.0 / r, lo, hi), [math.log(2), -math.log(2)], rtol=1e-13)


def test_fit_recovers_exact_expansion():
    eps = epsilon_grid()
    values = 3.0 / eps**2 - 2 * math.pi * np.log(1 / eps) + 5.0 + 0.5 * eps**2
    fit = fit_expansion(eps, values, leading=2, log_term=True, tail=parity_tail(2, 2))
    assert fit.divergent(0) == pytest.approx(3.0, rel=1e-9)
    assert fit.log_coefficient == pytest.approx(-2 * math.pi, rel=1e-9)
    assert fit.constant == pytest.approx(5.0, rel=1e-9)


def test_fit_condition_is_that_of_scaled_design():
    eps = epsilon_grid()
    fit = fit_expansion(eps, 3.0 / eps**2 + 5.0, leading=2, log_term=True, tail=[2])
    design = np.stack([eps**-2, np.log(1 / eps), np.ones_like(eps), eps**2], axis=1) * (eps**2)[:, None]
    design = design / np.linalg.norm(design, axis=0)
    assert fit.condition == pytest.approx(np.linalg.cond(design), rel=1e-8)
    assert fit.constant == pytest.approx(5.0, rel=1e-9)


def test_fit_rejects_degenerate_cutoffs():
    eps = np.geomspace(0.1, 0.1 * (1 - 1e-7), 24)
    with pytest.raises(FitDegeneracyError):
        fit_expansion(eps, 1 / eps**2, leading=2, log_term=True, tail=[2, 4])


def test_fit_needs_enough_samples():
    eps = epsilon_grid(count=5)
    with pytest.raises(ValueError):
        fit_expansion(eps, 1 / eps, leading=1, log_term=False, tail=[1, 3])


def test_parity_tail():
    assert parity_tail(3, 3) == [1, 3, 5]
    assert parity_tail(2, 2) == [2, 4]
    assert parity_tail(2, 2, top=2) == [2]


def test_hyperbolic_profile_matches_quadrature():
    nf = hyperbolic_normal_form(2, nodes=8)
    eps = epsilon_grid()
    profile = volume_profile(nf, eps)
    np.testing.assert_allclose(profile.values, hyperbolic_profile(2, eps), rtol=1e-10)


def test_flat_series_profile():
    ps = fg_expand(FlatTorus(2), 2, nodes=4)
    nf = SeriesNormalForm(ps)
    eps = np.array([0.01, 0.05, 0.2])
    r0 = 0.5
    expected = 4 * math.pi**2 * (eps**-2 - r0**-2) / 2
    np.testing.assert_allclose(volume_profile(nf, eps, r0=r0).values, expected, rtol=1e-12)


def test_profile_at_r0_is_inner_constant():
    nf = hyperbolic_normal_form(2, nodes=8)
    profile = volume_profile(nf, np.array([0.5]), r0=0.5)
    assert profile.values[0] == pytest.approx(nf.inner_constant(0.5))


def test_profile_below_resolution():
    nf = hyperbolic_normal_form(2, nodes=8)
    with pytest.raises(ResolutionError):
        volume_profile(nf, np.array([1e-9, 0.1]))


@pytest.mark.parametrize("n, nodes", [(1, 8), (3, 6), (5, 3)])
def test_subtraction_route_odd_volumes(n, nodes):
    volume, log_integral = subtraction_route(hyperbolic_normal_form(n, nodes))
    assert volume == pytest.approx(hyperbolic_reference(n), rel=1e-6)
    assert abs(log_integral) < 1e-10


def test_fitted_volume_of_h4():
    fit = renormalized_volume(hyperbolic_normal_form(3, nodes=6))
    assert fit.constant == pytest.approx(4 * math.pi**2 / 3, rel=1e-6)
    assert fit.divergent(0) == pytest.approx(fit.crosschecks["c0_expected"], rel=1e-8)


@pytest.mark.parametrize("n, nodes", [(2, 8), (4, 4), (6, 3)])
def test_fitted_log_coefficients(n, nodes):
    fit = renormalized_volume(hyperbolic_normal_form(n, nodes))
    assert fit.log_coefficient == pytest.approx(hyperbolic_reference(n), rel=1e-5)
    assert fit.crosschecks["L_integral"] == pytest.approx(hyperbolic_reference(n), rel=1e-8)


def _omega(nf, expr):
    upsilon = parse_upsilon(expr, nf.dimension)
    return solve_special_defining(nf, ScalarField(values=upsilon.value(nf.grid.points), grid=nf.grid))


def test_log_coefficient_is_gauge_invariant():
    nf = hyperbolic_normal_form(2, nodes=16)
    comparison = gauge_comparison(nf, _omega(nf, "0.1*cos(x1)"))
    assert abs(comparison.log_change) < 5e-5


def test_gauged_profile_counts_region_above_rescaled_cutoff():
    nf = hyperbolic_normal_form(2, nodes=16)
    omega = _omega(nf, "0.1*cos(x1)")
    eps = epsilon_grid()
    direct = volume_profile(nf, eps)
    gauged = volume_profile(nf, eps, gauge=omega)
    assert gauged.gauged and not direct.gauged
    difference = gauge_volume_difference(nf, change_of_gauge(omega), eps)
    np.testing.assert_allclose(gauged.values, direct.values - difference, rtol=1e-12)

    tail = list(range(1, 5))
    refit = fit_expansion(eps, gauged.values, leading=2, log_term=True, tail=tail)
    comparison = gauge_comparison(nf, omega, eps)
    assert refit.log_coefficient == pytest.approx(hyperbolic_reference(2), abs=5e-5)
    assert refit.constant == pytest.approx(comparison.shifted_volume, abs=1e-6)


def test_log_coefficient_is_gauge_invariant_in_four_dimensions():
    nf = hyperbolic_normal_form(4)
    comparison = gauge_comparison(nf, _omega(nf, "0.1*cos(x1)"))
    assert abs(comparison.log_change) < 1e-5


def test_odd_volume_is_gauge_invariant():
    nf = hyperbolic_normal_form(3, nodes=8)
    comparison = gauge_comparison(nf, _omega(nf, "0.1*cos(x1)"))
    assert comparison.log_change is None
    assert abs(comparison.volume_change) < 5e-5


@pytest.mark.parametrize("expr", ["0.1*cos(x1)", "0.05*cos(2*x1)", "0.08*cos(x1) - 0.03*cos(3*x1)"])
def test_volume_anomaly_two_routes(quarter_sphere, expr):
    report = volume_anomaly(quarter_sphere, parse_upsilon(expr, 2), nodes=16)
    assert report.discrepancy < 1e-4


def test_volume_anomaly_constant(quarter_sphere):
    tau = 0.3
    report = volume_anomaly(quarter_sphere, parse_upsilon(str(tau), 2), nodes=12, gauge_route=False)
    assert report.anomaly_integral == pytest.approx(-2 * math.pi * tau, rel=1e-10)
    assert report.discrepancy is None


def test_volume_anomaly_zero(quarter_sphere):
    report = volume_anomaly(quarter_sphere, parse_upsilon("0", 2), nodes=8, gauge_route=False)
    assert report.anomaly_integral == 0.0


def test_volume_anomaly_needs_even_dimension():
    with pytest.raises(DimensionUnsupportedError):
        volume_anomaly(RoundSphere(3, 0.5), parse_upsilon("0.1", 3), nodes=3, gauge_route=False)


def test_constant_rescale_slope_is_log_coefficient():
    slope, expected = constant_rescale_slope(hyperbolic_normal_form(2, nodes=8))
    assert expected == pytest.approx(-2 * math.pi, rel=1e-8)
    assert slope == pytest.approx(expected, rel=1e-4)


@pytest.mark.parametrize(
    "family, nodes, expected",
    [
        (RoundSphere(2, 0.5), 8, -2 * math.pi),
        (RoundSphere(4, 0.5), 4, math.pi**2),
        (RoundSphere(6, 0.5), 3, -(math.pi**3) / 3),
        (FlatTorus(2), 4, 0.0),
    ],
)
def test_L_identities(family, nodes, expected):
    direct, identity = L_identity_sides(family, nodes=nodes)
    assert direct == pytest.approx(expected, rel=1e-5, abs=1e-10)
    assert identity == pytest.approx(direct, rel=1e-5, abs=1e-10)


def test_L_identities_unsupported_dimension():
    with pytest.raises(DimensionUnsupportedError):
        L_identity_sides(RoundSphere(3, 0.5), nodes=3)


def test_volume_anomaly_rejects_non_zonal_upsilon(quarter_sphere):
    with pytest.raises(DomainError):
        volume_anomaly(quarter_sphere, parse_upsilon("0.1*sin(x1)", 2), nodes=8)
