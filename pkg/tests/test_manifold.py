import itertools
import math

import numpy as np
import pytest

from common.errors import DimensionUnsupportedError, DomainError, GridShapeError
from manifold.conformal_factor import parse_upsilon
from manifold.curvature import curvature_pack
from manifold.fields import ScalarField, integrate_scalar
from manifold.invariants import conformal_invariants_6d, gauss_bonnet_sides
from manifold.quadrature import GridAxis
from manifold.metric_families import (
    ConformalRescaling,
    FlatTorus,
    RoundSphere,
    require_zonal,
    sphere_chart_to_unit,
    unit_to_sphere_chart,
)


def test_integrate_constant_on_quarter_sphere(quarter_sphere):
    grid = quarter_sphere.quadrature_grid(12)
    field = ScalarField.sample(lambda x: np.ones(x.shape[0]), grid)
    assert integrate_scalar(field, quarter_sphere) == pytest.approx(math.pi, rel=1e-12)


def test_integrate_on_flat_torus(flat_torus):
    grid = flat_torus.quadrature_grid(16)
    ones = ScalarField.sample(lambda x: np.ones(x.shape[0]), grid)
    sin2 = ScalarField.sample(lambda x: np.sin(x[:, 0]) ** 2, grid)
    assert integrate_scalar(ones, flat_torus) == pytest.approx(4 * math.pi**2, rel=1e-12)
    assert integrate_scalar(sin2, flat_torus) == pytest.approx(2 * math.pi**2, rel=1e-12)


def test_integrate_rejects_other_resolution(flat_torus):
    field = ScalarField.sample(lambda x: np.ones(x.shape[0]), flat_torus.quadrature_grid(8))
    other = FlatTorus(2, periods=(1.0, 1.0))
    with pytest.raises(GridShapeError):
        integrate_scalar(field, other)


def test_grid_check_rejects_wrong_length(flat_torus):
    grid = flat_torus.quadrature_grid(8)
    with pytest.raises(GridShapeError):
        grid.integrate(np.ones(grid.size + 1))


def test_flat_torus_curvature_vanishes():
    family = FlatTorus(3)
    x = family.quadrature_grid(3).points[:5]
    pack = curvature_pack(family, x, with_bach=False)
    assert np.abs(pack.riemann).max() == 0.0
    assert np.abs(pack.require("schouten")).max() == 0.0
    assert np.abs(pack.scalar).max() == 0.0


def test_round_sphere_schouten_is_half_curvature():
    family = RoundSphere(3, radius=0.5)
    x = family.quadrature_grid(4).points[:7]
    pack = curvature_pack(family, x, with_bach=False)
    c = family.curvature
    np.testing.assert_allclose(pack.require("schouten"), 0.5 * c * pack.metric, atol=1e-8)
    np.testing.assert_allclose(pack.scalar, 6.0 * c, rtol=1e-8)
    assert np.abs(pack.require("weyl")).max() < 1e-8


def test_schouten_unavailable_in_two_dimensions(quarter_sphere):
    pack = curvature_pack(quarter_sphere, np.array([[1.0, 0.3]]))
    with pytest.raises(DimensionUnsupportedError):
        pack.require("schouten")


def test_conformally_flat_torus_scalar_curvature():
    upsilon = parse_upsilon("0.1*sin(x1)", 2)
    family = ConformalRescaling(FlatTorus(2), upsilon)
    x = np.array([[0.3, 1.0], [1.7, 2.0], [4.0, 0.5]])
    pack = curvature_pack(family, x)
    expected = 0.2 * np.exp(-0.2 * np.sin(x[:, 0])) * np.sin(x[:, 0])
    np.testing.assert_allclose(pack.scalar, expected, atol=1e-6)


def test_conformal_invariants_vanish_on_flat_torus():
    family = FlatTorus(3)
    x = family.quadrature_grid(3).points[:4]
    invariants = conformal_invariants_6d(family, x)
    assert np.abs(invariants.i_scalar).max() < 1e-10
    assert np.abs(invariants.j_scalar).max() < 1e-10


def test_conformal_invariants_need_three_dimensions(flat_torus):
    with pytest.raises(DimensionUnsupportedError):
        conformal_invariants_6d(flat_torus, np.zeros((1, 2)))


def test_gauss_bonnet_round_sphere():
    lhs, rhs = gauss_bonnet_sides(RoundSphere(4, radius=0.5), nodes=6)
    assert lhs == pytest.approx(64 * math.pi**2)
    assert rhs == pytest.approx(lhs, rel=1e-5)


def test_gauss_bonnet_flat_torus():
    lhs, rhs = gauss_bonnet_sides(FlatTorus(4), nodes=3)
    assert lhs == 0.0
    assert abs(rhs) < 1e-8


def test_gauss_bonnet_conformally_invariant():
    base = RoundSphere(4, radius=0.5)
    rescaled = ConformalRescaling(base, parse_upsilon("0.05*cos(x1)", 4))
    _, rhs = gauss_bonnet_sides(base, nodes=10)
    _, rhs_hat = gauss_bonnet_sides(rescaled, nodes=10)
    assert rhs_hat == pytest.approx(rhs, rel=1e-5)


def test_gauss_bonnet_needs_four_dimensions(quarter_sphere):
    with pytest.raises(DimensionUnsupportedError):
        gauss_bonnet_sides(quarter_sphere)


def test_sphere_chart_round_trip():
    x = np.array([[0.4, 1.1, 2.5], [2.0, 0.7, 5.9]])
    np.testing.assert_allclose(unit_to_sphere_chart(sphere_chart_to_unit(x)), x, atol=1e-12)


def test_parse_upsilon_terms():
    upsilon = parse_upsilon("0.1*cos(x1) - 0.05*cos(2*x1) + 0.2", 2)
    assert upsilon.constant == pytest.approx(0.2)
    assert [term.amplitude for term in upsilon.terms] == [0.1, -0.05]
    x = np.array([[0.7, 0.0]])
    expected = 0.1 * math.cos(0.7) - 0.05 * math.cos(1.4) + 0.2
    assert upsilon.value(x)[0] == pytest.approx(expected)


@pytest.mark.parametrize("expr", ["0.1*tan(x1)", "cos(x3)"])
def test_parse_upsilon_rejects(expr):
    with pytest.raises(ValueError):
        parse_upsilon(expr, 2)


def test_sphere_rescaling_must_be_zonal(quarter_sphere):
    with pytest.raises(DomainError, match="poles of the polar chart"):
        ConformalRescaling(quarter_sphere, parse_upsilon("0.1*cos(x2)", 2))
    assert ConformalRescaling(quarter_sphere, parse_upsilon("0.1*cos(3*x1) + 0.2", 2)).dimension == 2


def test_polar_derivatives_of_polynomial_in_cosine():
    axis = GridAxis.polar(24, 0.5)
    theta = axis.nodes
    values = np.cos(theta) ** 5
    first = -5.0 * np.cos(theta) ** 4 * np.sin(theta)
    second = 20.0 * np.cos(theta) ** 3 * np.sin(theta) ** 2 - 5.0 * np.cos(theta) ** 5
    np.testing.assert_allclose(axis.first_derivative() @ values, first, atol=1e-11)
    np.testing.assert_allclose(axis.second_derivative() @ values, second, atol=1e-10)
    np.testing.assert_allclose(axis.first_derivative() @ np.ones(24), 0.0, atol=1e-13)


def test_polar_interpolation_is_exact_for_polynomials():
    axis = GridAxis.polar(12, 1.0)
    values = np.cos(axis.nodes) ** 3 - np.cos(axis.nodes)
    for theta in (0.0, 0.37, axis.nodes[4], np.pi):
        row = axis.interpolation_row(theta)
        assert row @ values == pytest.approx(math.cos(theta) ** 3 - math.cos(theta), abs=1e-12)


def test_require_zonal_applies_to_spheres_only(quarter_sphere):
    upsilon = parse_upsilon("0.1*cos(x2)", 2)
    require_zonal(FlatTorus(2), upsilon)
    with pytest.raises(DomainError, match="poles"):
        require_zonal(quarter_sphere, upsilon)


class WarpedTorus(FlatTorus):
    """``g = diag(exp(2 a_i cos x_{i+1}))`` with cyclic indices; not conformally flat."""

    kind = "warped-torus"

    def __init__(self, dimension: int, amplitude: float = 0.1):
        super().__init__(dimension)
        self.amplitudes = amplitude * (1.0 + np.arange(dimension) / dimension)
        self.source = (np.arange(dimension) + 1) % dimension

    def _warp(self, x):
        angle = np.atleast_2d(x)[:, self.source]
        scale = np.exp(2.0 * self.amplitudes * np.cos(angle))
        return scale, -self.amplitudes * np.sin(angle), -self.amplitudes * np.cos(angle)

    def metric(self, x):
        scale, _, _ = self._warp(x)
        return np.einsum("ni,ij->nij", scale, np.eye(self.dimension))

    def d_metric(self, x):
        scale, slope, _ = self._warp(x)
        out = np.zeros((scale.shape[0],) + (self.dimension,) * 3)
        for i, s in enumerate(self.source):
            out[:, s, i, i] = 2.0 * slope[:, i] * scale[:, i]
        return out

    def dd_metric(self, x):
        scale, slope, bend = self._warp(x)
        out = np.zeros((scale.shape[0],) + (self.dimension,) * 4)
        for i, s in enumerate(self.source):
            out[:, s, s, i, i] = (4.0 * slope[:, i] ** 2 + 2.0 * bend[:, i]) * scale[:, i]
        return out


def _christoffel_by_differences(family, x, h):
    n = x.shape[1]
    dg = np.empty((x.shape[0], n, n, n))
    for k in range(n):
        shift = np.zeros(n)
        shift[k] = h
        dg[:, k] = (family.metric(x + shift) - family.metric(x - shift)) / (2.0 * h)
    lower = 0.5 * (np.einsum("nbdc->ndbc", dg) + np.einsum("ncdb->ndbc", dg) - dg)
    return np.einsum("nad,ndbc->nabc", np.linalg.inv(family.metric(x)), lower)


def _riemann_by_nested_differences(family, x, h=1e-4, outer=5e-4):
    """``R_abcd = g_ae (d_c G^e_db - d_d G^e_cb + G^e_cf G^f_db - G^e_df G^f_cb)``."""
    n = x.shape[1]
    gamma = _christoffel_by_differences(family, x, h)
    d_gamma = np.empty((x.shape[0], n) + gamma.shape[1:])
    for c in range(n):
        shift = np.zeros(n)
        shift[c] = outer
        d_gamma[:, c] = (
            _christoffel_by_differences(family, x + shift, h) - _christoffel_by_differences(family, x - shift, h)
        ) / (2.0 * outer)
    up = (
        np.einsum("ncadb->nabcd", d_gamma)
        - np.einsum("ndacb->nabcd", d_gamma)
        + np.einsum("nace,nedb->nabcd", gamma, gamma)
        - np.einsum("nade,necb->nabcd", gamma, gamma)
    )
    return np.einsum("nae,nebcd->nabcd", family.metric(x), up)


def test_curvature_pack_matches_nested_differences():
    upsilon = parse_upsilon("0.1*sin(x1) + 0.05*cos(2*x2)", 2)
    family = ConformalRescaling(FlatTorus(2), upsilon)
    x = np.array([[0.3, 1.0], [1.7, 2.0], [4.0, 0.5]])
    pack = curvature_pack(family, x)
    oracle = _riemann_by_nested_differences(family, x)
    np.testing.assert_allclose(pack.riemann, oracle, atol=1e-6)
    g_inv = np.linalg.inv(family.metric(x))
    oracle_ricci = np.einsum("nik,nijkl->njl", g_inv, oracle)
    np.testing.assert_allclose(pack.ricci, oracle_ricci, atol=1e-6)
    np.testing.assert_allclose(pack.scalar, np.einsum("nij,nij->n", g_inv, oracle_ricci), atol=1e-6)


def test_riemann_symmetries_and_bianchi():
    family = WarpedTorus(4)
    x = np.array([[0.3, 1.2, 2.5, 4.0], [5.1, 0.7, 1.9, 3.3]])
    rm = curvature_pack(family, x, with_bach=False).riemann
    assert np.abs(rm).max() > 1e-3
    np.testing.assert_allclose(rm, -np.einsum("nijkl->njikl", rm), atol=1e-13)
    np.testing.assert_allclose(rm, -np.einsum("nijkl->nijlk", rm), atol=1e-13)
    np.testing.assert_allclose(rm, np.einsum("nijkl->nklij", rm), atol=1e-13)
    bianchi = rm + np.einsum("nijkl->niklj", rm) + np.einsum("nijkl->niljk", rm)
    assert np.abs(bianchi).max() < 1e-13


def test_weyl_is_trace_free_on_warped_torus():
    family = WarpedTorus(4)
    x = np.array([[0.3, 1.2, 2.5, 4.0], [5.1, 0.7, 1.9, 3.3]])
    pack = curvature_pack(family, x, with_bach=False)
    weyl = pack.require("weyl")
    assert np.abs(weyl).max() > 1e-4
    assert np.abs(np.einsum("nik,nijkl->njl", pack.inverse_metric, weyl)).max() < 1e-14
    assert np.abs(np.einsum("njl,nijkl->nik", pack.inverse_metric, weyl)).max() < 1e-14


def test_cotton_is_antisymmetric_in_last_pair():
    family = WarpedTorus(3)
    pack = curvature_pack(family, np.array([[0.4, 2.2, 5.0]]))
    cotton = pack.require("cotton")
    assert np.abs(cotton).max() > 1e-4
    np.testing.assert_allclose(cotton, -np.swapaxes(cotton, 2, 3), atol=1e-15)


def test_constant_rescaling_law():
    tau = 0.3
    base = RoundSphere(4, radius=0.5)
    x = base.quadrature_grid(4).points[:6]
    pack = curvature_pack(base, x, with_bach=False)
    scaled = curvature_pack(ConformalRescaling(base, parse_upsilon("0.3", 4)), x, with_bach=False)
    np.testing.assert_allclose(scaled.riemann, math.exp(2 * tau) * pack.riemann, atol=1e-10)
    np.testing.assert_allclose(scaled.scalar, math.exp(-2 * tau) * pack.scalar, rtol=1e-10)
    np.testing.assert_allclose(scaled.require("schouten"), pack.require("schouten"), atol=1e-10)


def test_conformal_invariants_vanish_on_round_six_sphere():
    family = RoundSphere(6, radius=0.5)
    x = np.array([[1.0, 1.1, 0.9, 1.2, 1.3, 0.4]])
    invariants = conformal_invariants_6d(family, x)
    assert abs(invariants.i_scalar[0]) < 1e-8
    assert abs(invariants.j_scalar[0]) < 1e-8


def _contract(left, right, inverse_diagonal):
    total = 0.0
    for index in itertools.product(range(left.shape[0]), repeat=left.ndim):
        total += left[index] * right[index] * np.prod(inverse_diagonal[list(index)])
    return total


def test_conformal_invariants_against_index_loops():
    family = WarpedTorus(6)
    x = np.array([[0.4, 2.2, 5.0, 1.3, 3.7, 0.9]])
    invariants = conformal_invariants_6d(family, x)
    w = curvature_pack(family, x, with_bach=False).require("weyl")[0]
    gi = 1.0 / np.diag(family.metric(x)[0])
    v, u, c = invariants.v_tensor[0], invariants.u_tensor[0], invariants.cotton[0]

    i_scalar = _contract(v, v, gi) - 16.0 * _contract(w, u, gi) + 16.0 * _contract(c, c, gi)
    pairs = cross = 0.0
    for i, j, k, l, p, q in itertools.product(range(6), repeat=6):
        raised = gi[i] * gi[j] * gi[k] * gi[l] * gi[p] * gi[q]
        pairs += w[i, j, k, l] * w[i, j, p, q] * w[k, l, p, q] * raised
        cross += w[i, j, k, l] * w[i, p, k, q] * w[j, p, l, q] * raised
    j_scalar = -3.0 * i_scalar + 7.0 * pairs + 4.0 * cross

    assert abs(invariants.i_scalar[0]) > 1e-8
    assert invariants.i_scalar[0] == pytest.approx(i_scalar, rel=1e-9, abs=1e-14)
    assert invariants.j_scalar[0] == pytest.approx(j_scalar, rel=1e-9, abs=1e-14)
