import logging
from typing import List

from gauge.normal_form import NormalForm, hyperbolic_normal_form
from gauge.special_defining import solve_special_defining
from manifold.fields import ScalarField
from manifold.metric_families import RoundSphere, require_zonal
from scripts.report import ReportRow
from scripts.run_config import RunConfig
from scripts.steps.options import epsilons_from, upsilon_from
from volume_renorm.anomaly import volume_anomaly
from volume_renorm.renormalized_volume import gauge_comparison, hyperbolic_reference, renormalized_volume

logger = logging.getLogger(__name__)


def _gauge_rows(config: RunConfig, nf: NormalForm) -> List[ReportRow]:
    """``V_hat - V`` and ``L_hat - L`` for the representative ``exp(2 Upsilon) g_0``."""
    n = config.n
    sphere = RoundSphere(n, 0.5)
    upsilon = upsilon_from(config)
    require_zonal(sphere, upsilon)
    omega = solve_special_defining(nf, ScalarField(values=upsilon.value(nf.grid.points), grid=nf.grid))
    comparison = gauge_comparison(nf, omega, epsilons_from(config))
    if n % 2:
        return [ReportRow(quantity="V_hat_minus_V", value=comparison.volume_change, crosscheck=0.0, tol=config.tol)]

    anomaly = None
    if n in (2, 4):
        anomaly = volume_anomaly(sphere, upsilon, nodes=config.grid, gauge_route=False).anomaly_integral
    return [
        ReportRow(quantity="L_hat_minus_L", value=comparison.log_change, crosscheck=0.0, tol=config.tol),
        ReportRow(quantity="V_hat_minus_V", value=comparison.volume_change, crosscheck=anomaly, tol=config.tol),
    ]


def run_renorm_volume(config: RunConfig) -> List[ReportRow]:
    """Renormalized volume (odd ``n``) or log coefficient (even ``n``) of hyperbolic space.

    With ``--upsilon`` the rows also compare against the rescaled boundary metric.
    """
    n = config.n
    nf = hyperbolic_normal_form(n, config.grid)
    fit = renormalized_volume(nf, epsilons_from(config))
    reference = hyperbolic_reference(n)
    checks = fit.crosschecks
    rows = [ReportRow(quantity="c0", value=fit.divergent(0), crosscheck=checks["c0_expected"], tol=config.tol)]
    if n % 2:
        rows.append(ReportRow(quantity="V", value=fit.constant, crosscheck=reference, tol=config.tol))
        rows.append(ReportRow(quantity="V_subtraction", value=checks["V_subtraction"], crosscheck=reference, tol=config.tol))
    else:
        rows.append(ReportRow(quantity="L", value=fit.log_coefficient, crosscheck=reference, tol=config.tol))
        rows.append(ReportRow(quantity="L_integral", value=checks["L_integral"], crosscheck=reference, tol=config.tol))
        rows.append(ReportRow(quantity="V", value=fit.constant, crosscheck=checks["V_subtraction"], tol=config.tol))
    rows.append(ReportRow(quantity="fit_condition", value=fit.condition, tol=config.tol))
    if config.upsilon is not None:
        rows.extend(_gauge_rows(config, nf))
    return rows
