"""Closed-form power: noncentrality parameters, the power gain ratio, curves.

Power for a two-sided level-alpha test follows from the noncentrality
parameter (the expected z statistic under the alternative) through
``power = Phi(z - Phi^-1(1 - alpha/2))``; the opposite-tail term is dropped,
which costs less than 1e-4 anywhere near the effect sizes of interest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .scenario import InfeasibleScenarioError, TrialScenario, expected_decomposition, solve_rates
from .stats import norm_cdf, norm_ppf
from .tables import EstimationError, TwoByTwoTable, risk_difference


@dataclass(frozen=True, slots=True)
class PowerResult:
    z_standard: float
    z_pos: float
    z_ratio: float
    power_standard: float
    power_pos: float
    alpha: float


@dataclass(frozen=True, slots=True)
class PowerCurvePoint:
    rr_pos: float
    p_m: float
    rr_neg: float
    feasible: bool
    power_pos: float  # nan when infeasible


def noncentrality(table: TwoByTwoTable) -> float:
    """|risk difference| / pooled-null SE on an expected (not sampled) table."""
    pooled = (table.events_screen + table.events_control) / table.total
    if not 0.0 < pooled < 1.0:
        raise EstimationError("pooled rate is degenerate; noncentrality undefined")
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / table.n_screen + 1.0 / table.n_control))
    return abs(risk_difference(table)) / se


def power_from_z(z: float, alpha: float) -> float:
    """Two-sided power at noncentrality ``z``, ignoring the wrong-sign tail."""
    if z < 0:
        raise ValueError("noncentrality must be non-negative")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be inside (0, 1)")
    return norm_cdf(z - norm_ppf(1.0 - alpha / 2.0))


def z_ratio(scenario: TrialScenario) -> float:
    """Noncentrality of the ever-positive analysis relative to the standard one.

    Evaluates ``{1 - RD_neg/RD * P(M-)} * sqrt(P(M+) / (P(M+|D+) P(M+|D-)))``
    with the conditional positivities taken from the expected decomposition.
    On expected tables this equals z_pos / z_standard exactly.
    """
    s = scenario
    rates = solve_rates(s)
    rd = s.p0 * (1.0 - s.rr)
    if rd == 0.0:
        raise EstimationError("overall risk difference is zero (rr = 1); ratio undefined")
    rd_neg = rates.neverpos * (1.0 - s.rr_neg)
    decomp = expected_decomposition(s)
    events_ever = decomp.ever.events_screen + decomp.ever.events_control
    events_total = events_ever + decomp.never.events_screen + decomp.never.events_control
    nonevents_ever = decomp.ever.nonevents_screen + decomp.ever.nonevents_control
    nonevents_total = (nonevents_ever
                       + decomp.never.nonevents_screen + decomp.never.nonevents_control)
    p_pos_given_event = events_ever / events_total
    p_pos_given_nonevent = nonevents_ever / nonevents_total
    brace = 1.0 - (rd_neg / rd) * (1.0 - s.p_m)
    return brace * math.sqrt(s.p_m / (p_pos_given_event * p_pos_given_nonevent))


def analytic_power(scenario: TrialScenario, alpha: float = 0.05) -> PowerResult:
    """Noncentralities and power for the standard and ever-positive analyses."""
    decomp = expected_decomposition(scenario)
    z_std = noncentrality(decomp.overall())
    z_pos = noncentrality(decomp.ever)
    return PowerResult(
        z_standard=z_std,
        z_pos=z_pos,
        z_ratio=z_ratio(scenario),
        power_standard=power_from_z(z_std, alpha),
        power_pos=power_from_z(z_pos, alpha),
        alpha=alpha,
    )


def power_curve(base: TrialScenario,
                rr_pos_grid: Sequence[float],
                p_m_grid: Sequence[float],
                rr_neg_set: Sequence[float],
                alpha: float = 0.05) -> list[PowerCurvePoint]:
    """Ever-positive analysis power across a grid of scenario variations.

    Infeasible grid points are emitted with ``feasible=False`` rather than
    dropped, so the output grid shape is predictable.
    """
    from dataclasses import replace

    points = []
    for rr_pos in rr_pos_grid:
        for p_m in p_m_grid:
            for rr_neg in rr_neg_set:
                s = replace(base, rr_pos=rr_pos, p_m=p_m, rr_neg=rr_neg)
                try:
                    z = noncentrality(expected_decomposition(s).ever)
                    points.append(PowerCurvePoint(rr_pos, p_m, rr_neg, True,
                                                  power_from_z(z, alpha)))
                except (InfeasibleScenarioError, EstimationError):
                    points.append(PowerCurvePoint(rr_pos, p_m, rr_neg, False, math.nan))
    return points


def required_total_n(scenario: TrialScenario, target_power: float,
                     alpha: float = 0.05, analysis: str = "everpos",
                     max_total: float = 1e9) -> float:
    """Smallest total trial size reaching the target power, by bisection.

    ``analysis`` is ``"everpos"`` for the ever-positive comparison or
    ``"standard"`` for the whole-trial comparison.  Expected tables scale
    continuously with n, so the returned size is exact to one participant.
    """
    if analysis not in ("everpos", "standard"):
        raise ValueError("analysis must be 'everpos' or 'standard'")
    if not 0.0 < target_power < 1.0:
        raise ValueError("target power must be inside (0, 1)")

    def power_at(total: float) -> float:
        decomp = expected_decomposition(scenario.with_total_n(total))
        table = decomp.ever if analysis == "everpos" else decomp.overall()
        return power_from_z(noncentrality(table), alpha)

    lo, hi = 2.0, 4.0
    while power_at(hi) < target_power:
        lo, hi = hi, hi * 2.0
        if hi > max_total:
            raise EstimationError(f"target power not reached below total_n = {max_total:g}")
    while hi - lo > 1.0:
        mid = 0.5 * (lo + hi)
        if power_at(mid) >= target_power:
            hi = mid
        else:
            lo = mid
    return math.ceil(hi)
