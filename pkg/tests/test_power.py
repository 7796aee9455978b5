"""Analytic power: noncentralities, the power-gain ratio, curves, size search."""

from dataclasses import replace

import pytest

from conftest import random_feasible_scenarios
from iescreen import (EstimationError, InfeasibleScenarioError, TrialScenario,
                      analytic_power,
                      expected_decomposition, noncentrality, norm_ppf, power_curve,
                      power_from_z, required_total_n, z_ratio)


class TestNoncentrality:
    def test_overall(self, fig1_scenario):
        decomp = expected_decomposition(fig1_scenario)
        assert noncentrality(decomp.overall()) == pytest.approx(2.3162674055, abs=1e-9)

    def test_everpos(self, fig1_scenario):
        decomp = expected_decomposition(fig1_scenario)
        assert noncentrality(decomp.ever) == pytest.approx(3.1497039417, abs=1e-9)

    def test_identical_arms(self, fig1_scenario):
        s = replace(fig1_scenario, rr=1.0, rr_neg=1.0, rr_pos=1.0)
        assert noncentrality(expected_decomposition(s).overall()) == 0.0


class TestPowerFromZ:
    def test_worked_example(self):
        assert power_from_z(3.1497039417, 0.05) == pytest.approx(0.883, abs=5e-4)
        assert power_from_z(2.3162674055, 0.05) == pytest.approx(0.639, abs=5e-4)

    def test_at_critical_value(self):
        assert power_from_z(norm_ppf(0.975), 0.05) == pytest.approx(0.5, abs=1e-12)

    def test_monotone_in_z(self):
        values = [power_from_z(0.01 * i, 0.05) for i in range(600)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_zero_noncentrality_near_alpha_half(self):
        for alpha in (0.01, 0.05, 0.2):
            assert alpha / 2 - 1e-12 <= power_from_z(0.0, alpha) <= alpha

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            power_from_z(-1.0, 0.05)
        with pytest.raises(ValueError):
            power_from_z(1.0, 0.0)


class TestZRatio:
    def test_worked_example(self, fig1_scenario):
        assert z_ratio(fig1_scenario) == pytest.approx(1.3598187904, abs=1e-9)

    def test_everyone_positive(self, fig1_scenario):
        # with everyone ever-positive the subgroup analysis is the standard one
        s = replace(fig1_scenario, p_m=0.999999, rr_pos=0.9)
        assert z_ratio(s) == pytest.approx(1.0, abs=1e-5)

    def test_null_overall_rr_rejected(self, fig1_scenario):
        with pytest.raises(EstimationError):
            z_ratio(replace(fig1_scenario, rr=1.0, rr_pos=0.8))

    def test_false_reassurance_raises_ratio(self, fig1_scenario):
        assert z_ratio(replace(fig1_scenario, rr_neg=1.05)) > z_ratio(fig1_scenario)

    def test_matches_noncentrality_ratio(self):
        for s in random_feasible_scenarios(1000, seed=321):
            decomp = expected_decomposition(s)
            z_std = noncentrality(decomp.overall())
            z_pos = noncentrality(decomp.ever)
            if z_std < 1e-6:
                continue
            # noncentralities are absolute values, so compare magnitudes
            assert abs(z_ratio(s)) * z_std == pytest.approx(z_pos, rel=1e-9)

    def test_at_least_one_without_unintended_effects(self):
        for s in random_feasible_scenarios(300, seed=17):
            s = replace(s, rr_neg=1.0)
            if abs(s.rr - s.rr_pos) < 0.05 or s.rr >= 1.0:
                continue
            try:
                assert z_ratio(s) >= 1.0 - 1e-12
            except (EstimationError, InfeasibleScenarioError):
                continue


class TestAnalyticPower:
    def test_worked_example(self, fig1_scenario):
        result = analytic_power(fig1_scenario)
        assert result.power_pos == pytest.approx(0.8829256923, abs=1e-9)
        assert result.power_standard == pytest.approx(0.6391933262, abs=1e-9)
        assert result.z_ratio * result.z_standard == pytest.approx(result.z_pos, rel=1e-9)


class TestPowerCurve:
    def test_monotone_at_moderate_positivity(self, fig1_scenario):
        base = replace(fig1_scenario, total_n=50_000)
        grid = [0.5 + 0.05 * i for i in range(9)]
        points = power_curve(base, grid, [0.05, 0.5], [1.0])
        for p_m in (0.05, 0.5):
            series = [pt.power_pos for pt in points if pt.p_m == p_m]
            assert all(b <= a + 1e-12 for a, b in zip(series, series[1:]))

    def test_small_positivity_pair_ordering(self):
        base = TrialScenario(total_n=25_000, control_fraction=0.5, p0=0.02, rr=0.8,
                             p_m=0.025, rr_neg=1.0, rr_pos=0.8)
        points = power_curve(base, [0.7, 0.8], [0.025], [1.0])
        by_rr_pos = {pt.rr_pos: pt.power_pos for pt in points}
        assert by_rr_pos[0.8] > by_rr_pos[0.7]

    def test_degenerate_point_equals_standard(self, fig1_scenario):
        # subgroup effect equal to the overall effect and everyone positive:
        # the subgroup analysis degenerates to the standard one
        points = power_curve(fig1_scenario, [0.9], [0.999999999], [1.0])
        assert points[0].feasible
        assert points[0].power_pos == pytest.approx(
            analytic_power(fig1_scenario).power_standard, abs=1e-4)

    def test_infeasible_points_flagged_not_dropped(self, fig1_scenario):
        points = power_curve(fig1_scenario, [0.5], [0.001, 0.05], [1.0])
        assert len(points) == 2
        flags = {pt.p_m: pt.feasible for pt in points}
        assert flags[0.001] is False
        assert flags[0.05] is True


class TestRequiredTotalN:
    def test_headline_sample_sizes(self, fig1_scenario):
        # 90% power lands near 53k per arm for the subgroup analysis versus
        # 98k per arm for the standard analysis
        n_ie = required_total_n(fig1_scenario, 0.90, analysis="everpos")
        n_std = required_total_n(fig1_scenario, 0.90, analysis="standard")
        assert n_ie / 2 == pytest.approx(53_000, abs=2_000)
        assert n_std / 2 == pytest.approx(98_000, abs=2_000)

    def test_result_is_minimal(self, fig1_scenario):
        from iescreen import power_from_z as pfz

        n = required_total_n(fig1_scenario, 0.90, analysis="everpos")
        ever = expected_decomposition(fig1_scenario.with_total_n(n)).ever
        assert pfz(noncentrality(ever), 0.05) >= 0.90
        ever = expected_decomposition(fig1_scenario.with_total_n(n - 2)).ever
        assert pfz(noncentrality(ever), 0.05) < 0.90

    def test_bad_arguments(self, fig1_scenario):
        with pytest.raises(ValueError):
            required_total_n(fig1_scenario, 1.5)
        with pytest.raises(ValueError):
            required_total_n(fig1_scenario, 0.9, analysis="other")
