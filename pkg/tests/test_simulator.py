"""Monte Carlo engine: streams, determinism, distributional checks, summaries."""

from dataclasses import replace

import numpy as np
import pytest

from iescreen import (DegradationModel, NonComplianceModel, SamplingPlan, SimConfig,
                      TrialScenario, decomposition_sum, estimate_type1_error,
                      expected_decomposition, rng_stream, run_study,
                      simulate_decomposition)
from iescreen.simulate import COUNT_KEYS, analyze_counts, generate_counts


class TestRngStream:
    def test_reproducible(self):
        a = rng_stream(42, 7).binomial(1000, 0.3, 50)
        b = rng_stream(42, 7).binomial(1000, 0.3, 50)
        assert np.array_equal(a, b)

    def test_distinct_across_indices(self):
        a = rng_stream(42, 0).binomial(10, 0.5, 10_000)
        b = rng_stream(42, 1).binomial(10, 0.5, 10_000)
        assert not np.array_equal(a, b)

    def test_distinct_across_seeds(self):
        a = rng_stream(1, 0).binomial(10, 0.5, 1_000)
        b = rng_stream(2, 0).binomial(10, 0.5, 1_000)
        assert not np.array_equal(a, b)


class TestSimulateDecomposition:
    def test_cell_means_match_expectation(self, fig1_scenario):
        expected = expected_decomposition(fig1_scenario)
        reps = 10_000
        cells = np.empty((reps, 4))
        for i in range(reps):
            decomp = simulate_decomposition(fig1_scenario, rng_stream(3, i))
            cells[i] = (decomp.ever.events_screen, decomp.ever.events_control,
                        decomp.never.events_screen, decomp.never.events_control)
        targets = (expected.ever.events_screen, expected.ever.events_control,
                   expected.never.events_screen, expected.never.events_control)
        for column, target in zip(cells.T, targets):
            se = column.std() / np.sqrt(reps)
            assert abs(column.mean() - target) < 4 * se

    def test_replicates_sum_to_arm_sizes(self, fig1_scenario):
        for i in range(100):
            decomp = simulate_decomposition(fig1_scenario, rng_stream(4, i))
            overall = decomposition_sum(decomp)
            assert overall.n_screen == fig1_scenario.n_screen
            assert overall.n_control == fig1_scenario.n_control

    def test_zero_positivity_limit(self, fig1_scenario):
        # feasible at vanishing positivity only when the never-positive
        # subgroup carries the whole overall effect
        s = replace(fig1_scenario, p_m=1e-12, rr_neg=0.9, rr_pos=0.5)
        decomp = simulate_decomposition(s, rng_stream(5, 0))
        assert decomp.ever.total == 0
        assert decomposition_sum(decomp).total == s.total_n


class TestRunStudy:
    def test_worked_example_power(self, fig1_scenario):
        summary = run_study(SimConfig(scenario=fig1_scenario, reps=10_000, seed=42))
        assert summary.power_rr_pos == pytest.approx(0.88, abs=0.01)
        assert summary.power_standard == pytest.approx(0.639, abs=0.015)
        assert summary.alpha_rr_neg == pytest.approx(0.05, abs=0.01)
        assert summary.mean_rr_pos == pytest.approx(0.8667, abs=0.005)
        assert summary.degenerate_reps == 0
        assert summary.monte_carlo_se_power == pytest.approx(
            np.sqrt(summary.power_rr_pos * (1 - summary.power_rr_pos) / 10_000))

    def test_corrected_fields_absent_without_correction(self, fig1_scenario):
        summary = run_study(SimConfig(scenario=fig1_scenario, reps=200, seed=1))
        assert summary.mean_corrected_rr_pos is None
        assert summary.power_corrected_rr_pos is None
        assert summary.alpha_corrected_rr_neg is None

    def test_subsampled_power_drop(self, fig1_scenario):
        cfg = SimConfig(scenario=fig1_scenario,
                        sampling=SamplingPlan.case_control(1.0, 0.5),
                        reps=10_000, seed=42)
        summary = run_study(cfg)
        assert summary.power_rr_pos == pytest.approx(0.84, abs=0.015)
        assert summary.mean_rr_pos == pytest.approx(0.8667, abs=0.005)

    def test_full_sampling_identical_to_no_sampling(self, fig1_scenario):
        plain = run_study(SimConfig(scenario=fig1_scenario, reps=1_000, seed=9))
        sampled = run_study(SimConfig(scenario=fig1_scenario,
                                      sampling=SamplingPlan.case_control(1.0, 1.0),
                                      reps=1_000, seed=9))
        assert plain == sampled

    def test_worker_count_invariance(self, fig1_scenario):
        cfg = SimConfig(scenario=fig1_scenario,
                        sampling=SamplingPlan.case_control(0.95, 0.5),
                        degradation=DegradationModel(0.1, 0.2),
                        retest_correction=True, reps=600, seed=11)
        serial = run_study(cfg, workers=1)
        parallel = run_study(cfg, workers=3)
        assert serial == parallel

    def test_counts_schedule_independent(self, fig1_scenario):
        cfg = SimConfig(scenario=fig1_scenario,
                        noncompliance=NonComplianceModel(0.3, 0.15, 0.15, 0.3),
                        compliance_correction=True, reps=400, seed=13)
        assert np.array_equal(generate_counts(cfg, workers=1),
                              generate_counts(cfg, workers=4))

    def test_terminal_counts_partition_arms(self, fig1_scenario):
        cfg = SimConfig(scenario=fig1_scenario,
                        sampling=SamplingPlan.case_control(0.95, 0.5),
                        degradation=DegradationModel(0.2, 0.3),
                        retest_correction=True,
                        reps=300, seed=21)
        matrix = generate_counts(cfg)
        screen = matrix[:, :8].sum(axis=1)
        control = matrix[:, 8:].sum(axis=1)
        assert np.all(screen == round(fig1_scenario.n_screen))
        assert np.all(control == round(fig1_scenario.n_control))
        assert np.all(matrix >= 0)

    def test_infeasible_scenario_rejected_up_front(self, fig1_scenario):
        from iescreen import InfeasibleScenarioError

        bad = replace(fig1_scenario, p_m=0.001)
        with pytest.raises(InfeasibleScenarioError):
            run_study(SimConfig(scenario=bad, reps=10, seed=0))

    def test_single_replicate_runs(self, fig1_scenario):
        summary = run_study(SimConfig(scenario=fig1_scenario, reps=1, seed=5))
        assert summary.power_rr_pos in (0.0, 1.0)

    def test_degenerate_replicates_counted(self):
        # tiny trial with rare events: many replicates lack control-arm
        # ever-positive events, so the ratio is undefined there
        s = TrialScenario(total_n=400, control_fraction=0.5, p0=0.02, rr=0.9,
                          p_m=0.05, rr_neg=1.0, rr_pos=13 / 15)
        summary = run_study(SimConfig(scenario=s, reps=500, seed=3))
        assert summary.degenerate_reps > 0
        assert np.isfinite(summary.mean_rr_pos)


class TestEstimateType1Error:
    def test_no_mechanisms(self, fig1_scenario):
        cfg = SimConfig(scenario=fig1_scenario, reps=10_000, seed=42)
        assert estimate_type1_error(cfg) == pytest.approx(0.05, abs=0.01)

    def test_uncorrected_degradation_inflates(self, fig1_scenario):
        cfg = SimConfig(scenario=fig1_scenario,
                        sampling=SamplingPlan.case_control(0.95, 0.5),
                        degradation=DegradationModel(0.1, 0.1),
                        reps=10_000, seed=42)
        assert estimate_type1_error(cfg) == pytest.approx(0.86, abs=0.03)

    def test_retest_correction_restores_size(self, fig1_scenario):
        cfg = SimConfig(scenario=fig1_scenario,
                        sampling=SamplingPlan.case_control(0.95, 0.5),
                        degradation=DegradationModel(0.1, 0.2),
                        retest_correction=True, reps=10_000, seed=42)
        assert estimate_type1_error(cfg) == pytest.approx(0.05, abs=0.01)

    def test_requires_null_scenario(self, fig1_scenario):
        cfg = SimConfig(scenario=replace(fig1_scenario, rr_neg=1.05, rr_pos=0.85),
                        reps=10, seed=0)
        with pytest.raises(ValueError, match="rr_neg"):
            estimate_type1_error(cfg)


class TestConfigValidation:
    def test_correction_flags_need_models(self, fig1_scenario):
        with pytest.raises(ValueError, match="retest"):
            SimConfig(scenario=fig1_scenario, retest_correction=True)
        with pytest.raises(ValueError, match="compliance"):
            SimConfig(scenario=fig1_scenario, compliance_correction=True)

    def test_bad_reps_alpha_seed(self, fig1_scenario):
        with pytest.raises(ValueError):
            SimConfig(scenario=fig1_scenario, reps=0)
        with pytest.raises(ValueError):
            SimConfig(scenario=fig1_scenario, alpha=1.0)
        with pytest.raises(ValueError):
            SimConfig(scenario=fig1_scenario, seed=-1)

    def test_count_keys_stable(self):
        # the analysis layer indexes the count matrix by this layout
        assert len(COUNT_KEYS) == 16
        assert COUNT_KEYS[0] == "s_ev_d1_rp"
        assert COUNT_KEYS[8] == "c_ev_d1"


class TestAnalyzeCountsReuse:
    def test_summary_reproducible_from_matrix(self, fig1_scenario):
        cfg = SimConfig(scenario=fig1_scenario, reps=500, seed=31)
        matrix = generate_counts(cfg)
        assert analyze_counts(cfg, matrix) == run_study(cfg)


class TestDeltaVarianceOracle:
    """The delta variance should track the empirical sampling variance."""

    def test_ipw_rate_variance(self, fig1_scenario):
        cfg = SimConfig(scenario=fig1_scenario,
                        sampling=SamplingPlan.case_control(1.0, 0.5),
                        reps=20_000, seed=2025)
        matrix = generate_counts(cfg)
        from iescreen.simulate import _Analysis, _as_dict, _OBSERVED_EVER_KEYS

        a = _Analysis.for_config(cfg)
        c = _as_dict(matrix)
        diff = a.p_control_ever(c) - a.p_screen_ever(c)
        estimated = a.delta_variance(lambda cc: a.p_control_ever(cc) - a.p_screen_ever(cc),
                                     c, _OBSERVED_EVER_KEYS)
        empirical = diff.var()
        assert np.median(estimated) == pytest.approx(empirical, rel=0.05)

    def test_corrected_logodds_variance(self, fig1_scenario):
        cfg = SimConfig(scenario=fig1_scenario,
                        sampling=SamplingPlan.case_control(0.95, 0.5),
                        degradation=DegradationModel(0.1, 0.2),
                        retest_correction=True, reps=20_000, seed=2026)
        matrix = generate_counts(cfg)
        from iescreen.simulate import _Analysis, _as_dict, COUNT_KEYS

        a = _Analysis.for_config(cfg)
        c = _as_dict(matrix)
        p0 = a.p_control_ever(c, corrected=True)
        p1 = a.p_screen_ever(c)
        diff = (np.log(p0) - np.log1p(-p0)) - (np.log(p1) - np.log1p(-p1))

        def fn(cc):
            q0 = a.p_control_ever(cc, corrected=True)
            q1 = a.p_screen_ever(cc)
            return (np.log(q0) - np.log1p(-q0)) - (np.log(q1) - np.log1p(-q1))

        estimated = a.delta_variance(fn, c, COUNT_KEYS)
        assert np.median(estimated) == pytest.approx(diff.var(), rel=0.05)


class TestCombinedCorrections:
    """All three mechanisms plus both corrections compose without breakage."""

    def test_full_stack_runs_and_recovers(self, fig1_scenario):
        cfg = SimConfig(scenario=fig1_scenario,
                        sampling=SamplingPlan.case_control(0.95, 0.5),
                        degradation=DegradationModel(0.1, 0.2),
                        retest_correction=True,
                        noncompliance=NonComplianceModel(0.2, 0.2, 0.3, 0.3),
                        compliance_correction=True,
                        reps=4_000, seed=404)
        summary = run_study(cfg)
        # arm-differential non-compliance plus corrected degradation: the
        # corrected estimates stay near the generative subgroup effects
        assert summary.mean_corrected_rr_pos == pytest.approx(13 / 15, abs=0.02)
        assert summary.mean_corrected_rr_neg == pytest.approx(1.0, abs=0.05)
        assert summary.alpha_corrected_rr_neg == pytest.approx(0.05, abs=0.02)
        assert summary.degenerate_reps < 40


class TestNullSize:
    """Rejection rates under true nulls stay near nominal for every test path."""

    def null_scenario(self):
        # no effect anywhere: both subgroup tests and the standard test are null
        return TrialScenario(total_n=100_000, control_fraction=0.5, p0=0.02, rr=1.0,
                             p_m=0.05, rr_neg=1.0, rr_pos=1.0)

    def test_plain_tables(self):
        summary = run_study(SimConfig(scenario=self.null_scenario(), reps=10_000,
                                      seed=515))
        assert summary.power_rr_pos == pytest.approx(0.05, abs=0.01)
        assert summary.alpha_rr_neg == pytest.approx(0.05, abs=0.01)
        assert summary.power_standard == pytest.approx(0.05, abs=0.01)

    def test_reconstructed_tables(self):
        cfg = SimConfig(scenario=self.null_scenario(),
                        sampling=SamplingPlan.case_control(1.0, 0.3),
                        reps=10_000, seed=616)
        summary = run_study(cfg)
        assert summary.power_rr_pos == pytest.approx(0.05, abs=0.012)
        assert summary.alpha_rr_neg == pytest.approx(0.05, abs=0.012)

    def test_corrected_tables(self):
        cfg = SimConfig(scenario=self.null_scenario(),
                        sampling=SamplingPlan.case_control(0.95, 0.5),
                        degradation=DegradationModel(0.2, 0.3),
                        retest_correction=True, reps=10_000, seed=717)
        summary = run_study(cfg)
        assert summary.power_corrected_rr_pos == pytest.approx(0.05, abs=0.012)
        assert summary.alpha_corrected_rr_neg == pytest.approx(0.05, abs=0.012)


class TestUnequalArms:
    def test_power_matches_analytic(self):
        from iescreen import analytic_power

        s = TrialScenario(total_n=100_000, control_fraction=0.35, p0=0.02, rr=0.9,
                          p_m=0.05, rr_neg=1.0, rr_pos=13 / 15)
        summary = run_study(SimConfig(scenario=s, reps=10_000, seed=818))
        assert summary.power_rr_pos == pytest.approx(analytic_power(s).power_pos,
                                                     abs=0.015)

    def test_sampled_run_unbiased(self):
        s = TrialScenario(total_n=100_000, control_fraction=0.35, p0=0.02, rr=0.9,
                          p_m=0.05, rr_neg=1.0, rr_pos=13 / 15)
        cfg = SimConfig(scenario=s, sampling=SamplingPlan.case_control(1.0, 0.5),
                        reps=4_000, seed=919)
        summary = run_study(cfg)
        assert summary.mean_rr_pos == pytest.approx(13 / 15, abs=0.01)
        assert summary.alpha_rr_neg == pytest.approx(0.05, abs=0.015)
