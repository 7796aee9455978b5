"""Simulation and power analysis for screening trials that bank control-arm
specimens and compare outcomes within the ever-positive subgroup."""

from .mechanisms import (CorrectionUnavailable, DegradationModel, IpwEstimate,
                         NonComplianceModel, RetestFractions, SamplingPlan, Stratum,
                         StratumCounts, StratumObservation, apply_degradation,
                         apply_noncompliance, compliance_ratio_correct, compliance_ratios,
                         estimate_retest_fractions, ipw_estimate, retest_correct_neg,
                         retest_correct_pos)
from .power import (PowerCurvePoint, PowerResult, analytic_power, noncentrality,
                    power_curve, power_from_z, required_total_n, z_ratio)
from .scenario import (ConditionalRates, InfeasibleScenarioError, TrialScenario,
                       expected_decomposition, is_feasible, pooled_everpos_rate,
                       solve_rates)
from .simulate import (SimConfig, SimSummary, estimate_type1_error, rng_stream,
                       run_study, simulate_decomposition)
from .stats import norm_cdf, norm_pdf, norm_ppf, two_sided_p
from .tables import (EstimateResult, EstimationError, TrialDecomposition, TwoByTwoTable,
                     ZERO_TABLE, decomposition_sum, pooled_z_test, relative_risk,
                     risk_difference, risk_rates)

__version__ = "0.1.0"

__all__ = [
    "CorrectionUnavailable", "DegradationModel", "IpwEstimate", "NonComplianceModel",
    "RetestFractions", "SamplingPlan", "Stratum", "StratumCounts", "StratumObservation",
    "apply_degradation", "apply_noncompliance", "compliance_ratio_correct",
    "compliance_ratios", "estimate_retest_fractions", "ipw_estimate",
    "retest_correct_neg", "retest_correct_pos",
    "PowerCurvePoint", "PowerResult", "analytic_power", "noncentrality", "power_curve",
    "power_from_z", "required_total_n", "z_ratio",
    "ConditionalRates", "InfeasibleScenarioError", "TrialScenario",
    "expected_decomposition", "is_feasible", "pooled_everpos_rate", "solve_rates",
    "SimConfig", "SimSummary", "estimate_type1_error", "rng_stream", "run_study",
    "simulate_decomposition",
    "norm_cdf", "norm_pdf", "norm_ppf", "two_sided_p",
    "EstimateResult", "EstimationError", "TrialDecomposition", "TwoByTwoTable",
    "ZERO_TABLE", "decomposition_sum", "pooled_z_test", "relative_risk",
    "risk_difference", "risk_rates",
]
