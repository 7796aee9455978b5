"""Trial scenarios: the seven generative parameters and what they imply.

A scenario fixes total size, the control fraction, the control-arm outcome
rate, the overall relative risk, ever-positivity, and the relative risks
within the never-positive and ever-positive subgroups.  From those the two
conditional control-arm outcome rates follow from a linear system, and the
exact expected decomposition can be written down (used as the deterministic
oracle behind both the analytic power module and the simulator).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .tables import TrialDecomposition, TwoByTwoTable, ZERO_TABLE

# Rates this far outside [0, 1] are float noise and get clamped; farther out
# means the scenario is genuinely infeasible.
FEASIBILITY_TOL = 1e-12
_DEGENERATE_TOL = 1e-12


class InfeasibleScenarioError(ValueError):
    """The scenario parameters imply conditional rates outside [0, 1]."""


@dataclass(frozen=True, slots=True)
class TrialScenario:
    total_n: float
    control_fraction: float
    p0: float
    rr: float
    p_m: float
    rr_neg: float
    rr_pos: float

    def __post_init__(self) -> None:
        if self.total_n <= 0:
            raise ValueError("total_n must be positive")
        for name in ("control_fraction", "p0", "p_m"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must be strictly inside (0, 1), got {v!r}")
        for name in ("rr", "rr_neg", "rr_pos"):
            v = getattr(self, name)
            if not v > 0.0:
                raise ValueError(f"{name} must be positive, got {v!r}")

    @property
    def n_control(self) -> float:
        return self.total_n * self.control_fraction

    @property
    def n_screen(self) -> float:
        return self.total_n - self.n_control

    def with_total_n(self, total_n: float) -> "TrialScenario":
        return replace(self, total_n=total_n)


@dataclass(frozen=True, slots=True)
class ConditionalRates:
    """Control-arm outcome rates by positivity class.

    ``everpos`` is the control-arm outcome rate among ever-positives and
    ``neverpos`` the rate among never-positives; the screen-arm analogues are
    ``rr_pos * everpos`` and ``rr_neg * neverpos``.
    """

    everpos: float
    neverpos: float


def _clamp_rate(value: float, what: str) -> float:
    if -FEASIBILITY_TOL <= value <= 1.0 + FEASIBILITY_TOL:
        return min(max(value, 0.0), 1.0)
    raise InfeasibleScenarioError(f"{what} = {value:.6g} falls outside [0, 1]")


def solve_rates(scenario: TrialScenario) -> ConditionalRates:
    """Solve the two mixture equations for the conditional outcome rates.

    The ever/never rates must average (weighted by positivity) to the overall
    control rate, and the same must hold on the screen arm after applying the
    subgroup relative risks.  When the two subgroup relative risks coincide
    the system is rank one; it stays solvable only for a homogeneous effect,
    which pins both rates at the overall control rate.
    """
    s = scenario
    denom = s.rr_neg - s.rr_pos
    if abs(denom) < _DEGENERATE_TOL:
        if abs(s.rr - s.rr_pos) < _DEGENERATE_TOL:
            rate = _clamp_rate(s.p0, "conditional outcome rate")
            return ConditionalRates(everpos=rate, neverpos=rate)
        raise InfeasibleScenarioError(
            "rr_neg == rr_pos but rr differs; the mixture equations have no solution")
    x = s.p0 * (s.rr_neg - s.rr) / (s.p_m * denom)
    y = s.p0 * (s.rr - s.rr_pos) / ((1.0 - s.p_m) * denom)
    problems = []
    for value, label in ((x, "P(event | ever-positive, control)"),
                         (y, "P(event | never-positive, control)"),
                         (s.rr_pos * x, "P(event | ever-positive, screen)"),
                         (s.rr_neg * y, "P(event | never-positive, screen)")):
        if not -FEASIBILITY_TOL <= value <= 1.0 + FEASIBILITY_TOL:
            problems.append(f"{label} = {value:.6g}")
    if problems:
        raise InfeasibleScenarioError("infeasible scenario: " + "; ".join(problems))
    return ConditionalRates(everpos=_clamp_rate(x, "ever-positive rate"),
                            neverpos=_clamp_rate(y, "never-positive rate"))


def is_feasible(scenario: TrialScenario) -> bool:
    try:
        solve_rates(scenario)
    except InfeasibleScenarioError:
        return False
    return True


def expected_decomposition(scenario: TrialScenario) -> TrialDecomposition:
    """Exact expected cell counts for the scenario (real-valued, no rounding)."""
    s = scenario
    rates = solve_rates(s)
    n1, n0 = s.n_screen, s.n_control
    ever_screen = n1 * s.p_m
    ever_control = n0 * s.p_m
    never_screen = n1 - ever_screen
    never_control = n0 - ever_control
    x, y = rates.everpos, rates.neverpos
    ever = TwoByTwoTable(
        events_screen=ever_screen * s.rr_pos * x,
        nonevents_screen=ever_screen * (1.0 - s.rr_pos * x),
        events_control=ever_control * x,
        nonevents_control=ever_control * (1.0 - x),
    )
    never = TwoByTwoTable(
        events_screen=never_screen * s.rr_neg * y,
        nonevents_screen=never_screen * (1.0 - s.rr_neg * y),
        events_control=never_control * y,
        nonevents_control=never_control * (1.0 - y),
    )
    return TrialDecomposition(ever=ever, never=never, unknown=ZERO_TABLE)


def pooled_everpos_rate(scenario: TrialScenario) -> float:
    """Pooled event rate among ever-positives, by the closed-form identity.

    Only valid for equal arm sizes and distinct subgroup relative risks; the
    general route is ``expected_decomposition``.  Kept as an independent
    cross-check of the solver.
    """
    s = scenario
    if not math.isclose(s.control_fraction, 0.5, abs_tol=1e-12):
        raise ValueError("closed-form pooled rate assumes equal arm sizes")
    if abs(s.rr_neg - s.rr_pos) < _DEGENERATE_TOL:
        raise ZeroDivisionError(
            "rr_neg == rr_pos: the closed form divides by zero; use expected_decomposition")
    return 0.5 * (s.p0 / s.p_m) * (1.0 + s.rr_pos) * (s.rr_neg - s.rr) / (s.rr_neg - s.rr_pos)
