"""2x2 outcome-by-arm tables, trial decompositions and the basic estimators.

Cells are non-negative reals rather than integers: inverse-probability
weighting and the ratio corrections produce fractional cells, and every
estimator here is happy to operate on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .stats import two_sided_p

ESTIMAND_LABELS = ("RR", "RD", "RR_pos", "RD_pos", "RR_neg", "RD_neg")


class EstimationError(ValueError):
    """An estimator's preconditions are violated (empty arm, undefined ratio, ...)."""


@dataclass(frozen=True, slots=True)
class TwoByTwoTable:
    """Outcome-by-arm counts: screen arm and control arm, events and non-events."""

    events_screen: float
    nonevents_screen: float
    events_control: float
    nonevents_control: float

    def __post_init__(self) -> None:
        for name in ("events_screen", "nonevents_screen", "events_control", "nonevents_control"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"table cell {name} must be finite and >= 0, got {v!r}")

    @property
    def n_screen(self) -> float:
        return self.events_screen + self.nonevents_screen

    @property
    def n_control(self) -> float:
        return self.events_control + self.nonevents_control

    @property
    def total(self) -> float:
        return self.n_screen + self.n_control

    def cells(self) -> tuple[float, float, float, float]:
        return (self.events_screen, self.nonevents_screen,
                self.events_control, self.nonevents_control)

    def swapped_arms(self) -> "TwoByTwoTable":
        return TwoByTwoTable(self.events_control, self.nonevents_control,
                             self.events_screen, self.nonevents_screen)

    def __add__(self, other: "TwoByTwoTable") -> "TwoByTwoTable":
        return TwoByTwoTable(self.events_screen + other.events_screen,
                             self.nonevents_screen + other.nonevents_screen,
                             self.events_control + other.events_control,
                             self.nonevents_control + other.nonevents_control)


ZERO_TABLE = TwoByTwoTable(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True)
class TrialDecomposition:
    """Ever-positive / never-positive / unknown-positivity split of a trial table.

    The three tables sum cell-wise to the overall trial table.  ``unknown``
    is all-zero unless some mechanism hides positivity status.
    """

    ever: TwoByTwoTable
    never: TwoByTwoTable
    unknown: TwoByTwoTable = ZERO_TABLE

    def overall(self) -> TwoByTwoTable:
        return self.ever + self.never + self.unknown


@dataclass(frozen=True, slots=True)
class EstimateResult:
    """Point estimate with its pooled-variance z test.

    ``se_null`` is the standard error of the risk difference under the
    pooled null; the same z serves the ratio and the difference estimand
    of a given table.
    """

    label: str
    point: float
    pooled_rate: float
    se_null: float
    z: float
    p_two_sided: float


def risk_rates(table: TwoByTwoTable) -> tuple[float, float]:
    """Per-arm outcome rates ``(p_screen, p_control)``."""
    if table.n_screen <= 0:
        raise EstimationError("screen arm is empty; rates are undefined")
    if table.n_control <= 0:
        raise EstimationError("control arm is empty; rates are undefined")
    return table.events_screen / table.n_screen, table.events_control / table.n_control


def relative_risk(table: TwoByTwoTable) -> float:
    """Screen-over-control outcome rate ratio."""
    p_screen, p_control = risk_rates(table)
    if p_control == 0:
        raise EstimationError("control arm has no events; relative risk is undefined")
    return p_screen / p_control


def risk_difference(table: TwoByTwoTable) -> float:
    """Control minus screen outcome rate (positive when screening helps)."""
    p_screen, p_control = risk_rates(table)
    return p_control - p_screen


def pooled_z_test(table: TwoByTwoTable, label: str = "RD") -> EstimateResult:
    """Two-sided z test of equal arm rates with the null-pooled variance.

    ``label`` picks which point estimate rides along with the shared z/p:
    a ratio label reports the relative risk, a difference label the risk
    difference.
    """
    if label not in ESTIMAND_LABELS:
        raise ValueError(f"unknown estimand label {label!r}")
    p_screen, p_control = risk_rates(table)
    pooled = (table.events_screen + table.events_control) / table.total
    if not 0.0 < pooled < 1.0:
        raise EstimationError("pooled rate is degenerate (all or no events)")
    se_null = math.sqrt(pooled * (1.0 - pooled) * (1.0 / table.n_screen + 1.0 / table.n_control))
    z = (p_control - p_screen) / se_null
    point = relative_risk(table) if label.startswith("RR") else (p_control - p_screen)
    return EstimateResult(label=label, point=point, pooled_rate=pooled,
                          se_null=se_null, z=z, p_two_sided=two_sided_p(z))


def decomposition_sum(decomp: TrialDecomposition) -> TwoByTwoTable:
    """Cell-wise sum of the three tables; must equal the overall trial table."""
    return decomp.overall()
