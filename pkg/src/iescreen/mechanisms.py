"""Mechanism layers between the generated trial and what the analyst sees.

Three mechanisms, each with a stochastic per-replicate form and an exact
expected-table form (``expected=True``):

* stratified specimen subsampling, undone by inverse-probability weighting;
* loss-of-signal in stored control-arm specimens, undone (when differential
  by outcome) by retest-positive fractions estimated from screen-arm stored
  specimens;
* non-compliance with specimen collections, which moves people into an
  unknown-positivity table and is undone by per-outcome compliance ratios.

When layers combine, they apply in the order non-compliance, degradation,
subsampling: without a collected specimen there is nothing to degrade, and
without a stored specimen nothing to sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .tables import TrialDecomposition, TwoByTwoTable, ZERO_TABLE


class CorrectionUnavailable(ValueError):
    """A correction cannot be computed from the observed data (zero stratum)."""


EVENTS_STRATUM = "events"
NONEVENTS_STRATUM = "non-events"


@dataclass(frozen=True, slots=True)
class Stratum:
    label: str
    fraction: float

    def __post_init__(self) -> None:
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError(f"sampling fraction for {self.label!r} must be in (0, 1]")


@dataclass(frozen=True, slots=True)
class SamplingPlan:
    """Per-stratum testing fractions; stratum 0 is always the control-arm events."""

    strata: tuple[Stratum, ...]

    def __post_init__(self) -> None:
        if len(self.strata) < 1:
            raise ValueError("a sampling plan needs at least the events stratum")
        labels = [s.label for s in self.strata]
        if len(set(labels)) != len(labels):
            raise ValueError(f"stratum labels must be unique, got {labels}")

    @classmethod
    def case_control(cls, f_event: float, f_nonevent: float) -> "SamplingPlan":
        return cls((Stratum(EVENTS_STRATUM, f_event), Stratum(NONEVENTS_STRATUM, f_nonevent)))

    @property
    def f_event(self) -> float:
        return self.strata[0].fraction

    def tests_everything(self) -> bool:
        return all(s.fraction == 1.0 for s in self.strata)


@dataclass(frozen=True, slots=True)
class StratumObservation:
    label: str
    sampled_n: float
    observed_positive: float

    def __post_init__(self) -> None:
        if self.observed_positive > self.sampled_n:
            raise ValueError("observed positives cannot exceed the sampled count")
        if self.sampled_n < 0 or self.observed_positive < 0:
            raise ValueError("counts must be non-negative")


@dataclass(frozen=True, slots=True)
class StratumCounts:
    """What the testing campaign saw, stratum by stratum.

    Stratum 0 holds the control-arm events, so its positives are exactly the
    ever-positive events found by testing.
    """

    strata: tuple[StratumObservation, ...]

    @property
    def observed_positive_events(self) -> float:
        return self.strata[0].observed_positive


@dataclass(frozen=True, slots=True)
class IpwEstimate:
    p0_pos: float
    events: float      # reconstructed ever-positive events in the control arm
    nonevents: float   # reconstructed ever-positive non-events

    @property
    def column(self) -> tuple[float, float]:
        return (self.events, self.nonevents)


def ipw_estimate(counts: StratumCounts, plan: SamplingPlan) -> IpwEstimate:
    """Reconstruct the control-arm ever-positive column by inverse weighting.

    The events found in stratum 0 scale up by its testing fraction; every
    other stratum contributes its positives scaled by its own fraction.  The
    control-arm event rate among ever-positives is the ratio of the two.
    """
    if len(counts.strata) != len(plan.strata):
        raise ValueError(f"{len(counts.strata)} strata observed but the plan has "
                         f"{len(plan.strata)}")
    d1_hat = counts.observed_positive_events / plan.strata[0].fraction
    m_hat = d1_hat
    for obs, stratum in zip(counts.strata[1:], plan.strata[1:]):
        m_hat += obs.observed_positive / stratum.fraction
    if m_hat <= 0:
        raise CorrectionUnavailable("no ever-positives found in any stratum")
    return IpwEstimate(p0_pos=d1_hat / m_hat, events=d1_hat, nonevents=m_hat - d1_hat)


@dataclass(frozen=True, slots=True)
class DegradationModel:
    """Per-outcome probability that a stored true-positive specimen tests negative."""

    loss_event: float
    loss_nonevent: float

    def __post_init__(self) -> None:
        for name in ("loss_event", "loss_nonevent"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v!r}")

    def is_null(self) -> bool:
        return self.loss_event == 0.0 and self.loss_nonevent == 0.0


@dataclass(frozen=True, slots=True)
class RetestFractions:
    """Observed stored-specimen retest-positive proportions, with their bases."""

    r_event: float
    r_nonevent: float
    basis_event: float
    basis_nonevent: float

    def __post_init__(self) -> None:
        if self.basis_event <= 0 or self.basis_nonevent <= 0:
            raise CorrectionUnavailable("retest fractions need a positive estimation basis")
        for name in ("r_event", "r_nonevent"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise CorrectionUnavailable(f"{name} must be in (0, 1], got {v!r}")


@dataclass(frozen=True, slots=True)
class NonComplianceModel:
    """Probability of skipping all collections, by arm and outcome."""

    screen_event: float
    screen_nonevent: float
    control_event: float
    control_nonevent: float

    def __post_init__(self) -> None:
        for name in ("screen_event", "screen_nonevent", "control_event", "control_nonevent"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must be in [0, 1) so some compliers exist, got {v!r}")

    def is_null(self) -> bool:
        return (self.screen_event == 0.0 and self.screen_nonevent == 0.0
                and self.control_event == 0.0 and self.control_nonevent == 0.0)


def _thin(count: float, prob: float, rng: Optional[np.random.Generator],
          expected: bool) -> float:
    """Number removed from ``count`` when each member leaves with ``prob``."""
    if expected:
        return count * prob
    return float(rng.binomial(int(round(count)), prob))


def apply_degradation(decomp: TrialDecomposition, model: DegradationModel,
                      rng: Optional[np.random.Generator] = None, *,
                      expected: bool = False) -> TrialDecomposition:
    """Move control-arm true ever-positives into the never-positive table.

    Only the control arm is touched (the screen arm tests fresh specimens);
    the unknown table passes through untouched.
    """
    if not expected and rng is None:
        raise ValueError("stochastic degradation needs an rng")
    moved_events = _thin(decomp.ever.events_control, model.loss_event, rng, expected)
    moved_nonevents = _thin(decomp.ever.nonevents_control, model.loss_nonevent, rng, expected)
    ever = TwoByTwoTable(decomp.ever.events_screen, decomp.ever.nonevents_screen,
                         decomp.ever.events_control - moved_events,
                         decomp.ever.nonevents_control - moved_nonevents)
    never = TwoByTwoTable(decomp.never.events_screen, decomp.never.nonevents_screen,
                          decomp.never.events_control + moved_events,
                          decomp.never.nonevents_control + moved_nonevents)
    return TrialDecomposition(ever=ever, never=never, unknown=decomp.unknown)


def estimate_retest_fractions(screen_everpos_events: float, screen_everpos_nonevents: float,
                              model: DegradationModel,
                              rng: Optional[np.random.Generator] = None, *,
                              expected: bool = False) -> RetestFractions:
    """Retest the screen arm's stored specimens and report positive fractions.

    Stored screen-arm specimens degrade with the same per-outcome loss
    probabilities as control-arm ones; the observed retest-positive
    proportions (with their denominators) feed the bias corrections.
    """
    if screen_everpos_events <= 0 or screen_everpos_nonevents <= 0:
        raise CorrectionUnavailable("no screen-arm ever-positives to retest in some stratum")
    if expected:
        return RetestFractions(1.0 - model.loss_event, 1.0 - model.loss_nonevent,
                               screen_everpos_events, screen_everpos_nonevents)
    if rng is None:
        raise ValueError("stochastic retest estimation needs an rng")
    pos_e = rng.binomial(int(round(screen_everpos_events)), 1.0 - model.loss_event)
    pos_n = rng.binomial(int(round(screen_everpos_nonevents)), 1.0 - model.loss_nonevent)
    return RetestFractions(pos_e / screen_everpos_events, pos_n / screen_everpos_nonevents,
                           screen_everpos_events, screen_everpos_nonevents)


def retest_correct_pos(observed_pos_rate_events: float, observed_pos_rate_nonevents: float,
                       p_event: float, retest: RetestFractions) -> float:
    """Corrected control-arm outcome rate among ever-positives.

    Inverts the Bayes decomposition of the rate, replacing each observed
    positivity by observed/retest-positive so that degradation cancels:
    ``1 / (1 + odds)`` with
    ``odds = (P(D-)/P(D+)) * (pos_rate_nonevents / r_nonevent)
                            / (pos_rate_events / r_event)``.
    """
    if not 0.0 < p_event < 1.0:
        raise CorrectionUnavailable("control outcome rate must be inside (0, 1)")
    if observed_pos_rate_events <= 0.0:
        raise CorrectionUnavailable("no observed positivity among control events")
    num = observed_pos_rate_nonevents / retest.r_nonevent
    den = observed_pos_rate_events / retest.r_event
    odds = (1.0 - p_event) / p_event * (num / den)
    return 1.0 / (1.0 + odds)


def retest_correct_neg(observed_pos_rate_events: float, observed_pos_rate_nonevents: float,
                       p_event: float, retest: RetestFractions) -> float:
    """Corrected control-arm outcome rate among never-positives.

    Same inversion with complements: corrected never-positivity per outcome is
    one minus observed/retest-positive, clamped at zero when noise pushes the
    corrected positivity past one.
    """
    if not 0.0 < p_event < 1.0:
        raise CorrectionUnavailable("control outcome rate must be inside (0, 1)")
    neg_events = max(1.0 - observed_pos_rate_events / retest.r_event, 0.0)
    neg_nonevents = max(1.0 - observed_pos_rate_nonevents / retest.r_nonevent, 0.0)
    if neg_events <= 0.0:
        raise CorrectionUnavailable(
            "corrected never-positivity among events is zero; rate undefined")
    odds = (1.0 - p_event) / p_event * (neg_nonevents / neg_events)
    return 1.0 / (1.0 + odds)


def apply_noncompliance(decomp: TrialDecomposition, model: NonComplianceModel,
                        rng: Optional[np.random.Generator] = None, *,
                        expected: bool = False) -> TrialDecomposition:
    """Thin every cell by its arm-and-outcome non-compliance rate.

    Non-compliers of both positivity classes land in the unknown table, so
    the observed ever/never tables hold compliers only and the decomposition
    total is preserved exactly.
    """
    if decomp.unknown != ZERO_TABLE:
        raise ValueError("input decomposition already carries an unknown table")
    if not expected and rng is None:
        raise ValueError("stochastic non-compliance needs an rng")

    rates = {("screen", "event"): model.screen_event,
             ("screen", "nonevent"): model.screen_nonevent,
             ("control", "event"): model.control_event,
             ("control", "nonevent"): model.control_nonevent}

    def split(table: TwoByTwoTable) -> tuple[TwoByTwoTable, tuple[float, float, float, float]]:
        gone_es = _thin(table.events_screen, rates[("screen", "event")], rng, expected)
        gone_ns = _thin(table.nonevents_screen, rates[("screen", "nonevent")], rng, expected)
        gone_ec = _thin(table.events_control, rates[("control", "event")], rng, expected)
        gone_nc = _thin(table.nonevents_control, rates[("control", "nonevent")], rng, expected)
        kept = TwoByTwoTable(table.events_screen - gone_es, table.nonevents_screen - gone_ns,
                             table.events_control - gone_ec, table.nonevents_control - gone_nc)
        return kept, (gone_es, gone_ns, gone_ec, gone_nc)

    ever_kept, ever_gone = split(decomp.ever)
    never_kept, never_gone = split(decomp.never)
    unknown = TwoByTwoTable(*(e + n for e, n in zip(ever_gone, never_gone)))
    return TrialDecomposition(ever=ever_kept, never=never_kept, unknown=unknown)


def compliance_ratios(decomp: TrialDecomposition) -> tuple[float, float]:
    """Screen-over-control compliance rate ratio, separately per outcome."""
    def ratio(unknown_screen: float, total_screen: float,
              unknown_control: float, total_control: float, what: str) -> float:
        if total_screen <= 0 or total_control <= 0:
            raise CorrectionUnavailable(f"no {what} in one arm; compliance ratio undefined")
        compliers_screen = total_screen - unknown_screen
        compliers_control = total_control - unknown_control
        if compliers_control <= 0:
            raise CorrectionUnavailable(f"zero control-arm compliers among {what}")
        if compliers_screen <= 0:
            raise CorrectionUnavailable(f"zero screen-arm compliers among {what}")
        return (compliers_screen / total_screen) / (compliers_control / total_control)

    ever, never, unk = decomp.ever, decomp.never, decomp.unknown
    c_event = ratio(unk.events_screen,
                    ever.events_screen + never.events_screen + unk.events_screen,
                    unk.events_control,
                    ever.events_control + never.events_control + unk.events_control,
                    "events")
    c_nonevent = ratio(unk.nonevents_screen,
                       ever.nonevents_screen + never.nonevents_screen + unk.nonevents_screen,
                       unk.nonevents_control,
                       ever.nonevents_control + never.nonevents_control + unk.nonevents_control,
                       "non-events")
    return c_event, c_nonevent


def compliance_ratio_correct(decomp: TrialDecomposition) -> TrialDecomposition:
    """Rescale control-arm ever/never cells to the screen arm's compliance pattern.

    Each control-arm cell is multiplied by the per-outcome ratio of screen to
    control compliance rates; the screen arm is never modified.  The control
    unknown cells absorb the difference so the decomposition total is
    preserved.
    """
    c_event, c_nonevent = compliance_ratios(decomp)
    ever, never, unk = decomp.ever, decomp.never, decomp.unknown
    corrected_ever = TwoByTwoTable(ever.events_screen, ever.nonevents_screen,
                                   ever.events_control * c_event,
                                   ever.nonevents_control * c_nonevent)
    corrected_never = TwoByTwoTable(never.events_screen, never.nonevents_screen,
                                    never.events_control * c_event,
                                    never.nonevents_control * c_nonevent)
    total_events_control = (ever.events_control + never.events_control + unk.events_control)
    total_nonevents_control = (ever.nonevents_control + never.nonevents_control
                               + unk.nonevents_control)
    corrected_unknown = TwoByTwoTable(
        unk.events_screen, unk.nonevents_screen,
        total_events_control - corrected_ever.events_control - corrected_never.events_control,
        total_nonevents_control - corrected_ever.nonevents_control
        - corrected_never.nonevents_control)
    return TrialDecomposition(ever=corrected_ever, never=corrected_never,
                              unknown=corrected_unknown)
