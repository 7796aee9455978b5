"""Seeded Monte Carlo engine for trial scenarios with mechanism layers.

Each replicate draws its own RNG substream from ``(seed, replicate index)``,
so results are identical no matter how replicates are scheduled across
workers.  Replicate generation produces, per arm, the counts of the mutually
exclusive *terminal categories* a participant can end up in (positivity
class, outcome, compliance, specimen tested or not, retest result).  The
analysis stage is a single vectorized pass over those count arrays.

Tests used by the analysis stage:

* genuine count tables (nothing estimated): the classic pooled z test;
* inverse-probability reconstructed tables: a Wald z on the risk difference
  whose variance comes from the multinomial delta method over the terminal
  counts (per-person sampling makes the terminal counts per arm exactly
  multinomial);
* corrected tables (retest or compliance-ratio corrections): a Wald z on the
  log odds scale, since the corrections act multiplicatively; the delta
  variance automatically carries the estimation noise of retest fractions
  and compliance ratios, including their correlation with the screen arm.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .mechanisms import (CorrectionUnavailable, DegradationModel, NonComplianceModel,
                         RetestFractions, SamplingPlan, apply_degradation,
                         apply_noncompliance, estimate_retest_fractions)
from .scenario import ConditionalRates, TrialScenario, solve_rates
from .tables import TrialDecomposition, ZERO_TABLE, TwoByTwoTable

# Terminal category counts, one slot per key.  Screen arm: ever-positives by
# outcome, split by stored-specimen retest result (the split stays trivial
# when no retest happens); never-positives by outcome; unknown positivity by
# outcome.  Control arm: tested-and-ever-positive, tested-and-never-positive,
# compliant-but-untested, and unknown positivity, each by outcome.
COUNT_KEYS = (
    "s_ev_d1_rp", "s_ev_d1_rn", "s_ev_d0_rp", "s_ev_d0_rn",
    "s_nev_d1", "s_nev_d0", "s_unk_d1", "s_unk_d0",
    "c_ev_d1", "c_ev_d0", "c_nev_d1", "c_nev_d0",
    "c_uns_d1", "c_uns_d0", "c_unk_d1", "c_unk_d0",
)
_SCREEN_KEYS = COUNT_KEYS[:8]
_CONTROL_KEYS = COUNT_KEYS[8:]
_IDX = {k: i for i, k in enumerate(COUNT_KEYS)}

_OBSERVED_EVER_KEYS = ("s_ev_d1_rp", "s_ev_d1_rn", "s_ev_d0_rp", "s_ev_d0_rn",
                       "c_ev_d1", "c_ev_d0")
_OBSERVED_NEVER_KEYS = ("s_nev_d1", "s_nev_d0", "c_nev_d1", "c_nev_d0")

_erfc = np.vectorize(math.erfc, otypes=[float])
_SQRT2 = math.sqrt(2.0)


def two_sided_p_array(z: np.ndarray) -> np.ndarray:
    return _erfc(np.abs(z) / _SQRT2)


def _nanmean(values: Optional[np.ndarray]) -> Optional[float]:
    if values is None:
        return None
    finite = values[np.isfinite(values)]
    return float(finite.mean()) if finite.size else math.nan


@dataclass(frozen=True, slots=True)
class SimConfig:
    scenario: TrialScenario
    sampling: Optional[SamplingPlan] = None
    degradation: Optional[DegradationModel] = None
    retest_correction: bool = False
    noncompliance: Optional[NonComplianceModel] = None
    compliance_correction: bool = False
    reps: int = 10_000
    seed: int = 0
    alpha: float = 0.05

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be inside (0, 1)")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.retest_correction and self.degradation is None:
            raise ValueError("retest correction needs a degradation model")
        if self.compliance_correction and self.noncompliance is None:
            raise ValueError("compliance correction needs a non-compliance model")
        if self.sampling is not None and len(self.sampling.strata) != 2:
            raise ValueError("the simulator samples two strata: events and non-events")

    @property
    def has_sampling(self) -> bool:
        return self.sampling is not None and not self.sampling.tests_everything()

    @property
    def has_correction(self) -> bool:
        return self.retest_correction or self.compliance_correction


@dataclass(frozen=True, slots=True)
class SimSummary:
    mean_rr_pos: float
    mean_rr_neg: float
    mean_corrected_rr_pos: Optional[float]
    mean_corrected_rr_neg: Optional[float]
    power_rr_pos: float
    power_corrected_rr_pos: Optional[float]
    power_standard: float
    alpha_rr_neg: float
    alpha_corrected_rr_neg: Optional[float]
    degenerate_reps: int
    monte_carlo_se_power: float


def rng_stream(seed: int, replicate_index: int) -> np.random.Generator:
    """Deterministic substream for one replicate, independent of all others."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replicate_index,))
    return np.random.Generator(np.random.PCG64(ss))


def simulate_decomposition(scenario: TrialScenario,
                           rng: np.random.Generator,
                           rates: Optional[ConditionalRates] = None) -> TrialDecomposition:
    """One replicate: binomial positivity counts, then binomial events per cell."""
    if rates is None:
        rates = solve_rates(scenario)
    n_screen = int(round(scenario.n_screen))
    n_control = int(round(scenario.n_control))
    ever_screen = int(rng.binomial(n_screen, scenario.p_m))
    ever_control = int(rng.binomial(n_control, scenario.p_m))
    ev_events_screen = int(rng.binomial(ever_screen, scenario.rr_pos * rates.everpos))
    ev_events_control = int(rng.binomial(ever_control, rates.everpos))
    nev_events_screen = int(rng.binomial(n_screen - ever_screen,
                                         scenario.rr_neg * rates.neverpos))
    nev_events_control = int(rng.binomial(n_control - ever_control, rates.neverpos))
    ever = TwoByTwoTable(ev_events_screen, ever_screen - ev_events_screen,
                         ev_events_control, ever_control - ev_events_control)
    never = TwoByTwoTable(nev_events_screen, (n_screen - ever_screen) - nev_events_screen,
                          nev_events_control, (n_control - ever_control) - nev_events_control)
    return TrialDecomposition(ever=ever, never=never, unknown=ZERO_TABLE)


def _replicate_counts(cfg: SimConfig, rates: ConditionalRates, index: int) -> tuple[int, ...]:
    """Terminal category counts for one replicate, in COUNT_KEYS order."""
    rng = rng_stream(cfg.seed, index)
    decomp = simulate_decomposition(cfg.scenario, rng, rates)
    if cfg.noncompliance is not None:
        decomp = apply_noncompliance(decomp, cfg.noncompliance, rng)
    if cfg.degradation is not None:
        decomp = apply_degradation(decomp, cfg.degradation, rng)
    ever, never, unk = decomp.ever, decomp.never, decomp.unknown

    retest_pos_d1 = int(ever.events_screen)
    retest_pos_d0 = int(ever.nonevents_screen)
    if cfg.retest_correction:
        try:
            r = estimate_retest_fractions(ever.events_screen, ever.nonevents_screen,
                                          cfg.degradation, rng)
            retest_pos_d1 = int(round(r.r_event * r.basis_event))
            retest_pos_d0 = int(round(r.r_nonevent * r.basis_nonevent))
        except CorrectionUnavailable:
            # No usable retest stratum: zero retest positives force the
            # corrected estimates to come out undefined, flagging the
            # replicate as degenerate downstream.
            retest_pos_d1 = 0
            retest_pos_d0 = 0

    if cfg.sampling is not None:
        f1 = cfg.sampling.strata[0].fraction
        f2 = cfg.sampling.strata[1].fraction
        tested_ev_d1 = int(rng.binomial(int(ever.events_control), f1))
        tested_nev_d1 = int(rng.binomial(int(never.events_control), f1))
        tested_ev_d0 = int(rng.binomial(int(ever.nonevents_control), f2))
        tested_nev_d0 = int(rng.binomial(int(never.nonevents_control), f2))
    else:
        tested_ev_d1 = int(ever.events_control)
        tested_nev_d1 = int(never.events_control)
        tested_ev_d0 = int(ever.nonevents_control)
        tested_nev_d0 = int(never.nonevents_control)
    untested_d1 = (int(ever.events_control) + int(never.events_control)
                   - tested_ev_d1 - tested_nev_d1)
    untested_d0 = (int(ever.nonevents_control) + int(never.nonevents_control)
                   - tested_ev_d0 - tested_nev_d0)

    return (
        retest_pos_d1, int(ever.events_screen) - retest_pos_d1,
        retest_pos_d0, int(ever.nonevents_screen) - retest_pos_d0,
        int(never.events_screen), int(never.nonevents_screen),
        int(unk.events_screen), int(unk.nonevents_screen),
        tested_ev_d1, tested_ev_d0, tested_nev_d1, tested_nev_d0,
        untested_d1, untested_d0,
        int(unk.events_control), int(unk.nonevents_control),
    )


def _counts_chunk(cfg: SimConfig, start: int, stop: int) -> tuple[int, np.ndarray]:
    rates = solve_rates(cfg.scenario)
    block = np.empty((stop - start, len(COUNT_KEYS)), dtype=np.int64)
    for i in range(start, stop):
        block[i - start] = _replicate_counts(cfg, rates, i)
    return start, block


def generate_counts(cfg: SimConfig, workers: int = 1) -> np.ndarray:
    """Terminal count matrix (reps x categories), schedule-independent."""
    if workers <= 1:
        return _counts_chunk(cfg, 0, cfg.reps)[1]
    chunk = max(1, math.ceil(cfg.reps / (workers * 4)))
    bounds = [(s, min(s + chunk, cfg.reps)) for s in range(0, cfg.reps, chunk)]
    out = np.empty((cfg.reps, len(COUNT_KEYS)), dtype=np.int64)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for start, block in pool.map(_counts_chunk, [cfg] * len(bounds),
                                     [b[0] for b in bounds], [b[1] for b in bounds]):
            out[start:start + block.shape[0]] = block
    return out


# ---------------------------------------------------------------------------
# Vectorized analysis over terminal counts
# ---------------------------------------------------------------------------

class _Analysis:
    """Estimators and tests over terminal count arrays for one configuration."""

    def __init__(self, f_event: float, f_nonevent: float, retest_correction: bool,
                 compliance_correction: bool, n_screen: float, n_control: float):
        self.f1 = f_event
        self.f2 = f_nonevent
        self.retest_correction = retest_correction
        self.compliance_correction = compliance_correction
        self.n_screen = n_screen
        self.n_control = n_control

    @classmethod
    def for_config(cls, cfg: SimConfig) -> "_Analysis":
        f1 = cfg.sampling.strata[0].fraction if cfg.sampling else 1.0
        f2 = cfg.sampling.strata[1].fraction if cfg.sampling else 1.0
        return cls(f1, f2, cfg.retest_correction, cfg.compliance_correction,
                   round(cfg.scenario.n_screen), round(cfg.scenario.n_control))

    # -- building blocks ----------------------------------------------------
    @staticmethod
    def _ratio(num, den):
        return num / np.where(den > 0, den, np.nan)

    def control_outcome_totals(self, c: dict):
        """Control-arm outcome totals among people with collected specimens."""
        d1 = c["c_ev_d1"] + c["c_nev_d1"] + c["c_uns_d1"]
        d0 = c["c_ev_d0"] + c["c_nev_d0"] + c["c_uns_d0"]
        return d1, d0

    def compliance_ratios(self, c: dict):
        t1_d1 = c["s_ev_d1_rp"] + c["s_ev_d1_rn"] + c["s_nev_d1"] + c["s_unk_d1"]
        t1_d0 = c["s_ev_d0_rp"] + c["s_ev_d0_rn"] + c["s_nev_d0"] + c["s_unk_d0"]
        t0_d1 = c["c_ev_d1"] + c["c_nev_d1"] + c["c_uns_d1"] + c["c_unk_d1"]
        t0_d0 = c["c_ev_d0"] + c["c_nev_d0"] + c["c_uns_d0"] + c["c_unk_d0"]
        c_event = self._ratio(1.0 - self._ratio(c["s_unk_d1"], t1_d1),
                              1.0 - self._ratio(c["c_unk_d1"], t0_d1))
        c_nonevent = self._ratio(1.0 - self._ratio(c["s_unk_d0"], t1_d0),
                                 1.0 - self._ratio(c["c_unk_d0"], t0_d0))
        return c_event, c_nonevent

    def _retest_restored_ever(self, c: dict):
        """Ever-positive control cells scaled back by the retest fractions,
        clamped at the outcome totals (noise can push positivity past one)."""
        r_event = self._ratio(c["s_ev_d1_rp"], c["s_ev_d1_rp"] + c["s_ev_d1_rn"])
        r_nonevent = self._ratio(c["s_ev_d0_rp"], c["s_ev_d0_rp"] + c["s_ev_d0_rn"])
        d1, d0 = self.control_outcome_totals(c)
        events = np.minimum(self._ratio(c["c_ev_d1"] / self.f1, r_event), d1)
        nonevents = np.minimum(self._ratio(c["c_ev_d0"] / self.f2, r_nonevent), d0)
        return events, nonevents

    def control_ever_cells(self, c: dict, corrected: bool):
        if corrected and self.retest_correction:
            events, nonevents = self._retest_restored_ever(c)
        else:
            events = c["c_ev_d1"] / self.f1
            nonevents = c["c_ev_d0"] / self.f2
        if corrected and self.compliance_correction:
            c_event, c_nonevent = self.compliance_ratios(c)
            events = events * c_event
            nonevents = nonevents * c_nonevent
        return events, nonevents

    def control_never_cells(self, c: dict, corrected: bool):
        if corrected and self.retest_correction:
            ev_events, ev_nonevents = self._retest_restored_ever(c)
            d1, d0 = self.control_outcome_totals(c)
            events, nonevents = d1 - ev_events, d0 - ev_nonevents
        else:
            events = c["c_nev_d1"] / self.f1
            nonevents = c["c_nev_d0"] / self.f2
        if corrected and self.compliance_correction:
            c_event, c_nonevent = self.compliance_ratios(c)
            events = events * c_event
            nonevents = nonevents * c_nonevent
        return events, nonevents

    def screen_ever_cells(self, c: dict):
        return (c["s_ev_d1_rp"] + c["s_ev_d1_rn"], c["s_ev_d0_rp"] + c["s_ev_d0_rn"])

    def screen_never_cells(self, c: dict):
        return c["s_nev_d1"], c["s_nev_d0"]

    # -- rates ---------------------------------------------------------------
    def p_control_ever(self, c: dict, corrected: bool = False):
        events, nonevents = self.control_ever_cells(c, corrected)
        return self._ratio(events, events + nonevents)

    def p_screen_ever(self, c: dict):
        events, nonevents = self.screen_ever_cells(c)
        return self._ratio(events, events + nonevents)

    def p_control_never(self, c: dict, corrected: bool = False):
        events, nonevents = self.control_never_cells(c, corrected)
        return self._ratio(events, events + nonevents)

    def p_screen_never(self, c: dict):
        events, nonevents = self.screen_never_cells(c)
        return self._ratio(events, events + nonevents)

    # -- tests ----------------------------------------------------------------
    @staticmethod
    def pooled_z_p(events_s, nonevents_s, events_c, nonevents_c):
        n_s, n_c = events_s + nonevents_s, events_c + nonevents_c
        with np.errstate(divide="ignore", invalid="ignore"):
            pooled = (events_s + events_c) / (n_s + n_c)
            var = pooled * (1.0 - pooled) * (1.0 / n_s + 1.0 / n_c)
            z = (events_c / n_c - events_s / n_s) / np.sqrt(var)
            p = two_sided_p_array(z)
        return np.where(np.isfinite(p) & (var > 0), p, 1.0)

    def delta_variance(self, fn: Callable[[dict], np.ndarray], counts: dict,
                       keys: tuple[str, ...]) -> np.ndarray:
        """Multinomial delta-method variance of ``fn`` over terminal counts.

        Per arm, g' Sigma g for a multinomial reduces to
        ``sum g_i^2 c_i - (sum g_i c_i)^2 / n_arm``; gradients come from
        central differences, which is plenty accurate for these rational
        functionals.
        """
        var = None
        for arm_keys, n_arm in ((_SCREEN_KEYS, self.n_screen), (_CONTROL_KEYS, self.n_control)):
            s1 = None
            s2 = None
            for key in arm_keys:
                if key not in keys:
                    continue
                c = counts[key]
                step = np.maximum(0.01, 1e-5 * c)
                up = dict(counts)
                up[key] = c + step
                down = dict(counts)
                down[key] = c - step
                g = (fn(up) - fn(down)) / (2.0 * step)
                term2 = g * g * c
                term1 = g * c
                s2 = term2 if s2 is None else s2 + term2
                s1 = term1 if s1 is None else s1 + term1
            if s1 is not None:
                arm_var = s2 - s1 * s1 / n_arm
                var = arm_var if var is None else var + arm_var
        return var

    def rd_delta_p(self, p_control_fn, p_screen_fn, counts: dict,
                   keys: tuple[str, ...]) -> np.ndarray:
        fn = lambda c: p_control_fn(c) - p_screen_fn(c)
        with np.errstate(divide="ignore", invalid="ignore"):
            var = self.delta_variance(fn, counts, keys)
            z = fn(counts) / np.sqrt(var)
            p = two_sided_p_array(z)
        return np.where(np.isfinite(p), p, 1.0)

    def logodds_delta_p(self, p_control_fn, p_screen_fn, counts: dict,
                        keys: tuple[str, ...]) -> np.ndarray:
        def fn(c):
            p0, p1 = p_control_fn(c), p_screen_fn(c)
            return (np.log(p0) - np.log1p(-p0)) - (np.log(p1) - np.log1p(-p1))
        with np.errstate(divide="ignore", invalid="ignore"):
            var = self.delta_variance(fn, counts, keys)
            z = fn(counts) / np.sqrt(var)
            p = two_sided_p_array(z)
        return np.where(np.isfinite(p), p, 1.0)


def _as_dict(matrix: np.ndarray) -> dict:
    return {key: matrix[:, _IDX[key]].astype(float) for key in COUNT_KEYS}


def analyze_counts(cfg: SimConfig, matrix: np.ndarray) -> SimSummary:
    """Aggregate a terminal count matrix into the replicate summary.

    Rejection rates average over all replicates with degenerate tests counted
    as non-rejections; estimate means skip replicates where the estimate is
    undefined.
    """
    a = _Analysis.for_config(cfg)
    c = _as_dict(matrix)
    alpha = cfg.alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        # The standard analysis always sees the full trial: outcomes are known
        # for everyone regardless of specimen mechanics.
        events_s = c["s_ev_d1_rp"] + c["s_ev_d1_rn"] + c["s_nev_d1"] + c["s_unk_d1"]
        nonevents_s = c["s_ev_d0_rp"] + c["s_ev_d0_rn"] + c["s_nev_d0"] + c["s_unk_d0"]
        events_c = c["c_ev_d1"] + c["c_nev_d1"] + c["c_uns_d1"] + c["c_unk_d1"]
        nonevents_c = c["c_ev_d0"] + c["c_nev_d0"] + c["c_uns_d0"] + c["c_unk_d0"]
        p_standard = a.pooled_z_p(events_s, nonevents_s, events_c, nonevents_c)

        p1_pos, p0_pos = a.p_screen_ever(c), a.p_control_ever(c)
        p1_neg, p0_neg = a.p_screen_never(c), a.p_control_never(c)
        rr_pos = p1_pos / np.where(p0_pos > 0, p0_pos, np.nan)
        rr_neg = p1_neg / np.where(p0_neg > 0, p0_neg, np.nan)

        if cfg.has_sampling:
            p_ever = a.rd_delta_p(a.p_control_ever, a.p_screen_ever, c, _OBSERVED_EVER_KEYS)
            p_never = a.rd_delta_p(a.p_control_never, a.p_screen_never, c,
                                   _OBSERVED_NEVER_KEYS)
        else:
            se, sn = a.screen_ever_cells(c)
            ce, cn = a.control_ever_cells(c, corrected=False)
            p_ever = a.pooled_z_p(se, sn, ce, cn)
            se, sn = a.screen_never_cells(c)
            ce, cn = a.control_never_cells(c, corrected=False)
            p_never = a.pooled_z_p(se, sn, ce, cn)

        corr_rr_pos = corr_rr_neg = None
        p_corr_ever = p_corr_never = None
        if cfg.has_correction:
            p0c_pos = a.p_control_ever(c, corrected=True)
            p0c_neg = a.p_control_never(c, corrected=True)
            corr_rr_pos = p1_pos / np.where(p0c_pos > 0, p0c_pos, np.nan)
            corr_rr_neg = p1_neg / np.where(p0c_neg > 0, p0c_neg, np.nan)
            p_corr_ever = a.logodds_delta_p(
                lambda cc: a.p_control_ever(cc, corrected=True), a.p_screen_ever,
                c, COUNT_KEYS)
            p_corr_never = a.logodds_delta_p(
                lambda cc: a.p_control_never(cc, corrected=True), a.p_screen_never,
                c, COUNT_KEYS)

    tracked = [rr_pos, rr_neg]
    if cfg.has_correction:
        tracked += [corr_rr_pos, corr_rr_neg]
    degenerate = np.zeros(matrix.shape[0], dtype=bool)
    for values in tracked:
        degenerate |= ~np.isfinite(values)

    power_rr_pos = float(np.mean(p_ever < alpha))
    return SimSummary(
        mean_rr_pos=_nanmean(rr_pos),
        mean_rr_neg=_nanmean(rr_neg),
        mean_corrected_rr_pos=_nanmean(corr_rr_pos),
        mean_corrected_rr_neg=_nanmean(corr_rr_neg),
        power_rr_pos=power_rr_pos,
        power_corrected_rr_pos=(float(np.mean(p_corr_ever < alpha))
                                if cfg.has_correction else None),
        power_standard=float(np.mean(p_standard < alpha)),
        alpha_rr_neg=float(np.mean(p_never < alpha)),
        alpha_corrected_rr_neg=(float(np.mean(p_corr_never < alpha))
                                if cfg.has_correction else None),
        degenerate_reps=int(np.sum(degenerate)),
        monte_carlo_se_power=math.sqrt(max(power_rr_pos * (1.0 - power_rr_pos), 0.0)
                                       / matrix.shape[0]),
    )


def run_study(cfg: SimConfig, workers: int = 1) -> SimSummary:
    """Simulate ``cfg.reps`` replicates and aggregate; schedule-independent."""
    solve_rates(cfg.scenario)  # reject infeasible scenarios before any work
    matrix = generate_counts(cfg, workers=workers)
    return analyze_counts(cfg, matrix)


def estimate_type1_error(cfg: SimConfig, workers: int = 1) -> float:
    """Rejection rate of the never-positive relative-risk test under its null.

    Requires the configured scenario to actually be null for that estimand
    (``rr_neg = 1``).  When a correction is active the corrected test's rate
    is returned, otherwise the observed test's.
    """
    if not math.isclose(cfg.scenario.rr_neg, 1.0, abs_tol=1e-12):
        raise ValueError("type-1 error of the never-positive test needs rr_neg = 1")
    summary = run_study(cfg, workers=workers)
    if cfg.has_correction:
        return summary.alpha_corrected_rr_neg
    return summary.alpha_rr_neg


# ---------------------------------------------------------------------------
# Deterministic analysis of a user-supplied decomposition (CLI `analyze`)
# ---------------------------------------------------------------------------

def decomposition_counts(decomp: TrialDecomposition,
                         retest: Optional[RetestFractions] = None) -> np.ndarray:
    """Terminal count row for a decomposition, optionally with retest splits."""
    ever, never, unk = decomp.ever, decomp.never, decomp.unknown
    r_event = retest.r_event if retest is not None else 1.0
    r_nonevent = retest.r_nonevent if retest is not None else 1.0
    return np.array([[
        ever.events_screen * r_event, ever.events_screen * (1.0 - r_event),
        ever.nonevents_screen * r_nonevent, ever.nonevents_screen * (1.0 - r_nonevent),
        never.events_screen, never.nonevents_screen,
        unk.events_screen, unk.nonevents_screen,
        ever.events_control, ever.nonevents_control,
        never.events_control, never.nonevents_control,
        0.0, 0.0,
        unk.events_control, unk.nonevents_control,
    ]])


def corrected_tests(decomp: TrialDecomposition,
                    retest: Optional[RetestFractions] = None,
                    compliance: bool = False) -> dict:
    """Corrected ever/never estimates with log-odds Wald z tests.

    Returns ``{"pos": (point, z, p), "neg": (point, z, p)}`` where the points
    are the corrected relative risks; the delta variance runs over the
    decomposition's own counts (and the retest splits when given).
    """
    overall = decomp.overall()
    a = _Analysis(1.0, 1.0, retest_correction=retest is not None,
                  compliance_correction=compliance,
                  n_screen=overall.n_screen, n_control=overall.n_control)
    c = _as_dict(decomposition_counts(decomp, retest))
    out = {}
    with np.errstate(divide="ignore", invalid="ignore"):
        for side, p_control_fn, p_screen_fn in (
                ("pos", lambda cc: a.p_control_ever(cc, corrected=True), a.p_screen_ever),
                ("neg", lambda cc: a.p_control_never(cc, corrected=True), a.p_screen_never)):
            p0 = float(p_control_fn(c)[0])
            p1 = float(p_screen_fn(c)[0])

            def fn(cc, p_control_fn=p_control_fn, p_screen_fn=p_screen_fn):
                q0, q1 = p_control_fn(cc), p_screen_fn(cc)
                return (np.log(q0) - np.log1p(-q0)) - (np.log(q1) - np.log1p(-q1))

            var = a.delta_variance(fn, c, COUNT_KEYS)
            z = float(fn(c)[0] / math.sqrt(float(var[0]))) if var[0] > 0 else math.nan
            p = math.erfc(abs(z) / _SQRT2) if math.isfinite(z) else math.nan
            point = p1 / p0 if p0 > 0 else math.nan
            out[side] = (point, z, p)
    return out
