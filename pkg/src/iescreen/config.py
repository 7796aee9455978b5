"""Run-configuration files: strict JSON parsing and sweep expansion.

A config document has top-level keys ``scenario``, ``mechanisms`` (optional),
``sim`` (optional) and ``output`` (optional).  Unknown keys anywhere are a
hard error rather than silently ignored typos.  Numeric scenario and
mechanism fields may hold a list of values; listed fields expand into the
cartesian product, one simulation cell per combination, in a deterministic
order.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .mechanisms import DegradationModel, NonComplianceModel, SamplingPlan
from .scenario import TrialScenario
from .simulate import SimConfig


class ConfigError(ValueError):
    """A configuration document is malformed or holds invalid values."""


@dataclass(frozen=True, slots=True)
class OutputSpec:
    path: Optional[str] = None
    format: str = "csv"


@dataclass(frozen=True, slots=True)
class ParsedConfig:
    cells: tuple[SimConfig, ...]
    output: OutputSpec


_SCENARIO_FIELDS = ("total_n", "control_fraction", "p0", "rr", "p_m", "rr_neg", "rr_pos")
_SWEEPABLE = {
    ("scenario", f) for f in _SCENARIO_FIELDS
} | {
    ("sampling", "f_event"), ("sampling", "f_nonevent"),
    ("degradation", "loss_event"), ("degradation", "loss_nonevent"),
    ("noncompliance", "screen_event"), ("noncompliance", "screen_nonevent"),
    ("noncompliance", "control_event"), ("noncompliance", "control_nonevent"),
}


def _require_mapping(value: Any, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be an object, got {type(value).__name__}")
    return value


def _check_keys(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _numeric_values(section: str, field: str, value: Any) -> list[float]:
    """A numeric leaf, or a list of numerics when the field is sweepable."""
    where = f"{section}.{field}"
    if isinstance(value, bool):
        raise ConfigError(f"{where} must be a number, got a boolean")
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, list):
        if (section, field) not in _SWEEPABLE:
            raise ConfigError(f"{where} does not support a list of values")
        if not value:
            raise ConfigError(f"{where} sweep list is empty")
        out = []
        for item in value:
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise ConfigError(f"{where} sweep entries must be numbers")
            out.append(float(item))
        return out
    raise ConfigError(f"{where} must be a number or list of numbers")


def _bool_value(section: str, field: str, mapping: dict, default: bool = False) -> bool:
    value = mapping.get(field, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{section}.{field} must be a boolean")
    return value


def _probability(section: str, field: str, value: float) -> float:
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{section}.{field} must be a probability in [0, 1], got {value}")
    return value


def parse_config(document: dict) -> ParsedConfig:
    """Validate a configuration document and expand sweeps into cells."""
    doc = _require_mapping(document, "configuration")
    _check_keys(doc, {"scenario", "mechanisms", "sim", "output"}, "configuration")
    if "scenario" not in doc:
        raise ConfigError("configuration needs a 'scenario' section")

    scen = _require_mapping(doc["scenario"], "scenario")
    _check_keys(scen, set(_SCENARIO_FIELDS), "scenario")
    missing = [f for f in _SCENARIO_FIELDS if f != "control_fraction" and f not in scen]
    if missing:
        raise ConfigError(f"scenario is missing field(s): {', '.join(missing)}")
    sweeps: dict[tuple[str, str], list[float]] = {}
    for field in _SCENARIO_FIELDS:
        if field == "control_fraction" and field not in scen:
            sweeps[("scenario", field)] = [0.5]
            continue
        sweeps[("scenario", field)] = _numeric_values("scenario", field, scen[field])

    mech = _require_mapping(doc.get("mechanisms", {}), "mechanisms")
    _check_keys(mech, {"sampling", "degradation", "noncompliance"}, "mechanisms")
    has_sampling = "sampling" in mech
    has_degradation = "degradation" in mech
    has_noncompliance = "noncompliance" in mech
    retest_correction = False
    compliance_correction = False
    if has_sampling:
        sub = _require_mapping(mech["sampling"], "mechanisms.sampling")
        _check_keys(sub, {"f_event", "f_nonevent"}, "mechanisms.sampling")
        for field in ("f_event", "f_nonevent"):
            if field not in sub:
                raise ConfigError(f"mechanisms.sampling needs {field}")
            sweeps[("sampling", field)] = [
                _probability("sampling", field, v)
                for v in _numeric_values("sampling", field, sub[field])]
    if has_degradation:
        sub = _require_mapping(mech["degradation"], "mechanisms.degradation")
        _check_keys(sub, {"loss_event", "loss_nonevent", "retest_correction"},
                    "mechanisms.degradation")
        for field in ("loss_event", "loss_nonevent"):
            if field not in sub:
                raise ConfigError(f"mechanisms.degradation needs {field}")
            sweeps[("degradation", field)] = [
                _probability("degradation", field, v)
                for v in _numeric_values("degradation", field, sub[field])]
        retest_correction = _bool_value("degradation", "retest_correction", sub)
    if has_noncompliance:
        sub = _require_mapping(mech["noncompliance"], "mechanisms.noncompliance")
        _check_keys(sub, {"screen_event", "screen_nonevent", "control_event",
                          "control_nonevent", "correction"}, "mechanisms.noncompliance")
        for field in ("screen_event", "screen_nonevent", "control_event", "control_nonevent"):
            if field not in sub:
                raise ConfigError(f"mechanisms.noncompliance needs {field}")
            sweeps[("noncompliance", field)] = [
                _probability("noncompliance", field, v)
                for v in _numeric_values("noncompliance", field, sub[field])]
        compliance_correction = _bool_value("noncompliance", "correction", sub)

    sim = _require_mapping(doc.get("sim", {}), "sim")
    _check_keys(sim, {"reps", "seed", "alpha"}, "sim")
    reps = sim.get("reps", 10_000)
    if isinstance(reps, bool) or not isinstance(reps, int) or reps < 1:
        raise ConfigError("sim.reps must be a positive integer")
    seed = sim.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("sim.seed must be an unsigned 64-bit integer")
    alpha = sim.get("alpha", 0.05)
    if isinstance(alpha, bool) or not isinstance(alpha, (int, float)) or not 0 < alpha < 1:
        raise ConfigError("sim.alpha must be inside (0, 1)")

    out = _require_mapping(doc.get("output", {}), "output")
    _check_keys(out, {"path", "format"}, "output")
    fmt = out.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"output.format must be 'csv' or 'json', got {fmt!r}")
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("output.path must be a string")

    keys = sorted(sweeps)  # deterministic expansion order
    cells = []
    for combo in itertools.product(*(sweeps[k] for k in keys)):
        values = dict(zip(keys, combo))
        try:
            scenario = TrialScenario(**{f: values[("scenario", f)] for f in _SCENARIO_FIELDS})
            sampling = (SamplingPlan.case_control(values[("sampling", "f_event")],
                                                  values[("sampling", "f_nonevent")])
                        if has_sampling else None)
            degradation = (DegradationModel(values[("degradation", "loss_event")],
                                            values[("degradation", "loss_nonevent")])
                           if has_degradation else None)
            noncompliance = (NonComplianceModel(values[("noncompliance", "screen_event")],
                                                values[("noncompliance", "screen_nonevent")],
                                                values[("noncompliance", "control_event")],
                                                values[("noncompliance", "control_nonevent")])
                             if has_noncompliance else None)
            cells.append(SimConfig(scenario=scenario, sampling=sampling,
                                   degradation=degradation,
                                   retest_correction=retest_correction,
                                   noncompliance=noncompliance,
                                   compliance_correction=compliance_correction,
                                   reps=reps, seed=seed, alpha=float(alpha)))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return ParsedConfig(cells=tuple(cells), output=OutputSpec(path=path, format=fmt))


def load_config(path: str | Path) -> ParsedConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(document)
