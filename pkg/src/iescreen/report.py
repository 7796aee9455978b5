"""Delimited and JSON output for simulation results and reproduction reports.

CSV rules: '.' decimal point, no thousands separators, rates at 6 significant
digits, counts as raw integers, mandatory header row.  JSON keeps full float
precision so a written row re-reads bit-for-bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from typing import Any, Optional, Sequence

from .simulate import SimConfig, SimSummary

SIMULATE_COLUMNS = (
    "total_n", "control_fraction", "p0", "rr", "p_m", "rr_neg", "rr_pos",
    "f_event", "f_nonevent", "loss_event", "loss_nonevent", "retest_correction",
    "nc_screen_event", "nc_screen_nonevent", "nc_control_event", "nc_control_nonevent",
    "compliance_correction",
    "mean_rr_pos", "mean_rr_neg", "mean_corrected_rr_pos", "mean_corrected_rr_neg",
    "power_standard", "power_rr_pos", "power_corrected_rr_pos",
    "alpha_rr_neg", "alpha_corrected_rr_neg", "degenerate_reps", "seed",
)

_COUNT_COLUMNS = {"total_n", "degenerate_reps", "seed", "reps", "row_index"}


def format_value(column: str, value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    if column in _COUNT_COLUMNS or isinstance(value, int):
        return str(int(value))
    return format(float(value), ".6g")


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(col, row.get(col)) for col in columns])
    return buf.getvalue()


def rows_to_json(rows: Sequence[dict], columns: Sequence[str]) -> str:
    payload = [{col: row.get(col) for col in columns} for row in rows]
    return json.dumps(payload, indent=2, allow_nan=True) + "\n"


def write_rows(rows: Sequence[dict], columns: Sequence[str], fmt: str,
               path: Optional[str]) -> None:
    text = rows_to_csv(rows, columns) if fmt == "csv" else rows_to_json(rows, columns)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as handle:
            handle.write(text)


def simulate_row(cfg: SimConfig, summary: SimSummary) -> dict:
    s = cfg.scenario
    row: dict[str, Any] = {
        "total_n": s.total_n, "control_fraction": s.control_fraction, "p0": s.p0,
        "rr": s.rr, "p_m": s.p_m, "rr_neg": s.rr_neg, "rr_pos": s.rr_pos,
        "f_event": None, "f_nonevent": None,
        "loss_event": None, "loss_nonevent": None, "retest_correction": None,
        "nc_screen_event": None, "nc_screen_nonevent": None,
        "nc_control_event": None, "nc_control_nonevent": None,
        "compliance_correction": None,
    }
    if cfg.sampling is not None:
        row["f_event"] = cfg.sampling.strata[0].fraction
        row["f_nonevent"] = cfg.sampling.strata[1].fraction
    if cfg.degradation is not None:
        row["loss_event"] = cfg.degradation.loss_event
        row["loss_nonevent"] = cfg.degradation.loss_nonevent
        row["retest_correction"] = cfg.retest_correction
    if cfg.noncompliance is not None:
        row["nc_screen_event"] = cfg.noncompliance.screen_event
        row["nc_screen_nonevent"] = cfg.noncompliance.screen_nonevent
        row["nc_control_event"] = cfg.noncompliance.control_event
        row["nc_control_nonevent"] = cfg.noncompliance.control_nonevent
        row["compliance_correction"] = cfg.compliance_correction
    row.update({
        "mean_rr_pos": summary.mean_rr_pos,
        "mean_rr_neg": summary.mean_rr_neg,
        "mean_corrected_rr_pos": summary.mean_corrected_rr_pos,
        "mean_corrected_rr_neg": summary.mean_corrected_rr_neg,
        "power_standard": summary.power_standard,
        "power_rr_pos": summary.power_rr_pos,
        "power_corrected_rr_pos": summary.power_corrected_rr_pos,
        "alpha_rr_neg": summary.alpha_rr_neg,
        "alpha_corrected_rr_neg": summary.alpha_corrected_rr_neg,
        "degenerate_reps": summary.degenerate_reps,
        "seed": cfg.seed,
    })
    return row
