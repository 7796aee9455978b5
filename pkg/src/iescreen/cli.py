"""Command-line front end.

Subcommands: ``power`` (analytic power and sample-size search), ``simulate``
(Monte Carlo over one or more configuration cells), ``reproduce`` (re-compute
a published table or figure with pass/fail comparison and a companion plot),
and ``analyze`` (estimates and corrections for user-supplied count tables).

Exit codes: 0 ok, 1 config or input error, 2 infeasible scenario, 3 I/O
failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .config import ConfigError, load_config
from .mechanisms import CorrectionUnavailable, RetestFractions
from .power import analytic_power, required_total_n
from .report import SIMULATE_COLUMNS, simulate_row, write_rows
from .scenario import InfeasibleScenarioError, solve_rates
from .simulate import corrected_tests, run_study
from .tables import (EstimationError, TrialDecomposition, TwoByTwoTable, ZERO_TABLE,
                     pooled_z_test)
from .targets import REPORT_COLUMNS, resolve_target, run_target

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_IO = 3

POWER_COLUMNS = ("quantity", "value")
ANALYZE_COLUMNS = ("estimand", "corrected", "point", "z", "p_two_sided")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # Usage problems are configuration errors (exit 1), not argparse's 2.
    def error(self, message: str):
        raise CliError(f"{self.prog}: {message}", EXIT_CONFIG)


def _add_output_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", metavar="PATH",
                        help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format (default: csv)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="iescreen",
                     description="Screening-trial power analysis and simulation "
                                 "for the ever-positive (stored-specimen) design.")
    sub = parser.add_subparsers(dest="command", required=True,
                               parser_class=_Parser)

    p_power = sub.add_parser("power",
                             help="analytic power for a scenario")
    p_power.add_argument("--config", required=True, help="JSON run configuration")
    p_power.add_argument("--alpha", type=float, default=None)
    p_power.add_argument("--solve-power", type=float, metavar="TARGET", default=None,
                         help="also search the total size reaching this power")
    _add_output_options(p_power)

    p_sim = sub.add_parser("simulate",
                           help="seeded Monte Carlo study over config cells")
    p_sim.add_argument("--config", required=True, help="JSON run configuration")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--reps", type=int, default=None)
    p_sim.add_argument("--alpha", type=float, default=None)
    p_sim.add_argument("--workers", type=int, default=1)
    _add_output_options(p_sim)

    p_repro = sub.add_parser("reproduce",
                             help="recompute a published table or figure")
    p_repro.add_argument("target", help="fig1, fig2, figS1, figS2, figS3, "
                                        "table1a, table1b, table2a, table2b, "
                                        "table2c or table3")
    p_repro.add_argument("--seed", type=int, default=12345)
    p_repro.add_argument("--reps", type=int, default=10_000)
    p_repro.add_argument("--alpha", type=float, default=0.05)
    p_repro.add_argument("--workers", type=int, default=1)
    p_repro.add_argument("--no-plot", action="store_true",
                         help="skip the companion PNG")
    _add_output_options(p_repro)

    p_an = sub.add_parser("analyze",
                          help="estimates for a decomposition CSV")
    p_an.add_argument("input", help="CSV with rows ever/never/unknown and columns "
                                    "table,events_screen,nonevents_screen,"
                                    "events_control,nonevents_control")
    p_an.add_argument("--retest-event", type=float, default=None,
                      help="retest-positive fraction among screen-arm event positives")
    p_an.add_argument("--retest-nonevent", type=float, default=None,
                      help="retest-positive fraction among screen-arm non-event positives")
    _add_output_options(p_an)
    return parser


def _emit(rows, columns, fmt: Optional[str], path: Optional[str]) -> None:
    try:
        write_rows(rows, columns, fmt or "csv", path)
    except OSError as exc:
        raise CliError(f"cannot write output: {exc}", EXIT_IO) from exc


def _cmd_power(args) -> int:
    parsed = load_config(args.config)
    if len(parsed.cells) != 1:
        raise CliError("power expects a single-cell configuration (no sweeps)",
                       EXIT_CONFIG)
    cfg = parsed.cells[0]
    scenario = cfg.scenario
    alpha = args.alpha if args.alpha is not None else cfg.alpha
    try:
        rates = solve_rates(scenario)
        result = analytic_power(scenario, alpha)
    except InfeasibleScenarioError as exc:
        raise CliError(f"infeasible scenario: {exc}", EXIT_INFEASIBLE) from exc
    except EstimationError as exc:
        raise CliError(f"power undefined for this scenario: {exc}", EXIT_INFEASIBLE) from exc
    rows = [
        {"quantity": "z_standard", "value": result.z_standard},
        {"quantity": "z_pos", "value": result.z_pos},
        {"quantity": "z_ratio", "value": result.z_ratio},
        {"quantity": "power_standard", "value": result.power_standard},
        {"quantity": "power_pos", "value": result.power_pos},
        {"quantity": "alpha", "value": result.alpha},
        {"quantity": "rate_everpos_control", "value": rates.everpos},
        {"quantity": "rate_neverpos_control", "value": rates.neverpos},
    ]
    if args.solve_power is not None:
        try:
            n_ie = required_total_n(scenario, args.solve_power, alpha, "everpos")
            n_std = required_total_n(scenario, args.solve_power, alpha, "standard")
        except (EstimationError, InfeasibleScenarioError) as exc:
            raise CliError(f"sample-size search failed: {exc}", EXIT_INFEASIBLE) from exc
        rows += [
            {"quantity": "total_n_everpos_analysis", "value": n_ie},
            {"quantity": "per_arm_n_everpos_analysis",
             "value": n_ie * (1 - scenario.control_fraction)},
            {"quantity": "total_n_standard_analysis", "value": n_std},
            {"quantity": "per_arm_n_standard_analysis",
             "value": n_std * (1 - scenario.control_fraction)},
        ]
    fmt = args.format or parsed.output.format
    _emit(rows, POWER_COLUMNS, fmt, args.out or parsed.output.path)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    parsed = load_config(args.config)
    rows = []
    for cfg in parsed.cells:
        if args.seed is not None or args.reps is not None or args.alpha is not None:
            cfg = replace(cfg,
                          seed=args.seed if args.seed is not None else cfg.seed,
                          reps=args.reps if args.reps is not None else cfg.reps,
                          alpha=args.alpha if args.alpha is not None else cfg.alpha)
        try:
            summary = run_study(cfg, workers=args.workers)
        except InfeasibleScenarioError as exc:
            raise CliError(f"infeasible scenario: {exc}", EXIT_INFEASIBLE) from exc
        rows.append(simulate_row(cfg, summary))
    fmt = args.format or parsed.output.format
    _emit(rows, SIMULATE_COLUMNS, fmt, args.out or parsed.output.path)
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    if resolve_target(args.target) is None:
        raise CliError(f"unknown reproduction target {args.target!r}", EXIT_CONFIG)
    rows = run_target(args.target, seed=args.seed, reps=args.reps, alpha=args.alpha,
                      workers=args.workers)
    out = args.out
    if out is None:
        out = f"{resolve_target(args.target)}.csv"
    fmt = args.format or ("json" if out.endswith(".json") else "csv")
    _emit(rows, REPORT_COLUMNS, fmt, out)
    if not args.no_plot:
        from .plots import render_target
        plot_path = str(Path(out).with_suffix(".png"))
        try:
            render_target(args.target, rows, plot_path)
        except OSError as exc:
            raise CliError(f"cannot write plot: {exc}", EXIT_IO) from exc
    return EXIT_OK


def _read_decomposition(path: str) -> TrialDecomposition:
    expected_fields = ["table", "events_screen", "nonevents_screen",
                       "events_control", "nonevents_control"]
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_CONFIG) from exc
    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected_fields:
        raise CliError(f"{path}: header must be {','.join(expected_fields)}", EXIT_CONFIG)
    tables: dict[str, TwoByTwoTable] = {}
    for line_no, entry in enumerate(reader, start=2):
        name = (entry["table"] or "").strip()
        if name not in ("ever", "never", "unknown"):
            raise CliError(f"{path} line {line_no}: table must be ever, never or "
                           f"unknown, got {name!r}", EXIT_CONFIG)
        if name in tables:
            raise CliError(f"{path} line {line_no}: duplicate {name} row", EXIT_CONFIG)
        cells = []
        for field in expected_fields[1:]:
            raw = (entry[field] or "").strip()
            try:
                value = float(raw)
            except ValueError:
                raise CliError(f"{path} line {line_no}, column {field}: "
                               f"{raw!r} is not a number", EXIT_CONFIG) from None
            if value < 0:
                raise CliError(f"{path} line {line_no}, column {field}: "
                               f"cell must be >= 0", EXIT_CONFIG)
            cells.append(value)
        tables[name] = TwoByTwoTable(*cells)
    for required in ("ever", "never"):
        if required not in tables:
            raise CliError(f"{path}: missing {required} row", EXIT_CONFIG)
    return TrialDecomposition(ever=tables["ever"], never=tables["never"],
                              unknown=tables.get("unknown", ZERO_TABLE))


def _cmd_analyze(args) -> int:
    decomp = _read_decomposition(args.input)
    if (args.retest_event is None) != (args.retest_nonevent is None):
        raise CliError("provide both --retest-event and --retest-nonevent or neither",
                       EXIT_CONFIG)
    rows = []
    overall = decomp.overall()
    for label, table in (("RR", overall), ("RD", overall),
                         ("RR_pos", decomp.ever), ("RD_pos", decomp.ever),
                         ("RR_neg", decomp.never), ("RD_neg", decomp.never)):
        try:
            result = pooled_z_test(table, label)
            rows.append({"estimand": label, "corrected": False, "point": result.point,
                         "z": result.z, "p_two_sided": result.p_two_sided})
        except EstimationError as exc:
            raise CliError(f"cannot estimate {label}: {exc}", EXIT_CONFIG) from exc

    retest = None
    if args.retest_event is not None:
        try:
            retest = RetestFractions(args.retest_event, args.retest_nonevent,
                                     decomp.ever.events_screen,
                                     decomp.ever.nonevents_screen)
        except CorrectionUnavailable as exc:
            raise CliError(f"invalid retest fractions: {exc}", EXIT_CONFIG) from exc
    has_unknown = decomp.unknown != ZERO_TABLE
    if has_unknown or retest is not None:
        try:
            corrected = corrected_tests(decomp, retest=retest, compliance=has_unknown)
        except CorrectionUnavailable as exc:
            raise CliError(f"correction unavailable: {exc}", EXIT_CONFIG) from exc
        for label, (point, z, p) in (("RR_pos", corrected["pos"]),
                                     ("RR_neg", corrected["neg"])):
            rows.append({"estimand": label, "corrected": True, "point": point,
                         "z": z, "p_two_sided": p})
    _emit(rows, ANALYZE_COLUMNS, args.format, args.out)
    return EXIT_OK


_COMMANDS = {
    "power": _cmd_power,
    "simulate": _cmd_simulate,
    "reproduce": _cmd_reproduce,
    "analyze": _cmd_analyze,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
