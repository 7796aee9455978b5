"""Figure rendering for reproduction reports.

Every reproduction target gets a companion PNG next to its delimited output:
power curves for the figure targets, power/rate profiles for the tables, and
table panels for the deterministic worked examples.
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Optional, Sequence

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .stats import norm_ppf  # noqa: E402

_ppf_vec = np.vectorize(norm_ppf, otypes=[float])
_erfc_vec = np.vectorize(math.erfc, otypes=[float])


def _pivot(rows: Sequence[dict]) -> dict[tuple[str, str], dict]:
    return {(r["row"], r["quantity"]): r for r in rows}


def _probit_scale(ax) -> None:
    ax.set_yscale("function", functions=(
        lambda p: _ppf_vec(np.clip(np.asarray(p, float), 1e-9, 1 - 1e-9)),
        lambda q: 0.5 * _erfc_vec(-np.asarray(q, float) / math.sqrt(2))))
    ticks = [0.1, 0.25, 0.5, 0.8, 0.9, 0.95, 0.99]
    ax.set_yticks(ticks)
    ax.set_yticklabels([f"{t:g}" for t in ticks])


def _plot_fig2(rows: Sequence[dict], path: str) -> None:
    grid = defaultdict(dict)
    for r in rows:
        if r["quantity"] != "power_pos" or r["row"] == "summary":
            continue
        parts = dict(p.split("=") for p in r["row"].split(","))
        key = (float(parts["rr_neg"]), float(parts["p_m"]))
        grid[key][float(parts["rr_pos"])] = r["value"]
    pivot = _pivot(rows)
    power_std = pivot.get(("summary", "power_standard"), {}).get("value")
    rr_negs = sorted({k[0] for k in grid}, reverse=True)
    fig, axes = plt.subplots(1, len(rr_negs), figsize=(4 * len(rr_negs), 4),
                             sharey=True)
    for ax, rr_neg in zip(axes, rr_negs):
        for p_m in sorted({k[1] for k in grid}):
            series = grid[(rr_neg, p_m)]
            xs = sorted(series)
            ys = [series[x] for x in xs]
            ax.plot(xs, ys, marker=".", label=f"ever-positivity {p_m:g}")
        if power_std is not None:
            ax.axhline(power_std, color="black", lw=1.2, label="standard analysis")
        for level in (0.8, 0.9):
            ax.axhline(level, color="gray", ls=":", lw=0.8)
        _probit_scale(ax)
        ax.set_title(f"never-positive RR = {rr_neg:g}")
        ax.set_xlabel("ever-positive relative risk")
    axes[0].set_ylabel("power")
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _plot_figs1(rows: Sequence[dict], path: str) -> None:
    pivot = _pivot(rows)
    labels, events, powers = [], [], []
    for row in ("rr_pos=0.8", "rr_pos=0.7"):
        labels.append(row)
        events.append(pivot[(row, "ever_events_total")]["value"])
        powers.append(pivot[(row, "power_pos")]["value"])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.5))
    ax1.bar(labels, events, color=["tab:blue", "tab:orange"])
    ax1.set_ylabel("expected ever-positive events")
    ax2.bar(labels, powers, color=["tab:blue", "tab:orange"])
    ax2.set_ylabel("power")
    ax2.set_ylim(0.9, 1.0)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _plot_table_panels(rows: Sequence[dict], path: str, title: str) -> None:
    """Render long-format comparison rows as a simple value/published table."""
    fig_rows = [r for r in rows if r["published"] is not None]
    fig, ax = plt.subplots(figsize=(7.5, 0.32 * len(fig_rows) + 1.2))
    ax.axis("off")
    cells = [[r["row"], r["quantity"], f"{r['value']:.6g}",
              f"{r['published']:.6g}", r["status"]] for r in fig_rows]
    table = ax.table(cellText=cells,
                     colLabels=["row", "quantity", "value", "published", "status"],
                     loc="center")
    table.auto_set_font_size(False)
    table.set_fontsize(8)
    table.scale(1.0, 1.2)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _plot_table1(rows: Sequence[dict], path: str, title: str) -> None:
    series = defaultdict(dict)
    published = defaultdict(dict)
    for r in rows:
        parts = dict(p.split("=") for p in r["row"].split(","))
        f, n = float(parts["f"]), int(parts["n"])
        series[n][f] = r["value"]
        if r["published"] is not None:
            published[n][f] = r["published"]
    fig, ax = plt.subplots(figsize=(6, 4))
    for n in sorted(series, reverse=True):
        xs = sorted(series[n])
        ax.plot(xs, [series[n][x] for x in xs], marker="o", label=f"n = {n:,}")
        ax.plot(xs, [published[n][x] for x in xs], ls="none", marker="x",
                color=ax.lines[-1].get_color())
    ax.set_xlabel("non-event sampling fraction")
    ax.set_ylabel("power (lines: this run, x: published)")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _plot_table2(rows: Sequence[dict], path: str, title: str) -> None:
    by_quantity = defaultdict(list)
    order: list[str] = []
    for r in rows:
        if r["row"] not in order:
            order.append(r["row"])
        by_quantity[r["quantity"]].append((r["row"], r["value"], r["published"]))
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = range(len(order))
    for quantity, entries in by_quantity.items():
        values = {row: v for row, v, _ in entries}
        ax.plot(xs, [values[row] for row in order], marker="o", label=quantity)
        pubs = {row: p for row, _, p in entries if p is not None}
        if pubs:
            ax.plot([order.index(row) for row in pubs], list(pubs.values()),
                    ls="none", marker="x", color=ax.lines[-1].get_color())
    ax.set_xticks(list(xs))
    ax.set_xticklabels(order, rotation=30, ha="right", fontsize=8)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_target(target: str, rows: Sequence[dict], path: str) -> Optional[str]:
    """Write the companion figure for a reproduction target; returns the path."""
    name = target.lower()
    if name == "fig2":
        _plot_fig2(rows, path)
    elif name == "figs1":
        _plot_figs1(rows, path)
    elif name in ("table1a", "table1b"):
        _plot_table1(rows, path, f"reproduction: {target}")
    elif name in ("table2a", "table2b", "table2c", "table3"):
        _plot_table2(rows, path, f"reproduction: {target}")
    else:  # fig1, figS2, figS3: deterministic worked examples
        _plot_table_panels(rows, path, f"reproduction: {target}")
    return path
