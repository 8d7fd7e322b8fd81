"""Report rendering: delimited result files plus matplotlib figures.

The CLI's report path executes the reduced query of every view in an
interface spec, writes each result as CSV, and renders chart-typed views to
PNG files next to the CSVs.  Workload traces get summary figures (event
timeline, per-interaction counts, think-time histogram) alongside the
JSONL trace.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .backend import QueryResult, SqliteBackend
from .binding import BindingState
from .choices import ChoiceModel
from .interface import InterfaceSpec
from .reduction import reduce_grammar
from .workload import WorkloadTrace


def write_csv(result: QueryResult, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([name for name, _ in result.columns])
        writer.writerows(result.rows)


def _chart_series(result: QueryResult):
    """First column as categories, remaining numeric columns as series."""
    if not result.columns or not result.rows:
        return [], {}
    categories = [row[0] for row in result.rows]
    series = {}
    for i, (name, _) in enumerate(result.columns):
        if i == 0:
            continue
        values = [row[i] for row in result.rows]
        if all(isinstance(v, (int, float)) or v is None for v in values):
            series[name] = [v if v is not None else 0 for v in values]
    return categories, series


def render_view_figure(view_id: str, view_type: str, result: QueryResult,
                       path: Path, title: str = "") -> bool:
    """Render one view to a PNG; returns False for non-chart views."""
    if view_type not in ("bar-chart", "line-chart"):
        return False
    categories, series = _chart_series(result)
    if not series:
        return False
    fig, ax = plt.subplots(figsize=(7, 4))
    x = range(len(categories))
    if view_type == "bar-chart":
        width = 0.8 / len(series)
        for k, (name, values) in enumerate(series.items()):
            ax.bar([i + k * width for i in x], values, width=width, label=name)
        ax.set_xticks([i + 0.4 - width / 2 for i in x])
        ax.set_xticklabels([str(c) for c in categories], rotation=45, ha="right")
    else:
        for name, values in series.items():
            ax.plot(list(x), values, marker="o", label=name)
        ax.set_xticks(list(x))
        ax.set_xticklabels([str(c) for c in categories], rotation=45, ha="right")
    ax.set_title(title or view_id)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def render_report(model: ChoiceModel, spec: InterfaceSpec, state: BindingState,
                  backend: SqliteBackend, out_dir: Path) -> dict[str, list[str]]:
    """Execute every complete view and write CSVs plus chart figures."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, list[str]] = {"csv": [], "figures": [], "skipped": []}
    reductions = reduce_grammar(model, state)
    for view in spec.views:
        entry = reductions.per_rule.get(view.starting_rule)
        if entry is None or not entry.complete:
            written["skipped"].append(view.id)
            continue
        result = backend.execute(entry.query)
        csv_path = out_dir / f"{view.id}.csv"
        write_csv(result, csv_path)
        written["csv"].append(str(csv_path))
        fig_path = out_dir / f"{view.id}.png"
        if render_view_figure(view.id, view.view_type, result, fig_path,
                              title=entry.query):
            written["figures"].append(str(fig_path))
    return written


def render_workload_figures(trace: WorkloadTrace, out_dir: Path) -> list[str]:
    """Timeline, per-interaction counts, and think-time histogram PNGs."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    if not trace.events:
        return written

    times = [e.t_offset_ms / 1000.0 for e in trace.events]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.step(times, range(1, len(times) + 1), where="post")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("events")
    ax.set_title("workload timeline")
    fig.tight_layout()
    path = out_dir / "workload_timeline.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(str(path))

    counts: dict[str, int] = {}
    for event in trace.events:
        counts[event.interaction] = counts.get(event.interaction, 0) + 1
    fig, ax = plt.subplots(figsize=(7, 3.5))
    names = sorted(counts)
    ax.bar(names, [counts[n] for n in names])
    ax.set_ylabel("events")
    ax.set_title("events per interaction")
    ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    path = out_dir / "workload_interactions.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(str(path))

    gaps = [t2 - t1 for t1, t2 in zip(times, times[1:])]
    if gaps:
        fig, ax = plt.subplots(figsize=(7, 3.5))
        ax.hist(gaps, bins=min(30, max(5, len(gaps) // 10)))
        ax.set_xlabel("think time (s)")
        ax.set_ylabel("count")
        ax.set_title("think-time distribution")
        fig.tight_layout()
        path = out_dir / "workload_think_times.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(str(path))
    return written
