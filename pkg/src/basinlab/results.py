"""Run-directory writers and figure data.

Layout of a run directory::

    config.yaml          config echo (enough to rerun, seed included)
    record.json          every RunRecord
    metrics.csv          training trajectories
    sparsity_curve.csv   pruning curves (fft runs)
    scaling.csv          scaling-study points
    fig_*.csv, fig_*.svg figure data and renderings
"""

from __future__ import annotations

import csv
import json
import logging
import os
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .experiments import CurvePoint, RunRecord, ScalingPoint

log = logging.getLogger(__name__)

__all__ = [
    "METRIC_COLUMNS",
    "CURVE_COLUMNS",
    "SCALING_COLUMNS",
    "write_record_json",
    "write_metrics_csv",
    "write_curve_csv",
    "write_scaling_csv",
    "write_run_dir",
    "emit_plot_data",
]

METRIC_COLUMNS = ["step", "loss", "test_error", "grad_norm"]
CURVE_COLUMNS = ["threshold", "l0", "rel_error"]
SCALING_COLUMNS = ["n", "condition", "l0", "scaling_factor"]
CELL_COLUMNS = ["n", "condition", "scale", "seed"]


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_record_json(path, records: Sequence[RunRecord]) -> None:
    docs = [r.to_dict() for r in records]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"records": docs}, fh, indent=1, sort_keys=True, allow_nan=True)
        fh.write("\n")


def write_metrics_csv(path, records: Sequence[RunRecord]) -> None:
    """Trajectories; cell columns are prepended only for multi-record runs."""
    cells = len(records) > 1
    header = (CELL_COLUMNS if cells else []) + METRIC_COLUMNS
    rows = []
    for r in records:
        prefix = [r.n, r.condition, r.scale, r.seed] if cells else []
        rows += [prefix + [p[c] for c in METRIC_COLUMNS] for p in r.trajectory]
    _write_csv(Path(path), header, rows)


def write_curve_csv(path, curve_or_records) -> None:
    items = list(curve_or_records)
    if items and isinstance(items[0], RunRecord):
        recs = [r for r in items if r.sparsity_curve]
        cells = len(recs) > 1
        header = (CELL_COLUMNS if cells else []) + CURVE_COLUMNS
        rows = []
        for r in recs:
            prefix = [r.n, r.condition, r.scale, r.seed] if cells else []
            rows += [prefix + [p[c] for c in CURVE_COLUMNS] for p in r.sparsity_curve]
    else:
        header = CURVE_COLUMNS
        rows = [[p.threshold, p.l0, p.rel_error] if isinstance(p, CurvePoint) else list(p)
                for p in items]
    _write_csv(Path(path), header, rows)


def write_scaling_csv(path, points: Sequence[ScalingPoint]) -> None:
    _write_csv(Path(path), SCALING_COLUMNS,
               [[p.n, p.condition, p.l0, p.scaling_factor] for p in points])


def write_run_dir(out, config_text: str, records: Sequence[RunRecord],
                  points: Sequence[ScalingPoint] = ()) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(config_text, encoding="utf-8")
    write_record_json(out / "record.json", records)
    write_metrics_csv(out / "metrics.csv", records)
    if any(r.sparsity_curve for r in records):
        write_curve_csv(out / "sparsity_curve.csv", records)
    if points:
        write_scaling_csv(out / "scaling.csv", points)
        emit_plot_data(points, out)
    elif records:
        emit_plot_data(records, out)
    return out


# --- figures -----------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "basinlab"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def _save_svg(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def emit_plot_data(items, out_dir) -> list[Path]:
    """Write figure CSVs and SVG renderings for sweep records or scaling points.

    Basin records give ``fig_basin.csv`` (noise_scale, final_error: median
    over seeds, one row per scale).  Scaling points give ``fig_scaling.csv``
    with one series per condition.  Output is byte-identical for identical
    input.  Empty input only logs a warning.
    """
    items = list(items)
    if not items:
        log.warning("emit_plot_data: nothing to plot")
        return []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if isinstance(items[0], ScalingPoint):
        return _scaling_figure(items, out_dir)
    return _basin_figure(items, out_dir)


def _basin_figure(records: Sequence[RunRecord], out_dir: Path) -> list[Path]:
    by_scale = defaultdict(list)
    for r in records:
        by_scale[r.scale].append(r.final_error)
    scales = sorted(by_scale)
    med = [float(np.median(by_scale[s])) for s in scales]
    csv_path = out_dir / "fig_basin.csv"
    _write_csv(csv_path, ["noise_scale", "final_error"], zip(scales, med))

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4, 3))
    for s in scales:
        ax.scatter([s] * len(by_scale[s]), by_scale[s], color="0.6", s=10)
    ax.plot(scales, med, "o-", color="C0", label="median")
    if min(scales) > 0:
        ax.set_xscale("log")
    task = records[0].task
    ax.set_xlabel("initialization noise scale")
    ax.set_ylabel("final bit error" if task == "parity" else "final relative error")
    ax.legend()
    fig.tight_layout()
    svg_path = out_dir / "fig_basin.svg"
    _save_svg(fig, svg_path)
    plt.close(fig)
    return [csv_path, svg_path]


def _scaling_figure(points: Sequence[ScalingPoint], out_dir: Path) -> list[Path]:
    conditions = []
    for p in points:
        if p.condition not in conditions:
            conditions.append(p.condition)
    rows = sorted(((p.condition, p.n, p.scaling_factor) for p in points),
                  key=lambda r: (conditions.index(r[0]), r[1]))
    csv_path = out_dir / "fig_scaling.csv"
    _write_csv(csv_path, ["condition", "n", "scaling_factor"], rows)

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4, 3))
    colors = {"handcoded": "C3", "near": "C0", "far": "C2"}
    for cond in conditions:
        xs = [r[1] for r in rows if r[0] == cond]
        ys = [r[2] for r in rows if r[0] == cond]
        ax.plot(xs, ys, "o-", color=colors.get(cond), label=cond)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("n")
    ax.set_ylabel("L0 / (n log2 n)")
    ax.legend()
    fig.tight_layout()
    svg_path = out_dir / "fig_scaling.svg"
    _save_svg(fig, svg_path)
    plt.close(fig)
    return [csv_path, svg_path]


def ensure_parent(path) -> None:
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
