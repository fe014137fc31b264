"""Chart rendering with structural element manifests.

Every plotting function writes an image plus a JSON element manifest
(``<image>.elements.json``) describing what was drawn: box counts per
thread row, dot counts, series sizes. Tests assert on the manifests, not
pixels, and re-rendering the same inputs yields the same manifest.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .traces import (EPOCH_ADVANCE, GARBAGE_COUNT, INTERVAL_KINDS, TOKEN_PASS,
                     TimelineData, read_summary_csv, read_timeline_dir)

# colours cycle by event index so neighbouring boxes stay distinguishable
BOX_COLORS = ["#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4",
              "#8c613c", "#dc7ec0", "#797979", "#d5bb67", "#82c6e2"]

DEFAULT_THREADS_SHOWN = 20
DEFAULT_THRESHOLD_MS = 0.1


@dataclass
class TimelinePlotSpec:
    input_dir: str
    out_path: str
    max_threads: int = DEFAULT_THREADS_SHOWN
    window: tuple[float, float] | None = None   # seconds from clock origin
    threshold_ms: float = DEFAULT_THRESHOLD_MS


def _write_manifest(out_path: str, manifest: dict) -> str:
    path = out_path + ".elements.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


def plot_timeline(spec: TimelinePlotSpec) -> dict:
    """One row per thread; interval events are boxes, epoch advances are
    dots on their row and projected along the bottom axis."""
    data = read_timeline_dir(spec.input_dir)
    origin = int(data.manifest.get("clock_origin_ns", 0))
    span = data.span_ns
    if spec.window is not None:
        lo = origin + int(spec.window[0] * 1e9)
        hi = origin + int(spec.window[1] * 1e9)
        if lo > span[1] or hi < span[0]:
            warnings.warn("window outside the recorded span; plot is empty")
    else:
        lo, hi = span
    threshold_ns = int(spec.threshold_ms * 1e6)

    shown = sorted(data.threads)[:spec.max_threads]
    fig, ax = plt.subplots(figsize=(10, max(2.0, 0.4 * max(1, len(shown)))))
    boxes_per_thread = {}
    dot_times = []
    pass_marks = 0
    color_index = 0
    for row, tid in enumerate(shown):
        count = 0
        for ev in data.threads[tid]:
            if ev.start_ns > hi or ev.end_ns < lo:
                continue
            if ev.kind in INTERVAL_KINDS:
                if ev.duration_ns < threshold_ns or ev.duration_ns <= 0:
                    continue
                ax.broken_barh(
                    [((ev.start_ns - origin) / 1e9, ev.duration_ns / 1e9)],
                    (row - 0.4, 0.8),
                    facecolors=BOX_COLORS[color_index % len(BOX_COLORS)])
                color_index += 1
                count += 1
            elif ev.kind == EPOCH_ADVANCE:
                t = (ev.start_ns - origin) / 1e9
                ax.plot([t], [row], marker="o", markersize=3, color="#1f3fbf",
                        linestyle="none")
                dot_times.append(t)
            elif ev.kind == TOKEN_PASS:
                pass_marks += 1
        boxes_per_thread[tid] = count
    # every epoch dot is also projected at the bottom of the graph
    floor = -1.0
    for t in dot_times:
        ax.plot([t], [floor], marker="o", markersize=2, color="#1f3fbf",
                linestyle="none")
    ax.set_ylim(floor - 0.5, len(shown) - 0.5 if shown else 0.5)
    ax.set_yticks(range(len(shown)))
    ax.set_yticklabels([f"T{tid}" for tid in shown])
    ax.set_xlabel("seconds")
    ax.set_ylabel("thread")
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)

    manifest = {
        "threads_shown": len(shown),
        "boxes": {str(tid): boxes_per_thread[tid] for tid in shown},
        "total_boxes": sum(boxes_per_thread.values()),
        "dots": len(dot_times),
        "projected_dots": len(dot_times),
        "token_passes_seen": pass_marks,
        "threshold_ns": threshold_ns,
        "window_ns": [lo - origin, hi - origin],
    }
    _write_manifest(spec.out_path, manifest)
    return manifest


def plot_scaling(summary_csv: str, out_path: str,
                 hw_line: int | None = None) -> dict:
    """Throughput chart from summary rows: lines across thread counts with
    min/max error bars, or bars when there is a single thread count."""
    rows = read_summary_csv(summary_csv)
    if not rows:
        raise ValueError("summary has no rows")
    series: dict[str, list] = {}
    for row in rows:
        label = f"{row['reclaimer']}/{row['policy']}"
        series.setdefault(label, []).append(row)
    thread_counts = sorted({row["threads"] for row in rows})
    single = len(thread_counts) == 1

    fig, ax = plt.subplots(figsize=(8, 5))
    manifest: dict = {"chart": "bar" if single else "line",
                      "hw_line": hw_line, "series": {}}
    if single:
        labels = sorted(series)
        heights = [series[lab][0]["ops_mean"] for lab in labels]
        errs = [[series[lab][0]["ops_mean"] - series[lab][0]["ops_min"]
                 for lab in labels],
                [series[lab][0]["ops_max"] - series[lab][0]["ops_mean"]
                 for lab in labels]]
        ax.bar(labels, heights, yerr=errs, capsize=4)
        ax.set_ylabel("ops/s")
        plt.setp(ax.get_xticklabels(), rotation=20, ha="right")
        for lab, height in zip(labels, heights):
            manifest["series"][lab] = {"height": height, "points": 1}
    else:
        for label in sorted(series):
            pts = sorted(series[label], key=lambda r: r["threads"])
            xs = [p["threads"] for p in pts]
            ys = [p["ops_mean"] for p in pts]
            yerr = [[p["ops_mean"] - p["ops_min"] for p in pts],
                    [p["ops_max"] - p["ops_mean"] for p in pts]]
            ax.errorbar(xs, ys, yerr=yerr, marker="o", capsize=3, label=label)
            manifest["series"][label] = {"points": len(pts),
                                         "max_mean": max(ys)}
        ax.set_xlabel("threads")
        ax.set_ylabel("ops/s")
        ax.legend(fontsize=8)
    if hw_line is not None:
        ax.axvline(hw_line, color="red", linewidth=1)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    _write_manifest(out_path, manifest)
    return manifest


def plot_garbage(input_dirs: list[str], out_path: str) -> dict:
    """Per-epoch garbage totals, one series per run directory.

    Counts are grouped by each thread's event ordinal: a thread's i-th
    GARBAGE_COUNT event belongs to its i-th epoch, which aligns exactly
    with token rounds and closely with announcement epochs.
    """
    fig, ax = plt.subplots(figsize=(9, 4))
    manifest: dict = {"series": {}}
    plotted = False
    for directory in input_dirs:
        data = read_timeline_dir(directory)
        per_epoch: dict[int, int] = {}
        for events in data.threads.values():
            ordinal = 0
            for ev in events:
                if ev.kind == GARBAGE_COUNT:
                    per_epoch[ordinal] = per_epoch.get(ordinal, 0) + ev.value
                    ordinal += 1
        if not per_epoch:
            raise ValueError("no garbage accounting in trace")
        xs = sorted(per_epoch)
        ys = [per_epoch[x] for x in xs]
        label = data.manifest.get("config_reclaimer", directory)
        ax.step(xs, ys, where="mid", label=str(label))
        peak = max(ys)
        ax.annotate(f"max {peak}", (xs[ys.index(peak)], peak), fontsize=7)
        manifest["series"][str(label)] = {"points": len(xs), "max": peak,
                                          "total": sum(ys)}
        plotted = True
    if plotted:
        ax.set_xlabel("epoch")
        ax.set_ylabel("garbage nodes")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    _write_manifest(out_path, manifest)
    return manifest
