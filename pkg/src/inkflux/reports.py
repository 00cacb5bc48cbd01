"""Report rendering: fixed-schema CSV tables and self-contained SVG charts,
plus the rq1/rq2/rq3 bundle builders shared by the service and the CLI.

All output is deterministic for identical inputs: floats are formatted with
a fixed rule and rows follow the task-type order of the data model.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

from . import analyses
from .analyses import BaselineConfig
from .errors import NoCurves
from .oplog import TASK_TYPES, EventLog
from .sessionizer import WorkingSession
from .stats import KdeCurve, gaussian_kde
from .textmetrics import MetricBackends

PROGRESS_CLIP = (0.0, 200.0)
INFLUENCE_CLIP = (0.0, 1.0)
BASELINE_LABEL = "baseline"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _csv(rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_latency_csv(report: analyses.LatencyReport) -> str:
    rows = [
        [
            "task_type",
            "samples_system",
            "q25_system_s",
            "q50_system_s",
            "q75_system_s",
            "samples_reading",
            "q25_reading_s",
            "q50_reading_s",
            "q75_reading_s",
            "not_read_rate",
        ]
    ]
    for row in report.by_type:
        rows.append(
            [
                row.task_type,
                row.system.samples,
                row.system.q25_s,
                row.system.q50_s,
                row.system.q75_s,
                row.reading.samples,
                row.reading.q25_s,
                row.reading.q50_s,
                row.reading.q75_s,
                row.not_read_rate,
            ]
        )
    return _csv(rows)


def render_usage_csv(trend: analyses.UsageTrend) -> str:
    rows = [["phase", "task_type", "proportion"]]
    for i, phase in enumerate(trend.phases, start=1):
        proportions = phase.proportions
        for task_type in TASK_TYPES:
            rows.append([i, task_type, proportions[task_type]])
    return _csv(rows)


def render_progress_csv(samples: Sequence[analyses.ProgressSample]) -> str:
    rows = [["read_event_id", "task_type", "window_s", "word_delta"]]
    for s in samples:
        rows.append([s.record.suggestion_id, s.record.task_type, s.window_s, s.word_delta])
    return _csv(rows)


def render_influence_csv(samples: Sequence[analyses.InfluenceSample]) -> str:
    """Scored rows only; excluded samples are reported in bundle metadata."""
    rows = [["read_event_id", "task_type", "metric", "score"]]
    for s in samples:
        if s.score is not None:
            rows.append([s.record.suggestion_id, s.record.task_type, s.metric, s.score])
    return _csv(rows)


def render_kde_csv(curves: Sequence[tuple[str, KdeCurve]]) -> str:
    rows = [["label", "grid", "density"]]
    for label, curve in curves:
        for g, d in zip(curve.grid, curve.density):
            rows.append([label, g, d])
    return _csv(rows)


# --- SVG ------------------------------------------------------------------------


@dataclass(frozen=True)
class SvgStyle:
    width: int = 800
    height: int = 400
    margin_left: float = 60.0
    margin_right: float = 150.0
    margin_top: float = 20.0
    margin_bottom: float = 45.0
    palette: tuple[str, ...] = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#555555", "#9467bd")


def emit_kde_svg(curves: Sequence[tuple[str, KdeCurve]], style: Optional[SvgStyle] = None) -> bytes:
    """One polyline per labeled curve with shared axes and a legend;
    identical input yields identical bytes."""
    if not curves:
        raise NoCurves("SVG rendering needs at least one curve")
    style = style or SvgStyle()
    x_min = min(c.grid[0] for _, c in curves)
    x_max = max(c.grid[-1] for _, c in curves)
    y_max = max(max(c.density) for _, c in curves)
    if x_max == x_min:
        x_max = x_min + 1.0
    if y_max <= 0.0:
        y_max = 1.0

    plot_w = style.width - style.margin_left - style.margin_right
    plot_h = style.height - style.margin_top - style.margin_bottom

    def sx(x: float) -> float:
        return style.margin_left + (x - x_min) / (x_max - x_min) * plot_w

    def sy(y: float) -> float:
        return style.margin_top + (1.0 - y / y_max) * plot_h

    def pt(x: float, y: float) -> str:
        return f"{sx(x):.3f},{sy(y):.3f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {style.width} {style.height}" '
        f'width="{style.width}" height="{style.height}">',
        f'<rect x="0" y="0" width="{style.width}" height="{style.height}" fill="white"/>',
        # Axes
        f'<line x1="{style.margin_left:.3f}" y1="{sy(0):.3f}" x2="{style.margin_left + plot_w:.3f}" '
        f'y2="{sy(0):.3f}" stroke="black" stroke-width="1"/>',
        f'<line x1="{style.margin_left:.3f}" y1="{style.margin_top:.3f}" x2="{style.margin_left:.3f}" '
        f'y2="{sy(0):.3f}" stroke="black" stroke-width="1"/>',
        f'<text x="{style.margin_left:.3f}" y="{style.height - 10}" font-size="12" '
        f'text-anchor="middle">{x_min:.6g}</text>',
        f'<text x="{style.margin_left + plot_w:.3f}" y="{style.height - 10}" font-size="12" '
        f'text-anchor="middle">{x_max:.6g}</text>',
        f'<text x="{style.margin_left - 8:.3f}" y="{sy(y_max) + 4:.3f}" font-size="12" '
        f'text-anchor="end">{y_max:.6g}</text>',
        f'<text x="{style.margin_left - 8:.3f}" y="{sy(0) + 4:.3f}" font-size="12" '
        f'text-anchor="end">0</text>',
    ]
    for i, (label, curve) in enumerate(curves):
        color = style.palette[i % len(style.palette)]
        points = " ".join(pt(x, y) for x, y in zip(curve.grid, curve.density))
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>'
        )
        ly = style.margin_top + 16 * i + 10
        lx = style.margin_left + plot_w + 12
        parts.append(
            f'<line x1="{lx:.3f}" y1="{ly - 4:.3f}" x2="{lx + 18:.3f}" y2="{ly - 4:.3f}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{lx + 24:.3f}" y="{ly:.3f}" font-size="12">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts).encode("utf-8")


# --- Bundles ----------------------------------------------------------------------


@dataclass
class ReportBundle:
    files: dict[str, str]
    meta: dict

    def write_to(self, out_dir) -> list[str]:
        from pathlib import Path

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, content in self.files.items():
            (out / name).write_text(content, encoding="utf-8")
            written.append(name)
        return written


def _kde_curves(
    samples_by_label: Sequence[tuple[str, Sequence[float]]],
    clip: tuple[float, float],
    grid_points: int,
) -> list[tuple[str, KdeCurve]]:
    """One independently-normalised curve per label with >= 2 samples."""
    curves = []
    for label, samples in samples_by_label:
        if len(samples) >= 2:
            curves.append((label, gaussian_kde(samples, clip=clip, grid_points=grid_points)))
    return curves


def build_rq1_bundle(log: EventLog, k: int = 4) -> ReportBundle:
    report = analyses.latency_report(log)
    pooled = analyses.usage_trend(log, k=k)
    per_doc = analyses.usage_trend(log, k=k, per_doc=True)
    files = {
        "latency.csv": render_latency_csv(report),
        "usage.csv": render_usage_csv(pooled),
        "usage_per_doc.csv": render_usage_csv(per_doc),
    }
    meta = {
        "requests": pooled.totals,
        "delivered": {row.task_type: row.delivered for row in report.by_type},
        "read": {row.task_type: row.read for row in report.by_type},
    }
    return ReportBundle(files=files, meta=meta)


def _sessions_for(log: EventLog, threshold_s: float) -> list[WorkingSession]:
    return analyses.working_sessions(log, threshold_s=threshold_s)


def build_rq2_bundle(
    log: EventLog,
    window_s: float = analyses.DEFAULT_WINDOW_S,
    runs: int = 1000,
    seed: int = 0,
    threshold_s: float = analyses.DEFAULT_SESSION_THRESHOLD_S,
    grid_points: int = 256,
) -> ReportBundle:
    samples = analyses.progress_samples(log, window_s)
    sessions = _sessions_for(log, threshold_s)
    baseline = analyses.baseline_progress(
        log, BaselineConfig(n_runs=runs, window_s=window_s, rng_seed=seed), sessions
    )
    by_label = [
        (t, [float(s.word_delta) for s in samples if s.record.task_type == t])
        for t in TASK_TYPES
    ]
    by_label.append((BASELINE_LABEL, [float(d) for d in baseline]))
    curves = _kde_curves(by_label, PROGRESS_CLIP, grid_points)
    suffix = f"{window_s:g}s"
    files = {
        "progress.csv": render_progress_csv(samples),
        f"kde_progress_{suffix}.csv": render_kde_csv(curves),
        f"progress_{suffix}.svg": emit_kde_svg(curves).decode("utf-8"),
    }
    meta = {
        "window_s": window_s,
        "samples": len(samples),
        "baseline_runs": runs,
        "sessions": len(sessions),
        "curves": [label for label, _ in curves],
    }
    return ReportBundle(files=files, meta=meta)


def build_rq3_bundle(
    log: EventLog,
    metric: str,
    window_s: float = analyses.DEFAULT_WINDOW_S,
    runs: int = 1000,
    seed: int = 0,
    threshold_s: float = analyses.DEFAULT_SESSION_THRESHOLD_S,
    grid_points: int = 256,
    backends: Optional[MetricBackends] = None,
) -> ReportBundle:
    result = analyses.influence_samples(log, window_s, metric, backends)
    sessions = _sessions_for(log, threshold_s)
    baseline = analyses.baseline_influence(
        log,
        BaselineConfig(n_runs=runs, window_s=window_s, rng_seed=seed),
        sessions,
        metric,
        backends,
    )
    by_label = [
        (
            t,
            [
                s.score
                for s in result.samples
                if s.score is not None and s.record.task_type == t
            ],
        )
        for t in TASK_TYPES
    ]
    by_label.append((BASELINE_LABEL, list(baseline.scores)))
    curves = _kde_curves(by_label, INFLUENCE_CLIP, grid_points)
    files = {
        "influence.csv": render_influence_csv(result.samples),
        f"kde_influence_{metric}.csv": render_kde_csv(curves),
        f"influence_{metric}.svg": emit_kde_svg(curves).decode("utf-8"),
    }
    meta = {
        "metric": metric,
        "window_s": window_s,
        "samples": len(result.samples) - result.excluded,
        "excluded": result.excluded,
        "baseline_runs": runs,
        "baseline_scores": len(baseline.scores),
        "baseline_excluded": baseline.excluded,
        "curves": [label for label, _ in curves],
    }
    return ReportBundle(files=files, meta=meta)
