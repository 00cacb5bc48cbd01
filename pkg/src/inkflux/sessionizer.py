"""Working-session segmentation by inactivity threshold, threshold sweeps,
and knee selection on the threshold-to-session-count curve.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import TooFewPoints


@dataclass(frozen=True)
class WorkingSession:
    """Maximal run of activity with every inter-event gap below threshold."""

    doc_id: str
    start_ms: int
    end_ms: int
    event_count: int

    @property
    def duration_s(self) -> float:
        return (self.end_ms - self.start_ms) / 1000.0

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class ThresholdSweep:
    points: tuple[tuple[float, int], ...]


def segment_sessions(
    timestamps_ms: Sequence[int], threshold_s: float, doc_id: str = ""
) -> list[WorkingSession]:
    """Greedy left-to-right split wherever a gap is >= threshold.

    A single event yields one zero-duration session; empty input yields an
    empty list.
    """
    if threshold_s <= 0:
        raise ValueError("threshold_s must be positive")
    if not timestamps_ms:
        return []
    threshold_ms = threshold_s * 1000.0
    sessions = []
    start = prev = timestamps_ms[0]
    count = 1
    for ts in timestamps_ms[1:]:
        if ts < prev:
            raise ValueError("timestamps must be sorted ascending")
        if ts - prev >= threshold_ms:
            sessions.append(
                WorkingSession(doc_id=doc_id, start_ms=start, end_ms=prev, event_count=count)
            )
            start = ts
            count = 1
        else:
            count += 1
        prev = ts
    sessions.append(WorkingSession(doc_id=doc_id, start_ms=start, end_ms=prev, event_count=count))
    return sessions


def threshold_sweep(
    timestamps_ms: Sequence[int], thresholds_s: Sequence[float]
) -> ThresholdSweep:
    """Session count for each threshold of a strictly increasing grid."""
    if any(b <= a for a, b in zip(thresholds_s, thresholds_s[1:])):
        raise ValueError("thresholds must be strictly increasing")
    points = tuple(
        (float(t), len(segment_sessions(timestamps_ms, t))) for t in thresholds_s
    )
    return ThresholdSweep(points=points)


def default_sweep_grid(
    lo_s: float = 60.0, hi_s: float = 1200.0, step_s: float = 60.0
) -> list[float]:
    """1-to-20-minute grid in one-minute steps unless overridden."""
    if step_s <= 0 or hi_s < lo_s:
        raise ValueError("invalid sweep grid")
    grid = []
    t = lo_s
    while t <= hi_s + 1e-9:
        grid.append(round(t, 9))
        t += step_s
    return grid


def knee_threshold(sweep: ThresholdSweep) -> float:
    """Threshold whose sweep point lies farthest from the chord joining the
    first and last points, after min-max normalizing both axes.

    Ties break toward the smaller threshold, so a perfectly linear curve
    returns the first threshold.
    """
    points = sweep.points
    if len(points) < 3:
        raise TooFewPoints(f"knee detection needs >= 3 sweep points, got {len(points)}")
    xs = [p[0] for p in points]
    ys = [float(p[1]) for p in points]
    x_span = xs[-1] - xs[0] or 1.0
    y_min, y_max = min(ys), max(ys)
    y_span = (y_max - y_min) or 1.0
    nx = [(x - xs[0]) / x_span for x in xs]
    ny = [(y - y_min) / y_span for y in ys]
    # Distance from each point to the chord via the cross-product formula;
    # the constant chord length scales all distances equally.
    cx, cy = nx[-1] - nx[0], ny[-1] - ny[0]
    best_i = 0
    best_d = -1.0
    for i in range(len(points)):
        d = abs(cx * (ny[i] - ny[0]) - cy * (nx[i] - nx[0]))
        if d > best_d + 1e-12:
            best_d = d
            best_i = i
    return xs[best_i]
