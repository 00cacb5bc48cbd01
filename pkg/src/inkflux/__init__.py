"""inkflux: replay engine and analytics for crowd+AI writing-suggestion
session logs, with a headless task orchestrator and an HTTP service."""

__version__ = "0.1.0"

from .oplog import (
    Delta,
    EventLog,
    EventLogBuilder,
    OpComponent,
    apply_delta,
    parse_event_log,
    reconstruct_at,
    serialize_event_log,
    snapshot_pair,
)
from .sessionizer import WorkingSession, knee_threshold, segment_sessions, threshold_sweep
from .stats import SeededRng, gaussian_kde, ks_statistic, quantiles

__all__ = [
    "Delta",
    "EventLog",
    "EventLogBuilder",
    "OpComponent",
    "SeededRng",
    "WorkingSession",
    "apply_delta",
    "gaussian_kde",
    "knee_threshold",
    "ks_statistic",
    "parse_event_log",
    "quantiles",
    "reconstruct_at",
    "segment_sessions",
    "serialize_event_log",
    "snapshot_pair",
    "threshold_sweep",
]
