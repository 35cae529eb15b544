"""Sync-preserving data race prediction for concurrent program traces."""

from .closure_ref import sp_closure, sp_ideal, tl_closure
from .generators import GenConfig, gen_equality, gen_random
from .syncp_engine import RaceReport, SyncPDetector, run
from .trace_io import emit_trace, parse_trace, read_trace
from .trace_model import Event, Kind, Trace, TraceError

__all__ = [
    "Event", "GenConfig", "Kind", "RaceReport", "SyncPDetector", "Trace", "TraceError",
    "emit_trace", "gen_equality", "gen_random", "parse_trace", "read_trace", "run",
    "sp_closure", "sp_ideal", "tl_closure",
]
