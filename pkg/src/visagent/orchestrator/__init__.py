"""Run lifecycle: state machine, durable store, engine, and HTTP API."""

from .engine import Engine
from .state import (
    GATE_PHASES,
    PHASE_GRAPH,
    TERMINAL_PHASES,
    ApprovalEvent,
    GateName,
    Phase,
    PipelineRun,
)
from .store import RunStore, content_digest, run_document, state_digest

__all__ = [
    "ApprovalEvent",
    "Engine",
    "GATE_PHASES",
    "GateName",
    "PHASE_GRAPH",
    "Phase",
    "PipelineRun",
    "RunStore",
    "TERMINAL_PHASES",
    "content_digest",
    "run_document",
    "state_digest",
]
