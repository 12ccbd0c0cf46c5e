"""HTTP surface for the console UI, backed by the engine.

Endpoints (the UI contract):

* ``POST /runs`` create a run from {story_text, title?, config?}
* ``GET /runs`` list run ids
* ``GET /runs/{id}`` serialized state view
* ``POST /runs/{id}/approval`` submit an ApprovalEvent
* ``GET /runs/{id}/events?after=<seq>&wait=<seconds>`` long-poll event stream
* ``GET /runs/{id}/artifacts/{path}`` artifact files (PNGs)
* ``POST /runs/{id}/evaluate`` metrics over a finished run
"""

from __future__ import annotations

import threading
import time
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..config import RunConfig
from ..errors import ConfigError, GateClosed, UnknownRun, VisAgentError
from ..story.types import Story
from .engine import Engine
from .state import GATE_PHASES, TERMINAL_PHASES, ApprovalEvent, GateName


class CreateRunRequest(BaseModel):
    story_text: str
    title: str | None = None
    config: dict[str, Any] = Field(default_factory=dict)


class ApprovalRequest(BaseModel):
    gate: str
    payload: list[dict[str, Any]] = Field(default_factory=list)
    actor: str = "console"


class RunWorker:
    """Advances runs in the background; one run executes at a time per worker."""

    def __init__(self, engine: Engine, poll_interval: float = 0.05) -> None:
        self.engine = engine
        self.poll_interval = poll_interval
        self._active: set[str] = set()
        self._lock = threading.Lock()

    def kick(self, run_id: str) -> None:
        with self._lock:
            if run_id in self._active:
                return
            self._active.add(run_id)
        thread = threading.Thread(target=self._drive, args=(run_id,), daemon=True)
        thread.start()

    def _drive(self, run_id: str) -> None:
        try:
            self.engine.run_until_blocked(run_id)
        finally:
            with self._lock:
                self._active.discard(run_id)


def create_app(store_dir: str | Path, static_dir: str | Path | None = None) -> FastAPI:
    engine = Engine(store_dir)
    worker = RunWorker(engine)
    app = FastAPI(title="visagent console API")
    app.state.engine = engine
    app.state.worker = worker

    def _get_state_or_404(run_id: str) -> dict[str, Any]:
        try:
            return engine.get_state(run_id)
        except UnknownRun as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.post("/runs")
    def create_run(request: CreateRunRequest) -> dict[str, Any]:
        try:
            config = RunConfig.from_dict(request.config) if request.config else RunConfig()
            run = engine.create_run(
                Story(text=request.story_text, title=request.title), config
            )
        except (ConfigError, VisAgentError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        worker.kick(run.run_id)
        return engine.get_state(run.run_id)

    @app.get("/runs")
    def list_runs() -> dict[str, Any]:
        summaries = []
        for run_id in engine.list_runs():
            state = engine.get_state(run_id)
            summaries.append(
                {
                    "run_id": run_id,
                    "phase": state["phase"],
                    "open_gates": state["open_gates"],
                    "updated_at": state["updated_at"],
                }
            )
        return {"runs": summaries}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str) -> dict[str, Any]:
        return _get_state_or_404(run_id)

    @app.post("/runs/{run_id}/approval")
    def submit_approval(run_id: str, request: ApprovalRequest) -> dict[str, Any]:
        try:
            gate = GateName(request.gate)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=f"unknown gate {request.gate!r}") from exc
        try:
            run = engine.submit_approval(
                ApprovalEvent(
                    run_id=run_id, gate=gate, payload=request.payload, actor=request.actor
                )
            )
        except UnknownRun as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except GateClosed as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        if run.phase not in GATE_PHASES and run.phase not in TERMINAL_PHASES:
            worker.kick(run_id)
        return engine.get_state(run_id)

    @app.get("/runs/{run_id}/events")
    def get_events(run_id: str, after: int = -1, wait: float = 0.0) -> dict[str, Any]:
        _get_state_or_404(run_id)
        deadline = time.monotonic() + min(wait, 30.0)
        while True:
            events = engine.get_events(run_id, after)
            if events or time.monotonic() >= deadline:
                return {"events": events}
            time.sleep(0.05)

    @app.get("/runs/{run_id}/artifacts/{artifact_path:path}")
    def get_artifact(run_id: str, artifact_path: str) -> FileResponse:
        _get_state_or_404(run_id)
        run_dir = engine.store.run_dir(run_id).resolve()
        target = (run_dir / artifact_path).resolve()
        if not str(target).startswith(str(run_dir)) or not target.is_file():
            raise HTTPException(status_code=404, detail="artifact not found")
        return FileResponse(target)

    @app.post("/runs/{run_id}/evaluate")
    def evaluate(run_id: str) -> dict[str, Any]:
        state = _get_state_or_404(run_id)
        if state["phase"] not in (p.value for p in TERMINAL_PHASES):
            raise HTTPException(status_code=409, detail="run is still executing")
        try:
            report = engine.evaluate(run_id)
        except VisAgentError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return report.to_dict()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
