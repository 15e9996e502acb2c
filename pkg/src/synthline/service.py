"""HTTP API: runs, live progress, datasets, curation, and metrics.

Runs execute on background threads; their state lives in an in-memory
registry backed by the run directories on disk, and progress is observable
both by polling the run resource and by subscribing to its server-sent
event stream.
"""

from __future__ import annotations

import csv
import io
import json
import threading
from pathlib import Path
from typing import Any, Iterator

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, Response, StreamingResponse
from pydantic import BaseModel

from synthline.curation import CurationParams, curate
from synthline.feature_model import (
    SelectionError,
    config_hash,
    default_feature_model,
    default_model_document,
    expand_atomic,
    validate_selection,
)
from synthline.gateway import build_gateway, profile_for
from synthline.generator import ProgressEvent
from synthline.metrics import diversity_report
from synthline.persistence import (
    CURATION_REPORT_FILE,
    MANIFEST_FILE,
    load_dataset,
    persist_dataset,
    read_manifest,
)
from synthline.promptline import TEMPLATE_VERSION
from synthline.runner import RunOptions, derive_run_id, execute_run

TERMINAL_PHASES = ("done", "failed")


class RunRequest(BaseModel):
    selection: dict[str, Any]
    options: dict[str, Any] = {}


class CurateRequest(BaseModel):
    fraction: float = 0.2
    balance: bool = True
    seed: int = 0
    provider: str = "mock"


class _RunState:
    def __init__(self, run_id: str, selection_document: dict[str, Any]):
        self.run_id = run_id
        self.selection_document = selection_document
        self.status = "queued"
        self.error: str | None = None
        self.dataset_id: str | None = None
        self.events: list[dict[str, Any]] = []
        self.condition = threading.Condition()

    def append_event(self, event: ProgressEvent) -> None:
        with self.condition:
            self.events.append(event.as_dict())
            self.condition.notify_all()

    def finish(self, status: str, dataset_id: str | None = None, error: str | None = None) -> None:
        with self.condition:
            self.status = status
            self.dataset_id = dataset_id
            self.error = error
            self.condition.notify_all()

    def snapshot(self) -> dict[str, Any]:
        with self.condition:
            last = self.events[-1] if self.events else None
            return {
                "run_id": self.run_id,
                "status": self.status,
                "selection": self.selection_document,
                "dataset_id": self.dataset_id,
                "error": self.error,
                "events_count": len(self.events),
                "progress": {
                    "phase": last["phase"] if last else None,
                    "completed_cells": last["completed_cells"] if last else 0,
                    "total_cells": last["total_cells"] if last else 0,
                },
                "event_log": "events.jsonl",
            }


def _options_from(raw: dict[str, Any]) -> RunOptions:
    curation = None
    if raw.get("curate"):
        spec = raw["curate"] if isinstance(raw["curate"], dict) else {}
        curation = CurationParams(
            removal_fraction=spec.get("fraction", 0.2),
            balance=spec.get("balance", True),
            random_seed=spec.get("seed", 0),
        )
    return RunOptions(
        provider=raw.get("provider", "mock"),
        seed=raw.get("seed"),
        parallelism=raw.get("parallelism", 1),
        curation=curation,
        compute_metrics=bool(raw.get("metrics", False)),
    )


def create_app(data_root: str | Path = "runs") -> FastAPI:
    app = FastAPI(title="synthline", version="0.1.0")
    root = Path(data_root)
    root.mkdir(parents=True, exist_ok=True)
    model = default_feature_model()
    runs: dict[str, _RunState] = {}
    registry_lock = threading.Lock()

    def dataset_dir(dataset_id: str) -> Path:
        directory = root / dataset_id
        if not (directory / MANIFEST_FILE).exists():
            raise HTTPException(status_code=404, detail=f"dataset {dataset_id} not found")
        return directory

    @app.get("/api/v1/feature-model")
    def feature_model() -> dict[str, Any]:
        return default_model_document()

    @app.post("/api/v1/selection/validate")
    def validate(document: dict[str, Any]) -> dict[str, Any]:
        try:
            selection = validate_selection(model, document)
        except SelectionError as err:
            return {
                "valid": False,
                "violations": [v.as_dict() for v in err.violations],
                "atomic_count": None,
            }
        return {
            "valid": True,
            "violations": [],
            "atomic_count": len(expand_atomic(selection)),
        }

    @app.post("/api/v1/runs", status_code=201)
    def create_run(request: RunRequest) -> dict[str, Any]:
        try:
            selection = validate_selection(model, request.selection)
        except SelectionError as err:
            raise HTTPException(
                status_code=422,
                detail={"violations": [v.as_dict() for v in err.violations]},
            )
        options = _options_from(request.options)
        profile = profile_for(options.provider, seed=options.seed, chat_model=selection.llm_model)
        run_id = derive_run_id(config_hash(selection), options, profile.id)
        state = _RunState(run_id, selection.to_document())
        with registry_lock:
            runs[run_id] = state

        def task() -> None:
            state.status = "running"
            try:
                outcome = execute_run(
                    selection,
                    root / run_id,
                    options,
                    emit=state.append_event,
                )
                state.finish("done", dataset_id=outcome.dataset_id)
            except Exception as exc:  # failure is a terminal run state
                state.finish("failed", error=f"{type(exc).__name__}: {exc}")

        threading.Thread(target=task, daemon=True).start()
        return {"run_id": run_id, "status": "queued"}

    def get_state(run_id: str) -> _RunState:
        with registry_lock:
            state = runs.get(run_id)
        if state is None:
            raise HTTPException(status_code=404, detail=f"run {run_id} not found")
        return state

    @app.get("/api/v1/runs/{run_id}")
    def run_record(run_id: str) -> dict[str, Any]:
        return get_state(run_id).snapshot()

    @app.get("/api/v1/runs/{run_id}/events")
    def run_events(run_id: str) -> StreamingResponse:
        state = get_state(run_id)

        def stream() -> Iterator[str]:
            cursor = 0
            while True:
                with state.condition:
                    while cursor >= len(state.events) and state.status not in (
                        "done",
                        "failed",
                    ):
                        state.condition.wait(timeout=0.25)
                    batch = state.events[cursor:]
                    cursor += len(batch)
                    finished = state.status in ("done", "failed")
                for event in batch:
                    yield f"data: {json.dumps(event)}\n\n"
                if finished and cursor >= len(state.events):
                    return

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/api/v1/runs/{run_id}/dataset")
    def run_dataset(run_id: str, format: str = "csv") -> Response:
        state = get_state(run_id)
        if state.status != "done" or state.dataset_id is None:
            raise HTTPException(status_code=409, detail=f"run is {state.status}")
        return serve_dataset(state.dataset_id, format)

    def serve_dataset(dataset_id: str, format: str) -> Response:
        directory = dataset_dir(dataset_id)
        manifest = read_manifest(directory)
        requested = format.upper()
        if requested not in ("CSV", "JSON"):
            raise HTTPException(status_code=422, detail=f"unsupported format {format!r}")
        if requested == manifest.format:
            media = "text/csv" if requested == "CSV" else "application/json"
            return FileResponse(directory / manifest.data_file, media_type=media)
        # Convert on the fly (provenance fields are absent for CSV sources).
        dataset = load_dataset(directory / manifest.data_file)
        if requested == "CSV":
            buffer = io.StringIO()
            writer = csv.writer(buffer)
            writer.writerow(["text", "label"])
            for sample in dataset.samples:
                writer.writerow([sample.text, sample.label])
            return Response(buffer.getvalue(), media_type="text/csv")
        payload = [{"text": s.text, "label": s.label} for s in dataset.samples]
        return Response(json.dumps(payload, ensure_ascii=False), media_type="application/json")

    @app.post("/api/v1/datasets/{dataset_id}/curate")
    def curate_dataset(dataset_id: str, request: CurateRequest) -> dict[str, Any]:
        directory = dataset_dir(dataset_id)
        manifest = read_manifest(directory)
        dataset = load_dataset(directory / manifest.data_file)
        params = CurationParams(
            removal_fraction=request.fraction,
            balance=request.balance,
            random_seed=request.seed,
        )
        gateway = build_gateway(profile_for(request.provider, seed=request.seed))
        curated, report = curate(dataset, params, gateway)
        suffix = f"cur-{request.fraction}-{request.seed}" + ("" if request.balance else "-nobal")
        new_id = f"{dataset_id}-{suffix}"
        persist_dataset(
            curated,
            manifest.format,
            root / new_id,
            dataset_id=new_id,
            run_id=manifest.run_id,
            config_hash=manifest.config_hash,
            template_version=manifest.template_version or TEMPLATE_VERSION,
            provider_profile_id=gateway.provider.id,
            created_at=manifest.created_at,
            curation_report=report.as_dict(),
        )
        return {"dataset_id": new_id, "report": report.as_dict()}

    @app.get("/api/v1/datasets/{dataset_id}")
    def dataset_record(dataset_id: str) -> dict[str, Any]:
        directory = dataset_dir(dataset_id)
        manifest = read_manifest(directory)
        record = manifest.as_dict()
        report_path = directory / CURATION_REPORT_FILE
        if report_path.exists():
            record["curation"] = json.loads(report_path.read_text(encoding="utf-8"))
        return record

    @app.get("/api/v1/datasets/{dataset_id}/samples")
    def dataset_samples(dataset_id: str, offset: int = 0, limit: int = 50) -> dict[str, Any]:
        directory = dataset_dir(dataset_id)
        manifest = read_manifest(directory)
        dataset = load_dataset(directory / manifest.data_file)
        page = dataset.samples[offset : offset + limit]
        return {
            "total": len(dataset),
            "offset": offset,
            "limit": limit,
            "samples": [{"text": s.text, "label": s.label} for s in page],
        }

    @app.get("/api/v1/datasets/{dataset_id}/metrics")
    def dataset_metrics(dataset_id: str, provider: str = "mock", seed: int = 0) -> dict[str, Any]:
        directory = dataset_dir(dataset_id)
        manifest = read_manifest(directory)
        dataset = load_dataset(directory / manifest.data_file)
        gateway = build_gateway(profile_for(provider, seed=seed))
        report = diversity_report(dataset.texts(), gateway)
        payload = report.as_dict()
        (directory / "diversity_report.json").write_text(
            json.dumps(payload, indent=2), encoding="utf-8"
        )
        return payload

    return app


def serve(port: int = 8000, data_root: str | Path = "runs") -> None:
    """Run the API under uvicorn (blocking)."""
    import uvicorn

    uvicorn.run(create_app(data_root), host="0.0.0.0", port=port)
