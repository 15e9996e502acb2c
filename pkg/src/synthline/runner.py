"""End-to-end run pipeline: expand, plan, (optimize), generate, persist.

The same pipeline backs the CLI and the HTTP service, so identical
selections with identical seeds produce identical artifacts through either
path. A seeded run derives its run id from the selection hash and uses a
fixed logical clock, making the persisted CSV and manifest byte-stable.
"""

from __future__ import annotations

import hashlib
import json
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from synthline.curation import CurationParams, curate
from synthline.feature_model import ConfigSelection, config_hash, expand_atomic
from synthline.gateway import LlmGateway, build_gateway, profile_for
from synthline.generator import (
    Dataset,
    GenerationResult,
    ProgressEvent,
    fixed_clock,
    run_generation,
    utc_clock,
)
from synthline.metrics import diversity_report
from synthline.pace import PaceConfig, PaceOptimizer, export_trace
from synthline.persistence import DatasetManifest, persist_dataset
from synthline.promptline import TEMPLATE_VERSION, allocate_quotas, build_prompt

EVENTS_FILE = "events.jsonl"


@dataclass
class RunOptions:
    provider: str = "mock"
    seed: int | None = None
    parallelism: int = 1
    curation: CurationParams | None = None
    compute_metrics: bool = False


@dataclass
class RunOutcome:
    run_id: str
    dataset_id: str
    run_dir: Path
    manifest: DatasetManifest
    dataset: Dataset
    generation: GenerationResult
    events: list[ProgressEvent] = field(default_factory=list)


def derive_run_id(selection_hash: str, options: RunOptions, profile_id: str) -> str:
    if options.seed is None:
        return "r" + uuid.uuid4().hex[:16]
    material = f"{selection_hash}:{options.seed}:{profile_id}:{TEMPLATE_VERSION}"
    return "r" + hashlib.sha256(material.encode("utf-8")).hexdigest()[:16]


def execute_run(
    selection: ConfigSelection,
    out_dir: Path,
    options: RunOptions | None = None,
    emit: Callable[[ProgressEvent], None] | None = None,
    gateway: LlmGateway | None = None,
) -> RunOutcome:
    """Run the full pipeline and persist the dataset under ``out_dir``.

    Emits progress events through ``emit`` (phases in order, generation
    ticking ``completed_cells`` monotonically) and always finishes with a
    ``done`` or ``failed`` event.
    """
    options = options or RunOptions()
    profile = profile_for(options.provider, seed=options.seed, chat_model=selection.llm_model)
    if gateway is None:
        gateway = build_gateway(profile, max_in_flight=max(1, options.parallelism))
    clock = fixed_clock() if options.seed is not None else utc_clock
    selection_hash = config_hash(selection)
    run_id = derive_run_id(selection_hash, options, profile.id)
    run_dir = Path(out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    events: list[ProgressEvent] = []
    progress = {"completed": 0, "total": 0}

    def notify(phase: str, message: str) -> None:
        event = ProgressEvent(
            run_id=run_id,
            phase=phase,
            completed_cells=progress["completed"],
            total_cells=progress["total"],
            message=message,
            timestamp=clock(),
        )
        events.append(event)
        if emit is not None:
            emit(event)

    def forward(event: ProgressEvent) -> None:
        # Generation events carry their own counters; track the high-water
        # mark so later phases continue from it.
        progress["completed"] = max(progress["completed"], event.completed_cells)
        events.append(event)
        if emit is not None:
            emit(event)

    try:
        notify("expanding", "expanding selection into atomic configurations")
        configs = expand_atomic(selection)
        plan = allocate_quotas(selection.label_names, configs, selection.subset_size)
        progress["total"] = len(plan.cells)

        prompts = {}
        for label in selection.labels:
            for config in configs:
                prompts[(label.name, config.id)] = build_prompt(
                    label.name, label.description, config, selection.samples_per_prompt
                )
        notify("expanding", f"{len(configs)} atomic configurations, {len(plan.cells)} cells")

        if selection.prompt_approach == "PACE":
            pace_config = PaceConfig(
                n_pairs=selection.pace_actors or 4,
                iterations=selection.pace_iterations or 3,
                candidates_per_iteration=selection.pace_candidates or 2,
                scoring_batch_size=max(2, selection.samples_per_prompt),
            )
            optimizer = PaceOptimizer(gateway, pace_config)
            trace_dir = run_dir / "pace"
            for label_idx, label in enumerate(selection.labels):
                for config in configs:
                    cell = (label.name, config.id)
                    optimized, state = optimizer.optimize(prompts[cell])
                    prompts[cell] = optimized
                    export_trace(state, trace_dir / f"trace_l{label_idx}_c{config.index:04d}.json")
                    notify(
                        "optimizing",
                        f"optimized prompt for {label.name}/{config.id} "
                        f"(score {state.incumbent_score:.4f})",
                    )

        result = run_generation(
            selection,
            plan,
            prompts,
            gateway,
            run_id=run_id,
            clock=clock,
            emit=forward,
            parallelism=options.parallelism,
        )
        dataset = Dataset(
            samples=result.dataset.samples,
            labels=result.dataset.labels,
            config_hash=selection_hash,
        )

        curation_payload = None
        if options.curation is not None:
            notify("curating", "running curation pipeline")
            dataset, report = curate(dataset, options.curation, gateway)
            curation_payload = report.as_dict()

        metrics_payload = None
        if options.compute_metrics:
            metrics_payload = diversity_report(dataset.texts(), gateway).as_dict()

        notify("persisting", f"writing {len(dataset)} samples as {selection.output_format}")
        manifest = persist_dataset(
            dataset,
            selection.output_format,
            run_dir,
            dataset_id=run_id,
            run_id=run_id,
            config_hash=selection_hash,
            template_version=TEMPLATE_VERSION,
            provider_profile_id=profile.id,
            created_at=clock(),
            curation_report=curation_payload,
            diversity_report=metrics_payload,
            selection_document=selection.to_document(),
        )

        shortfall_total = sum(result.shortfalls.values())
        message = "run complete" if not shortfall_total else (
            f"run complete with {len(result.shortfalls)} degraded cells "
            f"(short by {shortfall_total})"
        )
        notify("done", message)
        _write_events(run_dir, events)
        return RunOutcome(
            run_id=run_id,
            dataset_id=run_id,
            run_dir=run_dir,
            manifest=manifest,
            dataset=dataset,
            generation=result,
            events=events,
        )
    except Exception as exc:
        notify("failed", f"{type(exc).__name__}: {exc}")
        _write_events(run_dir, events)
        raise


def _write_events(run_dir: Path, events: list[ProgressEvent]) -> None:
    lines = "\n".join(json.dumps(e.as_dict()) for e in events)
    (run_dir / EVENTS_FILE).write_text(lines + "\n", encoding="utf-8")
