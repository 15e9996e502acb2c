"""Bulk generation: walk the quota plan, prompt, parse, retry, assemble.

Cells ((label, atomic configuration) pairs) are independent units of work;
inside a cell, prompt calls run sequentially until the quota is met. A prompt
call whose response stays unparseable after three attempts marks the cell
degraded and the remaining quota is reported as shortfall rather than
silently rebalanced. The dataset is always assembled in canonical cell
order, so runs are reproducible regardless of worker count.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Callable, Mapping

from synthline.feature_model import ConfigSelection
from synthline.gateway import AuthError, ChatMessage, ChatRequest, LlmGateway, ProviderError
from synthline.promptline import (
    TEMPLATE_VERSION,
    ParseError,
    PromptSpec,
    QuotaPlan,
    parse_generation,
    with_requested_count,
)

PARSE_MAX_ATTEMPTS = 3

PHASES = ("expanding", "optimizing", "generating", "curating", "persisting", "done", "failed")


class RunFailed(Exception):
    """The provider is unrecoverable for the whole run."""


@dataclass(frozen=True)
class SyntheticSample:
    sample_id: str
    text: str
    label: str
    atomic_config_id: str
    prompt_call_id: str
    template_version: str
    created_at: str


@dataclass(frozen=True)
class Dataset:
    samples: tuple[SyntheticSample, ...]
    labels: tuple[str, ...]
    config_hash: str = ""

    def texts(self) -> list[str]:
        return [s.text for s in self.samples]

    def per_label_counts(self) -> dict[str, int]:
        counts = {label: 0 for label in self.labels}
        for sample in self.samples:
            counts[sample.label] = counts.get(sample.label, 0) + 1
        return counts

    def per_cell_counts(self) -> dict[str, dict[str, int]]:
        counts: dict[str, dict[str, int]] = {}
        for sample in self.samples:
            by_config = counts.setdefault(sample.label, {})
            by_config[sample.atomic_config_id] = by_config.get(sample.atomic_config_id, 0) + 1
        return counts

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class ProgressEvent:
    run_id: str
    phase: str
    completed_cells: int
    total_cells: int
    message: str
    timestamp: str

    def as_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "phase": self.phase,
            "completed_cells": self.completed_cells,
            "total_cells": self.total_cells,
            "message": self.message,
            "timestamp": self.timestamp,
        }


@dataclass
class GenerationResult:
    dataset: Dataset
    shortfalls: dict[tuple[str, str], int] = field(default_factory=dict)

    @property
    def degraded_cells(self) -> list[tuple[str, str]]:
        return sorted(self.shortfalls)


Clock = Callable[[], str]


def utc_clock() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def fixed_clock(instant: str = "1970-01-01T00:00:00+00:00") -> Clock:
    """Logical timestamp source for seeded, byte-reproducible runs."""
    return lambda: instant


def _renumber(samples: list[SyntheticSample]) -> tuple[SyntheticSample, ...]:
    return tuple(
        replace(sample, sample_id=f"s{i:06d}") for i, sample in enumerate(samples)
    )


def run_generation(
    selection: ConfigSelection,
    plan: QuotaPlan,
    prompts: Mapping[tuple[str, str], PromptSpec],
    gateway: LlmGateway,
    run_id: str,
    clock: Clock = utc_clock,
    emit: Callable[[ProgressEvent], None] | None = None,
    parallelism: int = 1,
) -> GenerationResult:
    """Generate the planned dataset cell by cell.

    ``prompts`` maps each (label, atomic_config_id) cell to its prompt
    (default-rendered or optimized); each call requests
    ``min(samples_per_prompt, remaining)`` items. Returns the dataset in
    canonical order together with per-cell shortfalls.
    """
    for cell in plan.cells:
        if (cell.label, cell.config_id) not in prompts:
            raise ValueError(f"no prompt for cell {(cell.label, cell.config_id)}")

    emit_lock = threading.Lock()
    completed = 0
    total = len(plan.cells)

    def notify(phase: str, message: str) -> None:
        nonlocal completed
        if emit is None:
            return
        with emit_lock:
            event = ProgressEvent(
                run_id=run_id,
                phase=phase,
                completed_cells=completed,
                total_cells=total,
                message=message,
                timestamp=clock(),
            )
            emit(event)

    def run_cell(cell) -> tuple[list[SyntheticSample], int]:
        prompt = prompts[(cell.label, cell.config_id)]
        collected: list[SyntheticSample] = []
        remaining = cell.quota
        call_seq = 0
        while remaining > 0:
            count = min(selection.samples_per_prompt, remaining)
            sized = with_requested_count(prompt, count)
            call_id = f"{run_id}:{cell.label}:{cell.config_id}:{call_seq}"
            call_seq += 1
            items = _attempt_parse(sized, gateway, selection, count)
            if items is None:
                return collected, remaining  # degraded: report the shortfall
            for text in items:
                collected.append(
                    SyntheticSample(
                        sample_id="",  # assigned after canonical assembly
                        text=text,
                        label=cell.label,
                        atomic_config_id=cell.config_id,
                        prompt_call_id=call_id,
                        template_version=TEMPLATE_VERSION,
                        created_at=clock(),
                    )
                )
            remaining -= len(items)
        return collected, 0

    results: dict[tuple[str, str], tuple[list[SyntheticSample], int]] = {}

    def worker(cell):
        nonlocal completed
        outcome = run_cell(cell)
        results[(cell.label, cell.config_id)] = outcome
        with emit_lock:
            completed += 1
        _, shortfall = outcome
        if shortfall:
            notify(
                "generating",
                f"cell {cell.label}/{cell.config_id} degraded, short by {shortfall}",
            )
        else:
            notify("generating", f"cell {cell.label}/{cell.config_id} complete")

    if parallelism <= 1:
        for cell in plan.cells:
            worker(cell)
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            list(pool.map(worker, plan.cells))

    samples: list[SyntheticSample] = []
    shortfalls: dict[tuple[str, str], int] = {}
    for cell in plan.cells:  # canonical order, then arrival order within cell
        collected, shortfall = results[(cell.label, cell.config_id)]
        samples.extend(collected)
        if shortfall:
            shortfalls[(cell.label, cell.config_id)] = shortfall

    dataset = Dataset(
        samples=_renumber(samples),
        labels=tuple(selection.label_names),
        config_hash="",
    )
    return GenerationResult(dataset=dataset, shortfalls=shortfalls)


def _attempt_parse(
    prompt: PromptSpec,
    gateway: LlmGateway,
    selection: ConfigSelection,
    count: int,
) -> list[str] | None:
    """One prompt call with parse retries; None when the cell should degrade."""
    request = ChatRequest(
        model=selection.llm_model,
        messages=(
            ChatMessage("system", prompt.system_text),
            ChatMessage("user", prompt.user_text),
        ),
        temperature=selection.temperature,
        top_p=selection.top_p,
    )
    for _ in range(PARSE_MAX_ATTEMPTS):
        try:
            text = gateway.chat_complete(request, purpose="generate")
        except AuthError:
            raise RunFailed("provider rejected credentials") from None
        except ProviderError:
            return None
        try:
            return parse_generation(text, count)
        except ParseError:
            continue
    return None
