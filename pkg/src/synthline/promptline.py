"""Prompt construction, quota planning, and response parsing.

Prompts are rendered from plain-text template files with ``{placeholder}``
substitution. The optimizable body is kept separate from the mechanical
count instruction so a prompt can be re-rendered for a different requested
count without touching the body (the portion prompt optimization rewrites).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from typing import Sequence

from synthline.feature_model import AtomicConfiguration

TEMPLATE_VERSION = "1.0.0"

SINGLE_TEXT = "single-text"
TEXT_ARRAY = "text-array"


class ParseError(Exception):
    """No requirement texts could be recovered from a response."""


@dataclass(frozen=True)
class QuotaCell:
    label: str
    config_id: str
    quota: int


@dataclass(frozen=True)
class QuotaPlan:
    """Per-(label, atomic configuration) sample allocation.

    For every label the quotas sum to ``subset_size`` and differ by at most
    one across atomic configurations; earlier configurations in canonical
    order receive the remainder.
    """

    labels: tuple[str, ...]
    config_ids: tuple[str, ...]
    subset_size: int
    cells: tuple[QuotaCell, ...]

    def quota(self, label: str, config_id: str) -> int:
        return {(c.label, c.config_id): c.quota for c in self.cells}[(label, config_id)]


@dataclass(frozen=True)
class PromptSpec:
    """A renderable prompt bound to (label, atomic configuration, count)."""

    system_text: str
    user_text: str
    body_text: str
    label_name: str
    atomic_config_id: str
    requested_count: int
    response_schema: str


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return resources.files("synthline").joinpath(f"templates/{name}.txt").read_text("utf-8").strip()


def _count_instruction(count: int) -> str:
    if count == 1:
        return load_template("count_single")
    return load_template("count_multi").format(count=count)


def compose_user_text(body_text: str, count: int) -> str:
    return f"{body_text}\n\n{_count_instruction(count)}"


def allocate_quotas(
    labels: Sequence[str],
    atomic_configs: Sequence[AtomicConfiguration],
    subset_size: int,
) -> QuotaPlan:
    """Distribute ``subset_size`` samples per label evenly across configs.

    Each config gets ``subset_size // len(configs)``; the first
    ``subset_size % len(configs)`` configs in canonical order get one more.
    """
    if not labels or not atomic_configs or subset_size < 1:
        raise ValueError("allocate_quotas requires labels, configs, and subset_size >= 1")
    n_configs = len(atomic_configs)
    base, remainder = divmod(subset_size, n_configs)
    cells = []
    for label in labels:
        for i, config in enumerate(atomic_configs):
            cells.append(
                QuotaCell(
                    label=label,
                    config_id=config.id,
                    quota=base + (1 if i < remainder else 0),
                )
            )
    return QuotaPlan(
        labels=tuple(labels),
        config_ids=tuple(c.id for c in atomic_configs),
        subset_size=subset_size,
        cells=tuple(cells),
    )


def build_prompt(
    label_name: str,
    label_description: str,
    atomic_config: AtomicConfiguration,
    count: int,
) -> PromptSpec:
    """Render the shipped template for one (label, configuration, count)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    body = load_template("user_body").format(
        specification_level=atomic_config.specification_level,
        requirement_source=atomic_config.requirement_source,
        specification_format=atomic_config.specification_format,
        domain=atomic_config.domain,
        language=atomic_config.language,
        label_name=label_name,
        label_description=label_description,
    )
    return PromptSpec(
        system_text=load_template("system"),
        user_text=compose_user_text(body, count),
        body_text=body,
        label_name=label_name,
        atomic_config_id=atomic_config.id,
        requested_count=count,
        response_schema=SINGLE_TEXT if count == 1 else TEXT_ARRAY,
    )


def with_requested_count(spec: PromptSpec, count: int) -> PromptSpec:
    """Same body, different requested count (count instruction re-rendered)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if count == spec.requested_count:
        return spec
    return replace(
        spec,
        user_text=compose_user_text(spec.body_text, count),
        requested_count=count,
        response_schema=SINGLE_TEXT if count == 1 else TEXT_ARRAY,
    )


def with_body(spec: PromptSpec, body_text: str) -> PromptSpec:
    """Replace the optimizable body; metadata and count are preserved."""
    return replace(
        spec,
        body_text=body_text,
        user_text=compose_user_text(body_text, spec.requested_count),
    )


# --- response parsing ---------------------------------------------------------

_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)
# Fallback list markers, tried in this order; the first style that matches
# any line wins and is applied exclusively.
_LIST_MARKERS = (
    re.compile(r"^\s*\d+\.\s+(.*)$"),
    re.compile(r"^\s*\d+\)\s+(.*)$"),
    re.compile(r"^\s*-\s+(.*)$"),
    re.compile(r"^\s*\*\s+(.*)$"),
)


def _clean(item: str) -> str:
    return re.sub(r"\s*\n+\s*", " ", item).strip()


def _try_json_array(text: str) -> list[str] | None:
    candidates = [text]
    fence = _FENCE_RE.search(text)
    if fence:
        candidates.append(fence.group(1))
    start, end = text.find("["), text.rfind("]")
    if start != -1 and end > start:
        candidates.append(text[start : end + 1])
    for candidate in candidates:
        try:
            data = json.loads(candidate)
        except (json.JSONDecodeError, ValueError):
            continue
        if isinstance(data, list):
            items = [_clean(v) for v in data if isinstance(v, str)]
            items = [v for v in items if v]
            if items:
                return items
    return None


def _try_marked_list(text: str) -> list[str] | None:
    lines = text.splitlines()
    for marker in _LIST_MARKERS:
        if not any(marker.match(line) for line in lines):
            continue
        items: list[str] = []
        current: list[str] | None = None
        for line in lines:
            match = marker.match(line)
            if match:
                if current:
                    items.append(_clean("\n".join(current)))
                current = [match.group(1)]
            elif current is not None and line.strip():
                current.append(line)
        if current:
            items.append(_clean("\n".join(current)))
        items = [v for v in items if v]
        if items:
            return items
    return None


def parse_generation(response_text: str, expected_count: int) -> list[str]:
    """Extract up to ``expected_count`` requirement texts from a response.

    Primary path is a JSON array of strings; a numbered/bulleted list is the
    fallback. Items are trimmed, internal newlines collapse to spaces, and
    surplus items are truncated in order. Raises :class:`ParseError` when
    nothing can be recovered.
    """
    if expected_count < 1:
        raise ValueError("expected_count must be >= 1")
    items = _try_json_array(response_text)
    if items is None:
        items = _try_marked_list(response_text)
    if items is None and expected_count == 1:
        single = _clean(response_text)
        items = [single] if single else None
    if not items:
        raise ParseError(f"no requirement texts recoverable (expected {expected_count})")
    return items[:expected_count]
