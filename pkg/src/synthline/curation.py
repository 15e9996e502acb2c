"""Post-generation curation: dedup, similarity filtering, class balancing.

The three stages always run in that order. Deduplication compares texts
after Unicode NFC normalization and trimming, scoped per label (the same
text under two labels is a distinct supervision signal and survives).
Similarity filtering embeds every text once, ranks samples by mean cosine
similarity to all others, and drops the top ``floor(fraction * n)``.
Balancing undersamples every class down to the minority count with a seeded
draw so removals are reproducible.
"""

from __future__ import annotations

import math
import random
import unicodedata
from dataclasses import dataclass, field

import numpy as np

from synthline.gateway import LlmGateway
from synthline.generator import Dataset
from synthline.metrics import embedding_matrix

DEFAULT_REMOVAL_FRACTION = 0.2


@dataclass(frozen=True)
class CurationParams:
    removal_fraction: float = DEFAULT_REMOVAL_FRACTION
    balance: bool = True
    random_seed: int = 0
    per_label_similarity: bool = False

    def __post_init__(self):
        if not 0.0 <= self.removal_fraction < 1.0:
            raise ValueError("removal_fraction must be in [0, 1)")


@dataclass
class CurationReport:
    input_count: int
    after_dedup: int
    after_filter: int
    after_balance: int
    removed_duplicate_ids: list[str]
    removed_similar_ids: list[str]
    removed_balance_ids: list[str]
    class_counts_before: dict[str, int]
    class_counts_after: dict[str, int]
    removal_fraction: float
    random_seed: int
    balance: bool
    embedding_provider_id: str
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "after_dedup": self.after_dedup,
            "after_filter": self.after_filter,
            "after_balance": self.after_balance,
            "removed_duplicate_ids": self.removed_duplicate_ids,
            "removed_similar_ids": self.removed_similar_ids,
            "removed_balance_ids": self.removed_balance_ids,
            "class_counts_before": self.class_counts_before,
            "class_counts_after": self.class_counts_after,
            "removal_fraction": self.removal_fraction,
            "random_seed": self.random_seed,
            "balance": self.balance,
            "embedding_provider_id": self.embedding_provider_id,
            "warnings": self.warnings,
        }


def _normalized(text: str) -> str:
    return unicodedata.normalize("NFC", text).strip()


def _subset(dataset: Dataset, keep: list[int]) -> Dataset:
    return Dataset(
        samples=tuple(dataset.samples[i] for i in keep),
        labels=dataset.labels,
        config_hash=dataset.config_hash,
    )


def dedup_exact(dataset: Dataset) -> tuple[Dataset, list[str]]:
    """Drop later samples whose (label, normalized text) was already seen."""
    seen: set[tuple[str, str]] = set()
    keep: list[int] = []
    removed: list[str] = []
    for i, sample in enumerate(dataset.samples):
        key = (sample.label, _normalized(sample.text))
        if key in seen:
            removed.append(sample.sample_id)
        else:
            seen.add(key)
            keep.append(i)
    return _subset(dataset, keep), removed


def _rank_removals(mean_sim: np.ndarray, k: int) -> list[int]:
    # Highest mean similarity first; ties keep the earlier sample, so the
    # later index is removed first.
    order = sorted(range(len(mean_sim)), key=lambda i: (-mean_sim[i], -i))
    return sorted(order[:k])


def similarity_filter(
    dataset: Dataset,
    fraction: float,
    gateway: LlmGateway,
    per_label: bool = False,
) -> tuple[Dataset, list[str], list[str]]:
    """Remove the ``floor(fraction * n)`` most redundant samples.

    Redundancy is each sample's mean cosine similarity to all other samples
    (dataset-global by default; ``per_label`` scopes the ranking and the
    quota to each class). Datasets below two samples pass through with a
    warning.
    """
    n = len(dataset.samples)
    warnings: list[str] = []
    if n < 2:
        warnings.append("similarity filter skipped: fewer than 2 samples")
        return dataset, [], warnings

    def removals_for(indices: list[int]) -> list[int]:
        k = math.floor(fraction * len(indices))
        if k == 0 or len(indices) < 2:
            return []
        vectors = gateway.embed_batch([dataset.samples[i].text for i in indices])
        matrix = embedding_matrix(vectors)
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        unit = matrix / np.where(norms == 0.0, 1.0, norms)
        sims = unit @ unit.T
        m = len(indices)
        mean_sim = (sims.sum(axis=1) - sims.diagonal()) / (m - 1)
        return [indices[j] for j in _rank_removals(mean_sim, k)]

    if per_label:
        removed_indices: list[int] = []
        for label in dataset.labels:
            label_indices = [i for i, s in enumerate(dataset.samples) if s.label == label]
            removed_indices.extend(removals_for(label_indices))
        removed_indices.sort()
    else:
        if math.floor(fraction * n) == 0:
            return dataset, [], warnings
        removed_indices = removals_for(list(range(n)))

    removed_set = set(removed_indices)
    keep = [i for i in range(n) if i not in removed_set]
    removed_ids = [dataset.samples[i].sample_id for i in removed_indices]
    return _subset(dataset, keep), removed_ids, warnings


def balance_classes(dataset: Dataset, seed: int) -> tuple[Dataset, list[str]]:
    """Seeded undersampling of every class down to the minority count."""
    counts = dataset.per_label_counts()
    present = {label: count for label, count in counts.items() if count > 0}
    if not present:
        return dataset, []
    minimum = min(present.values())
    rng = random.Random(seed)
    removed_indices: set[int] = set()
    for label in dataset.labels:
        indices = [i for i, s in enumerate(dataset.samples) if s.label == label]
        excess = len(indices) - minimum
        if excess > 0:
            removed_indices.update(rng.sample(indices, excess))
    keep = [i for i in range(len(dataset.samples)) if i not in removed_indices]
    removed_ids = [dataset.samples[i].sample_id for i in sorted(removed_indices)]
    return _subset(dataset, keep), removed_ids


def curate(
    dataset: Dataset,
    params: CurationParams,
    gateway: LlmGateway,
) -> tuple[Dataset, CurationReport]:
    """Run dedup, then similarity filtering, then (optionally) balancing."""
    class_counts_before = dataset.per_label_counts()

    deduped, removed_duplicates = dedup_exact(dataset)
    filtered, removed_similar, warnings = similarity_filter(
        deduped, params.removal_fraction, gateway, per_label=params.per_label_similarity
    )
    if params.balance:
        balanced, removed_balance = balance_classes(filtered, params.random_seed)
    else:
        balanced, removed_balance = filtered, []

    report = CurationReport(
        input_count=len(dataset.samples),
        after_dedup=len(deduped.samples),
        after_filter=len(filtered.samples),
        after_balance=len(balanced.samples),
        removed_duplicate_ids=removed_duplicates,
        removed_similar_ids=removed_similar,
        removed_balance_ids=removed_balance,
        class_counts_before=class_counts_before,
        class_counts_after=balanced.per_label_counts(),
        removal_fraction=params.removal_fraction,
        random_seed=params.random_seed,
        balance=params.balance,
        embedding_provider_id=gateway.provider.id,
        warnings=warnings,
    )
    return balanced, report
