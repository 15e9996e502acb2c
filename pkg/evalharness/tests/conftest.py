"""Toy-task fixtures: two separable label distributions."""

from __future__ import annotations

import random

import pytest

from synthline_eval.data import LabeledDataset

SECURE_WORDS = [
    "encrypt", "authentication", "credential", "firewall", "audit", "token",
    "password", "intrusion", "certificate", "authorization", "breach", "cipher",
]
PLAIN_WORDS = [
    "report", "dashboard", "invoice", "schedule", "export", "layout",
    "catalog", "profile", "notification", "search", "filter", "archive",
]


def toy_sentence(rng: random.Random, words: list[str]) -> str:
    return "the system shall " + " ".join(rng.choice(words) for _ in range(5))


def toy_dataset(n_per_class: int, seed: int) -> LabeledDataset:
    """Separable two-class task: disjoint content vocabularies."""
    rng = random.Random(seed)
    texts, labels = [], []
    for _ in range(n_per_class):
        texts.append(toy_sentence(rng, SECURE_WORDS))
        labels.append("Security")
        texts.append(toy_sentence(rng, PLAIN_WORDS))
        labels.append("Non-Security")
    return LabeledDataset(texts=tuple(texts), labels=tuple(labels))


@pytest.fixture
def synthetic_train() -> LabeledDataset:
    return toy_dataset(n_per_class=60, seed=1)


@pytest.fixture
def real_data() -> LabeledDataset:
    # Same distributions, different draw: stands in for human-authored data.
    return toy_dataset(n_per_class=30, seed=2)
