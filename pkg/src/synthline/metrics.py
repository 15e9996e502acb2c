"""Dataset-level diversity metrics: n-gram frequency and pairwise similarity.

Both metrics read a dataset as a plain sequence of texts. The inter-sample
n-gram frequency (INGF) counts, for every unique word n-gram, how many
samples contain it, and averages those counts: 1.0 means no phrase is shared
between samples, higher means more cross-sample repetition. The average
pairwise similarity (APS) is the mean cosine similarity of sample embeddings
over all unordered pairs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from synthline.gateway import EmbeddingVector, LlmGateway

DEFAULT_NGRAM_ORDER = 3

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class UndefinedMetric(Exception):
    """The metric's precondition failed (too few samples or n-grams)."""


@dataclass
class DiversityReport:
    ingf: float | None
    aps: float | None
    n_samples: int
    n_unique_ngrams: int
    ngram_order: int
    embedding_provider_id: str

    @property
    def ingf_defined(self) -> bool:
        return self.ingf is not None

    @property
    def aps_defined(self) -> bool:
        return self.aps is not None

    def as_dict(self) -> dict:
        return {
            "ingf": self.ingf,
            "aps": self.aps,
            "ingf_defined": self.ingf_defined,
            "aps_defined": self.aps_defined,
            "n_samples": self.n_samples,
            "n_unique_ngrams": self.n_unique_ngrams,
            "ngram_order": self.ngram_order,
            "embedding_provider_id": self.embedding_provider_id,
        }


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric run."""
    return _TOKEN_RE.findall(text.lower())


def sample_ngrams(text: str, n: int) -> set[tuple[str, ...]]:
    """The set of word n-grams of one sample (empty if shorter than n)."""
    tokens = tokenize(text)
    return {tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)}


def ingf(texts: Sequence[str], n: int = DEFAULT_NGRAM_ORDER) -> float:
    """Mean, over unique n-grams, of the number of samples containing each.

    Samples shorter than n tokens contribute no n-grams but still count as
    samples. Raises :class:`UndefinedMetric` when no sample yields an n-gram.
    """
    document_frequency: dict[tuple[str, ...], int] = {}
    for text in texts:
        for gram in sample_ngrams(text, n):
            document_frequency[gram] = document_frequency.get(gram, 0) + 1
    if not document_frequency:
        raise UndefinedMetric(f"no sample yields a {n}-gram")
    return sum(document_frequency.values()) / len(document_frequency)


def embedding_matrix(vectors: Sequence[EmbeddingVector]) -> np.ndarray:
    return np.asarray([v.values for v in vectors], dtype=np.float64)


def mean_pairwise_cosine(matrix: np.ndarray) -> float:
    """Mean cosine similarity over all unordered row pairs (fixed order).

    Rows are L2-normalized first; zero rows stay zero (cosine 0 with
    everything). Requires at least two rows.
    """
    n = matrix.shape[0]
    if n < 2:
        raise UndefinedMetric("pairwise similarity needs at least two samples")
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = matrix / safe
    similarities = unit @ unit.T
    upper = similarities[np.triu_indices(n, k=1)]
    return float(upper.mean())


def aps(texts: Sequence[str], gateway: LlmGateway) -> float:
    """Mean cosine similarity of text embeddings over all unordered pairs."""
    if len(texts) < 2:
        raise UndefinedMetric("APS needs at least two samples")
    vectors = gateway.embed_batch(list(texts))
    return mean_pairwise_cosine(embedding_matrix(vectors))


def diversity_report(
    texts: Sequence[str],
    gateway: LlmGateway,
    n: int = DEFAULT_NGRAM_ORDER,
) -> DiversityReport:
    """Compute both metrics, flagging each as undefined instead of raising."""
    try:
        ingf_value: float | None = ingf(texts, n)
    except UndefinedMetric:
        ingf_value = None
    try:
        aps_value: float | None = aps(texts, gateway)
    except UndefinedMetric:
        aps_value = None
    unique = set()
    for text in texts:
        unique |= sample_ngrams(text, n)
    return DiversityReport(
        ingf=ingf_value,
        aps=aps_value,
        n_samples=len(texts),
        n_unique_ngrams=len(unique),
        ngram_order=n,
        embedding_provider_id=gateway.provider.id,
    )
