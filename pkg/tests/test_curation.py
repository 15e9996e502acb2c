"""Curation pipeline: stage order, exact removal sets, balance guarantees."""

from __future__ import annotations

import math
import random

import pytest

from synthline.curation import (
    CurationParams,
    balance_classes,
    curate,
    dedup_exact,
    similarity_filter,
)
from synthline.gateway import LlmGateway, MockProvider, mock_embedding
from synthline.generator import Dataset, SyntheticSample

A_TEXTS = [
    "alpha beta gamma delta",
    "alpha beta gamma delta",  # exact dup of s000000
    "red green blue yellow",  # permutation group: identical mock embeddings
    "green red blue yellow",
    "blue green red yellow",
    "yellow blue green red",
    "epsilon zeta eta theta",
    "iota kappa lambda mu",
    "nu xi omicron pi",
    "rho sigma tau upsilon",
    "phi chi psi omega",
    "one two three four",
]
B_TEXTS = [
    "quick brown fox jumps",
    "quick brown fox jumps",  # exact dup of s000012
    "alpha beta gamma delta",  # same text as s000000 under another label: kept
    "lazy dog sleeps deeply",
    "bright stars shine tonight",
    "river flows through valley",
    "mountain peaks touch clouds",
    "gentle wind moves leaves",
]


def make_dataset(pairs) -> Dataset:
    labels = tuple(dict.fromkeys(label for label, _ in pairs))
    samples = tuple(
        SyntheticSample(
            sample_id=f"s{i:06d}",
            text=text,
            label=label,
            atomic_config_id="cfg",
            prompt_call_id="call",
            template_version="1.0.0",
            created_at="1970-01-01T00:00:00+00:00",
        )
        for i, (label, text) in enumerate(pairs)
    )
    return Dataset(samples=samples, labels=labels)


@pytest.fixture
def fixture_20() -> Dataset:
    pairs = [("A", t) for t in A_TEXTS] + [("B", t) for t in B_TEXTS]
    return make_dataset(pairs)


@pytest.fixture
def gateway():
    return LlmGateway(MockProvider())


def oracle_similarity_removals(dataset: Dataset, fraction: float) -> list[str]:
    """Brute-force mean-similarity ranking with the keep-earliest tie-break."""
    vectors = [mock_embedding(s.text) for s in dataset.samples]

    def cos(a, b):
        dot = sum(x * y for x, y in zip(a, b))
        na = math.sqrt(sum(x * x for x in a))
        nb = math.sqrt(sum(y * y for y in b))
        return 0.0 if na == 0 or nb == 0 else dot / (na * nb)

    n = len(vectors)
    means = [
        sum(cos(vectors[i], vectors[j]) for j in range(n) if j != i) / (n - 1) for i in range(n)
    ]
    k = math.floor(fraction * n)
    order = sorted(range(n), key=lambda i: (-means[i], -i))
    return sorted(dataset.samples[i].sample_id for i in order[:k])


class TestDedup:
    def test_exact_duplicate_removed(self):
        ds = make_dataset([("A", "x y z"), ("A", "x y z")])
        kept, removed = dedup_exact(ds)
        assert removed == ["s000001"]
        assert len(kept.samples) == 1

    def test_trim_rule(self):
        ds = make_dataset([("A", "X "), ("A", "X")])
        kept, removed = dedup_exact(ds)
        assert removed == ["s000001"]
        # First occurrence in canonical order survives, untrimmed.
        assert kept.samples[0].text == "X "

    def test_nfc_normalization(self):
        # e + combining acute vs precomposed e-acute compare equal.
        ds = make_dataset([("A", "café"), ("A", "café")])
        _, removed = dedup_exact(ds)
        assert removed == ["s000001"]

    def test_cross_label_identical_kept(self):
        ds = make_dataset([("A", "same text"), ("B", "same text")])
        kept, removed = dedup_exact(ds)
        assert removed == []
        assert len(kept.samples) == 2

    def test_idempotent(self, fixture_20):
        once, removed_once = dedup_exact(fixture_20)
        twice, removed_twice = dedup_exact(once)
        assert removed_twice == []
        assert twice == once


class TestSimilarityFilter:
    def test_removes_exactly_floor(self, gateway):
        rng = random.Random(3)
        words = ["w%d" % i for i in range(40)]
        for n in (2, 4, 5, 10, 17, 25):
            pairs = [("A", " ".join(rng.sample(words, 5))) for _ in range(n)]
            ds = make_dataset(pairs)
            _, removed, _ = similarity_filter(ds, 0.2, gateway)
            assert len(removed) == math.floor(0.2 * n)

    def test_n4_removes_zero(self, gateway):
        ds = make_dataset([("A", f"text number {i} here" ) for i in range(4)])
        kept, removed, warnings = similarity_filter(ds, 0.2, gateway)
        assert removed == []
        assert kept == ds

    def test_below_two_noop_with_warning(self, gateway):
        ds = make_dataset([("A", "only one")])
        kept, removed, warnings = similarity_filter(ds, 0.2, gateway)
        assert kept == ds and removed == []
        assert warnings

    def test_identical_triple_targeted(self, gateway):
        # 3 identical + 7 mutually dissimilar: the 2 removals come from the
        # identical group (tie-break keeps the earliest member).
        pairs = [("A", "same words here again")] * 3 + [
            ("A", t)
            for t in (
                "epsilon zeta eta theta",
                "iota kappa lambda mu",
                "nu xi omicron pi",
                "rho sigma tau upsilon",
                "phi chi psi omega",
                "quick brown fox jumps",
                "lazy dog sleeps deeply",
            )
        ]
        ds = make_dataset(pairs)
        _, removed, _ = similarity_filter(ds, 0.2, gateway)
        assert len(removed) == 2
        assert set(removed) <= {"s000000", "s000001", "s000002"}
        assert removed == ["s000001", "s000002"]  # earliest identical survives
        assert removed == oracle_similarity_removals(ds, 0.2)


class TestBalance:
    def test_majority_undersampled(self):
        pairs = [("A", f"a{i} x y") for i in range(10)] + [("B", f"b{i} x y") for i in range(7)]
        ds = make_dataset(pairs)
        balanced, removed = balance_classes(ds, seed=1)
        assert balanced.per_label_counts() == {"A": 7, "B": 7}
        assert len(removed) == 3

    def test_already_balanced_untouched(self):
        pairs = [("A", "a1"), ("A", "a2"), ("B", "b1"), ("B", "b2")]
        ds = make_dataset(pairs)
        balanced, removed = balance_classes(ds, seed=1)
        assert removed == []
        assert balanced == ds

    def test_three_classes(self):
        pairs = (
            [("A", f"a{i}") for i in range(5)]
            + [("B", f"b{i}") for i in range(8)]
            + [("C", f"c{i}") for i in range(9)]
        )
        ds = make_dataset(pairs)
        balanced, _ = balance_classes(ds, seed=5)
        assert balanced.per_label_counts() == {"A": 5, "B": 5, "C": 5}

    def test_seed_reproducible(self):
        pairs = [("A", f"a{i}") for i in range(10)] + [("B", f"b{i}") for i in range(4)]
        ds = make_dataset(pairs)
        first = balance_classes(ds, seed=9)
        second = balance_classes(ds, seed=9)
        assert first == second


class TestCurate:
    def test_engineered_fixture_exact_removals(self, fixture_20, gateway):
        params = CurationParams(removal_fraction=0.2, balance=True, random_seed=42)
        curated, report = curate(fixture_20, params, gateway)
        assert (
            report.input_count,
            report.after_dedup,
            report.after_filter,
            report.after_balance,
        ) == (20, 18, 15, 14)
        assert report.removed_duplicate_ids == ["s000001", "s000013"]
        assert report.removed_similar_ids == ["s000003", "s000004", "s000005"]
        assert report.removed_balance_ids == ["s000002"]  # seeded draw, frozen
        assert report.class_counts_before == {"A": 12, "B": 8}
        assert report.class_counts_after == {"A": 7, "B": 7}
        assert len(curated.samples) == 14

    def test_fixture_similarity_matches_oracle(self, fixture_20, gateway):
        deduped, _ = dedup_exact(fixture_20)
        _, removed, _ = similarity_filter(deduped, 0.2, gateway)
        assert sorted(removed) == oracle_similarity_removals(deduped, 0.2)

    def test_fixed_point(self, gateway):
        pairs = [("A", "alpha beta one"), ("A", "gamma delta two"),
                 ("B", "epsilon zeta three"), ("B", "eta theta four")]
        ds = make_dataset(pairs)
        curated, report = curate(ds, CurationParams(), gateway)
        assert curated == ds
        assert report.removed_duplicate_ids == []
        assert report.removed_similar_ids == []
        assert report.removed_balance_ids == []

    def test_idempotent_when_filter_empty(self, gateway):
        pairs = [("A", "alpha beta one"), ("A", "gamma delta two"),
                 ("B", "epsilon zeta three"), ("B", "eta theta four")]
        ds = make_dataset(pairs)
        once, _ = curate(ds, CurationParams(), gateway)
        twice, report = curate(once, CurationParams(), gateway)
        assert twice == once
        assert report.after_balance == report.input_count

    def test_balance_flag_off(self, fixture_20, gateway):
        params = CurationParams(balance=False)
        curated, report = curate(fixture_20, params, gateway)
        assert report.after_balance == report.after_filter == 15
        assert report.removed_balance_ids == []
        assert curated.per_label_counts() == {"A": 8, "B": 7}

    def test_stage_order_reflected(self, fixture_20, gateway):
        _, report = curate(fixture_20, CurationParams(random_seed=42), gateway)
        assert report.input_count >= report.after_dedup >= report.after_filter >= report.after_balance

    def test_post_balance_equal_counts_property(self, gateway):
        rng = random.Random(31)
        words = [f"word{i}" for i in range(60)]
        for _ in range(20):
            pairs = []
            for label in ("A", "B", "C")[: rng.randint(2, 3)]:
                for _ in range(rng.randint(1, 12)):
                    pairs.append((label, " ".join(rng.sample(words, 4))))
            ds = make_dataset(pairs)
            curated, report = curate(ds, CurationParams(random_seed=7), gateway)
            counts = [v for v in curated.per_label_counts().values()]
            assert len(set(counts)) == 1

    def test_per_label_similarity_option(self, gateway):
        pairs = [("A", f"shared core tokens {i}") for i in range(6)] + [
            ("B", f"unrelated b{i} thing") for i in range(4)
        ]
        ds = make_dataset(pairs)
        _, removed, _ = similarity_filter(ds, 0.34, gateway, per_label=True)
        # floor(0.34*6)=2 from A, floor(0.34*4)=1 from B.
        a_ids = {f"s{i:06d}" for i in range(6)}
        assert len([r for r in removed if r in a_ids]) == 2
        assert len(removed) == 3
