"""Dataset loading, stratified splitting, and the test-set access guard."""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from pathlib import Path

# Fixed documented seed for the 70/30 real-data split.
DEFAULT_SPLIT_SEED = 13


class ClassTooSmall(Exception):
    """A class has too few samples to stratify."""


class TestSetTouched(Exception):
    """Test data was accessed before final evaluation."""

    __test__ = False  # name starts with "Test"; keep pytest from collecting it


@dataclass(frozen=True)
class LabeledDataset:
    texts: tuple[str, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.texts) != len(self.labels):
            raise ValueError("texts and labels must align")

    def __len__(self) -> int:
        return len(self.texts)

    @property
    def label_space(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.labels)))

    def class_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for label in self.labels:
            counts[label] = counts.get(label, 0) + 1
        return counts

    def subset(self, indices: list[int]) -> "LabeledDataset":
        return LabeledDataset(
            texts=tuple(self.texts[i] for i in indices),
            labels=tuple(self.labels[i] for i in indices),
        )


def load_csv(path: str | Path) -> LabeledDataset:
    """Read a ``text,label`` CSV as produced by the generation service."""
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    return LabeledDataset(
        texts=tuple(row["text"] for row in rows),
        labels=tuple(row["label"] for row in rows),
    )


class GuardedTestSet:
    """Holds the test split locked until evaluation unlocks it.

    Any access before :meth:`unlock_for_evaluation` raises
    :class:`TestSetTouched`; the access log feeds the report's audit line.
    """

    def __init__(self, dataset: LabeledDataset):
        self._dataset = dataset
        self._unlocked = False
        self.access_count = 0

    def unlock_for_evaluation(self) -> None:
        self._unlocked = True

    @property
    def size(self) -> int:  # sizes are not label information
        return len(self._dataset)

    def data(self) -> LabeledDataset:
        if not self._unlocked:
            raise TestSetTouched("test set accessed before final evaluation")
        self.access_count += 1
        return self._dataset

    def audit(self) -> dict:
        return {"unlocked": self._unlocked, "accesses": self.access_count}


def split_real(
    real: LabeledDataset,
    seed: int = DEFAULT_SPLIT_SEED,
    test_fraction: float = 0.30,
) -> tuple[LabeledDataset, GuardedTestSet]:
    """Stratified train-pool/test split of the real data.

    Per-class test counts start at ``floor(test_fraction * count)`` and the
    remainder up to ``round(test_fraction * n)`` goes to the classes with
    the largest fractional parts, keeping every class within one sample of
    exact proportionality. Requires at least two samples per class.
    """
    counts = real.class_counts()
    if len(counts) < 2:
        raise ClassTooSmall("stratified split needs at least two classes")
    for label, count in counts.items():
        if count < 2:
            raise ClassTooSmall(f"class {label!r} has only {count} sample(s)")

    target_total = round(test_fraction * len(real))
    share = {label: test_fraction * count for label, count in counts.items()}
    test_counts = {label: int(share[label]) for label in counts}
    remainder = target_total - sum(test_counts.values())
    by_fraction = sorted(counts, key=lambda lbl: share[lbl] - int(share[lbl]), reverse=True)
    for label in by_fraction[:remainder]:
        test_counts[label] += 1

    rng = random.Random(seed)
    test_indices: set[int] = set()
    for label in sorted(counts):
        members = [i for i, lbl in enumerate(real.labels) if lbl == label]
        test_indices.update(rng.sample(members, test_counts[label]))

    train = real.subset([i for i in range(len(real)) if i not in test_indices])
    test = real.subset(sorted(test_indices))
    return train, GuardedTestSet(test)


def stratified_split(
    dataset: LabeledDataset,
    holdout_fraction: float,
    seed: int,
) -> tuple[LabeledDataset, LabeledDataset]:
    """Plain stratified split (used for the 90/10 tuning validation set)."""
    rng = random.Random(seed)
    holdout: set[int] = set()
    for label in sorted(set(dataset.labels)):
        members = [i for i, lbl in enumerate(dataset.labels) if lbl == label]
        k = max(1, round(holdout_fraction * len(members))) if len(members) > 1 else 0
        holdout.update(rng.sample(members, k))
    rest = dataset.subset([i for i in range(len(dataset)) if i not in holdout])
    held = dataset.subset(sorted(holdout))
    return rest, held
