"""Final evaluation on the guarded test set and report assembly."""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from sklearn.metrics import precision_recall_fscore_support

from synthline_eval.classifier import TrainedModel
from synthline_eval.data import GuardedTestSet


class LabelMismatch(Exception):
    """Model and test label spaces disagree."""


@dataclass
class RunMetrics:
    seed: int
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
        }


@dataclass
class Aggregate:
    mean: float
    std: float

    def formatted(self) -> str:
        return f"{self.mean:.3f} ± {self.std:.3f}"


@dataclass
class EvalReport:
    dataset_name: str
    runs: list[RunMetrics]
    precision: Aggregate
    recall: Aggregate
    f1: Aggregate
    test_size: int
    test_audit: dict
    hyperparameters: dict
    failures: list[dict] = field(default_factory=list)

    def row(self) -> str:
        """One table row: dataset, wP, wR, wF1 as mean ± std."""
        return (
            f"{self.dataset_name} & {self.precision.formatted()} & "
            f"{self.recall.formatted()} & {self.f1.formatted()}"
        )

    def as_dict(self) -> dict:
        return {
            "dataset_name": self.dataset_name,
            "runs": [run.as_dict() for run in self.runs],
            "weighted_precision": {"mean": self.precision.mean, "std": self.precision.std},
            "weighted_recall": {"mean": self.recall.mean, "std": self.recall.std},
            "weighted_f1": {"mean": self.f1.mean, "std": self.f1.std},
            "test_size": self.test_size,
            "test_audit": self.test_audit,
            "hyperparameters": self.hyperparameters,
            "failures": self.failures,
            "row": self.row(),
        }

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2), encoding="utf-8")


def _aggregate(values: list[float]) -> Aggregate:
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return Aggregate(mean=mean, std=std)


def weighted_metrics(true_labels, predicted_labels) -> tuple[float, float, float]:
    precision, recall, f1, _ = precision_recall_fscore_support(
        true_labels, predicted_labels, average="weighted", zero_division=0
    )
    return float(precision), float(recall), float(f1)


def evaluate(
    models: list[TrainedModel],
    test_set: GuardedTestSet,
    dataset_name: str = "synthetic",
    hyperparameters: dict | None = None,
    failures: list[dict] | None = None,
) -> EvalReport:
    """Score every model on the (now unlocked) test set and aggregate.

    The pure aggregation over per-run metrics is the report; the test set is
    unlocked here and nowhere else.
    """
    if not models:
        raise ValueError("evaluate requires at least one trained model")
    test_set.unlock_for_evaluation()
    test = test_set.data()
    test_space = set(test.labels)
    for model in models:
        if not test_space <= set(model.label_space):
            raise LabelMismatch(
                f"test labels {sorted(test_space)} not covered by model labels "
                f"{sorted(model.label_space)}"
            )
    runs = []
    for model in models:
        predicted = model.predict(test)
        precision, recall, f1 = weighted_metrics(test.labels, predicted)
        runs.append(
            RunMetrics(
                seed=model.seed,
                weighted_precision=precision,
                weighted_recall=recall,
                weighted_f1=f1,
            )
        )
    return EvalReport(
        dataset_name=dataset_name,
        runs=runs,
        precision=_aggregate([r.weighted_precision for r in runs]),
        recall=_aggregate([r.weighted_recall for r in runs]),
        f1=_aggregate([r.weighted_f1 for r in runs]),
        test_size=test_set.size,
        test_audit=test_set.audit(),
        hyperparameters=hyperparameters or {},
        failures=failures or [],
    )
