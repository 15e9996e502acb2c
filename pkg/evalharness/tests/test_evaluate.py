"""Metric computation against closed-form values, and report shape."""

from __future__ import annotations

import pytest

from synthline_eval.data import GuardedTestSet, LabeledDataset
from synthline_eval.evaluate import Aggregate, LabelMismatch, evaluate, weighted_metrics


class ConstantModel:
    """Predicts one label for everything; stands in for a trained model."""

    def __init__(self, label, label_space, seed=0):
        self.label = label
        self.label_space = label_space
        self.seed = seed
        self.hyperparameters = None

    def predict(self, dataset):
        return [self.label] * len(dataset)


class EchoModel:
    """Perfect classifier: returns the true labels."""

    def __init__(self, label_space, seed=0):
        self.label_space = label_space
        self.seed = seed

    def predict(self, dataset):
        return list(dataset.labels)


def sixty_forty() -> LabeledDataset:
    texts = tuple(f"t{i}" for i in range(10))
    labels = ("A",) * 6 + ("B",) * 4
    return LabeledDataset(texts=texts, labels=labels)


class TestWeightedMetrics:
    def test_perfect_classifier_scores_one(self):
        guard = GuardedTestSet(sixty_forty())
        report = evaluate([EchoModel(("A", "B"))], guard)
        assert report.f1.mean == pytest.approx(1.0)
        assert report.precision.mean == pytest.approx(1.0)
        assert report.recall.mean == pytest.approx(1.0)

    def test_majority_constant_closed_form(self):
        # Confusion matrix for always-A on a 60/40 test:
        # class A: P=0.6, R=1.0, F1=0.75; class B: all zero.
        # Weighted by support: P=0.36, R=0.6, F1=0.45.
        precision, recall, f1 = weighted_metrics(sixty_forty().labels, ["A"] * 10)
        assert precision == pytest.approx(0.36)
        assert recall == pytest.approx(0.6)
        assert f1 == pytest.approx(0.45)

    def test_label_mismatch_guard(self):
        guard = GuardedTestSet(sixty_forty())
        with pytest.raises(LabelMismatch):
            evaluate([ConstantModel("X", ("X", "Y"))], guard)


class TestReportShape:
    def test_mean_std_row_format(self):
        guard = GuardedTestSet(sixty_forty())
        models = [EchoModel(("A", "B"), seed=0), ConstantModel("A", ("A", "B"), seed=1)]
        report = evaluate(models, guard, dataset_name="synthetic_20")
        assert len(report.runs) == 2
        # Row mirrors the dataset & wP & wR & wF1 table shape.
        assert report.row().startswith("synthetic_20 & ")
        assert "±" in report.row()
        payload = report.as_dict()
        assert payload["weighted_f1"]["mean"] == pytest.approx((1.0 + 0.45) / 2)
        assert payload["test_audit"]["unlocked"] is True

    def test_single_run_std_zero(self):
        guard = GuardedTestSet(sixty_forty())
        report = evaluate([EchoModel(("A", "B"))], guard)
        assert report.f1.std == 0.0

    def test_aggregate_formatting(self):
        assert Aggregate(mean=0.8081, std=0.0226).formatted() == "0.808 ± 0.023"
