"""Hyperparameter search and multi-seed training with frozen settings.

Search runs once, on a 90/10 stratified split of the first run's training
data, maximizing weighted F1 on the validation part; the winning learning
rate, batch size, weight decay, and epoch count are then held constant
across all seeded runs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from sklearn.metrics import f1_score

from synthline_eval.classifier import (
    Hyperparameters,
    TrainedModel,
    TrainingFailure,
    train_classifier,
)
from synthline_eval.data import LabeledDataset, stratified_split
from synthline_eval.protocol import EvalProtocol

_LR_RANGE = (1e-4, 1e-2)  # sampled log-uniform
_BATCH_SIZES = (8, 16, 32)
_WEIGHT_DECAYS = (0.0, 1e-4, 1e-2)


@dataclass
class TuneResult:
    hyperparameters: Hyperparameters
    validation_f1: float
    trials: list[dict] = field(default_factory=list)


def _sample_hp(rng: random.Random, protocol: EvalProtocol) -> Hyperparameters:
    import math

    low, high = _LR_RANGE
    lr = math.exp(rng.uniform(math.log(low), math.log(high)))
    return Hyperparameters(
        learning_rate=lr,
        batch_size=rng.choice(_BATCH_SIZES),
        weight_decay=rng.choice(_WEIGHT_DECAYS),
        epochs=rng.randint(*protocol.epochs_range),
    )


def tune(
    train_data: LabeledDataset,
    protocol: EvalProtocol,
    label_space: tuple[str, ...],
    seed: int = 0,
) -> TuneResult:
    """Seeded random search over (lr, batch size, weight decay, epochs)."""
    fit_part, val_part = stratified_split(train_data, protocol.hpo_holdout, seed)
    rng = random.Random(seed)
    best: Hyperparameters | None = None
    best_f1 = -1.0
    trials = []
    for trial in range(protocol.hpo_trials):
        hp = _sample_hp(rng, protocol)
        try:
            model = train_classifier(fit_part, protocol.classifier, hp, label_space, seed=seed)
            predicted = model.predict(val_part)
            score = f1_score(val_part.labels, predicted, average="weighted", zero_division=0)
        except TrainingFailure:
            score = -1.0
        trials.append({"trial": trial, "hyperparameters": hp.as_dict(), "weighted_f1": score})
        if score > best_f1:
            best, best_f1 = hp, score
    assert best is not None
    return TuneResult(hyperparameters=best, validation_f1=best_f1, trials=trials)


@dataclass
class TrainOutcome:
    tuned: TuneResult
    models: list[TrainedModel]
    failures: list[dict] = field(default_factory=list)


def tune_and_train(
    train_data: LabeledDataset,
    protocol: EvalProtocol,
    label_space: tuple[str, ...] | None = None,
    seed: int = 0,
) -> TrainOutcome:
    """HPO once, then one training run per seed with the frozen settings.

    A failing run is recorded and skipped; training continues as long as at
    least one run succeeds.
    """
    labels = label_space or train_data.label_space
    tuned = tune(train_data, protocol, labels, seed=seed)
    models: list[TrainedModel] = []
    failures: list[dict] = []
    for run in range(protocol.n_runs):
        run_seed = seed + run
        try:
            models.append(
                train_classifier(
                    train_data, protocol.classifier, tuned.hyperparameters, labels, seed=run_seed
                )
            )
        except TrainingFailure as exc:
            failures.append({"seed": run_seed, "error": str(exc)})
    if not models:
        raise TrainingFailure("every training run failed")
    return TrainOutcome(tuned=tuned, models=models, failures=failures)
