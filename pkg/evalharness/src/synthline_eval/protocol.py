"""Evaluation protocol parameters and the two shipped profiles."""

from __future__ import annotations

from dataclasses import dataclass, field

from synthline_eval.classifier import ClassifierSpec


@dataclass(frozen=True)
class EvalProtocol:
    real_split_fraction: float = 0.70  # real train pool; the rest is the test set
    hpo_trials: int = 32
    hpo_holdout: float = 0.10  # 90/10 stratified train/validation for tuning
    n_runs: int = 5
    classifier: ClassifierSpec = field(default_factory=ClassifierSpec)
    epochs_range: tuple[int, int] = (4, 16)

    def __post_init__(self):
        if not 0.0 < self.real_split_fraction < 1.0:
            raise ValueError("real_split_fraction must be in (0, 1)")
        if self.hpo_trials < 1 or self.n_runs < 1:
            raise ValueError("hpo_trials and n_runs must be >= 1")


def paper_profile() -> EvalProtocol:
    """Full-scale defaults: 32 tuning trials, 5 seeded runs, base-size model."""
    return EvalProtocol()


def desk_profile() -> EvalProtocol:
    """Laptop/CI scale: tiny encoder, 2 trials, 2 runs."""
    return EvalProtocol(
        hpo_trials=2,
        n_runs=2,
        classifier=ClassifierSpec(
            vocab_size=2048, d_model=32, n_heads=2, n_layers=1, max_len=32, dropout=0.0
        ),
        epochs_range=(4, 8),
    )


PROFILES = {"paper": paper_profile, "desk": desk_profile}
