"""CLI: evaluate a synthetic dataset against real data."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from synthline_eval.data import DEFAULT_SPLIT_SEED, load_csv, split_real
from synthline_eval.evaluate import evaluate
from synthline_eval.protocol import PROFILES
from synthline_eval.tuning import tune_and_train


@click.group()
def main() -> None:
    """Train-on-synthetic, test-on-real utility evaluation."""


@main.command()
@click.option("--train", "train_path", required=True, type=click.Path(exists=True),
              help="Synthetic training CSV (text,label).")
@click.option("--real", "real_path", required=True, type=click.Path(exists=True),
              help="Real dataset CSV; 30% becomes the held-out test set.")
@click.option("--profile", type=click.Choice(sorted(PROFILES)), default="desk", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--split-seed", type=int, default=DEFAULT_SPLIT_SEED, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Report file (defaults beside the training data).")
@click.option("--name", default=None, help="Dataset name used in the report row.")
def run(train_path, real_path, profile, seed, split_seed, out_path, name) -> None:
    """Run the full protocol and write the report."""
    protocol = PROFILES[profile]()
    train_data = load_csv(train_path)
    real_data = load_csv(real_path)
    try:
        _, test_set = split_real(real_data, seed=split_seed)
        label_space = tuple(sorted(set(train_data.labels) | set(real_data.labels)))
        outcome = tune_and_train(train_data, protocol, label_space, seed=seed)
        report = evaluate(
            outcome.models,
            test_set,
            dataset_name=name or Path(train_path).stem,
            hyperparameters=outcome.tuned.hyperparameters.as_dict(),
            failures=outcome.failures,
        )
    except Exception as exc:
        click.echo(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), err=True)
        sys.exit(1)
    target = Path(out_path) if out_path else Path(train_path).with_suffix(".eval.json")
    report.write(target)
    click.echo(json.dumps(report.as_dict()))
    click.echo(report.row(), err=True)


if __name__ == "__main__":
    main()
