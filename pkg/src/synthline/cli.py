"""Command-line interface: generate, curate, metrics, pace, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import yaml

from synthline.curation import CurationParams, curate
from synthline.feature_model import (
    SelectionError,
    default_feature_model,
    expand_atomic,
    validate_selection,
)
from synthline.gateway import build_gateway, profile_for
from synthline.metrics import diversity_report
from synthline.pace import PaceConfig, PaceOptimizer, export_trace
from synthline.persistence import load_dataset, write_csv
from synthline.promptline import build_prompt
from synthline.runner import RunOptions, execute_run


def _fail(error: str, **extra) -> None:
    """Print one machine-readable error line and exit nonzero."""
    click.echo(json.dumps({"error": error, **extra}), err=True)
    sys.exit(1)


def _load_document(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".json"):
        return json.loads(text)
    return yaml.safe_load(text)


def _load_selection(config_path: str):
    document = _load_document(config_path)
    model = default_feature_model()
    try:
        return validate_selection(model, document), document
    except SelectionError as err:
        _fail("invalid_selection", violations=[v.as_dict() for v in err.violations])


provider_option = click.option(
    "--provider",
    default=None,
    type=click.Choice(["mock", "mock-low-diversity", "remote"]),
    help="Provider profile (defaults to the config's llm_provider, then mock).",
)
seed_option = click.option("--seed", type=int, default=None, help="Deterministic seed.")


@click.group()
def main() -> None:
    """Synthetic requirements generation pipeline."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@provider_option
@seed_option
@click.option("--parallelism", type=int, default=1, show_default=True)
@click.option("--metrics", is_flag=True, help="Compute diversity metrics into the manifest.")
def generate(config_path, out_dir, provider, seed, parallelism, metrics) -> None:
    """Generate a dataset from a configuration document."""
    selection, document = _load_selection(config_path)
    provider = provider or document.get("llm_provider") or "mock"
    options = RunOptions(
        provider=provider, seed=seed, parallelism=parallelism, compute_metrics=metrics
    )
    try:
        outcome = execute_run(selection, Path(out_dir), options)
    except Exception as exc:
        _fail("run_failed", detail=f"{type(exc).__name__}: {exc}")
    shortfalls = {f"{k[0]}/{k[1]}": v for k, v in outcome.generation.shortfalls.items()}
    click.echo(
        json.dumps(
            {
                "run_id": outcome.run_id,
                "dataset_id": outcome.dataset_id,
                "out": str(outcome.run_dir),
                "size": outcome.manifest.size,
                "label_counts": outcome.manifest.label_counts,
                "shortfalls": shortfalls,
            }
        )
    )


@main.command("curate")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--fraction", type=float, default=0.2, show_default=True)
@click.option("--balance/--no-balance", default=True, show_default=True)
@provider_option
@seed_option
def curate_cmd(in_path, out_dir, fraction, balance, provider, seed) -> None:
    """Curate a dataset file (dedup, similarity filter, class balance)."""
    dataset = load_dataset(Path(in_path))
    params = CurationParams(
        removal_fraction=fraction, balance=balance, random_seed=seed or 0
    )
    gateway = build_gateway(profile_for(provider or "mock", seed=seed))
    try:
        curated, report = curate(dataset, params, gateway)
    except Exception as exc:
        _fail("curation_failed", detail=f"{type(exc).__name__}: {exc}")
    source = Path(in_path)
    target_dir = Path(out_dir) if out_dir else source.parent
    target_dir.mkdir(parents=True, exist_ok=True)
    curated_path = target_dir / f"{source.stem}.curated.csv"
    report_path = target_dir / f"{source.stem}.curation_report.json"
    write_csv(curated, curated_path)
    report_path.write_text(json.dumps(report.as_dict(), indent=2), encoding="utf-8")
    click.echo(
        json.dumps(
            {
                "curated": str(curated_path),
                "report": str(report_path),
                "input_count": report.input_count,
                "after_balance": report.after_balance,
            }
        )
    )


@main.command("metrics")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--ngram", type=int, default=3, show_default=True)
@provider_option
@seed_option
def metrics_cmd(in_path, out_dir, ngram, provider, seed) -> None:
    """Compute INGF and APS for a dataset file."""
    dataset = load_dataset(Path(in_path))
    gateway = build_gateway(profile_for(provider or "mock", seed=seed))
    report = diversity_report(dataset.texts(), gateway, n=ngram)
    source = Path(in_path)
    target_dir = Path(out_dir) if out_dir else source.parent
    target_dir.mkdir(parents=True, exist_ok=True)
    report_path = target_dir / f"{source.stem}.metrics.json"
    report_path.write_text(json.dumps(report.as_dict(), indent=2), encoding="utf-8")
    click.echo(json.dumps(report.as_dict()))


@main.command("pace")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@provider_option
@seed_option
@click.option("--label", "only_label", default=None, help="Optimize one label only.")
@click.option("--cell-index", type=int, default=None, help="Optimize one atomic config only.")
def pace_cmd(config_path, out_dir, provider, seed, only_label, cell_index) -> None:
    """Run prompt optimization for the selection's cells and export traces."""
    selection, document = _load_selection(config_path)
    provider = provider or document.get("llm_provider") or "mock"
    gateway = build_gateway(profile_for(provider, seed=seed))
    config = PaceConfig(
        n_pairs=selection.pace_actors or 4,
        iterations=selection.pace_iterations or 3,
        candidates_per_iteration=selection.pace_candidates or 2,
        scoring_batch_size=max(2, selection.samples_per_prompt),
    )
    optimizer = PaceOptimizer(gateway, config)
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    results = []
    for label_idx, label in enumerate(selection.labels):
        if only_label is not None and label.name != only_label:
            continue
        for atomic in expand_atomic(selection):
            if cell_index is not None and atomic.index != cell_index:
                continue
            prompt = build_prompt(
                label.name, label.description, atomic, max(2, selection.samples_per_prompt)
            )
            try:
                _, state = optimizer.optimize(prompt)
            except Exception as exc:
                _fail("optimization_failed", detail=f"{type(exc).__name__}: {exc}")
            trace_path = target / f"trace_l{label_idx}_c{atomic.index:04d}.json"
            export_trace(state, trace_path)
            results.append(
                {
                    "label": label.name,
                    "atomic_config_id": atomic.id,
                    "score": state.incumbent_score,
                    "trace": str(trace_path),
                }
            )
    click.echo(json.dumps({"optimized": results}))


@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--data-root", type=click.Path(), default="runs", show_default=True)
def serve(port, data_root) -> None:
    """Serve the HTTP API."""
    from synthline.service import serve as run_server

    run_server(port=port, data_root=data_root)


if __name__ == "__main__":
    main()
