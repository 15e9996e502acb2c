"""File-system persistence: dataset files, manifests, and reports.

Datasets live in a directory per run. CSV files carry exactly ``text,label``
with RFC-4180 quoting in canonical order; JSON files add provenance fields.
The manifest beside the data records counts, the selection hash, and report
references, and every write is audited by re-reading the file and
reconciling the counts.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from synthline.generator import Dataset, SyntheticSample

MANIFEST_FILE = "manifest.json"
SELECTION_FILE = "selection.json"
CURATION_REPORT_FILE = "curation_report.json"
DIVERSITY_REPORT_FILE = "diversity_report.json"


class PersistenceError(Exception):
    """A write could not be verified against its manifest."""


@dataclass
class DatasetManifest:
    dataset_id: str
    run_id: str
    config_hash: str
    template_version: str
    label_counts: dict[str, int]
    cell_counts: dict[str, dict[str, int]]
    provider_profile_id: str
    created_at: str
    format: str
    data_file: str
    size: int
    curation_report: str | None = None
    diversity_report: str | None = None

    def as_dict(self) -> dict[str, Any]:
        return {
            "dataset_id": self.dataset_id,
            "run_id": self.run_id,
            "config_hash": self.config_hash,
            "template_version": self.template_version,
            "label_counts": self.label_counts,
            "cell_counts": self.cell_counts,
            "provider_profile_id": self.provider_profile_id,
            "created_at": self.created_at,
            "format": self.format,
            "data_file": self.data_file,
            "size": self.size,
            "curation_report": self.curation_report,
            "diversity_report": self.diversity_report,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DatasetManifest":
        return cls(**data)


def write_csv(dataset: Dataset, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["text", "label"])
        for sample in dataset.samples:
            writer.writerow([sample.text, sample.label])


def write_json(dataset: Dataset, path: Path) -> None:
    payload = [
        {
            "text": s.text,
            "label": s.label,
            "sample_id": s.sample_id,
            "atomic_config_id": s.atomic_config_id,
            "prompt_call_id": s.prompt_call_id,
            "template_version": s.template_version,
            "created_at": s.created_at,
        }
        for s in dataset.samples
    ]
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")


def load_dataset(path: Path) -> Dataset:
    """Load a dataset file; CSV rows get placeholder provenance."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        rows = json.loads(path.read_text(encoding="utf-8"))
        samples = tuple(
            SyntheticSample(
                sample_id=row.get("sample_id") or f"s{i:06d}",
                text=row["text"],
                label=row["label"],
                atomic_config_id=row.get("atomic_config_id", ""),
                prompt_call_id=row.get("prompt_call_id", ""),
                template_version=row.get("template_version", ""),
                created_at=row.get("created_at", ""),
            )
            for i, row in enumerate(rows)
        )
    else:
        with path.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            samples = tuple(
                SyntheticSample(
                    sample_id=f"s{i:06d}",
                    text=row["text"],
                    label=row["label"],
                    atomic_config_id="",
                    prompt_call_id="",
                    template_version="",
                    created_at="",
                )
                for i, row in enumerate(reader)
            )
    labels = tuple(dict.fromkeys(s.label for s in samples))
    return Dataset(samples=samples, labels=labels)


def persist_dataset(
    dataset: Dataset,
    fmt: str,
    directory: Path,
    *,
    dataset_id: str,
    run_id: str,
    config_hash: str,
    template_version: str,
    provider_profile_id: str,
    created_at: str,
    curation_report: dict | None = None,
    diversity_report: dict | None = None,
    selection_document: dict | None = None,
) -> DatasetManifest:
    """Write the dataset and its manifest; verify the write before returning.

    Raises :class:`PersistenceError` when the re-read file disagrees with
    the manifest counts.
    """
    fmt = fmt.upper()
    if fmt not in ("CSV", "JSON"):
        raise ValueError(f"unsupported format {fmt!r}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    data_file = "dataset.csv" if fmt == "CSV" else "dataset.json"
    data_path = directory / data_file
    if fmt == "CSV":
        write_csv(dataset, data_path)
    else:
        write_json(dataset, data_path)

    curation_ref = None
    if curation_report is not None:
        (directory / CURATION_REPORT_FILE).write_text(
            json.dumps(curation_report, indent=2), encoding="utf-8"
        )
        curation_ref = CURATION_REPORT_FILE
    diversity_ref = None
    if diversity_report is not None:
        (directory / DIVERSITY_REPORT_FILE).write_text(
            json.dumps(diversity_report, indent=2), encoding="utf-8"
        )
        diversity_ref = DIVERSITY_REPORT_FILE
    if selection_document is not None:
        (directory / SELECTION_FILE).write_text(
            json.dumps(selection_document, indent=2), encoding="utf-8"
        )

    manifest = DatasetManifest(
        dataset_id=dataset_id,
        run_id=run_id,
        config_hash=config_hash,
        template_version=template_version,
        label_counts=dataset.per_label_counts(),
        cell_counts=dataset.per_cell_counts(),
        provider_profile_id=provider_profile_id,
        created_at=created_at,
        format=fmt,
        data_file=data_file,
        size=len(dataset),
        curation_report=curation_ref,
        diversity_report=diversity_ref,
    )
    (directory / MANIFEST_FILE).write_text(
        json.dumps(manifest.as_dict(), indent=2), encoding="utf-8"
    )
    audit_manifest(directory)
    return manifest


def read_manifest(directory: Path) -> DatasetManifest:
    return DatasetManifest.from_dict(
        json.loads((Path(directory) / MANIFEST_FILE).read_text(encoding="utf-8"))
    )


def audit_manifest(directory: Path) -> None:
    """Re-read the persisted file and reconcile it with the manifest."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    dataset = load_dataset(directory / manifest.data_file)
    if len(dataset) != manifest.size:
        raise PersistenceError(
            f"manifest size {manifest.size} != persisted {len(dataset)}"
        )
    counts = dataset.per_label_counts()
    if counts != manifest.label_counts:
        raise PersistenceError(
            f"manifest label counts {manifest.label_counts} != persisted {counts}"
        )
    if sum(manifest.label_counts.values()) != manifest.size:
        raise PersistenceError("label counts do not sum to dataset size")
