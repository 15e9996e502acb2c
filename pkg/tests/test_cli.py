"""CLI subcommands: generate determinism, curate, metrics, pace."""

from __future__ import annotations

import json

import pytest
import yaml
from click.testing import CliRunner

from synthline.cli import main
from tests.conftest import base_document


def tiny_document(**overrides):
    doc = base_document(
        specification_level=["High-Level"],
        requirement_source=["End Users"],
        specification_format=["NL", "User Story"],
        domain=["Healthcare"],
        subset_size=6,
        samples_per_prompt=5,
    )
    doc.update(overrides)
    return doc


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(tiny_document()), encoding="utf-8")
    return path


class TestGenerate:
    def test_runs_and_reports(self, runner, config_file, tmp_path):
        result = runner.invoke(
            main,
            ["generate", "--config", str(config_file), "--out", str(tmp_path / "out"),
             "--provider", "mock", "--seed", "7"],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["size"] == 12
        assert payload["label_counts"] == {"Security": 6, "Non-Security": 6}
        assert (tmp_path / "out" / "dataset.csv").exists()
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_twice_byte_identical(self, runner, config_file, tmp_path):
        for name in ("one", "two"):
            result = runner.invoke(
                main,
                ["generate", "--config", str(config_file), "--out", str(tmp_path / name),
                 "--provider", "mock", "--seed", "7"],
            )
            assert result.exit_code == 0, result.output
        assert (tmp_path / "one" / "dataset.csv").read_bytes() == (
            tmp_path / "two" / "dataset.csv"
        ).read_bytes()
        assert (tmp_path / "one" / "manifest.json").read_bytes() == (
            tmp_path / "two" / "manifest.json"
        ).read_bytes()

    def test_invalid_config_machine_readable_error(self, runner, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text(yaml.safe_dump(tiny_document(top_p=9.0)), encoding="utf-8")
        result = runner.invoke(
            main, ["generate", "--config", str(bad), "--out", str(tmp_path / "out")]
        )
        assert result.exit_code == 1
        error = json.loads(result.output.strip().splitlines()[-1])
        assert error["error"] == "invalid_selection"
        assert any(v["feature"] == "top_p" for v in error["violations"])

    def test_json_config_accepted(self, runner, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(tiny_document()), encoding="utf-8")
        result = runner.invoke(
            main,
            ["generate", "--config", str(path), "--out", str(tmp_path / "out"), "--seed", "1"],
        )
        assert result.exit_code == 0, result.output


class TestCurateCommand:
    def test_curate_csv(self, runner, tmp_path):
        data = tmp_path / "data.csv"
        rows = ["text,label"]
        rows += [f"sample text number {i} alpha beta,A" for i in range(6)]
        rows += [f"other words entirely here {i},B" for i in range(4)]
        data.write_text("\n".join(rows) + "\n", encoding="utf-8")
        result = runner.invoke(
            main, ["curate", "--in", str(data), "--fraction", "0.2", "--seed", "3"]
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["input_count"] == 10
        curated = tmp_path / "data.curated.csv"
        report = tmp_path / "data.curation_report.json"
        assert curated.exists() and report.exists()
        report_data = json.loads(report.read_text())
        assert report_data["after_filter"] == 8  # floor(0.2 * 10) == 2 removed
        counts = set(report_data["class_counts_after"].values())
        assert len(counts) == 1


class TestMetricsCommand:
    def test_metrics_csv(self, runner, tmp_path):
        data = tmp_path / "data.csv"
        data.write_text(
            "text,label\n"
            "the system shall respond,A\n"
            "the system shall respond,A\n",
            encoding="utf-8",
        )
        result = runner.invoke(main, ["metrics", "--in", str(data)])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["ingf"] == 2.0
        assert payload["aps"] == pytest.approx(1.0, abs=1e-9)
        assert (tmp_path / "data.metrics.json").exists()


class TestPaceCommand:
    def test_pace_single_cell(self, runner, tmp_path):
        doc = tiny_document(
            prompt_approach="PACE",
            pace_iterations=2,
            pace_actors=2,
            pace_candidates=1,
            specification_format=["NL"],
        )
        config = tmp_path / "config.yaml"
        config.write_text(yaml.safe_dump(doc), encoding="utf-8")
        result = runner.invoke(
            main,
            ["pace", "--config", str(config), "--out", str(tmp_path / "traces"),
             "--provider", "mock-low-diversity", "--seed", "5", "--label", "Security"],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert len(payload["optimized"]) == 1
        assert payload["optimized"][0]["score"] > 0.0
        assert (tmp_path / "traces" / "trace_l0_c0000.json").exists()
