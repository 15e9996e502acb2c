"""HTTP API contract: validation, run lifecycle, event stream, datasets."""

from __future__ import annotations

import json
import time

import pytest
from fastapi.testclient import TestClient

from synthline.service import create_app
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
def client(tmp_path):
    app = create_app(data_root=tmp_path / "runs")
    with TestClient(app) as test_client:
        yield test_client


def wait_done(client, run_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        record = client.get(f"/api/v1/runs/{run_id}").json()
        if record["status"] in ("done", "failed"):
            return record
        time.sleep(0.05)
    raise TimeoutError("run did not finish")


def start_run(client, document=None, options=None):
    body = {"selection": document or tiny_document(), "options": options or {"seed": 7}}
    response = client.post("/api/v1/runs", json=body)
    assert response.status_code == 201, response.text
    return response.json()["run_id"]


class TestFeatureModelEndpoint:
    def test_model_served(self, client):
        response = client.get("/api/v1/feature-model")
        assert response.status_code == 200
        groups = response.json()["groups"]
        assert [g["name"] for g in groups] == ["Generator", "Artifact", "MLTask", "Output"]

    def test_validate_endpoint_counts_atomics(self, client):
        response = client.post("/api/v1/selection/validate", json=base_document())
        payload = response.json()
        assert payload["valid"] is True
        assert payload["atomic_count"] == 72

    def test_validate_endpoint_reports_violations(self, client):
        response = client.post("/api/v1/selection/validate", json=base_document(top_p=1.5))
        payload = response.json()
        assert payload["valid"] is False
        assert payload["violations"][0]["feature"] == "top_p"


class TestRunLifecycle:
    def test_valid_selection_201_and_completes(self, client):
        run_id = start_run(client)
        record = wait_done(client, run_id)
        assert record["status"] == "done"
        assert record["dataset_id"] == run_id
        assert record["progress"]["phase"] == "done"

    def test_invalid_selection_422_full_violations(self, client):
        doc = tiny_document(top_p=1.5)
        doc.pop("labels")
        response = client.post("/api/v1/runs", json={"selection": doc})
        assert response.status_code == 422
        violations = response.json()["detail"]["violations"]
        features = {v["feature"] for v in violations}
        assert {"top_p", "labels"} <= features

    def test_unknown_run_404(self, client):
        assert client.get("/api/v1/runs/nope").status_code == 404

    def test_event_stream_ordered_and_terminal(self, client):
        run_id = start_run(client)
        events = []
        with client.stream("GET", f"/api/v1/runs/{run_id}/events") as stream:
            for line in stream.iter_lines():
                if line.startswith("data: "):
                    events.append(json.loads(line[len("data: "):]))
        phases = [e["phase"] for e in events]
        assert phases[-1] == "done"
        completed = [e["completed_cells"] for e in events]
        assert completed == sorted(completed)
        assert all(e["run_id"] == run_id for e in events)


class TestDatasets:
    def test_dataset_download_csv_and_json(self, client):
        run_id = start_run(client)
        wait_done(client, run_id)
        csv_response = client.get(f"/api/v1/runs/{run_id}/dataset?format=csv")
        assert csv_response.status_code == 200
        lines = csv_response.text.splitlines()
        assert lines[0] == "text,label"
        assert len(lines) == 13  # header + 2 labels x 6
        json_response = client.get(f"/api/v1/runs/{run_id}/dataset?format=json")
        assert json_response.status_code == 200
        assert len(json_response.json()) == 12

    def test_dataset_record_and_samples(self, client):
        run_id = start_run(client)
        wait_done(client, run_id)
        record = client.get(f"/api/v1/datasets/{run_id}").json()
        assert record["label_counts"] == {"Security": 6, "Non-Security": 6}
        page = client.get(f"/api/v1/datasets/{run_id}/samples?offset=0&limit=5").json()
        assert page["total"] == 12
        assert len(page["samples"]) == 5

    def test_curate_endpoint(self, client):
        run_id = start_run(client)
        wait_done(client, run_id)
        response = client.post(
            f"/api/v1/datasets/{run_id}/curate",
            json={"fraction": 0.2, "balance": True, "seed": 1},
        )
        assert response.status_code == 200
        payload = response.json()
        assert payload["report"]["input_count"] == 12
        new_id = payload["dataset_id"]
        record = client.get(f"/api/v1/datasets/{new_id}").json()
        assert record["curation_report"] == "curation_report.json"
        counts = set(record["label_counts"].values())
        assert len(counts) == 1

    def test_metrics_endpoint(self, client):
        run_id = start_run(client)
        wait_done(client, run_id)
        response = client.get(f"/api/v1/datasets/{run_id}/metrics")
        assert response.status_code == 200
        payload = response.json()
        assert payload["n_samples"] == 12
        assert payload["aps_defined"] is True
        assert payload["ingf_defined"] is True

    def test_missing_dataset_404(self, client):
        assert client.get("/api/v1/datasets/absent/metrics").status_code == 404


class TestApiCliParity:
    def test_same_artifacts_for_same_seed(self, client, tmp_path, model):
        from synthline.feature_model import validate_selection
        from synthline.runner import RunOptions, execute_run

        run_id = start_run(client, options={"seed": 11})
        wait_done(client, run_id)
        api_csv = client.get(f"/api/v1/runs/{run_id}/dataset?format=csv").content

        selection = validate_selection(model, tiny_document())
        outcome = execute_run(selection, tmp_path / "cli", RunOptions(seed=11))
        cli_csv = (tmp_path / "cli" / "dataset.csv").read_bytes()
        assert outcome.run_id == run_id
        assert api_csv == cli_csv
