"""Bulk generation: quotas met, provenance intact, events monotone."""

from __future__ import annotations

import random

import pytest

from synthline.feature_model import expand_atomic, validate_selection
from synthline.gateway import AuthError, LlmGateway, MockProvider, ProviderError
from synthline.generator import RunFailed, fixed_clock, run_generation
from synthline.promptline import allocate_quotas, build_prompt
from tests.conftest import base_document


def make_prompts(selection, configs):
    prompts = {}
    for label in selection.labels:
        for config in configs:
            prompts[(label.name, config.id)] = build_prompt(
                label.name, label.description, config, selection.samples_per_prompt
            )
    return prompts


def run(selection, gateway=None, parallelism=1, emit=None):
    configs = expand_atomic(selection)
    plan = allocate_quotas(selection.label_names, configs, selection.subset_size)
    gateway = gateway or LlmGateway(MockProvider(seed=1))
    prompts = make_prompts(selection, configs)
    result = run_generation(
        selection,
        plan,
        prompts,
        gateway,
        run_id="test-run",
        clock=fixed_clock(),
        emit=emit,
        parallelism=parallelism,
    )
    return result, gateway, plan


class TestRunGeneration:
    def test_small_run_counts_and_calls(self, small_selection):
        # 2 labels x 4 configs, subset 12, samples_per_prompt 20:
        # quota 3 per cell, one call per cell, 8 calls, 24 samples.
        result, gateway, plan = run(small_selection)
        assert len(result.dataset) == 24
        assert result.dataset.per_label_counts() == {"Security": 12, "Non-Security": 12}
        assert len(gateway.calls(purpose="generate")) == 8
        assert result.shortfalls == {}

    def test_single_sample_per_prompt_loops(self, model):
        doc = base_document(
            specification_level=["High-Level"],
            requirement_source=["End Users"],
            specification_format=["NL"],
            domain=["Healthcare"],
            subset_size=3,
            samples_per_prompt=1,
        )
        selection = validate_selection(model, doc)
        result, gateway, _ = run(selection)
        # One cell per label with quota 3 and one item per call.
        assert len(gateway.calls(purpose="generate")) == 6
        assert len(result.dataset) == 6

    def test_provenance_join_total(self, small_selection):
        result, _, plan = run(small_selection)
        cells = {(c.label, c.config_id) for c in plan.cells}
        for sample in result.dataset.samples:
            assert (sample.label, sample.atomic_config_id) in cells
            assert sample.text
            assert sample.prompt_call_id.startswith("test-run:")
            assert sample.template_version == "1.0.0"

    def test_canonical_assembly_and_ids(self, small_selection):
        result, _, plan = run(small_selection)
        ids = [s.sample_id for s in result.dataset.samples]
        assert ids == [f"s{i:06d}" for i in range(len(ids))]
        # Samples arrive grouped by canonical cell order.
        cell_order = [(c.label, c.config_id) for c in plan.cells]
        positions = [
            cell_order.index((s.label, s.atomic_config_id)) for s in result.dataset.samples
        ]
        assert positions == sorted(positions)

    def test_parallel_run_same_dataset(self, small_selection):
        sequential, _, _ = run(small_selection, parallelism=1)
        parallel, _, _ = run(small_selection, parallelism=4)
        assert sequential.dataset == parallel.dataset

    def test_events_monotone(self, small_selection):
        events = []
        run(small_selection, emit=events.append)
        assert len(events) == 8
        completed = [e.completed_cells for e in events]
        assert completed == sorted(completed)
        assert completed[-1] == 8
        assert all(e.total_cells == 8 for e in events)

    def test_degraded_cell_reports_shortfall(self, small_selection):
        class OneCellBroken:
            """Fails permanently for the (Security, End Users x User Story) cell."""

            id = "one-cell-broken"

            def __init__(self):
                self.inner = MockProvider(seed=1)

            def chat(self, request, purpose):
                text = request.messages[-1].content
                if '"Security"' in text and "End Users" in text and "User Story" in text:
                    raise ProviderError("cell permanently broken")
                return self.inner.chat(request, purpose)

            def embed(self, texts):
                return self.inner.embed(texts)

        events = []
        gateway = LlmGateway(OneCellBroken(), sleep=lambda s: None)
        result, _, plan = run(small_selection, gateway=gateway, emit=events.append)
        broken = [
            c
            for c in plan.cells
            if c.label == "Security" and "User%20Story" in c.config_id and "End%20Users" in c.config_id
        ]
        assert len(broken) == 1
        cell = broken[0]
        assert result.shortfalls == {("Security", cell.config_id): cell.quota}
        assert len(result.dataset) == 24 - cell.quota
        degraded = [e for e in events if "degraded" in e.message]
        assert len(degraded) == 1
        assert cell.config_id in degraded[0].message

    def test_degraded_by_parse_failure(self, small_selection):
        class GarbageForSecurity:
            """Unparseable output for prompts of one label."""

            id = "garbage-security"

            def __init__(self):
                self.inner = MockProvider(seed=1)

            def chat(self, request, purpose):
                if '"Security"' in request.messages[-1].content:
                    return "prose with no structure"
                return self.inner.chat(request, purpose)

            def embed(self, texts):
                return self.inner.embed(texts)

        events = []
        gateway = LlmGateway(GarbageForSecurity(), sleep=lambda s: None)
        result, gateway, plan = run(small_selection, gateway=gateway, emit=events.append)
        # All four Security cells degrade; Non-Security unaffected. Parse
        # failures retry three times per call before degrading.
        assert result.dataset.per_label_counts() == {"Security": 0, "Non-Security": 12}
        security_cells = [c for c in plan.cells if c.label == "Security"]
        assert result.shortfalls == {
            ("Security", c.config_id): c.quota for c in security_cells
        }
        security_calls = [
            r
            for r in gateway.calls(purpose="generate")
            if r.ok
        ]
        assert len(security_calls) == 16  # 4 cells x 3 attempts + 4 good cells

    def test_auth_error_fails_run(self, small_selection):
        class Reject:
            id = "reject"

            def chat(self, request, purpose):
                raise AuthError("bad key")

            def embed(self, texts):
                raise AuthError("bad key")

        with pytest.raises(RunFailed):
            run(small_selection, gateway=LlmGateway(Reject()))

    def test_per_label_counts_property(self, model):
        rng = random.Random(21)
        for _ in range(10):
            doc = base_document(
                specification_level=rng.sample(["High-Level", "Detailed"], rng.randint(1, 2)),
                requirement_source=rng.sample(["End Users", "Business Managers"], rng.randint(1, 2)),
                specification_format=rng.sample(["NL", "User Story"], rng.randint(1, 2)),
                domain=["Healthcare"],
                subset_size=rng.randint(1, 40),
                samples_per_prompt=rng.choice([1, 5, 20]),
            )
            selection = validate_selection(model, doc)
            result, _, _ = run(selection)
            counts = result.dataset.per_label_counts()
            assert all(v == selection.subset_size for v in counts.values())
