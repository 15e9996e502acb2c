"""Actor-critic prompt optimization maximizing batch embedding diversity.

Each iteration runs the incumbent prompt through ``n_pairs`` independent
actor executions, critiques every batch, pools the critiques into one update
call per candidate, scores each candidate on a fresh batch, and keeps the
best of {incumbent} + candidates. The score of a prompt is the mean cosine
distance (1 - similarity) over all unordered pairs of its batch embeddings,
so the selected score never decreases across iterations.

Gateway calls are tagged by role: ``actor`` and ``critic`` for the critique
phase, ``update`` for prompt rewriting, and ``score`` for the extra batch
each scoring pass generates. Per-iteration accounting therefore shows
exactly (n_pairs, n_pairs, candidates) actor/critic/update calls.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from synthline.gateway import ChatMessage, ChatRequest, LlmGateway, ProviderError
from synthline.metrics import embedding_matrix, mean_pairwise_cosine
from synthline.promptline import (
    ParseError,
    PromptSpec,
    load_template,
    parse_generation,
    with_body,
    with_requested_count,
)

PARSE_MAX_ATTEMPTS = 3

_FENCE_RE = re.compile(r"```(?:\w+)?\s*(.*?)```", re.DOTALL)


class ScoreUnavailable(Exception):
    """A candidate could not be scored (unparseable batches)."""


class OptimizationFailed(Exception):
    """Every scoring call in the run failed; carries the partial state."""

    def __init__(self, message: str, state: "PaceState"):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class PaceConfig:
    """Optimization parameters; the defaults are the recommended settings."""

    n_pairs: int = 4
    iterations: int = 3
    candidates_per_iteration: int = 2
    actor_temperature: float = 0.0
    critic_temperature: float = 0.0
    update_temperature: float = 0.0
    top_p: float = 1.0
    scoring_batch_size: int = 20

    def __post_init__(self):
        for name in ("n_pairs", "iterations", "candidates_per_iteration"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.scoring_batch_size < 2:
            raise ValueError("scoring_batch_size must be >= 2")


@dataclass
class CandidateTrace:
    user_text: str
    score: float | None
    selected: bool
    error: str | None = None


@dataclass
class IterationTrace:
    iteration: int
    critiques: list[str]
    candidates: list[CandidateTrace]
    incumbent_score_after: float | None
    actor_calls: int
    critic_calls: int
    update_calls: int


@dataclass
class PaceState:
    incumbent_prompt: PromptSpec
    incumbent_score: float | None
    iteration_index: int
    trace: list[IterationTrace] = field(default_factory=list)


class PaceOptimizer:
    def __init__(self, gateway: LlmGateway, config: PaceConfig | None = None):
        self.gateway = gateway
        self.config = config or PaceConfig()

    # -- building blocks

    def _chat(self, system: str, user: str, temperature: float, purpose: str) -> str:
        request = ChatRequest(
            model="",
            messages=(ChatMessage("system", system), ChatMessage("user", user)),
            temperature=temperature,
            top_p=self.config.top_p,
        )
        return self.gateway.chat_complete(request, purpose=purpose)

    def _actor_batch(self, prompt: PromptSpec, purpose: str) -> list[str]:
        last_error: ParseError | None = None
        for _ in range(PARSE_MAX_ATTEMPTS):
            text = self._chat(
                prompt.system_text, prompt.user_text, self.config.actor_temperature, purpose
            )
            try:
                return parse_generation(text, prompt.requested_count)
            except ParseError as exc:
                last_error = exc
        raise last_error if last_error else ParseError("actor produced nothing")

    def run_actor(self, prompt: PromptSpec) -> list[str]:
        """Execute the prompt once and parse the generated batch."""
        return self._actor_batch(prompt, "actor")

    def run_critic(self, prompt: PromptSpec, batch: list[str]) -> str:
        """Critique one batch against the diversity/label/format objectives."""
        if not batch:
            raise ValueError("run_critic requires a non-empty batch")
        rendered = "\n".join(f"{i + 1}. {text}" for i, text in enumerate(batch))
        user = load_template("critic").format(
            prompt_body=prompt.body_text,
            batch_size=len(batch),
            batch=rendered,
            label_name=prompt.label_name,
        )
        critique = self._chat(
            prompt.system_text, user, self.config.critic_temperature, "critic"
        ).strip()
        if not critique:
            raise ProviderError("critic returned an empty critique")
        return critique

    def update_prompt(self, prompt: PromptSpec, critiques: list[str], k: int) -> list[PromptSpec]:
        """Produce up to k candidate prompts from the pooled critiques.

        Candidates that fail to parse into a usable body are dropped, so the
        result may be shorter than k. Metadata (label, configuration, count,
        schema) is always preserved.
        """
        if k < 1 or not critiques:
            raise ValueError("update_prompt requires k >= 1 and at least one critique")
        rendered = "\n".join(f"{i + 1}. {text}" for i, text in enumerate(critiques))
        candidates = []
        for variant in range(1, k + 1):
            user = load_template("update").format(
                prompt_body=prompt.body_text,
                n_critiques=len(critiques),
                critiques=rendered,
                variant=variant,
                n_variants=k,
            )
            response = self._chat(
                prompt.system_text, user, self.config.update_temperature, "update"
            )
            body = self._extract_body(response)
            if body:
                candidates.append(with_body(prompt, body))
        return candidates

    @staticmethod
    def _extract_body(response: str) -> str:
        fence = _FENCE_RE.search(response)
        if fence:
            response = fence.group(1)
        return response.strip()

    def score_prompt(self, prompt: PromptSpec, batch_size: int | None = None) -> float:
        """Mean pairwise cosine distance of a fresh batch; range [0, 2]."""
        size = batch_size if batch_size is not None else self.config.scoring_batch_size
        if size < 2:
            raise ValueError("scoring needs a batch of at least 2")
        sized = with_requested_count(prompt, size)
        try:
            batch = self._actor_batch(sized, "score")
        except ParseError as exc:
            raise ScoreUnavailable(str(exc)) from exc
        if len(batch) < 2:
            raise ScoreUnavailable(f"batch of {len(batch)} cannot be scored")
        vectors = self.gateway.embed_batch(batch, purpose="embed")
        return 1.0 - mean_pairwise_cosine(embedding_matrix(vectors))

    # -- the loop

    def optimize(self, initial: PromptSpec) -> tuple[PromptSpec, PaceState]:
        """Run the full loop and return the best prompt plus its trace."""
        cfg = self.config
        state = PaceState(incumbent_prompt=initial, incumbent_score=None, iteration_index=0)
        try:
            state.incumbent_score = self.score_prompt(initial)
        except ScoreUnavailable:
            state.incumbent_score = None
        any_score = state.incumbent_score is not None

        for iteration in range(1, cfg.iterations + 1):
            incumbent = state.incumbent_prompt
            batches = [self._actor_batch(incumbent, "actor") for _ in range(cfg.n_pairs)]
            critiques = [self.run_critic(incumbent, batch) for batch in batches]
            candidates = self.update_prompt(incumbent, critiques, cfg.candidates_per_iteration)

            traces: list[CandidateTrace] = []
            best_index: int | None = None
            best_score = state.incumbent_score
            for index, candidate in enumerate(candidates):
                try:
                    score = self.score_prompt(candidate)
                except ScoreUnavailable as exc:
                    traces.append(CandidateTrace(candidate.user_text, None, False, str(exc)))
                    continue
                any_score = True
                traces.append(CandidateTrace(candidate.user_text, score, False))
                # Strict improvement required: ties keep the incumbent, and
                # among tied candidates the lowest index wins.
                if best_score is None or score > best_score:
                    best_score = score
                    best_index = index

            if best_index is not None:
                state.incumbent_prompt = candidates[best_index]
                state.incumbent_score = best_score
                traces[best_index].selected = True

            state.iteration_index = iteration
            state.trace.append(
                IterationTrace(
                    iteration=iteration,
                    critiques=critiques,
                    candidates=traces,
                    incumbent_score_after=state.incumbent_score,
                    actor_calls=cfg.n_pairs,
                    critic_calls=cfg.n_pairs,
                    update_calls=cfg.candidates_per_iteration,
                )
            )

        if not any_score:
            raise OptimizationFailed("every scoring call failed", state)
        return state.incumbent_prompt, state


def export_trace(state: PaceState, path: str | Path) -> None:
    """Write the optimization trace as a structured JSON document."""
    payload = {
        "incumbent_score": state.incumbent_score,
        "iterations_completed": state.iteration_index,
        "incumbent_prompt": {
            "label_name": state.incumbent_prompt.label_name,
            "atomic_config_id": state.incumbent_prompt.atomic_config_id,
            "user_text": state.incumbent_prompt.user_text,
        },
        "trace": [asdict(entry) for entry in state.trace],
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
