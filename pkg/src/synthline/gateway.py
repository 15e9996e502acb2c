"""Unified client over chat-completion and embedding providers.

One gateway instance wraps a provider (deterministic mock, or a remote
OpenAI-style JSON-over-HTTP endpoint pair) and adds retries with exponential
backoff, a bounded in-flight cap, and an append-only call log. Every call
carries a ``purpose`` tag so downstream accounting (e.g. the optimizer's
actor/critic/update bookkeeping) can count calls by role.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import threading
import time
import zlib
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import httpx

API_KEY_ENV = "SYNTHLINE_LLM_API_KEY"
BASE_URL_ENV = "SYNTHLINE_LLM_BASE_URL"

MOCK_EMBEDDING_DIM = 64


class ProviderError(Exception):
    """Provider call failed (after retries, for retryable classes)."""


class AuthError(ProviderError):
    """Credentials rejected; never retried."""


class TimeoutError(ProviderError):  # noqa: A001 - mirrors asyncio's precedent
    """The provider did not answer in time; retryable."""


class RateLimitError(ProviderError):
    """HTTP 429; retryable."""


class ServerError(ProviderError):
    """HTTP 5xx; retryable."""


class DimensionMismatch(ProviderError):
    """Embedding vectors in one batch disagree on dimension."""


RETRYABLE = (TimeoutError, RateLimitError, ServerError)


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"invalid role {self.role!r}")


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[ChatMessage, ...]
    temperature: float
    top_p: float

    def __post_init__(self):
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError(f"top_p {self.top_p} outside (0, 1]")


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    dimension: int

    def __post_init__(self):
        if len(self.values) != self.dimension:
            raise ValueError("dimension does not match value count")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding contains non-finite values")


@dataclass
class CallRecord:
    kind: str  # chat | embed
    purpose: str
    provider_id: str
    latency_s: float
    attempts: int
    ok: bool
    error: str | None = None
    n_items: int = 1


@dataclass(frozen=True)
class ProviderProfile:
    """Configuration for constructing a provider (see :func:`build_gateway`)."""

    id: str
    kind: str  # mock | remote
    base_url: str = ""
    chat_model: str = ""
    embed_model: str = ""
    seed: int = 0
    low_diversity: bool = False


class Provider(Protocol):
    id: str

    def chat(self, request: ChatRequest, purpose: str) -> str: ...

    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


# --- deterministic mock provider ------------------------------------------------

_COUNT_RE = re.compile(r"Return exactly (\d+) requirements as a JSON array")
_BATCH_LINE_RE = re.compile(r"^\d+\. (.*)$", re.MULTILINE)
_UPDATE_BODY_RE = re.compile(r"Current prompt:\n---\n(.*?)\n---", re.DOTALL)
_VARIANT_RE = re.compile(r"Produce variant (\d+) of (\d+)")
DIVERSIFIED_MARKER = "[diversified"

_SUBJECTS = (
    "The system",
    "The platform",
    "The service",
    "The application",
    "The gateway",
    "The scheduler",
)
_MODALS = ("shall", "must", "should")
_VERBS = (
    "encrypt",
    "log",
    "validate",
    "archive",
    "display",
    "throttle",
    "reconcile",
    "export",
)
_OBJECTS = (
    "user sessions",
    "audit records",
    "payment batches",
    "sensor readings",
    "configuration changes",
    "access requests",
    "report templates",
    "backup snapshots",
)
_CLAUSES = (
    "within 200 ms",
    "at least once per hour",
    "before persisting results",
    "for every tenant",
    "under peak load",
    "without operator intervention",
)


def mock_embed_tokens(text: str) -> list[str]:
    return re.findall(r"[^\W_]+", text.lower(), re.UNICODE)


def mock_embed_bucket(token: str) -> int:
    return zlib.crc32(token.encode("utf-8")) % MOCK_EMBEDDING_DIM


def mock_embedding(text: str) -> list[float]:
    """Token feature-hash into 64 dims, L2-normalized (zero vector if empty)."""
    vec = [0.0] * MOCK_EMBEDDING_DIM
    for token in mock_embed_tokens(text):
        vec[mock_embed_bucket(token)] += 1.0
    norm = math.sqrt(sum(v * v for v in vec))
    if norm == 0.0:
        return vec
    return [v / norm for v in vec]


class MockProvider:
    """Offline provider: a pure function of (seed, request).

    Generation draws pseudo-requirements from seeded template pools keyed by
    the prompt text, so distinct atomic configurations produce distinct
    batches. ``low_diversity`` repeats a single sentence per batch until the
    prompt body carries the marker the mock's own update step injects,
    which lets optimization visibly improve a degenerate starting prompt.
    """

    def __init__(self, seed: int = 0, low_diversity: bool = False):
        self.id = f"mock:seed={seed}" + (":low-diversity" if low_diversity else "")
        self.seed = seed
        self.low_diversity = low_diversity

    # -- helpers

    def _base(self, text: str) -> int:
        digest = hashlib.sha256(f"{self.seed}:{text}".encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big")

    def _sentence(self, index: int) -> str:
        pools = (_SUBJECTS, _MODALS, _VERBS, _OBJECTS, _CLAUSES)
        parts = []
        rest = index
        for pool in pools:
            rest, pick = divmod(rest, len(pool))
            parts.append(pool[pick])
        subject, modal, verb, obj, clause = parts
        return f"{subject} {modal} {verb} {obj} {clause}."

    def _generate(self, request: ChatRequest) -> str:
        user_text = request.messages[-1].content
        match = _COUNT_RE.search(user_text)
        count = int(match.group(1)) if match else 1
        base = self._base(user_text)
        if self.low_diversity and DIVERSIFIED_MARKER not in user_text:
            sentences = [self._sentence(base % 6912)] * count
        else:
            sentences = [self._sentence((base + 7 * i) % 6912) for i in range(count)]
        if count == 1 and match is None:
            return sentences[0]
        return json.dumps(sentences)

    def _critique(self, request: ChatRequest) -> str:
        user_text = request.messages[-1].content
        batch = _BATCH_LINE_RE.findall(user_text)
        if len(batch) >= 2 and len(set(batch)) == 1:
            return (
                "The batch shows severe repetition: every requirement is identical. "
                "Instruct the generator to vary stakeholders, verbs, and constraints."
            )
        flavour = self._base(user_text) % 3
        suggestions = (
            "Vary the opening phrase and the quantitative constraints across items.",
            "Introduce requirements from different operational scenarios.",
            "Alternate stakeholder perspectives and measurable acceptance criteria.",
        )
        return f"Diversity is adequate but improvable. {suggestions[flavour]}"

    def _update(self, request: ChatRequest) -> str:
        user_text = request.messages[-1].content
        body_match = _UPDATE_BODY_RE.search(user_text)
        body = body_match.group(1) if body_match else user_text
        variant_match = _VARIANT_RE.search(user_text)
        variant = int(variant_match.group(1)) if variant_match else 1
        return (
            f"{body}\n\nVary sentence openings, stakeholders, and vocabulary across "
            f"the batch. {DIVERSIFIED_MARKER} v{variant}]"
        )

    # -- Provider interface

    def chat(self, request: ChatRequest, purpose: str) -> str:
        if purpose == "critic":
            return self._critique(request)
        if purpose == "update":
            return self._update(request)
        return self._generate(request)

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        return [mock_embedding(t) for t in texts]


# --- remote provider ------------------------------------------------------------


class RemoteProvider:
    """OpenAI-style chat/embeddings endpoints over JSON HTTP."""

    def __init__(
        self,
        base_url: str,
        chat_model: str,
        embed_model: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        client: httpx.Client | None = None,
    ):
        self.id = f"remote:{base_url}"
        self.base_url = base_url.rstrip("/")
        self.chat_model = chat_model
        self.embed_model = embed_model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self._client = client or httpx.Client(timeout=timeout)

    def _post(self, path: str, payload: dict) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = self._client.post(f"{self.base_url}{path}", json=payload, headers=headers)
        except httpx.TimeoutException as exc:
            raise TimeoutError(f"request to {path} timed out") from exc
        except httpx.HTTPError as exc:
            raise ServerError(f"transport failure on {path}: {exc}") from exc
        if response.status_code in (401, 403):
            raise AuthError(f"provider rejected credentials ({response.status_code})")
        if response.status_code == 429:
            raise RateLimitError("provider rate limit hit")
        if response.status_code >= 500:
            raise ServerError(f"provider returned {response.status_code}")
        if response.status_code >= 400:
            raise ProviderError(f"provider returned {response.status_code}: {response.text[:200]}")
        return response.json()

    def chat(self, request: ChatRequest, purpose: str) -> str:
        payload = {
            "model": request.model or self.chat_model,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "top_p": request.top_p,
        }
        data = self._post("/chat/completions", payload)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed chat response: {data!r:.200}") from exc

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        data = self._post("/embeddings", {"model": self.embed_model, "input": list(texts)})
        try:
            rows = sorted(data["data"], key=lambda r: r["index"])
            return [row["embedding"] for row in rows]
        except (KeyError, TypeError) as exc:
            raise ProviderError(f"malformed embeddings response: {data!r:.200}") from exc


# --- gateway --------------------------------------------------------------------


class LlmGateway:
    """Retrying, concurrency-capped front over a provider.

    Retries timeouts, rate limits, and server errors with exponential
    backoff plus jitter, up to ``max_attempts`` total tries; auth and
    validation failures are never retried. At most ``max_in_flight``
    provider calls run concurrently. The call log is append-only.
    """

    def __init__(
        self,
        provider: Provider,
        max_in_flight: int = 4,
        max_attempts: int = 3,
        backoff_base: float = 0.5,
        backoff_cap: float = 8.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.provider = provider
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self._sleep = sleep
        self._limiter = threading.BoundedSemaphore(max_in_flight)
        self._log_lock = threading.Lock()
        self.call_log: list[CallRecord] = []

    def _record(self, record: CallRecord) -> None:
        with self._log_lock:
            self.call_log.append(record)

    def _backoff(self, attempt: int) -> float:
        # Deterministic jitter keyed on the attempt keeps replays stable.
        jitter = 0.1 * ((attempt * 2654435761) % 100) / 100.0
        return min(self.backoff_cap, self.backoff_base * (2 ** (attempt - 1))) + jitter

    def _call(self, kind: str, purpose: str, n_items: int, fn: Callable[[], object]) -> object:
        started = time.monotonic()
        attempts = 0
        while True:
            attempts += 1
            try:
                with self._limiter:
                    result = fn()
            except RETRYABLE as exc:
                if attempts >= self.max_attempts:
                    self._record(
                        CallRecord(
                            kind=kind,
                            purpose=purpose,
                            provider_id=self.provider.id,
                            latency_s=time.monotonic() - started,
                            attempts=attempts,
                            ok=False,
                            error=type(exc).__name__,
                            n_items=n_items,
                        )
                    )
                    raise
                self._sleep(self._backoff(attempts))
                continue
            except ProviderError as exc:
                self._record(
                    CallRecord(
                        kind=kind,
                        purpose=purpose,
                        provider_id=self.provider.id,
                        latency_s=time.monotonic() - started,
                        attempts=attempts,
                        ok=False,
                        error=type(exc).__name__,
                        n_items=n_items,
                    )
                )
                raise
            self._record(
                CallRecord(
                    kind=kind,
                    purpose=purpose,
                    provider_id=self.provider.id,
                    latency_s=time.monotonic() - started,
                    attempts=attempts,
                    ok=True,
                    n_items=n_items,
                )
            )
            return result

    def chat_complete(self, request: ChatRequest, purpose: str = "chat") -> str:
        """Run one chat completion and return the assistant text."""
        return self._call("chat", purpose, 1, lambda: self.provider.chat(request, purpose))

    def embed_batch(self, texts: Sequence[str], purpose: str = "embed") -> list[EmbeddingVector]:
        """Embed texts, preserving order; one vector per input text."""
        if not texts:
            raise ValueError("embed_batch requires a non-empty list")
        if any(not t for t in texts):
            raise ValueError("embed_batch rejects empty strings")
        raw = self._call("embed", purpose, len(texts), lambda: self.provider.embed(texts))
        dims = {len(vec) for vec in raw}
        if len(dims) != 1:
            raise DimensionMismatch(f"mixed embedding dimensions in one batch: {sorted(dims)}")
        dim = dims.pop()
        return [EmbeddingVector(values=tuple(vec), dimension=dim) for vec in raw]

    def calls(self, purpose: str | None = None, kind: str | None = None) -> list[CallRecord]:
        with self._log_lock:
            records = list(self.call_log)
        if purpose is not None:
            records = [r for r in records if r.purpose == purpose]
        if kind is not None:
            records = [r for r in records if r.kind == kind]
        return records


def build_gateway(
    profile: ProviderProfile,
    max_in_flight: int = 4,
    sleep: Callable[[float], None] = time.sleep,
) -> LlmGateway:
    """Construct a gateway from a provider profile."""
    if profile.kind == "mock":
        provider: Provider = MockProvider(seed=profile.seed, low_diversity=profile.low_diversity)
    elif profile.kind == "remote":
        provider = RemoteProvider(
            base_url=profile.base_url or os.environ.get(BASE_URL_ENV, "https://api.openai.com/v1"),
            chat_model=profile.chat_model,
            embed_model=profile.embed_model,
        )
    else:
        raise ValueError(f"unknown provider kind {profile.kind!r}")
    return LlmGateway(provider, max_in_flight=max_in_flight, sleep=sleep)


def profile_for(provider: str, seed: int | None = None, chat_model: str = "") -> ProviderProfile:
    """Resolve a CLI/API provider name into a profile."""
    if provider == "mock":
        return ProviderProfile(id=f"mock:seed={seed or 0}", kind="mock", seed=seed or 0)
    if provider == "mock-low-diversity":
        return ProviderProfile(
            id=f"mock:seed={seed or 0}:low-diversity",
            kind="mock",
            seed=seed or 0,
            low_diversity=True,
        )
    if provider == "remote":
        base_url = os.environ.get(BASE_URL_ENV, "https://api.openai.com/v1")
        return ProviderProfile(
            id=f"remote:{base_url}",
            kind="remote",
            base_url=base_url,
            chat_model=chat_model or os.environ.get("SYNTHLINE_LLM_CHAT_MODEL", ""),
            embed_model=os.environ.get("SYNTHLINE_LLM_EMBED_MODEL", "text-embedding-3-small"),
        )
    raise ValueError(f"unknown provider {provider!r}")
