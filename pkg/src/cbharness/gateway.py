"""Uniform interface to text-generation backends.

Two families: a remote OpenAI-compatible chat-completions endpoint, and six
deterministic mock behaviors that let every pipeline stage run without a GPU.
Mocks are pure functions of (prompt, request metadata, behavior parameters);
they hold no call state, so batches are reproducible at any concurrency.
"""

from __future__ import annotations

import hashlib
import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol

import httpx

from .errors import BackendUnavailable, MissingParameter

MOCK_KINDS = ("oracle", "majority", "lexical_overlap", "order_biased", "noncompliant", "scripted")

_PROMPT_LABEL_LINE = re.compile(r"^Label: (.+)$", re.MULTILINE)
_PROMPT_DOCUMENT = re.compile(r"^Document: (.*?)(?=\n\nOutput reminder: |\Z)", re.MULTILINE | re.DOTALL)


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    max_new_tokens: int = 128
    decode_mode: str = "greedy"
    request_tag: int = 0
    # Document metadata mocks may rely on; remote backends ignore both.
    doc_id: str | None = None
    gold_label: str | None = None

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be positive")
        if self.decode_mode != "greedy":
            raise ValueError("greedy is the only decode mode")


@dataclass(frozen=True)
class GenerationResult:
    request_tag: int
    output_text: str
    backend_id: str
    latency: float
    attempt_count: int
    error: str | None = None


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_delay: float = 0.25
    multiplier: float = 2.0
    fail_fast: bool = False


@dataclass(frozen=True)
class MockBehavior:
    kind: str
    parameters: dict = field(default_factory=dict)


class TransientFailure(Exception):
    """Raised by a backend attempt that is worth retrying."""


class Backend(Protocol):
    backend_id: str

    def generate(self, request: GenerationRequest, attempt: int) -> str: ...


def prompt_labels(prompt: str) -> list[str]:
    """Labels in prompt order, read off the class blocks' Label lines."""
    return _PROMPT_LABEL_LINE.findall(prompt)


def prompt_document(prompt: str) -> str:
    match = _PROMPT_DOCUMENT.search(prompt)
    return match.group(1) if match else ""


class _MockBackend:
    def __init__(self, behavior: MockBehavior):
        self.behavior = behavior
        self.backend_id = f"mock:{behavior.kind}"

    def generate(self, request: GenerationRequest, attempt: int) -> str:
        raise NotImplementedError


class _OracleMock(_MockBackend):
    """Returns the document's gold label verbatim, ignoring the prompt."""

    def generate(self, request, attempt):
        if request.gold_label is not None:
            return request.gold_label
        gold_map = self.behavior.parameters.get("gold", {})
        if request.doc_id in gold_map:
            return gold_map[request.doc_id]
        raise BackendUnavailable(
            f"oracle mock has no gold label for request tag {request.request_tag}"
        )


class _MajorityMock(_MockBackend):
    def generate(self, request, attempt):
        return self.behavior.parameters["label"]


class _LexicalOverlapMock(_MockBackend):
    """First prompt label whose underscore-split lowercase words all occur in
    the lowercased document; otherwise the configured majority label."""

    def generate(self, request, attempt):
        document = prompt_document(request.prompt).lower()
        doc_words = set(re.findall(r"\w+", document))
        for label in prompt_labels(request.prompt):
            words = [w for w in label.lower().split("_") if w]
            if words and all(w in doc_words for w in words):
                return label
        return self.behavior.parameters["majority_label"]


class _OrderBiasedMock(_MockBackend):
    """Label of the first class block in the prompt.

    strength < 1 deterministically defects on a prompt-hash fraction of
    requests, picking another block's label instead.
    """

    def generate(self, request, attempt):
        labels = prompt_labels(request.prompt)
        if not labels:
            raise BackendUnavailable("prompt has no Label lines")
        strength = float(self.behavior.parameters.get("strength", 1.0))
        if strength >= 1.0 or len(labels) == 1:
            return labels[0]
        digest = int.from_bytes(hashlib.sha256(request.prompt.encode("utf-8")).digest()[:8], "big")
        if (digest % 10**6) / 10**6 < strength:
            return labels[0]
        return labels[1 + digest % (len(labels) - 1)]


class _NoncompliantMock(_MockBackend):
    """Prose with two legal labels and one fabricated label."""

    def generate(self, request, attempt):
        labels = prompt_labels(request.prompt)
        if len(labels) < 2:
            raise BackendUnavailable("noncompliant mock needs >= 2 classes in the prompt")
        fabricated = self.behavior.parameters.get("fabricated", "ELEPHANT_STAMPEDE")
        while fabricated in labels:
            fabricated += "_X"
        return (
            f"This looks like {labels[0]} to me, though {fabricated} or "
            f"{labels[1]} could also fit."
        )


class _ScriptedMock(_MockBackend):
    """Replays a fixed answer list, keyed by request_tag modulo script length.

    Entries are strings or {"text": ..., "fail_times": k}; the latter raises a
    transient failure on the first k attempts, so retry paths stay testable
    while the mock itself stays stateless.
    """

    def generate(self, request, attempt):
        script = self.behavior.parameters["script"]
        entry = script[request.request_tag % len(script)]
        if isinstance(entry, str):
            return entry
        if attempt <= int(entry.get("fail_times", 0)):
            raise TransientFailure(f"scripted failure (attempt {attempt})")
        return entry["text"]


_MOCK_CLASSES = {
    "oracle": _OracleMock,
    "majority": _MajorityMock,
    "lexical_overlap": _LexicalOverlapMock,
    "order_biased": _OrderBiasedMock,
    "noncompliant": _NoncompliantMock,
    "scripted": _ScriptedMock,
}

_REQUIRED_PARAMS = {
    "majority": ("label",),
    "lexical_overlap": ("majority_label",),
    "scripted": ("script",),
}


def make_mock(behavior: MockBehavior) -> Backend:
    if behavior.kind not in _MOCK_CLASSES:
        raise MissingParameter(f"unknown mock kind {behavior.kind!r}")
    for name in _REQUIRED_PARAMS.get(behavior.kind, ()):
        if name not in behavior.parameters:
            raise MissingParameter(f"mock kind {behavior.kind!r} requires parameter {name!r}")
    if behavior.kind == "scripted" and not behavior.parameters["script"]:
        raise MissingParameter("scripted mock needs a non-empty script")
    return _MOCK_CLASSES[behavior.kind](behavior)


class OpenAIChatBackend:
    """Remote OpenAI-compatible chat-completions client.

    Sends the rendered prompt as a single user message at temperature 0.
    Request bodies are serialized with sorted keys so identical prompts give
    identical bytes. Does NOT: stream, read logprobs, or apply chat templates.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        token: str | None = None,
        timeout: float = 60.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.backend_id = f"openai:{model}"
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(headers=headers, timeout=timeout, transport=transport)

    def request_body(self, request: GenerationRequest) -> bytes:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": 0,
            "max_tokens": request.max_new_tokens,
        }
        return json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")

    def generate(self, request: GenerationRequest, attempt: int) -> str:
        url = self.endpoint + "/chat/completions"
        try:
            response = self._client.post(url, content=self.request_body(request))
        except httpx.HTTPError as exc:
            raise TransientFailure(str(exc)) from exc
        if response.status_code in (408, 429) or response.status_code >= 500:
            raise TransientFailure(f"HTTP {response.status_code}")
        if response.status_code != 200:
            raise BackendUnavailable(f"HTTP {response.status_code}: {response.text[:200]}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
            raise BackendUnavailable(f"malformed completion response: {exc}") from exc

    def close(self):
        self._client.close()


def _run_one(request: GenerationRequest, backend: Backend, policy: RetryPolicy) -> GenerationResult:
    started = time.monotonic()
    last_error = "no attempts made"
    for attempt in range(1, policy.max_attempts + 1):
        try:
            text = backend.generate(request, attempt)
        except TransientFailure as exc:
            last_error = str(exc)
            if attempt < policy.max_attempts:
                delay = policy.base_delay * policy.multiplier ** (attempt - 1)
                if delay > 0:
                    time.sleep(delay)
            continue
        return GenerationResult(
            request_tag=request.request_tag,
            output_text=text,
            backend_id=backend.backend_id,
            latency=time.monotonic() - started,
            attempt_count=attempt,
        )
    raise BackendUnavailable(
        f"request tag {request.request_tag} failed after {policy.max_attempts} attempts: {last_error}"
    )


def complete_batch(
    requests: list[GenerationRequest],
    backend: Backend,
    concurrency_limit: int = 4,
    retry_policy: RetryPolicy | None = None,
) -> list[GenerationResult]:
    """Run all requests with at most concurrency_limit in flight.

    Output order equals input order. A request that exhausts its retries
    yields a result with empty output_text and the error recorded, unless the
    policy is fail-fast, in which case BackendUnavailable propagates.
    """
    if concurrency_limit < 1:
        raise ValueError("concurrency_limit must be >= 1")
    policy = retry_policy or RetryPolicy()
    if not requests:
        return []

    def guarded(request: GenerationRequest) -> GenerationResult:
        try:
            return _run_one(request, backend, policy)
        except BackendUnavailable as exc:
            if policy.fail_fast:
                raise
            return GenerationResult(
                request_tag=request.request_tag,
                output_text="",
                backend_id=backend.backend_id,
                latency=0.0,
                attempt_count=policy.max_attempts,
                error=str(exc),
            )

    with ThreadPoolExecutor(max_workers=min(concurrency_limit, len(requests))) as pool:
        return list(pool.map(guarded, requests))
