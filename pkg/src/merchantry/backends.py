"""Backend contract: remote chat services, scripted replays, price regressors.

Everything that talks to a language model goes through this module, so the
rest of the engine can run fully offline against scripted fixtures.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .currency import CopperPrice
from .errors import (
    BackendUnavailableError,
    FixtureExhaustedError,
    JudgeFailureError,
    ProtocolError,
)

ROLES = ("system", "merchant", "player", "user", "assistant")

# Wire-role mappings, one per calling perspective. Each is a bijection so the
# internal -> wire -> internal round trip is the identity.
_WIRE_MAPS = {
    "merchant": {"system": "system", "merchant": "assistant", "player": "user"},
    "player": {"system": "system", "player": "assistant", "merchant": "user"},
    "generic": {"system": "system", "user": "user", "assistant": "assistant"},
}


def wire_role(role: str, perspective: str = "generic") -> str:
    mapping = _WIRE_MAPS[perspective]
    if role not in mapping:
        raise ProtocolError(f"role {role!r} not supported in {perspective} perspective")
    return mapping[role]


def internal_role(wire: str, perspective: str = "generic") -> str:
    for role, mapped in _WIRE_MAPS[perspective].items():
        if mapped == wire:
            return role
    raise ProtocolError(f"wire role {wire!r} not supported in {perspective} perspective")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ProtocolError(f"unknown role {self.role!r}")
        if self.role != "system" and not self.content:
            raise ProtocolError(f"empty content for role {self.role!r}")


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 1.0
    max_output_tokens: int = 512
    seed: int | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ProtocolError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ProtocolError("max_output_tokens must be positive")


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str  # remote-chat | scripted | regression
    model: str = ""
    endpoint: str = ""
    fixture_path: str = ""
    api_key_env: str = "MERCHANTRY_API_KEY"
    cycle: bool = False


class Backend:
    """One text-generation endpoint; subclasses implement ``complete``."""

    descriptor: BackendDescriptor

    def complete(self, messages: list[ChatMessage], params: GenerationParams,
                 perspective: str = "generic") -> str:
        raise NotImplementedError

    @property
    def id(self) -> str:
        d = self.descriptor
        return f"{d.kind}:{d.model or d.fixture_path}"


class ScriptedBackend(Backend):
    """Replays a fixed queue of replies; fully deterministic.

    Replies come either from an in-memory list or from a JSON-lines fixture
    of {session_id, role, content} rows consumed in file order. A lock keeps
    the replay order well-defined under concurrent callers.
    """

    def __init__(self, replies: list[str], name: str = "fixture", cycle: bool = False):
        self._replies = list(replies)
        self._pos = 0
        self._cycle = cycle
        self._lock = threading.Lock()
        self.descriptor = BackendDescriptor(kind="scripted", model=name, cycle=cycle)

    @classmethod
    def from_fixture(cls, path: str | Path, cycle: bool = False) -> "ScriptedBackend":
        replies = []
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                row = json.loads(line)
                replies.append(row["content"])
        return cls(replies, name=str(path), cycle=cycle)

    def complete(self, messages, params, perspective="generic"):
        del messages, params, perspective
        with self._lock:
            if self._pos >= len(self._replies):
                if self._cycle and self._replies:
                    self._pos = 0
                else:
                    raise FixtureExhaustedError(
                        f"scripted backend {self.descriptor.model!r} exhausted "
                        f"after {len(self._replies)} replies"
                    )
            reply = self._replies[self._pos]
            self._pos += 1
            return reply

    @property
    def remaining(self) -> int:
        with self._lock:
            return len(self._replies) - self._pos


_RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}


class RemoteChatBackend(Backend):
    """OpenAI-compatible chat completion over HTTPS with bounded retries."""

    def __init__(
        self,
        descriptor: BackendDescriptor,
        retry_cap: int = 3,
        backoff_base: float = 0.5,
        max_in_flight: int = 8,
        client: httpx.Client | None = None,
        sleep=time.sleep,
    ):
        self.descriptor = descriptor
        self.retry_cap = retry_cap
        self.backoff_base = backoff_base
        self._semaphore = threading.Semaphore(max_in_flight)
        self._client = client or httpx.Client(timeout=60.0)
        self._sleep = sleep

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.descriptor.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, messages, params, perspective="generic"):
        payload = {
            "model": self.descriptor.model,
            "messages": [
                {"role": wire_role(m.role, perspective), "content": m.content}
                for m in messages
            ],
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        }
        if params.seed is not None:
            payload["seed"] = params.seed

        last_error: Exception | None = None
        for attempt in range(1 + self.retry_cap):
            if attempt:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                with self._semaphore:
                    response = self._client.post(
                        self.descriptor.endpoint, json=payload, headers=self._headers()
                    )
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code in _RETRYABLE_STATUS:
                last_error = ProtocolError(f"HTTP {response.status_code}")
                continue
            if response.status_code != 200:
                raise ProtocolError(
                    f"HTTP {response.status_code} from {self.descriptor.endpoint}"
                )
            try:
                body = response.json()
                content = body["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise ProtocolError(f"malformed provider response: {exc}") from exc
            if not isinstance(content, str):
                raise ProtocolError("provider message content is not text")
            return content
        raise BackendUnavailableError(
            f"{self.descriptor.model}: gave up after {1 + self.retry_cap} attempts "
            f"({last_error})"
        )


def complete_chat(backend: Backend, messages: list[ChatMessage],
                  params: GenerationParams, perspective: str = "generic") -> str:
    if not messages:
        raise ProtocolError("messages must be nonempty")
    return backend.complete(messages, params, perspective)


_NUMBER = re.compile(r"-?\d+(?:\.\d+)?")


def predict_price(backend: Backend, description: str,
                  params: GenerationParams | None = None) -> CopperPrice:
    """Query a served price regressor; the reply must be one bare number."""
    params = params or GenerationParams(temperature=0.0, max_output_tokens=32)
    reply = backend.complete(
        [ChatMessage(role="user", content=description)], params
    ).strip()
    numbers = _NUMBER.findall(reply)
    if len(numbers) != 1 or _NUMBER.sub("", reply).strip(" .\n\t"):
        raise ProtocolError(f"regressor reply is not a single number: {reply!r}")
    value = float(numbers[0])
    if value < 0:
        raise ProtocolError(f"regressor predicted a negative price: {value}")
    return round(value)


_SCORE = re.compile(r"\b([1-5])\b")


def judge_score(
    backend: Backend,
    rubric: str,
    subject: str,
    runs: int = 20,
    params: GenerationParams | None = None,
    resample_cap: int = 2,
) -> list[int]:
    """Collect 1-5 scores over independent judge runs.

    A run whose reply has no parseable in-range score is re-sampled up to
    ``resample_cap`` times and then counted as missing. Returns the scores
    actually obtained; raises JudgeFailureError when every run is missing.
    """
    if runs < 1:
        raise ProtocolError("runs must be >= 1")
    params = params or GenerationParams(temperature=1.0, max_output_tokens=16)
    messages = [
        ChatMessage(role="system", content=rubric),
        ChatMessage(role="user", content=subject),
    ]
    scores: list[int] = []
    for _ in range(runs):
        for _attempt in range(1 + resample_cap):
            try:
                reply = backend.complete(messages, params)
            except FixtureExhaustedError:
                raise
            match = _SCORE.search(reply)
            if match:
                scores.append(int(match.group(1)))
                break
    if not scores:
        raise JudgeFailureError(f"all {runs} judge runs were unusable")
    return scores


def parse_backend_spec(spec: str, endpoint: str = "") -> Backend:
    """Build a backend from a CLI-style spec string.

    Forms: ``scripted:<fixture.jsonl>``, ``scripted-cycle:<fixture.jsonl>``,
    ``remote:<model>[@<endpoint>]``, ``regression:<fixture.jsonl>``.
    """
    kind, _, rest = spec.partition(":")
    if kind in ("scripted", "scripted-cycle", "regression"):
        return ScriptedBackend.from_fixture(rest, cycle=kind == "scripted-cycle")
    if kind == "remote":
        model, _, url = rest.partition("@")
        return RemoteChatBackend(
            BackendDescriptor(kind="remote-chat", model=model, endpoint=url or endpoint)
        )
    raise ProtocolError(f"unknown backend spec {spec!r}")
