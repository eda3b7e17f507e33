"""Chat-completion and embedding adapters.

Two chat adapters share one protocol: a scripted mock for offline tests and a
client for OpenAI-compatible HTTP endpoints. Mock scripts are JSON files,
a list of ``{template_id, match_digest, response}``; the digest keys on the
request's distinguishing binding (the question for extraction/generation, the
keyword for fuzzy detection, question + old SQL for revision) so one script
can drive a whole multi-turn pipeline run deterministically.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Protocol

import numpy as np
import requests

from .config import LlmConfig, RunConfig
from .errors import MockScriptMissError, TransportError
from .templates import TemplateId, render_template

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompletionRequest:
    template_id: TemplateId
    bindings: Mapping[str, str]
    temperature: float = 0.0
    max_tokens: int = 1024

    def prompt(self) -> str:
        return render_template(self.template_id, self.bindings)


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])

    def __post_init__(self):
        array = np.asarray(self.values, dtype=float)
        if array.ndim != 1 or array.size == 0:
            raise ValueError("embedding must be a non-empty 1-d vector")
        if not np.all(np.isfinite(array)):
            raise ValueError("embedding contains non-finite values")
        object.__setattr__(self, "values", array)


class ChatModel(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


class Embedder(Protocol):
    def embed(self, text: str) -> EmbeddingVector: ...


def normalize_for_digest(text: str) -> str:
    return " ".join(text.lower().split())


def request_digest(template_id: TemplateId, key_text: str) -> str:
    tag = f"{TemplateId(template_id).value}::{normalize_for_digest(key_text)}"
    return hashlib.sha256(tag.encode("utf-8")).hexdigest()[:16]


def request_key_text(request: CompletionRequest) -> str:
    """The binding fields that identify a request for mock matching."""
    bindings = request.bindings
    if request.template_id == TemplateId.FuzzyDetection:
        return bindings.get("keyword", "")
    if request.template_id == TemplateId.SqlRevision:
        return bindings.get("query", "") + "\n" + bindings.get("old_sql", "")
    return bindings.get("query", "")


class MockChatModel:
    """Replays scripted responses matched on (template_id, request digest)."""

    def __init__(self, entries: List[dict]):
        self._responses: Dict[tuple, str] = {}
        for entry in entries:
            template_id = TemplateId(entry["template_id"])
            if "match_digest" in entry:
                digest = entry["match_digest"]
            else:
                digest = request_digest(template_id, entry["match_text"])
            self._responses[(template_id, digest)] = entry["response"]

    @classmethod
    def from_file(cls, path: str | Path) -> "MockChatModel":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def complete(self, request: CompletionRequest) -> str:
        digest = request_digest(request.template_id, request_key_text(request))
        key = (request.template_id, digest)
        if key not in self._responses:
            raise MockScriptMissError(
                f"no scripted response for {request.template_id.value} "
                f"digest={digest} key_text={request_key_text(request)!r}"
            )
        return self._responses[key]


def script_entry(template_id: TemplateId, key_text: str, response: str) -> dict:
    """One mock-script record; helper for building script files in tests."""
    return {
        "template_id": TemplateId(template_id).value,
        "match_digest": request_digest(template_id, key_text),
        "response": response,
    }


class OpenAIChatClient:
    """Minimal chat-completions client with exponential-backoff retries."""

    def __init__(self, config: LlmConfig, api_key: str, backoff: float = 0.5):
        if not config.endpoint:
            raise TransportError("no LLM endpoint configured")
        self.config = config
        self.api_key = api_key
        self.backoff = backoff

    def complete(self, request: CompletionRequest) -> str:
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt()}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        url = self.config.endpoint.rstrip("/") + "/chat/completions"
        last_error: Optional[Exception] = None
        for attempt in range(self.config.retries + 1):
            try:
                response = requests.post(
                    url,
                    json=payload,
                    headers={"Authorization": f"Bearer {self.api_key}"},
                    timeout=60,
                )
                response.raise_for_status()
                return response.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = exc
                if attempt < self.config.retries:
                    time.sleep(self.backoff * (2**attempt))
        raise TransportError(f"chat completion failed after retries: {last_error}")


class MockEmbedder:
    """Deterministic hashed bag-of-character-trigrams embedding."""

    def __init__(self, dimension: int = 64):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = dimension

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValueError("cannot embed empty text")
        normalized = " ".join(text.lower().split())
        padded = f"  {normalized}  "
        counts = np.zeros(self.dimension, dtype=float)
        for i in range(len(padded) - 2):
            trigram = padded[i : i + 3]
            bucket = int(hashlib.md5(trigram.encode("utf-8")).hexdigest()[:8], 16)
            counts[bucket % self.dimension] += 1.0
        return EmbeddingVector(values=counts)


class HttpEmbedder:
    """OpenAI-compatible embeddings endpoint client."""

    def __init__(self, endpoint: str, model: str, api_key: str, retries: int = 3, backoff: float = 0.5):
        if not endpoint:
            raise TransportError("no embedding endpoint configured")
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.retries = retries
        self.backoff = backoff

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValueError("cannot embed empty text")
        url = self.endpoint.rstrip("/") + "/embeddings"
        last_error: Optional[Exception] = None
        for attempt in range(self.retries + 1):
            try:
                response = requests.post(
                    url,
                    json={"model": self.model, "input": text},
                    headers={"Authorization": f"Bearer {self.api_key}"},
                    timeout=60,
                )
                response.raise_for_status()
                return EmbeddingVector(values=np.asarray(response.json()["data"][0]["embedding"]))
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(self.backoff * (2**attempt))
        raise TransportError(f"embedding failed after retries: {last_error}")


@dataclass
class Adapters:
    """The pair of model adapters a pipeline run needs."""

    chat: ChatModel
    embedder: Embedder
    trace: List[dict] = field(default_factory=list)

    def complete(self, request: CompletionRequest) -> str:
        reply = self.chat.complete(request)
        self.trace.append(
            {
                "kind": "llm_call",
                "template_id": request.template_id.value,
                "digest": request_digest(request.template_id, request_key_text(request)),
                "response": reply,
            }
        )
        return reply


def build_adapters(config: RunConfig) -> Adapters:
    """Construct adapters from a RunConfig (mock wins over endpoint)."""
    if config.llm.mock_script:
        chat: ChatModel = MockChatModel.from_file(config.llm.mock_script)
    else:
        chat = OpenAIChatClient(config.llm, RunConfig.api_key())
    if config.embedder.mock:
        embedder: Embedder = MockEmbedder(config.embedder.mock_dimension)
    else:
        embedder = HttpEmbedder(
            config.embedder.endpoint, config.embedder.model, RunConfig.api_key()
        )
    return Adapters(chat=chat, embedder=embedder)
