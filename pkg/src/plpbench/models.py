"""Model handles and the completion / embedding backends.

Two kinds of handle exist:

* ``RemoteChat`` -- an OpenAI-style ``/v1/chat/completions`` endpoint.
* ``Mock``       -- offline, deterministic stand-ins used for tests and
  reproducible runs:

  ``mock:echo``                  returns the prompt
  ``mock:const:<text>``          always returns ``<text>``
  ``mock:classifier:<file>``     exact prompt -> answer lookup (JSON object)
  ``mock:choice:<a>|<b>|...``    picks an option from a hash of (prompt, seed)

Mock text output is cut to ``max_output_tokens`` whitespace tokens. Mock
embeddings hash each whitespace token with FNV-1a, expand the hash with
splitmix64 into ``embedding_dim`` values in [-1, 1], sum over tokens and
L2-normalize.
"""

from __future__ import annotations

import enum
import functools
import json
import logging
import os
import re
import socket
import time
import urllib.error
import urllib.request
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ._rng import SplitMix64, fnv1a64
from .errors import BackendError, HttpError, IoError, MalformedResponse, Timeout, UnknownModel, Unsupported

log = logging.getLogger(__name__)

REGISTRY_ENV = "PLPBENCH_MODELS"
DEFAULT_EMBEDDING_DIM = 64
RETRY_STATUSES = frozenset({429}) | frozenset(range(500, 600))
RETRY_BACKOFF_S = 2.0


class ModelKind(str, enum.Enum):
    RemoteChat = "RemoteChat"
    Mock = "Mock"


@dataclass(frozen=True)
class SamplingConfig:
    temperature: float = 0.0
    max_output_tokens: int = 256
    seed: Optional[int] = None
    min_positive_temperature: float = 1e-6

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")

    def effective_temperature(self, requires_positive: bool) -> float:
        if requires_positive:
            return max(self.temperature, self.min_positive_temperature)
        return self.temperature

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ModelHandle:
    name: str
    kind: ModelKind
    endpoint: Optional[str] = None
    requires_positive_temperature: bool = False
    api_key_env: Optional[str] = None
    embedding_dim: int = DEFAULT_EMBEDDING_DIM
    model: Optional[str] = None
    mock: Optional[str] = None
    timeout_s: float = 60.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.kind is ModelKind.RemoteChat and not self.endpoint:
            raise ValueError(f"remote model {self.name!r} needs an endpoint")
        if self.kind is ModelKind.Mock and self.mock is None:
            if not self.name.startswith("mock:"):
                raise ValueError(f"mock model {self.name!r} needs a mock behaviour")
            object.__setattr__(self, "mock", self.name[len("mock:"):])

    def to_entry(self) -> dict:
        entry = {
            "name": self.name,
            "endpoint": self.endpoint,
            "api_key_env": self.api_key_env,
            "requires_positive_temperature": self.requires_positive_temperature,
            "embedding_dim": self.embedding_dim,
        }
        if self.model is not None:
            entry["model"] = self.model
        if self.kind is ModelKind.Mock:
            entry["mock"] = self.mock
        return entry

    @classmethod
    def from_entry(cls, entry: dict) -> "ModelHandle":
        name = entry["name"]
        is_mock = "mock" in entry or (name.startswith("mock:") and not entry.get("endpoint"))
        return cls(
            name=name,
            kind=ModelKind.Mock if is_mock else ModelKind.RemoteChat,
            endpoint=entry.get("endpoint"),
            requires_positive_temperature=bool(entry.get("requires_positive_temperature", False)),
            api_key_env=entry.get("api_key_env"),
            embedding_dim=int(entry.get("embedding_dim") or DEFAULT_EMBEDDING_DIM),
            model=entry.get("model"),
            mock=entry.get("mock"),
        )


@dataclass(frozen=True)
class ModelRequest:
    prompt: str
    config: SamplingConfig = field(default_factory=SamplingConfig)


@dataclass(frozen=True)
class ModelResponse:
    text: str
    prompt_tokens: int
    output_tokens: int
    latency_ms: float
    payload: dict = field(default_factory=dict, compare=False, repr=False)


# -- registry --------------------------------------------------------------

def load_registry(path) -> dict:
    """name -> ModelHandle for a ``models.json`` file."""
    try:
        entries = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read registry {path}: {exc}") from exc
    if isinstance(entries, dict):
        entries = [entries]
    return {e["name"]: ModelHandle.from_entry(e) for e in entries}


def _default_registry():
    env = os.environ.get(REGISTRY_ENV)
    if env:
        return Path(env)
    local = Path("models.json")
    return local if local.is_file() else None


def from_pretrained(name_or_path: str, registry=None) -> ModelHandle:
    """Resolve a mock URI, an endpoint URL, a saved handle file or a registry name."""
    if name_or_path.startswith("mock:"):
        return ModelHandle(name_or_path, ModelKind.Mock)
    if re.match(r"https?://", name_or_path):
        return ModelHandle(name_or_path, ModelKind.RemoteChat, endpoint=name_or_path)
    path = Path(name_or_path)
    if path.is_file():
        handles = load_registry(path)
        if len(handles) != 1:
            raise UnknownModel(f"{path} holds {len(handles)} entries; name one from a registry instead")
        return next(iter(handles.values()))
    registry = registry if registry is not None else _default_registry()
    if registry is not None and Path(registry).is_file():
        handles = load_registry(registry)
        if name_or_path in handles:
            return handles[name_or_path]
    raise UnknownModel(f"unknown model {name_or_path!r}")


def save_pretrained(handle: ModelHandle, path) -> None:
    try:
        Path(path).write_text(json.dumps([handle.to_entry()], indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def finetune(handle: ModelHandle, *args, **kwargs):
    raise Unsupported("finetuning out of scope")


# -- wire format -----------------------------------------------------------

def build_payload(handle: ModelHandle, request: ModelRequest) -> dict:
    """Chat-completion request body, with the positive-temperature substitution applied."""
    cfg = request.config
    payload = {
        "model": handle.model or handle.name,
        "messages": [{"role": "user", "content": request.prompt}],
        "temperature": cfg.effective_temperature(handle.requires_positive_temperature),
        "max_tokens": cfg.max_output_tokens,
    }
    if cfg.seed is not None:
        payload["seed"] = cfg.seed
    return payload


def _url(endpoint: str, route: str) -> str:
    base = endpoint.rstrip("/")
    if not base.endswith("/v1"):
        base += "/v1"
    return base + route


def urllib_transport(method, url, headers, body, timeout):
    """Default transport: returns (status, body bytes)."""
    req = urllib.request.Request(url, data=body, headers=headers, method=method)
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read()
    except (socket.timeout, TimeoutError) as exc:
        raise Timeout(f"{url} timed out after {timeout}s") from exc
    except urllib.error.URLError as exc:
        if isinstance(exc.reason, (socket.timeout, TimeoutError)):
            raise Timeout(f"{url} timed out after {timeout}s") from exc
        raise BackendError(f"cannot reach {url}: {exc.reason}") from exc


def _post_json(handle, route, payload, transport=None, backoff_s=None):
    transport = transport or urllib_transport
    backoff_s = RETRY_BACKOFF_S if backoff_s is None else backoff_s
    headers = {"Content-Type": "application/json"}
    if handle.api_key_env and os.environ.get(handle.api_key_env):
        headers["Authorization"] = f"Bearer {os.environ[handle.api_key_env]}"
    body = json.dumps(payload).encode("utf-8")
    url = _url(handle.endpoint, route)
    for attempt in range(2):
        status, raw = transport("POST", url, headers, body, handle.timeout_s)
        if status in RETRY_STATUSES and attempt == 0:
            log.warning("%s returned %s; retrying once in %.1fs", url, status, backoff_s)
            time.sleep(backoff_s)
            continue
        break
    if not 200 <= status < 300:
        raise HttpError(status, raw.decode("utf-8", "replace"))
    try:
        return json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedResponse(f"non-JSON body from {url}") from exc


# -- mocks -----------------------------------------------------------------

def _truncate(text: str, max_tokens: int) -> str:
    """Cut after the ``max_tokens``-th whitespace token, keeping original spacing."""
    spans = [m.end() for m in re.finditer(r"\S+", text)]
    if len(spans) <= max_tokens:
        return text
    return text[:spans[max_tokens - 1]]


@functools.lru_cache(maxsize=32)
def _classifier_table(path: str) -> dict:
    try:
        table = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read classifier table {path}: {exc}") from exc
    if isinstance(table, list):
        table = {row["prompt"]: row["answer"] for row in table}
    return table


def _mock_text(handle: ModelHandle, prompt: str, seed) -> str:
    behaviour, _, arg = handle.mock.partition(":")
    if behaviour == "echo":
        return prompt
    if behaviour == "const":
        return arg
    if behaviour == "classifier":
        table = _classifier_table(arg)
        return table.get(prompt, table.get("__default__", ""))
    if behaviour == "choice":
        if seed is None:
            raise ValueError("mock:choice needs a seed in the sampling config")
        options = arg.split("|")
        h = fnv1a64(prompt.encode("utf-8") + b"\x00" + str(seed).encode())
        return options[h % len(options)]
    raise UnknownModel(f"unknown mock behaviour {handle.mock!r}")


@functools.lru_cache(maxsize=65536)
def _token_vector(token: str, dim: int):
    rng = SplitMix64(fnv1a64(token.encode("utf-8")))
    return tuple(2.0 * rng.uniform() - 1.0 for _ in range(dim))


def mock_embedding(text: str, dim: int = DEFAULT_EMBEDDING_DIM) -> np.ndarray:
    tokens = text.split() or [""]
    vec = np.zeros(dim)
    for tok in tokens:
        vec += _token_vector(tok, dim)
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


# -- public entry points ---------------------------------------------------

def complete(handle: ModelHandle, request: ModelRequest, transport=None, backoff_s=None) -> ModelResponse:
    """Run one completion. The request body is built even for mocks and kept on the response."""
    payload = build_payload(handle, request)
    cfg = request.config
    if handle.kind is ModelKind.Mock:
        text = _truncate(_mock_text(handle, request.prompt, cfg.seed), cfg.max_output_tokens)
        return ModelResponse(text, len(request.prompt.split()), len(text.split()), 0.0, payload)

    start = time.perf_counter()
    data = _post_json(handle, "/chat/completions", payload, transport, backoff_s)
    latency_ms = (time.perf_counter() - start) * 1000.0
    try:
        text = data["choices"][0]["message"]["content"] or ""
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse("response has no choices[0].message.content") from exc
    usage = data.get("usage") or {}
    output_tokens = int(usage.get("completion_tokens", len(text.split())))
    prompt_tokens = int(usage.get("prompt_tokens", len(request.prompt.split())))
    if output_tokens > cfg.max_output_tokens:
        raise MalformedResponse(f"{output_tokens} output tokens exceed max_tokens={cfg.max_output_tokens}")
    return ModelResponse(text, prompt_tokens, output_tokens, latency_ms, payload)


def embed(handle: ModelHandle, text: str, transport=None, backoff_s=None) -> np.ndarray:
    if handle.kind is ModelKind.Mock:
        return mock_embedding(text, handle.embedding_dim)
    data = _post_json(handle, "/embeddings", {"model": handle.model or handle.name, "input": text}, transport, backoff_s)
    try:
        vec = np.asarray(data["data"][0]["embedding"], dtype=float)
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise MalformedResponse("response has no data[0].embedding") from exc
    if vec.shape != (handle.embedding_dim,):
        raise MalformedResponse(f"embedding has shape {vec.shape}, expected ({handle.embedding_dim},)")
    return vec
