"""Chunk documents, embed them into a vector store, and inject the best
matches into prompts under a token budget.

Retrieval is an exact linear scan over cosine similarity; stores here hold
a few thousand chunks at most.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import models
from .errors import DimensionMismatch, DuplicateChunk, EmptyStore, InvalidChunkParams, IoError
from .prompts import build_qa_prompt, estimate_tokens, fit_chunks

log = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 512
DEFAULT_OVERLAP = 64
DEFAULT_K = 4


@dataclass(frozen=True)
class Chunk:
    id: int
    text: str
    source: str
    char_span: tuple
    token_count: int


def chunk_document(text: str, chunk_size: int = DEFAULT_CHUNK_SIZE, overlap: int = DEFAULT_OVERLAP,
                   source: str = "doc", start_id: int = 0) -> list:
    """Whitespace-token windows of ``chunk_size`` starting every ``chunk_size - overlap`` tokens.

    A window starts at every stride position before the end of the text, so
    the tail windows may be short.
    """
    if not (0 <= overlap < chunk_size):
        raise InvalidChunkParams(f"need 0 <= overlap < chunk_size, got overlap={overlap}, chunk_size={chunk_size}")
    words = [m.span() for m in re.finditer(r"\S+", text)]
    stride = chunk_size - overlap
    chunks = []
    for start in range(0, len(words), stride):
        window = words[start:start + chunk_size]
        s, e = window[0][0], window[-1][1]
        body = text[s:e]
        chunks.append(Chunk(start_id + len(chunks), body, source, (s, e), estimate_tokens(body)))
    return chunks


@dataclass(frozen=True)
class RetrievalResult:
    chunk: Chunk
    score: float


@dataclass
class VectorStore:
    dim: int
    chunks: list = field(default_factory=list)
    vectors: np.ndarray = None
    embedder: Optional[str] = None

    def __post_init__(self):
        if self.vectors is None:
            self.vectors = np.zeros((0, self.dim))

    def __len__(self):
        return len(self.chunks)

    def add(self, chunk: Chunk, vector) -> None:
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (self.dim,):
            raise DimensionMismatch(f"vector of shape {vector.shape} in a store of dim {self.dim}")
        if any(c.id == chunk.id for c in self.chunks):
            raise DuplicateChunk(f"chunk id {chunk.id} already indexed")
        self.chunks.append(chunk)
        self.vectors = np.vstack([self.vectors, vector[None, :]])

    def next_id(self) -> int:
        return max((c.id for c in self.chunks), default=-1) + 1

    def dumps(self) -> str:
        header = {"dim": self.dim, "count": len(self.chunks)}
        if self.embedder:
            header["embedder"] = self.embedder
        lines = [json.dumps(header)]
        for chunk, vec in zip(self.chunks, self.vectors):
            lines.append(json.dumps({
                "chunk_id": chunk.id, "text": chunk.text, "source": chunk.source,
                "span": list(chunk.char_span), "vector": [float(x) for x in vec],
            }, ensure_ascii=False))
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        try:
            Path(path).write_text(self.dumps(), encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write store {path}: {exc}") from exc

    @classmethod
    def load(cls, path) -> "VectorStore":
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise IoError(f"cannot read store {path}: {exc}") from exc
        header = json.loads(lines[0])
        store = cls(header["dim"], embedder=header.get("embedder"))
        rows = [json.loads(line) for line in lines[1:] if line.strip()]
        for row in rows:
            text = row["text"]
            store.chunks.append(Chunk(row["chunk_id"], text, row["source"], tuple(row["span"]), estimate_tokens(text)))
        if rows:
            store.vectors = np.array([row["vector"] for row in rows], dtype=float)
        if len(store.chunks) != header["count"]:
            raise IoError(f"store header says {header['count']} entries, found {len(store.chunks)}")
        return store


def index(store: VectorStore, chunks, embedder: models.ModelHandle) -> None:
    """Embed ``chunks`` in order and append them to ``store``."""
    if embedder.embedding_dim != store.dim:
        raise DimensionMismatch(f"embedder dim {embedder.embedding_dim} != store dim {store.dim}")
    seen = {c.id for c in store.chunks}
    for chunk in chunks:
        if chunk.id in seen:
            raise DuplicateChunk(f"chunk id {chunk.id} already indexed")
        seen.add(chunk.id)
    vecs = [models.embed(embedder, c.text) for c in chunks]
    for vec in vecs:
        if np.shape(vec) != (store.dim,):
            raise DimensionMismatch(f"embedding of shape {np.shape(vec)} in a store of dim {store.dim}")
    store.chunks.extend(chunks)
    if vecs:
        store.vectors = np.vstack([store.vectors, np.array(vecs)])


def cosine_scores(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1) * np.linalg.norm(query)
    dots = matrix @ query
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = np.where(norms > 0, dots / np.where(norms > 0, norms, 1.0), 0.0)
    return np.clip(scores, -1.0, 1.0)


def top_k(matrix: np.ndarray, query: np.ndarray, k: int) -> list:
    """(row, score) of the k best rows; ties keep insertion order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = cosine_scores(matrix, query)
    order = np.argsort(-scores, kind="stable")[:k]
    return [(int(i), float(scores[i])) for i in order]


def retrieve(store: VectorStore, query: str, embedder: models.ModelHandle, k: int = DEFAULT_K) -> list:
    if len(store) == 0:
        raise EmptyStore("vector store is empty")
    qvec = models.embed(embedder, query)
    return [RetrievalResult(store.chunks[i], s) for i, s in top_k(store.vectors, qvec, k)]


def augment(question: str, store: VectorStore, embedder: models.ModelHandle, k: int = DEFAULT_K,
            token_budget: int = 3840):
    """Retrieve up to ``k`` chunks and inject the prefix that fits ``token_budget``.

    Returns ``(chunks_used, prompt)``. When the bare question already exceeds
    the budget no chunk is added and a warning is logged.
    """
    results = retrieve(store, question, embedder, k) if len(store) else []
    texts = [r.chunk.text for r in results]
    used = fit_chunks(question, texts, token_budget)
    prompt = build_qa_prompt(question, texts[:used])
    if used == 0 and estimate_tokens(prompt) > token_budget:
        log.warning("question alone needs %d tokens, over the budget of %d", estimate_tokens(prompt), token_budget)
    return [r.chunk for r in results[:used]], prompt


@dataclass(frozen=True)
class ContextAugmenter:
    store: VectorStore
    embedder: models.ModelHandle
    k: int = DEFAULT_K
    token_budget: int = 3840

    def __call__(self, question: str):
        return augment(question, self.store, self.embedder, self.k, self.token_budget)


def ingest(paths, embedder: models.ModelHandle, chunk_size: int = DEFAULT_CHUNK_SIZE,
           overlap: int = DEFAULT_OVERLAP) -> VectorStore:
    """Chunk and index plain-text files into a new store."""
    store = VectorStore(embedder.embedding_dim, embedder=embedder.name)
    for path in paths:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot read {path}: {exc}") from exc
        chunks = chunk_document(text, chunk_size, overlap, source=path.name, start_id=store.next_id())
        index(store, chunks, embedder)
    return store
