"""Inference pipelines: code similarity, parallelism detection and OpenMP Q&A."""

from __future__ import annotations

import enum
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from . import models
from .datasets import Dataset, Schema, validate_record
from .errors import BackendError, SchemaError, SchemaMismatch
from .prompts import (  # noqa: F401  (re-exported)
    build_parallelism_prompt, build_qa_prompt, build_similarity_prompt, estimate_tokens,
)
from .retrieval import ContextAugmenter


class Task(str, enum.Enum):
    CodeSimilarity = "CodeSimilarity"
    ParallelismDetection = "ParallelismDetection"
    OpenMPQA = "OpenMPQA"

    @classmethod
    def parse(cls, name) -> "Task":
        if isinstance(name, cls):
            return name
        key = str(name).lower().replace("-", "").replace("_", "")
        for task, aliases in _TASK_ALIASES.items():
            if key in aliases:
                return task
        raise ValueError(f"unknown task {name!r}; expected similarity, parallelism or qa")


_TASK_ALIASES = {
    Task.CodeSimilarity: {"codesimilarity", "similarity", "sim"},
    Task.ParallelismDetection: {"parallelismdetection", "parallelism", "par"},
    Task.OpenMPQA: {"openmpqa", "qa", "ompqa"},
}

TASK_SCHEMA = {
    Task.CodeSimilarity: Schema.SimilarityPairs,
    Task.ParallelismDetection: Schema.ParallelismLabel,
    Task.OpenMPQA: Schema.QA,
}

# (positive, negative) markers; the second pair is only consulted when the first finds nothing.
MARKERS = {
    Task.CodeSimilarity: ((("1",), ("0",)), (("yes",), ("no",))),
    Task.ParallelismDetection: ((("yes",), ("no",)), (("1",), ("0",))),
}


class ParseStatus(str, enum.Enum):
    Parsed = "Parsed"
    Fallback = "Fallback"
    Unparseable = "Unparseable"


@dataclass(frozen=True)
class Verdict:
    label: int
    raw_text: str
    parse_status: ParseStatus

    def to_dict(self):
        return {"prediction": self.label, "raw_text": self.raw_text, "parse_status": self.parse_status.value}


@dataclass(frozen=True)
class Answer:
    text: str
    context_chunks_used: int = 0
    prompt_tokens_estimate: int = 0

    def to_dict(self):
        return {
            "answer": self.text,
            "context_chunks_used": self.context_chunks_used,
            "prompt_tokens_estimate": self.prompt_tokens_estimate,
        }


@dataclass(frozen=True)
class BatchFailure:
    record_id: object
    error: str
    message: str

    def to_dict(self):
        return {"error": self.error, "message": self.message}


@dataclass(frozen=True)
class PipelineSpec:
    task: Task
    model: models.ModelHandle
    config: models.SamplingConfig = field(default_factory=models.SamplingConfig)
    augmenter: Optional[ContextAugmenter] = None

    def __post_init__(self):
        object.__setattr__(self, "task", Task.parse(self.task))
        if self.augmenter is not None and self.task is not Task.OpenMPQA:
            raise ValueError("context augmentation only applies to the OpenMPQA task")


_WORD = re.compile(r"[a-z0-9]+")


def _scan(words, positive, negative):
    for w in words:
        if w in positive:
            return 1
        if w in negative:
            return 0
    return None


def parse_binary_answer(text: str, positive_markers=("1", "yes"), negative_markers=("0", "no"),
                        fallback_markers=None) -> Verdict:
    """Map free text to a 0/1 verdict.

    Words are scanned case-insensitively from the start and the first
    marker wins. Text with no marker is Unparseable and counts as label 0.
    """
    words = _WORD.findall(text.lower())
    pos = {m.lower() for m in positive_markers}
    neg = {m.lower() for m in negative_markers}
    label = _scan(words, pos, neg)
    if label is not None:
        return Verdict(label, text, ParseStatus.Parsed)
    if fallback_markers:
        fpos, fneg = ({m.lower() for m in ms} for ms in fallback_markers)
        label = _scan(words, fpos, fneg)
        if label is not None:
            return Verdict(label, text, ParseStatus.Fallback)
    return Verdict(0, text, ParseStatus.Unparseable)


def build_prompt(task, record) -> str:
    task = Task.parse(task)
    if task is Task.CodeSimilarity:
        return build_similarity_prompt(record["code_1"], record["code_2"])
    if task is Task.ParallelismDetection:
        return build_parallelism_prompt(record["code"])
    return build_qa_prompt(record["question"])


def run(spec: PipelineSpec, record: dict, transport=None):
    """Prompt the model with one record and parse its reply into a Verdict or Answer."""
    try:
        validate_record(record, TASK_SCHEMA[spec.task])
    except SchemaError as exc:
        raise SchemaMismatch(f"record does not fit task {spec.task.value}: {exc}") from None

    chunks_used = 0
    if spec.task is Task.OpenMPQA and spec.augmenter is not None:
        chunks, prompt = spec.augmenter(record["question"])
        chunks_used = len(chunks)
    else:
        prompt = build_prompt(spec.task, record)

    try:
        response = models.complete(spec.model, models.ModelRequest(prompt, spec.config), transport=transport)
    except BackendError as exc:
        exc.record_id = record.get("id")
        raise

    if spec.task is Task.OpenMPQA:
        return Answer(response.text, chunks_used, estimate_tokens(prompt))
    (pos, neg), fallback = MARKERS[spec.task]
    return parse_binary_answer(response.text, pos, neg, fallback)


def run_batch(spec: PipelineSpec, dataset, parallelism: int = 1, transport=None) -> list:
    """Run every record; results keep dataset order and failures become BatchFailure entries."""
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    records = list(dataset.records if isinstance(dataset, Dataset) else dataset)

    def one(record):
        try:
            return run(spec, record, transport=transport)
        except Exception as exc:  # isolate per-item failures
            return BatchFailure(record.get("id") if isinstance(record, dict) else None, type(exc).__name__, str(exc))

    if parallelism == 1:
        return [one(r) for r in records]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, records))
