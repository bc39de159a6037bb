"""Evaluation runs, reports and leaderboards.

A run turns pipeline results into *prediction rows* (one JSON object per
input record, carrying the gold label or reference answer), scores them,
and wraps the scores in an :class:`EvalReport`. Reports are deterministic
for a fixed seed when the backends are mocks; wall time and peak memory
live in a separate ``resources`` block that is left out of the canonical
JSON.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import psutil

from . import datasets, models, pipelines
from .errors import EmptyInput, SchemaMismatch
from .metrics import ClassificationCounts, bleu, codebleu, rouge_l
from .pipelines import BatchFailure, Task
from .tokenizer import CodeSnippet, Language

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1

CLASSIFICATION_METRICS = ("Precision", "Recall", "F1")
QA_METRICS = ("BLEU", "ROUGE_L_R", "ROUGE_L_P", "ROUGE_L_F1", "CodeBLEU")
PRIMARY_METRIC = {
    Task.CodeSimilarity: "F1",
    Task.ParallelismDetection: "F1",
    Task.OpenMPQA: "ROUGE_L_F1",
}
METRIC_TITLES = {
    "Precision": "Precision", "Recall": "Recall", "F1": "F1", "BLEU": "BLEU",
    "ROUGE_L_R": "ROUGE-L R", "ROUGE_L_P": "ROUGE-L P", "ROUGE_L_F1": "ROUGE-L F1", "CodeBLEU": "CodeBLEU",
}


def metrics_for(task):
    return QA_METRICS if Task.parse(task) is Task.OpenMPQA else CLASSIFICATION_METRICS


# -- prediction rows -------------------------------------------------------

def prediction_rows(task, records, results) -> list:
    """Join records with pipeline results into serializable rows."""
    task = Task.parse(task)
    rows = []
    for rec, res in zip(records, results):
        if task is Task.OpenMPQA:
            row = {
                "id": rec["id"], "category": rec["category"], "question": rec["question"],
                "reference_answer": rec["reference_answer"],
            }
        else:
            gold = rec["label"] if task is Task.CodeSimilarity else rec["parallelizable"]
            row = {"id": rec["id"], "label": gold}
        if isinstance(res, BatchFailure):
            row.update(res.to_dict())
            if task is Task.OpenMPQA:
                row.update({"answer": "", "context_chunks_used": 0, "prompt_tokens_estimate": 0})
            else:
                row.update({"prediction": 0, "raw_text": "", "parse_status": "Error"})
        else:
            row.update(res.to_dict())
        rows.append(row)
    return rows


_FENCE = re.compile(r"```[a-zA-Z+]*\n(.*?)```", re.DOTALL)


def extract_code(text: str) -> str:
    """First fenced code block in ``text``, or the whole text."""
    m = _FENCE.search(text)
    return m.group(1) if m else text


def score_rows(task, rows):
    """Per-example scores and aggregates for prediction rows."""
    task = Task.parse(task)
    if not rows:
        raise EmptyInput("no prediction rows to score")
    failures = sum(1 for r in rows if "error" in r)
    if task is not Task.OpenMPQA:
        counts = ClassificationCounts.from_labels([r["prediction"] for r in rows], [r["label"] for r in rows])
        aggregates = {
            "Precision": counts.precision, "Recall": counts.recall, "F1": counts.f1,
            "tp": counts.tp, "fp": counts.fp, "fn": counts.fn, "tn": counts.tn,
            "unparseable": sum(1 for r in rows if r.get("parse_status") == "Unparseable"),
            "failures": failures,
        }
        per_example = [dict(r, correct=int(r["prediction"] == r["label"])) for r in rows]
        return per_example, aggregates

    per_example = []
    code_scores = []
    for r in rows:
        rl = rouge_l(r["answer"], r["reference_answer"])
        scored = dict(r, BLEU=bleu(r["answer"], [r["reference_answer"]]),
                      ROUGE_L_R=rl["recall"], ROUGE_L_P=rl["precision"], ROUGE_L_F1=rl["f1"])
        if r.get("category") == "Examples":
            cand = CodeSnippet(extract_code(r["answer"]), Language.C)
            ref = CodeSnippet(extract_code(r["reference_answer"]), Language.C)
            scored["CodeBLEU"] = codebleu(cand, ref)
            code_scores.append(scored["CodeBLEU"])
        per_example.append(scored)
    n = len(per_example)
    aggregates = {m: sum(p[m] for p in per_example) / n for m in QA_METRICS if m != "CodeBLEU"}
    aggregates["CodeBLEU"] = sum(code_scores) / len(code_scores) if code_scores else None
    aggregates["failures"] = failures
    return per_example, aggregates


# -- reports ---------------------------------------------------------------

@dataclass
class EvalReport:
    task: Task
    model: str
    dataset: str
    per_example: list
    aggregates: dict
    sampling: dict
    seed: Optional[int]
    error: Optional[str] = None
    resources: dict = field(default_factory=dict)

    @property
    def n_examples(self):
        return len(self.per_example)

    def to_dict(self, include_resources=False) -> dict:
        d = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "task": self.task.value,
            "model": self.model,
            "dataset": self.dataset,
            "seed": self.seed,
            "sampling": self.sampling,
            "n_examples": self.n_examples,
            "aggregates": self.aggregates,
            "error": self.error,
            "per_example": self.per_example,
        }
        if include_resources:
            d["resources"] = self.resources
        return d

    @classmethod
    def from_dict(cls, d) -> "EvalReport":
        return cls(
            Task.parse(d["task"]), d["model"], d["dataset"], d["per_example"], d["aggregates"],
            d.get("sampling", {}), d.get("seed"), d.get("error"), d.get("resources", {}),
        )


def dumps_reports(reports, include_resources=False) -> str:
    return json.dumps([r.to_dict(include_resources) for r in reports], indent=2, ensure_ascii=False) + "\n"


def load_reports(path) -> list:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = [data]
    return [EvalReport.from_dict(d) for d in data]


class PeakMemory:
    """Context manager sampling this process's resident set size every ``interval`` seconds."""

    def __init__(self, interval=0.1):
        self.interval = interval
        self.peak = 0
        self._proc = psutil.Process()
        self._stop = threading.Event()

    def _sample(self):
        self.peak = max(self.peak, self._proc.memory_info().rss)

    def _loop(self):
        while not self._stop.wait(self.interval):
            self._sample()

    def __enter__(self):
        self._sample()
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._stop.set()
        self._thread.join()
        self._sample()
        return False


def evaluate_model(task, model, dataset, config=None, seed=42, augmenter=None, parallelism=1,
                   transport=None) -> EvalReport:
    """Run one model over ``dataset`` and score it."""
    task = Task.parse(task)
    config = dataclasses.replace(config or models.SamplingConfig(), seed=seed)
    spec = pipelines.PipelineSpec(task, model, config, augmenter)
    with PeakMemory() as mem:
        start = time.perf_counter()
        results = pipelines.run_batch(spec, dataset, parallelism, transport=transport)
        rows = prediction_rows(task, dataset.records, results)
        per_example, aggregates = score_rows(task, rows)
        wall = time.perf_counter() - start
    return EvalReport(
        task, model.name, dataset.provenance, per_example, aggregates, config.to_dict(), seed,
        resources={"wall_time_s": wall, "peak_memory_bytes": mem.peak},
    )


def compute(task, model_list, data_files, config=None, seed=42, augmenter=None, parallelism=1,
            transport=None) -> list:
    """Evaluate each model in turn under the same sampling config and seed.

    ``model_list`` holds handles or names; ``data_files`` is a Dataset or a
    JSONL path in the task's schema. A model that fails outright yields a
    report with ``error`` set instead of aborting the others.
    """
    task = Task.parse(task)
    if isinstance(data_files, datasets.Dataset):
        ds = data_files
        if ds.schema is not pipelines.TASK_SCHEMA[task]:
            raise SchemaMismatch(f"{ds.schema.value} dataset given for task {task.value}")
    else:
        ds = datasets.load(data_files, pipelines.TASK_SCHEMA[task])
    config = config or models.SamplingConfig()
    reports = []
    for m in model_list:
        name = m if isinstance(m, str) else m.name
        try:
            handle = models.from_pretrained(m) if isinstance(m, str) else m
            reports.append(evaluate_model(task, handle, ds, config, seed, augmenter, parallelism, transport))
        except Exception as exc:  # one broken model must not sink the others
            log.error("model %s failed: %s", name, exc)
            reports.append(EvalReport(task, name, ds.provenance, [], {}, dataclasses.replace(config, seed=seed).to_dict(),
                                      seed, error=f"{type(exc).__name__}: {exc}"))
    return reports


# -- leaderboards ----------------------------------------------------------

@dataclass
class Leaderboard:
    task: Task
    primary_metric: str
    columns: tuple
    rows: list  # (model, aggregates, error)

    def to_markdown(self) -> str:
        head = ["Rank", "Model"] + [METRIC_TITLES.get(c, c) for c in self.columns]
        lines = [
            f"## {self.task.value} leaderboard (ranked by {METRIC_TITLES.get(self.primary_metric, self.primary_metric)})",
            "",
            "| " + " | ".join(head) + " |",
            "|" + "|".join(["---:", ":---"] + ["---:"] * len(self.columns)) + "|",
        ]
        for rank, (model, aggs, _err) in enumerate(self.rows, start=1):
            cells = [str(rank), model] + [_fmt(aggs.get(c)) for c in self.columns]
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "model"] + list(self.columns))
        for rank, (model, aggs, _err) in enumerate(self.rows, start=1):
            w.writerow([rank, model] + [_fmt(aggs.get(c)) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [
            {"rank": rank, "model": model, "metrics": {c: aggs.get(c) for c in self.columns}, "error": err}
            for rank, (model, aggs, err) in enumerate(self.rows, start=1)
        ]
        body = {"task": self.task.value, "primary_metric": self.primary_metric, "rows": rows}
        return json.dumps(body, indent=2) + "\n"

    def render(self, fmt="md") -> str:
        return {"md": self.to_markdown, "markdown": self.to_markdown, "csv": self.to_csv, "json": self.to_json}[fmt]()


def _fmt(v):
    """Scores shown x100 with one decimal; missing values as n/a."""
    if v is None:
        return "n/a"
    return f"{100.0 * v:.1f}"


def leaderboard(reports, primary_metric=None) -> Leaderboard:
    """Rank reports by ``primary_metric`` (descending), ties by model name."""
    if not reports:
        raise ValueError("no reports to rank")
    task = reports[0].task
    if any(r.task is not task for r in reports):
        raise ValueError("reports mix different tasks")
    primary = primary_metric or PRIMARY_METRIC[task]
    columns = metrics_for(task)
    if primary not in columns:
        raise ValueError(f"metric {primary!r} not reported for {task.value}; choose from {columns}")

    def key(r):
        v = r.aggregates.get(primary)
        return (-(v if v is not None else -1.0), r.model)

    rows = [(r.model, r.aggregates, r.error) for r in sorted(reports, key=key)]
    return Leaderboard(task, primary, columns, rows)
