"""Schema-checked JSONL datasets and their deterministic transforms.

Four schemas cover the HPC tasks:

============================  ===================================================
CodeClassification            ``id, code, problem_label:int``
ParallelismLabel              ``id, code, parallelizable:0|1, directive?``
SimilarityPairs               ``id, code_1, code_2, label:0|1``
QA                            ``id, category, question, reference_answer``
============================  ===================================================

Records are plain dicts; extra keys are kept. Every transform returns a
new :class:`Dataset` and leaves its input untouched.
"""

from __future__ import annotations

import enum
import json
import math
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from ._rng import SplitMix64
from .errors import (
    InsufficientData, InvalidPartition, IoError, MissingField, OutOfRangeScore, SchemaError,
)


class Schema(str, enum.Enum):
    CodeClassification = "CodeClassification"
    ParallelismLabel = "ParallelismLabel"
    SimilarityPairs = "SimilarityPairs"
    QA = "QA"

    @classmethod
    def parse(cls, name) -> "Schema":
        if isinstance(name, cls):
            return name
        key = str(name).lower().replace("-", "").replace("_", "")
        for member in cls:
            if key == member.value.lower() or key in _SCHEMA_ALIASES[member.value]:
                return member
        raise ValueError(f"unknown schema {name!r}; expected one of {[m.value for m in cls]}")


_SCHEMA_ALIASES = {
    "CodeClassification": {"classification", "poj"},
    "ParallelismLabel": {"parallelism", "drb"},
    "SimilarityPairs": {"similarity", "pairs"},
    "QA": {"ompqa", "openmpqa"},
}

QA_CATEGORIES = ("Basics", "Examples", "Compilers", "Benchmarks")


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_id(v):
    return isinstance(v, str) or _is_int(v)


def _is_str(v):
    return isinstance(v, str)


def _is_binary(v):
    return _is_int(v) and v in (0, 1)


def _is_category(v):
    return v in QA_CATEGORIES


# (field, check, required)
SCHEMA_FIELDS = {
    Schema.CodeClassification: [("id", _is_id, True), ("code", _is_str, True), ("problem_label", _is_int, True)],
    Schema.ParallelismLabel: [
        ("id", _is_id, True), ("code", _is_str, True), ("parallelizable", _is_binary, True),
        ("directive", lambda v: v is None or isinstance(v, str), False),
    ],
    Schema.SimilarityPairs: [
        ("id", _is_id, True), ("code_1", _is_str, True), ("code_2", _is_str, True), ("label", _is_binary, True),
    ],
    Schema.QA: [
        ("id", _is_id, True), ("category", _is_category, True), ("question", _is_str, True),
        ("reference_answer", _is_str, True),
    ],
}


def validate_record(record, schema, line_no=0):
    """Raise SchemaError naming the first missing or mistyped field."""
    if not isinstance(record, dict):
        raise SchemaError(line_no, "<record>")
    for name, check, required in SCHEMA_FIELDS[Schema.parse(schema)]:
        if name not in record:
            if required:
                raise SchemaError(line_no, name)
            continue
        if not check(record[name]):
            raise SchemaError(line_no, name)


@dataclass(frozen=True)
class Dataset:
    schema: Schema
    records: tuple
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "schema", Schema.parse(self.schema))
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def derive(self, records, suffix=""):
        return Dataset(self.schema, records, self.provenance + suffix)

    def dumps(self) -> str:
        return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in self.records)


@dataclass(frozen=True)
class SplitSpec:
    partition: tuple = (0.8, 0.1, 0.1)
    seed: int = 42

    def __post_init__(self):
        if len(self.partition) != 3:
            raise InvalidPartition("partition needs exactly three fractions")
        if any(not (0.0 <= f <= 1.0) for f in self.partition):
            raise InvalidPartition(f"fractions must lie in [0, 1]: {self.partition}")
        if sum(self.partition) > 1.0 + 1e-9:
            raise InvalidPartition(f"fractions sum to more than 1: {self.partition}")


def load(path, schema) -> Dataset:
    """Read a JSONL file (one record per line), validating every record."""
    schema = Schema.parse(schema)
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    records = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            raise SchemaError(line_no, "<json>") from None
        validate_record(record, schema, line_no)
        records.append(record)
    return Dataset(schema, records, str(path))


def data_file(name: str) -> Path:
    """Path of a file bundled with the package (toy datasets, sample notes)."""
    return Path(str(resources.files("plpbench") / "data" / name))


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def save(ds: Dataset, path) -> Path:
    """Write ``ds`` as JSONL plus a ``<stem>.meta.json`` sidecar."""
    path = Path(path)
    meta = {"schema": ds.schema.value, "count": len(ds), "provenance": ds.provenance}
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(ds.dumps(), encoding="utf-8")
        meta_path(path).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def shuffle(ds: Dataset, seed: int = 42) -> Dataset:
    order = SplitMix64(seed).permutation(len(ds))
    return ds.derive([ds.records[i] for i in order])


def _floor(n, frac):
    # guard against 0.29 * 100 == 28.999999999999996
    return int(math.floor(n * frac + 1e-9))


def split_sizes(n: int, partition) -> tuple:
    """Train and valid get floor(n*f); test takes the remainder when the
    fractions sum to one, floor(n*f_test) otherwise."""
    f_train, f_valid, f_test = partition
    n_train = _floor(n, f_train)
    n_valid = min(_floor(n, f_valid), n - n_train)
    if abs(f_train + f_valid + f_test - 1.0) <= 1e-9:
        n_test = n - n_train - n_valid
    else:
        n_test = min(_floor(n, f_test), n - n_train - n_valid)
    return n_train, n_valid, n_test


def split(ds: Dataset, spec: Optional[SplitSpec] = None, **kwargs):
    """Shuffle with ``spec.seed`` and cut into (train, valid, test)."""
    if spec is None:
        spec = SplitSpec(**kwargs)
    n_train, n_valid, n_test = split_sizes(len(ds), spec.partition)
    shuffled = shuffle(ds, spec.seed).records
    a, b = n_train, n_train + n_valid
    return (
        ds.derive(shuffled[:a], "#train"),
        ds.derive(shuffled[a:b], "#valid"),
        ds.derive(shuffled[b:b + n_test], "#test"),
    )


def sort(ds: Dataset, key: str, ascending: bool = True) -> Dataset:
    """Stable sort on ``key``; equal keys keep their order in both directions."""
    if any(key not in r for r in ds.records):
        raise MissingField(key)
    return ds.derive(sorted(ds.records, key=lambda r: r[key], reverse=not ascending))


def make_similarity_pairs(ds: Dataset, n_pairs: int, balance: float = 0.5, seed: int = 42) -> Dataset:
    """Sample labelled code pairs from a CodeClassification dataset.

    A pair is positive exactly when both snippets share ``problem_label``.
    ``round(n_pairs * balance)`` positives are drawn, the rest negatives,
    by seeded rejection sampling of index pairs (i != j). Pairs may repeat.
    Gives up with InsufficientData after ``100 * n_pairs`` draws.
    """
    if ds.schema is not Schema.CodeClassification:
        raise ValueError("make_similarity_pairs needs a CodeClassification dataset")
    if not 0.0 <= balance <= 1.0:
        raise ValueError("balance must lie in [0, 1]")
    recs = ds.records
    n = len(recs)
    if n < 2:
        raise InsufficientData("need at least two records")
    want_pos = int(math.floor(n_pairs * balance + 0.5))
    want_neg = n_pairs - want_pos
    counts = Counter(r["problem_label"] for r in recs)
    if want_neg and len(counts) < 2:
        raise InsufficientData("negative pairs need at least two distinct labels")
    if want_pos and max(counts.values()) < 2:
        raise InsufficientData("positive pairs need a label shared by two records")

    rng = SplitMix64(seed)
    out = []
    attempts = 0
    while want_pos or want_neg:
        attempts += 1
        if attempts > 100 * n_pairs:
            raise InsufficientData(f"could not draw {n_pairs} pairs in {100 * n_pairs} attempts")
        i = rng.below(n)
        j = rng.below(n - 1)
        if j >= i:
            j += 1
        a, b = recs[i], recs[j]
        label = int(a["problem_label"] == b["problem_label"])
        if label and not want_pos:
            continue
        if not label and not want_neg:
            continue
        if label:
            want_pos -= 1
        else:
            want_neg -= 1
        out.append({
            "id": f"{a['id']}|{b['id']}",
            "code_1": a["code"],
            "code_2": b["code"],
            "label": label,
            "id_1": a["id"],
            "id_2": b["id"],
        })
    return Dataset(Schema.SimilarityPairs, out, ds.provenance + "#pairs")


def binarize_similarity_scores(score_table, threshold: float = 0.5) -> list:
    """Turn graded similarity scores into 0/1 labels (score >= threshold)."""
    rows = []
    for row in score_table:
        score = row["score"]
        if not 0.0 <= score <= 1.0:
            raise OutOfRangeScore(f"score {score!r} for ({row.get('id_1')}, {row.get('id_2')}) outside [0, 1]")
        rows.append({"id_1": row["id_1"], "id_2": row["id_2"], "score": score, "label": int(score >= threshold)})
    return rows


def pairs_from_scores(codes: Dataset, score_table, threshold: float = 0.5) -> Dataset:
    """SimilarityPairs dataset from a code collection and its score table."""
    by_id = {r["id"]: r for r in codes.records}
    out = []
    for row in binarize_similarity_scores(score_table, threshold):
        try:
            a, b = by_id[row["id_1"]], by_id[row["id_2"]]
        except KeyError as exc:
            raise MissingField(f"id {exc.args[0]!r}") from None
        out.append({
            "id": f"{row['id_1']}|{row['id_2']}", "code_1": a["code"], "code_2": b["code"],
            "label": row["label"], "score": row["score"],
        })
    return Dataset(Schema.SimilarityPairs, out, codes.provenance + "#scored-pairs")


_STAT_FIELD = {
    Schema.CodeClassification: "problem_label",
    Schema.ParallelismLabel: "parallelizable",
    Schema.SimilarityPairs: "label",
    Schema.QA: "category",
}


def stats(ds: Dataset) -> dict:
    """Record count and the histogram of the schema's label field."""
    key = _STAT_FIELD[ds.schema]
    counts = Counter(r[key] for r in ds.records)
    if ds.schema is Schema.QA:
        hist = {c: counts.get(c, 0) for c in QA_CATEGORIES}
    else:
        hist = {str(k): counts[k] for k in sorted(counts)}
    return {"schema": ds.schema.value, "count": len(ds), "field": key, "histogram": hist}
