import json
import math
from collections import Counter
from fractions import Fraction
from pathlib import Path

import pytest

from plpbench import datasets
from plpbench.datasets import Dataset, Schema, SplitSpec, data_file
from plpbench.errors import (
    InsufficientData, InvalidPartition, IoError, MissingField, OutOfRangeScore, SchemaError,
)

FIXTURES = Path(__file__).parent / "fixtures"


def toy(name, schema):
    return datasets.load(data_file(f"toy_{name}.jsonl"), schema)


def numbered(n):
    return Dataset(Schema.CodeClassification, [{"id": i, "code": f"c{i}", "problem_label": i % 3} for i in range(n)])


PARTITIONS = [(0.8, 0.1, 0.1), (0.7, 0.2, 0.1), (0.6, 0.2, 0.2), (0.5, 0.25, 0.25), (0.34, 0.33, 0.33)]


@pytest.mark.parametrize("partition", PARTITIONS)
def test_split_sizes_follow_floor_rule(partition):
    ft, fv, _ = (Fraction(str(f)) for f in partition)
    for n in range(0, 120):
        n_train, n_valid = math.floor(n * ft), math.floor(n * fv)
        assert datasets.split_sizes(n, partition) == (n_train, n_valid, n - n_train - n_valid)


def test_split_when_fractions_sum_below_one():
    assert datasets.split_sizes(10, (0.5, 0.2, 0.2)) == (5, 2, 2)


@pytest.mark.parametrize("n", [0, 1, 7, 10, 57])
def test_split_is_disjoint_and_covers_input(n):
    ds = numbered(n)
    parts = datasets.split(ds, SplitSpec((0.8, 0.1, 0.1), seed=42))
    ids = [r["id"] for p in parts for r in p.records]
    assert Counter(ids) == Counter(range(n))
    assert [len(p) for p in parts] == list(datasets.split_sizes(n, (0.8, 0.1, 0.1)))


def test_split_and_shuffle_are_seeded():
    ds = numbered(50)
    assert datasets.shuffle(ds, 42).records == datasets.shuffle(ds, 42).records
    assert datasets.shuffle(ds, 42).records != datasets.shuffle(ds, 43).records
    assert datasets.split(ds, seed=1)[0].records == datasets.split(ds, seed=1)[0].records


@pytest.mark.parametrize("bad", [(0.9, 0.2, 0.1), (-0.1, 0.6, 0.5), (0.5, 0.5)])
def test_invalid_partitions(bad):
    with pytest.raises(InvalidPartition):
        SplitSpec(bad)


def test_similarity_pairs_label_rule_exhaustive():
    poj = toy("poj", Schema.CodeClassification)
    assert len(poj) == 6
    label_of = {r["id"]: r["problem_label"] for r in poj.records}
    seen = set()
    for balance in (0.0, 0.3, 0.5, 1.0):
        pairs = datasets.make_similarity_pairs(poj, 300, balance=balance, seed=42)
        assert len(pairs) == 300
        assert sum(r["label"] for r in pairs.records) == math.floor(300 * balance + 0.5)
        for r in pairs.records:
            assert r["id_1"] != r["id_2"]
            assert r["label"] == int(label_of[r["id_1"]] == label_of[r["id_2"]])
            seen.add((r["id_1"], r["id_2"]))
    # every ordered pair of distinct snippets was reachable
    assert len(seen) == 6 * 5


def test_similarity_pairs_need_enough_variety():
    one_label = Dataset(Schema.CodeClassification, [{"id": i, "code": "x", "problem_label": 1} for i in range(4)])
    with pytest.raises(InsufficientData):
        datasets.make_similarity_pairs(one_label, 10, balance=0.5)
    all_distinct = Dataset(Schema.CodeClassification, [{"id": i, "code": "x", "problem_label": i} for i in range(4)])
    with pytest.raises(InsufficientData):
        datasets.make_similarity_pairs(all_distinct, 10, balance=0.5)


def test_ompqa_histogram():
    ds = datasets.load(FIXTURES / "ompqa_fixture.jsonl", Schema.QA)
    st = datasets.stats(ds)
    assert st["count"] == 107
    assert st["histogram"] == {"Basics": 40, "Examples": 20, "Compilers": 24, "Benchmarks": 23}


def test_load_reports_line_and_field(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"id": 1, "code": "x", "parallelizable": 1}\n\n{"id": 2, "code": "y", "parallelizable": 3}\n')
    with pytest.raises(SchemaError) as info:
        datasets.load(p, Schema.ParallelismLabel)
    assert info.value.line_no == 3 and info.value.field == "parallelizable"
    p.write_text("{not json\n")
    with pytest.raises(SchemaError):
        datasets.load(p, Schema.ParallelismLabel)
    with pytest.raises(IoError):
        datasets.load(tmp_path / "missing.jsonl", Schema.QA)


def test_save_writes_sidecar_and_round_trips(tmp_path):
    ds = toy("parallelism", Schema.ParallelismLabel)
    out = tmp_path / "par.jsonl"
    datasets.save(ds, out)
    meta = json.loads((tmp_path / "par.meta.json").read_text())
    assert meta["schema"] == "ParallelismLabel"
    assert datasets.load(out, Schema.ParallelismLabel).records == ds.records


def test_sort_is_stable_both_ways():
    ds = Dataset(Schema.CodeClassification, [
        {"id": "a", "code": "", "problem_label": 2}, {"id": "b", "code": "", "problem_label": 1},
        {"id": "c", "code": "", "problem_label": 2}, {"id": "d", "code": "", "problem_label": 1},
    ])
    up = [r["id"] for r in datasets.sort(ds, "problem_label").records]
    down = [r["id"] for r in datasets.sort(ds, "problem_label", ascending=False).records]
    assert up == ["b", "d", "a", "c"]
    assert down == ["a", "c", "b", "d"]
    with pytest.raises(MissingField):
        datasets.sort(ds, "nope")


def test_binarize_scores():
    rows = datasets.binarize_similarity_scores([
        {"id_1": 1, "id_2": 2, "score": 0.5}, {"id_1": 1, "id_2": 3, "score": 0.49}])
    assert [r["label"] for r in rows] == [1, 0]
    with pytest.raises(OutOfRangeScore):
        datasets.binarize_similarity_scores([{"id_1": 1, "id_2": 2, "score": 1.2}])


def test_schema_aliases():
    assert Schema.parse("similarity") is Schema.SimilarityPairs
    assert Schema.parse("qa") is Schema.QA
    with pytest.raises(ValueError):
        Schema.parse("nonsense")
