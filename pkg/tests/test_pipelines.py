import threading
from pathlib import Path

import pytest

from plpbench import datasets, models, pipelines
from plpbench.datasets import Dataset, Schema, data_file
from plpbench.errors import BackendError, HttpError, SchemaMismatch
from plpbench.models import ModelHandle, ModelKind, SamplingConfig
from plpbench.pipelines import (
    Answer, BatchFailure, ParseStatus, PipelineSpec, Task, build_parallelism_prompt, build_qa_prompt,
    build_similarity_prompt, parse_binary_answer,
)

GOLDEN = Path(__file__).parent / "golden"

CODE_1 = "int add(int a, int b) { return a + b; }"
CODE_2 = "int plus(int x, int y) {\n    return x + y;\n}"
LOOP = "for (i = 0; i < n; i++)\n    a[i] = b[i] + c[i];"
QUESTION = "What does the collapse clause do?"


def golden(name):
    return (GOLDEN / f"prompt_{name}.txt").read_bytes()


def test_similarity_prompt_bytes():
    assert build_similarity_prompt(CODE_1, CODE_2).encode("utf-8") == golden("similarity")


def test_parallelism_prompt_bytes():
    assert build_parallelism_prompt(LOOP).encode("utf-8") == golden("parallelism")


def test_qa_prompt_bytes():
    assert build_qa_prompt(QUESTION).encode("utf-8") == golden("qa")


def test_braces_in_code_are_copied_verbatim():
    assert "{question}" in build_parallelism_prompt("x = {question};")


def test_qa_prompt_with_context():
    prompt = build_qa_prompt("Q?", ["first chunk", "second chunk"])
    assert prompt == ("Use the following context to answer.\nContext:\nfirst chunk\n---\nsecond chunk\n\n"
                      "You are an OpenMP expert. Please answer this question. Question: Q?")


@pytest.mark.parametrize("text,label,status", [
    ("1", 1, ParseStatus.Parsed),
    ("0", 0, ParseStatus.Parsed),
    ("Output: 1. They match.", 1, ParseStatus.Parsed),
    ("The answer is 0 not 1", 0, ParseStatus.Parsed),
    ("Yes, they are similar.", 1, ParseStatus.Fallback),
    ("no", 0, ParseStatus.Fallback),
    ("I cannot tell.", 0, ParseStatus.Unparseable),
    ("", 0, ParseStatus.Unparseable),
    ("10 lines", 0, ParseStatus.Unparseable),
])
def test_similarity_answer_parsing(text, label, status):
    (pos, neg), fallback = pipelines.MARKERS[Task.CodeSimilarity]
    v = parse_binary_answer(text, pos, neg, fallback)
    assert (v.label, v.parse_status) == (label, status)
    assert v.raw_text == text


@pytest.mark.parametrize("text,label,status", [
    ("Yes. The iterations are independent.", 1, ParseStatus.Parsed),
    ("NO - loop-carried dependence", 0, ParseStatus.Parsed),
    ("Not sure; probably not.", 0, ParseStatus.Unparseable),
    ("1", 1, ParseStatus.Fallback),
    ("yesterday", 0, ParseStatus.Unparseable),
])
def test_parallelism_answer_parsing(text, label, status):
    (pos, neg), fallback = pipelines.MARKERS[Task.ParallelismDetection]
    v = parse_binary_answer(text, pos, neg, fallback)
    assert (v.label, v.parse_status) == (label, status)


def test_run_similarity_with_const_mock():
    spec = PipelineSpec("similarity", models.from_pretrained("mock:const:1"))
    rec = {"id": "p", "code_1": CODE_1, "code_2": CODE_2, "label": 1}
    v = pipelines.run(spec, rec)
    assert v.label == 1 and v.parse_status is ParseStatus.Parsed


def test_run_sends_the_built_prompt():
    spec = PipelineSpec("parallelism", models.from_pretrained("mock:echo"))
    v = pipelines.run(spec, {"id": 1, "code": LOOP, "parallelizable": 1})
    assert v.raw_text.encode("utf-8") == golden("parallelism")


def test_qa_answer_counts_prompt_tokens():
    spec = PipelineSpec(Task.OpenMPQA, models.from_pretrained("mock:const:It merges loops."))
    ans = pipelines.run(spec, {"id": 1, "category": "Basics", "question": QUESTION, "reference_answer": "x"})
    assert isinstance(ans, Answer)
    assert ans.text == "It merges loops."
    assert ans.context_chunks_used == 0
    assert ans.prompt_tokens_estimate == pipelines.estimate_tokens(golden("qa").decode())


def test_schema_mismatch():
    spec = PipelineSpec("similarity", models.from_pretrained("mock:const:1"))
    with pytest.raises(SchemaMismatch):
        pipelines.run(spec, {"id": 1, "code": "x", "parallelizable": 1})


def test_augmenter_only_for_qa():
    with pytest.raises(ValueError):
        PipelineSpec("similarity", models.from_pretrained("mock:echo"), augmenter=object())


def failing_transport(fail_ids):
    lock = threading.Lock()

    def transport(method, url, headers, body, timeout):
        text = body.decode()
        with lock:
            bad = any(f"marker{i} " in text for i in fail_ids)
        if bad:
            return 400, b'{"error": "nope"}'
        return 200, b'{"choices": [{"message": {"content": "yes"}}]}'
    return transport


@pytest.mark.parametrize("parallelism", [1, 4])
def test_batch_keeps_order_and_isolates_failures(parallelism):
    records = [{"id": i, "code": f"marker{i} loop", "parallelizable": i % 2} for i in range(12)]
    ds = Dataset(Schema.ParallelismLabel, records)
    spec = PipelineSpec("parallelism", ModelHandle("r", ModelKind.RemoteChat, endpoint="http://x.invalid"))
    results = pipelines.run_batch(spec, ds, parallelism, transport=failing_transport({3, 7}))
    assert len(results) == 12
    for i, r in enumerate(results):
        if i in (3, 7):
            assert isinstance(r, BatchFailure) and r.record_id == i and r.error == "HttpError"
        else:
            assert r.label == 1


def test_backend_error_carries_record_id():
    spec = PipelineSpec("parallelism", ModelHandle("r", ModelKind.RemoteChat, endpoint="http://x.invalid"))
    with pytest.raises(BackendError) as info:
        pipelines.run(spec, {"id": "rec-3", "code": "marker3 x", "parallelizable": 0},
                      transport=failing_transport({3}))
    assert isinstance(info.value, HttpError) and info.value.record_id == "rec-3"


def test_batch_over_toy_dataset_is_deterministic():
    ds = datasets.load(data_file("toy_similarity.jsonl"), Schema.SimilarityPairs)
    spec = PipelineSpec("similarity", models.from_pretrained("mock:choice:1|0"), SamplingConfig(seed=42))
    first = pipelines.run_batch(spec, ds, 3)
    assert first == pipelines.run_batch(spec, ds, 1)
