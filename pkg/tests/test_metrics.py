import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from corpus import C_SNIPPETS
from plpbench.errors import EmptyInput, LanguageMismatch, LengthMismatch
from plpbench.metrics import (
    BleuConfig, ClassificationCounts, CodeBleuConfig, bleu, bleu_tokens, classification_metrics, codebleu,
    codebleu_components, lcs_length, rouge_l, rouge_l_tokens,
)
from plpbench.tokenizer import CodeSnippet, Language

VOCAB = ["a", "b", "c", "d", "e"]


def random_sequences(seed, count=200):
    rng = random.Random(seed)
    for _ in range(count):
        cand = rng.choices(VOCAB, k=rng.randint(1, 9))
        refs = [rng.choices(VOCAB, k=rng.randint(1, 9)) for _ in range(rng.randint(1, 3))]
        yield cand, refs


def test_bleu_matches_oracle():
    for cand, refs in random_sequences(1):
        for max_n in (2, 4):
            got = bleu_tokens(cand, refs, BleuConfig(max_n=max_n))
            assert abs(got - oracles.bleu(cand, refs, max_n)) <= 1e-9


def test_rouge_matches_oracle():
    for cand, refs in random_sequences(2):
        got = rouge_l_tokens(cand, refs[0])
        r, p, f = oracles.rouge_l(cand, refs[0])
        assert abs(got["recall"] - r) <= 1e-9
        assert abs(got["precision"] - p) <= 1e-9
        assert abs(got["f1"] - f) <= 1e-9


def test_hand_computed_bleu():
    # both precisions are 1; c=2, r=3 so BP = exp(1 - 3/2)
    assert abs(bleu("the cat", "the cat sat", BleuConfig(max_n=2)) - math.exp(-0.5)) <= 1e-9


def test_identity_scores_one():
    for text in ["x", "the cat", "a b c d e f", "Parallel FOR loop with reduction"]:
        assert bleu(text, text) == 1.0
        assert rouge_l(text, text) == {"recall": 1.0, "precision": 1.0, "f1": 1.0}


def test_case_folding():
    assert bleu("The Cat Sat", "the cat sat") == 1.0
    assert rouge_l("OMP", "omp")["f1"] == 1.0


def test_empty_inputs():
    assert bleu("", "ref") == 0.0
    assert rouge_l("", "ref") == {"recall": 0.0, "precision": 0.0, "f1": 0.0}
    assert rouge_l("cand", "")["f1"] == 0.0


def test_brevity_penalty_prefers_shorter_of_equally_close_refs():
    cand = ["a", "b", "c"]
    # refs of length 2 and 4 are equally close; the shorter one (2) gives BP = 1
    assert bleu_tokens(cand, [["a", "b"], ["a", "b", "c", "d"]], BleuConfig(max_n=1)) == pytest.approx(1.0)


tokens = st.lists(st.sampled_from(VOCAB), min_size=1, max_size=12)


@settings(max_examples=150, deadline=None)
@given(tokens, tokens)
def test_scores_stay_in_unit_interval(c, r):
    assert 0.0 <= bleu_tokens(c, [r]) <= 1.0
    assert all(0.0 <= v <= 1.0 for v in rouge_l_tokens(c, r).values())


@settings(max_examples=150, deadline=None)
@given(tokens, tokens)
def test_lcs_symmetric_and_bounded(a, b):
    assert lcs_length(a, b) == lcs_length(b, a) == oracles.lcs(a, b)
    assert lcs_length(a, b) <= min(len(a), len(b))


@settings(max_examples=100, deadline=None)
@given(tokens, tokens, tokens)
def test_duplicate_reference_changes_nothing_and_extra_one_never_hurts_precision(c, r1, r2):
    assert bleu_tokens(c, [r1, r1]) == bleu_tokens(c, [r1])
    # with the brevity penalty pinned (same-length refs), clipping can only improve
    r2 = (r2 * len(r1))[:len(r1)]
    assert bleu_tokens(c, [r1, r2]) >= bleu_tokens(c, [r1]) - 1e-12


CODEBLEU_SNIPPETS = [s for s in C_SNIPPETS if s.strip()][:10]


@pytest.mark.parametrize("src", CODEBLEU_SNIPPETS)
def test_codebleu_identity(src):
    c = CodeSnippet(src, Language.C)
    comps = codebleu_components(c, c)
    assert comps["codebleu"] == pytest.approx(1.0, abs=1e-12)
    assert comps["ast_match"] == 1.0 and comps["dataflow_match"] == 1.0


@pytest.mark.parametrize("weights", [(0.25, 0.25, 0.25, 0.25), (0.1, 0.2, 0.3, 0.4), (0.7, 0.1, 0.1, 0.1)])
def test_codebleu_components_telescope(weights):
    cfg = CodeBleuConfig(*weights)
    for cand_src, ref_src in zip(CODEBLEU_SNIPPETS, CODEBLEU_SNIPPETS[1:] + CODEBLEU_SNIPPETS[:1]):
        comps = codebleu_components(CodeSnippet(cand_src, Language.C), CodeSnippet(ref_src, Language.C), cfg)
        parts = (comps["bleu"], comps["weighted_bleu"], comps["ast_match"], comps["dataflow_match"])
        assert abs(comps["codebleu"] - sum(w * p for w, p in zip(weights, parts))) <= 1e-12


def test_codebleu_renamed_variables_keep_dataflow():
    a = CodeSnippet("int f(int n) { int s = 0; s = s + n; return s; }", Language.C)
    b = CodeSnippet("int f(int m) { int t = 0; t = t + m; return t; }", Language.C)
    comps = codebleu_components(a, b)
    assert comps["dataflow_match"] == 1.0 and comps["ast_match"] == 1.0
    assert comps["bleu"] < 1.0


def test_codebleu_parse_failure_falls_back_to_ngrams():
    ref = CodeSnippet("int x = 1;", Language.C)
    cand = CodeSnippet("int x = = ;", Language.C)
    comps = codebleu_components(cand, ref)
    assert comps["ast_match"] is None
    assert comps["codebleu"] == pytest.approx((comps["bleu"] + comps["weighted_bleu"]) / 2)


def test_codebleu_language_mismatch():
    with pytest.raises(LanguageMismatch):
        codebleu(CodeSnippet("x = 1", Language.Python), CodeSnippet("int x;", Language.C))


@pytest.mark.parametrize("preds,labels", [
    ([1, 1, 0, 0, 1, 0], [1, 0, 1, 0, 1, 1]),
    ([1, 1, 1, 1], [1, 1, 0, 0]),
    ([0, 0, 0, 0], [1, 0, 1, 0]),
    ([1, 0], [0, 1]),
    ([0, 1, 1, 0, 1, 1, 0, 0], [0, 1, 1, 0, 1, 1, 0, 0]),
])
def test_confusion_matrices(preds, labels):
    tp, fp, fn, tn = oracles.confusion(preds, labels)
    counts = ClassificationCounts.from_labels(preds, labels)
    assert (counts.tp, counts.fp, counts.fn, counts.tn) == (tp, fp, fn, tn)
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    assert classification_metrics(preds, labels) == {"Precision": p, "Recall": r, "F1": f}


def test_no_positive_predictions_scores_zero_everywhere():
    assert classification_metrics([0] * 6, [1, 0, 1, 1, 0, 0]) == {"Precision": 0.0, "Recall": 0.0, "F1": 0.0}


def test_classification_errors():
    with pytest.raises(LengthMismatch):
        classification_metrics([1], [1, 0])
    with pytest.raises(EmptyInput):
        classification_metrics([], [])
