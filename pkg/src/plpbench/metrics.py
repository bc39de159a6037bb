"""Scoring: classification counts, BLEU, ROUGE-L and CodeBLEU.

All scores are floats in [0, 1]. Any 0/0 ratio scores 0 (except the
CodeBLEU components, see :func:`codebleu_components`).
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass

from . import _parsing
from .errors import EmptyInput, LanguageMismatch, LengthMismatch, PlpError
from .graph import NodeKind, build_program_graph
from .tokenizer import CodeSnippet, Language, TokenKind, keywords_for, tokenize_lexical

log = logging.getLogger(__name__)


def _ratio(num, den):
    return num / den if den else 0.0


def _f1(p, r):
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


# -- classification --------------------------------------------------------

@dataclass(frozen=True)
class ClassificationCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @classmethod
    def from_labels(cls, predictions, labels) -> "ClassificationCounts":
        predictions, labels = list(predictions), list(labels)
        if len(predictions) != len(labels):
            raise LengthMismatch(f"{len(predictions)} predictions vs {len(labels)} labels")
        if not predictions:
            raise EmptyInput("no predictions to score")
        pairs = Counter((int(p), int(y)) for p, y in zip(predictions, labels))
        return cls(tp=pairs[1, 1], fp=pairs[1, 0], fn=pairs[0, 1], tn=pairs[0, 0])

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn

    @property
    def precision(self):
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self):
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self):
        return _f1(self.precision, self.recall)


def classification_metrics(predictions, labels) -> dict:
    counts = ClassificationCounts.from_labels(predictions, labels)
    return {"Precision": counts.precision, "Recall": counts.recall, "F1": counts.f1}


# -- BLEU ------------------------------------------------------------------

@dataclass(frozen=True)
class BleuConfig:
    max_n: int = 4
    weights: tuple = None
    smoothing_epsilon: float = 1e-9

    def order_weights(self, orders: int):
        """Weights for the first ``orders`` n-gram orders, renormalized to sum to 1."""
        w = list(self.weights) if self.weights is not None else [1.0 / self.max_n] * self.max_n
        w = w[:orders]
        total = sum(w)
        return [x / total for x in w]


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def modified_precision(candidate, references, n, weight_of=None):
    """Clipped n-gram matches and candidate n-gram total (optionally weighted)."""
    cand = _ngrams(candidate, n)
    max_ref = Counter()
    for ref in references:
        for gram, c in _ngrams(ref, n).items():
            if c > max_ref[gram]:
                max_ref[gram] = c
    weight_of = weight_of or (lambda gram: 1.0)
    matched = sum(weight_of(g) * min(c, max_ref[g]) for g, c in cand.items())
    total = sum(weight_of(g) * c for g, c in cand.items())
    return matched, total


def brevity_penalty(c: int, references) -> float:
    r = min((len(ref) for ref in references), key=lambda length: (abs(length - c), length))
    if c > r:
        return 1.0
    return math.exp(1.0 - r / c)


def bleu_tokens(candidate, references, cfg: BleuConfig = BleuConfig(), weight_of=None) -> float:
    """BLEU over pre-tokenized input.

    Orders above the candidate length have no n-grams and are left out (the
    remaining weights are renormalized). Zero precisions are floored at
    ``smoothing_epsilon``. ``weight_of`` reweights unigrams only.
    """
    if not references:
        raise ValueError("bleu needs at least one reference")
    c = len(candidate)
    if c == 0:
        return 0.0
    orders = min(cfg.max_n, c)
    weights = cfg.order_weights(orders)
    log_sum = 0.0
    for n, w in zip(range(1, orders + 1), weights):
        matched, total = modified_precision(candidate, references, n, weight_of if n == 1 else None)
        p = matched / total if total else 0.0
        log_sum += w * math.log(p if p > 0 else cfg.smoothing_epsilon)
    return min(1.0, brevity_penalty(c, references) * math.exp(log_sum))


def text_tokens(text: str):
    return text.lower().split()


def bleu(candidate: str, references, cfg: BleuConfig = BleuConfig()) -> float:
    """Sentence BLEU on case-folded whitespace tokens."""
    if isinstance(references, str):
        references = [references]
    return bleu_tokens(text_tokens(candidate), [text_tokens(r) for r in references], cfg)


# -- ROUGE-L ---------------------------------------------------------------

def lcs_length(a, b) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l_tokens(candidate, reference) -> dict:
    lcs = lcs_length(candidate, reference)
    r = _ratio(lcs, len(reference))
    p = _ratio(lcs, len(candidate))
    return {"recall": r, "precision": p, "f1": _f1(p, r)}


def rouge_l(candidate: str, reference: str) -> dict:
    """LCS-based recall / precision / F1 (beta = 1) on case-folded whitespace tokens."""
    return rouge_l_tokens(text_tokens(candidate), text_tokens(reference))


# -- CodeBLEU --------------------------------------------------------------

@dataclass(frozen=True)
class CodeBleuConfig:
    alpha: float = 0.25
    beta: float = 0.25
    gamma: float = 0.25
    delta: float = 0.25
    keyword_weight: float = 5.0
    max_n: int = 4

    def __post_init__(self):
        if abs(self.alpha + self.beta + self.gamma + self.delta - 1.0) > 1e-9:
            raise ValueError("CodeBLEU weights must sum to 1")


def code_tokens(snippet: CodeSnippet):
    """Lexical token texts, comments dropped."""
    if not snippet.source.strip():
        return []
    return [t.text for t in tokenize_lexical(snippet) if t.kind is not TokenKind.Comment]


def _subtrees(root):
    """S-expressions (named node types only) of every subtree of height >= 2."""
    out = Counter()

    def sexp(node):
        kids = [sexp(c) for c in node.named_children if c.type != "comment"]
        if not kids:
            return node.type
        s = "(" + node.type + " " + " ".join(kids) + ")"
        out[s] += 1
        return s

    sexp(root)
    return out


def _match_ratio(candidate: Counter, reference: Counter) -> float:
    total = sum(reference.values())
    if total == 0:
        return 1.0 if sum(candidate.values()) == 0 else 0.0
    matched = sum(min(c, candidate[k]) for k, c in reference.items())
    return matched / total


def _dataflow(snippet: CodeSnippet) -> Counter:
    """DefUse edges keyed by (def name, use name), names numbered by first appearance."""
    graph = build_program_graph(snippet)
    rename = {}
    for node in graph.nodes:
        if node.kind is NodeKind.Identifier and node.label not in rename:
            rename[node.label] = f"var_{len(rename)}"
    return Counter((rename[d], rename[u]) for d, u in graph.def_use_pairs())


def codebleu_components(candidate: CodeSnippet, reference: CodeSnippet, cfg: CodeBleuConfig = CodeBleuConfig()) -> dict:
    """The four CodeBLEU components and their weighted total.

    A structural component whose candidate and reference are both empty
    scores 1; if only the reference is empty it scores 0. When either side
    fails to parse, the structural parts are dropped and the total is
    ``(alpha*bleu + beta*weighted_bleu) / (alpha + beta)``.
    """
    if candidate.language is not reference.language:
        raise LanguageMismatch(f"{candidate.language.value} candidate vs {reference.language.value} reference")
    cand, ref = code_tokens(candidate), code_tokens(reference)
    bcfg = BleuConfig(max_n=cfg.max_n)
    ngram = bleu_tokens(cand, [ref], bcfg) if cand else 0.0
    keywords = keywords_for(candidate.language)
    weight_of = lambda gram: cfg.keyword_weight if gram[0] in keywords else 1.0  # noqa: E731
    weighted = bleu_tokens(cand, [ref], bcfg, weight_of) if cand else 0.0

    comps = {"bleu": ngram, "weighted_bleu": weighted, "ast_match": None, "dataflow_match": None}
    try:
        if candidate.language is Language.Unknown:
            raise PlpError("no grammar")
        cand_root = _parsing.parse(candidate.source.encode("utf-8"), candidate.language)
        ref_root = _parsing.parse(reference.source.encode("utf-8"), reference.language)
        comps["ast_match"] = _match_ratio(_subtrees(cand_root), _subtrees(ref_root))
        comps["dataflow_match"] = _match_ratio(_dataflow(candidate), _dataflow(reference))
    except PlpError as exc:
        log.warning("CodeBLEU structural match skipped (%s); using n-gram components only", exc)
        comps["ast_match"] = comps["dataflow_match"] = None
        comps["codebleu"] = (cfg.alpha * ngram + cfg.beta * weighted) / (cfg.alpha + cfg.beta)
        return comps

    comps["codebleu"] = (
        cfg.alpha * ngram + cfg.beta * weighted + cfg.gamma * comps["ast_match"] + cfg.delta * comps["dataflow_match"]
    )
    return comps


def codebleu(candidate: CodeSnippet, reference: CodeSnippet, cfg: CodeBleuConfig = CodeBleuConfig()) -> float:
    return codebleu_components(candidate, reference, cfg)["codebleu"]
