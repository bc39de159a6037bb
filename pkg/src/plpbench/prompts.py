"""Prompt templates for the three inference tasks.

Substitution is a single pass of plain concatenation, so braces inside
code are copied verbatim.
"""

SIMILARITY_TEMPLATE = (
    "Code 1: {code_1} Code 2: {code_2}  Determine whether the two code snippets are similar. "
    "If the code snippets are similar, output 1; otherwise, output 0."
)
PARALLELISM_TEMPLATE = (
    "As an OpenMP expert, you will analyze the given code snippet to determine if it can be "
    "parallelized. Code: {code}. Answer yes or no first:"
)
QA_TEMPLATE = "You are an OpenMP expert. Please answer this question. Question: {question}"

CONTEXT_HEADER = "Use the following context to answer.\nContext:\n"
CHUNK_SEPARATOR = "\n---\n"


def estimate_tokens(text: str) -> int:
    """Approximate model tokens as ceil(1.3 * whitespace tokens).

    Integer arithmetic keeps e.g. 100 words at exactly 130.
    """
    words = len(text.split())
    return (13 * words + 9) // 10


def build_similarity_prompt(code_1: str, code_2: str) -> str:
    return (
        "Code 1: " + code_1 + " Code 2: " + code_2 + "  Determine whether the two code snippets are similar. "
        "If the code snippets are similar, output 1; otherwise, output 0."
    )


def build_parallelism_prompt(code: str) -> str:
    return (
        "As an OpenMP expert, you will analyze the given code snippet to determine if it can be "
        "parallelized. Code: " + code + ". Answer yes or no first:"
    )


def _qa(question, chunk_texts):
    base = "You are an OpenMP expert. Please answer this question. Question: " + question
    if not chunk_texts:
        return base
    return CONTEXT_HEADER + CHUNK_SEPARATOR.join(chunk_texts) + "\n\n" + base


def fit_chunks(question: str, chunk_texts, token_budget: int) -> int:
    """Length of the longest prefix of ``chunk_texts`` whose prompt fits the budget.

    Stops at the first chunk that does not fit, even if a later one would.
    """
    used = 0
    for i in range(1, len(chunk_texts) + 1):
        if estimate_tokens(_qa(question, chunk_texts[:i])) > token_budget:
            break
        used = i
    return used


def build_qa_prompt(question: str, context_chunks=None, token_budget=None) -> str:
    """Q&A prompt, with retrieved chunks (already in score order) prepended.

    With ``token_budget`` only the fitting prefix of the chunks is used.
    """
    texts = [getattr(c, "text", c) for c in (context_chunks or [])]
    if token_budget is not None:
        texts = texts[:fit_chunks(question, texts, token_budget)]
    return _qa(question, texts)
