import pytest

from corpus import C_SNIPPETS, PY_SNIPPETS
from plpbench.errors import EmptySource, UnsupportedLanguage
from plpbench.tokenizer import (
    CodeSnippet, Language, StreamMode, TokenKind, TokenStream, Vocabulary, decode, encode,
    tokenize, tokenize_ast, tokenize_lexical,
)

MY_FUNC = '# print string\ndef my_func():\n    print("Hello World")'


def rebuild(source: str, stream) -> bytes:
    """Source bytes from token spans plus the whitespace between them."""
    raw = source.encode("utf-8")
    out, pos = b"", 0
    for tok in stream:
        start, end = tok.span
        gap = raw[pos:start]
        assert gap.strip() == b"", f"non-whitespace dropped: {gap!r}"
        assert raw[start:end] == tok.text.encode("utf-8")
        out += gap + raw[start:end]
        pos = end
    return out + raw[pos:]


def test_my_func_leaf_sequence():
    stream = tokenize_ast(CodeSnippet(MY_FUNC, Language.Python))
    assert stream.mode is StreamMode.AstTraversal
    assert stream.texts == ['# print string', 'def', 'my_func', '(', ')', ':', 'print', '(', '"Hello World"', ')']
    kinds = {t.text: t.kind for t in stream}
    assert kinds["my_func"] is TokenKind.Identifier
    assert kinds["def"] is TokenKind.Keyword
    assert kinds["# print string"] is TokenKind.Comment


@pytest.mark.parametrize("mode", ["lexical", "ast"])
def test_identifier_with_underscore_stays_whole(mode):
    texts = tokenize(CodeSnippet(MY_FUNC, Language.Python), mode).texts
    assert "my_func" in texts
    assert "my" not in texts and "_" not in texts and "func" not in texts


def test_int_x_kinds():
    stream = tokenize_lexical(CodeSnippet("int x;", Language.C))
    assert [(t.text, t.kind) for t in stream] == [
        ("int", TokenKind.Keyword), ("x", TokenKind.Identifier), (";", TokenKind.Punctuation)]


def test_byte_spans():
    stream = tokenize_lexical(CodeSnippet("a+b", Language.C))
    assert [t.span for t in stream] == [(0, 1), (1, 2), (2, 3)]
    assert stream.tokens[1].kind is TokenKind.Operator


def test_spans_are_bytes_not_chars():
    stream = tokenize_lexical(CodeSnippet("s = 'é' + t", Language.Python))
    lit = stream.tokens[2]
    assert lit.text == "'é'" and lit.span == (4, 8)
    assert stream.tokens[-1].span == (11, 12)


@pytest.mark.parametrize("lang,source", [(Language.C, s) for s in C_SNIPPETS] + [(Language.Python, s) for s in PY_SNIPPETS])
def test_lexical_round_trip(lang, source):
    assert rebuild(source, tokenize_lexical(CodeSnippet(source, lang))) == source.encode("utf-8")


def test_pragma_is_one_token_in_both_modes():
    src = "#pragma omp parallel for private(i) \\\n    schedule(static)\nfor (i = 0; i < n; i++) a[i] = 0;"
    for mode in ("lexical", "ast"):
        toks = tokenize(CodeSnippet(src, Language.C), mode).tokens
        assert toks[0].kind is TokenKind.PragmaDirective
        assert toks[0].text == "#pragma omp parallel for private(i) \\\n    schedule(static)"
        assert toks[1].text == "for"


def test_ast_tokens_are_sorted_and_cover_source_text():
    for src in C_SNIPPETS:
        stream = tokenize_ast(CodeSnippet(src, Language.C))
        starts = [t.span[0] for t in stream]
        assert starts == sorted(starts)
        raw = src.encode("utf-8")
        assert all(raw[a:b].decode("utf-8") == t.text for t, (a, b) in ((t, t.span) for t in stream))


def test_empty_source_rejected():
    with pytest.raises(EmptySource):
        tokenize_lexical(CodeSnippet("  \n\t", Language.C))


def test_ast_needs_a_language():
    with pytest.raises(UnsupportedLanguage):
        tokenize_ast(CodeSnippet("int x;", Language.Unknown))


def test_ast_falls_back_to_lexical_on_parse_error(caplog):
    stream = tokenize(CodeSnippet("int x = ;;; }", Language.C), "ast")
    assert stream.mode is StreamMode.Lexical
    assert "x" in stream.texts


def test_unknown_language_lexes_hash_lines_as_comments():
    stream = tokenize_lexical(CodeSnippet("# note\nfoo bar", Language.Unknown))
    assert stream.tokens[0].kind is TokenKind.Comment


def test_language_from_path_and_aliases():
    assert Language.from_path("k.cpp") is Language.Cpp
    assert Language.from_path("k.h") is Language.C
    assert Language.from_path("k.py") is Language.Python
    assert Language.from_path("k.f90") is Language.Unknown
    assert Language.parse("c++") is Language.Cpp


def test_stream_json_round_trip():
    stream = tokenize_lexical(CodeSnippet(C_SNIPPETS[3], Language.C))
    again = TokenStream.from_json(stream.to_json())
    assert again.tokens == stream.tokens


def test_vocabulary_encode_decode():
    streams = [tokenize_lexical(CodeSnippet(s, Language.C)) for s in C_SNIPPETS[:5]]
    vocab = Vocabulary.from_streams(streams)
    assert [vocab.id(t) for t in ("[CLS]", "[SEP]", "[UNK]", "[PAD]")] == [0, 1, 2, 3]
    ids = encode(streams[2], vocab)
    assert ids[0] == 0 and ids[-1] == 1
    assert decode(ids, vocab) == streams[2].texts
    assert vocab.id("never_seen_token") == 2
    n = len(vocab)
    assert vocab.add_tokens(["never_seen_token", "int"]) == 1
    assert len(vocab) == n + 1
    assert Vocabulary.from_json(vocab.to_json()).to_json() == vocab.to_json()


def test_cpp_tokens():
    stream = tokenize_ast(CodeSnippet("std::vector<int> v; v.push_back(1);", Language.Cpp))
    assert "push_back" in stream.texts and "std" in stream.texts
