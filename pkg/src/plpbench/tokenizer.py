"""Code-aware tokenizers.

Two token streams are offered for a :class:`CodeSnippet`:

* :func:`tokenize_lexical` -- a regex lexer that never splits identifiers,
  keeps comments whole and emits ``#pragma`` lines as one token.
* :func:`tokenize_ast` -- the leaves of a tree-sitter parse tree in source
  order. String literals and comments are treated as leaves even when the
  grammar gives them children.

Both carry byte spans into the UTF-8 encoded source, so
``source.encode()[start:end]`` gives back each token's text.
"""

from __future__ import annotations

import enum
import json
import keyword
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from . import _parsing
from .errors import EmptySource, ParseError, UnsupportedLanguage

log = logging.getLogger(__name__)


class Language(str, enum.Enum):
    C = "C"
    Cpp = "Cpp"
    Python = "Python"
    Unknown = "Unknown"

    @classmethod
    def parse(cls, name) -> "Language":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {
            "c": cls.C, "cpp": cls.Cpp, "c++": cls.Cpp, "cxx": cls.Cpp,
            "python": cls.Python, "py": cls.Python, "unknown": cls.Unknown,
        }
        return aliases.get(key, cls.Unknown)

    @classmethod
    def from_path(cls, path) -> "Language":
        suffix = Path(path).suffix.lower()
        if suffix in (".c", ".h"):
            return cls.C
        if suffix in (".cc", ".cpp", ".cxx", ".hpp", ".hh", ".hxx"):
            return cls.Cpp
        if suffix == ".py":
            return cls.Python
        return cls.Unknown


class TokenKind(str, enum.Enum):
    Identifier = "Identifier"
    Keyword = "Keyword"
    Literal = "Literal"
    Operator = "Operator"
    Punctuation = "Punctuation"
    Comment = "Comment"
    PragmaDirective = "PragmaDirective"
    Other = "Other"


class StreamMode(str, enum.Enum):
    Lexical = "Lexical"
    AstTraversal = "AstTraversal"


@dataclass(frozen=True)
class CodeSnippet:
    source: str
    language: Language = Language.Unknown
    id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "language", Language.parse(self.language))

    @classmethod
    def from_file(cls, path, language=None) -> "CodeSnippet":
        path = Path(path)
        lang = Language.parse(language) if language else Language.from_path(path)
        return cls(path.read_text(encoding="utf-8"), lang, id=path.name)


@dataclass(frozen=True)
class Token:
    text: str
    kind: TokenKind
    span: tuple

    def to_dict(self):
        return {"t": self.text, "k": self.kind.value, "s": list(self.span)}


@dataclass
class TokenStream:
    tokens: list
    mode: StreamMode = StreamMode.Lexical

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    @property
    def texts(self):
        return [t.text for t in self.tokens]

    def to_json(self) -> str:
        return json.dumps([t.to_dict() for t in self.tokens], ensure_ascii=False)

    @classmethod
    def from_json(cls, text, mode=StreamMode.Lexical) -> "TokenStream":
        items = json.loads(text)
        return cls([Token(d["t"], TokenKind(d["k"]), tuple(d["s"])) for d in items], StreamMode(mode))


C_KEYWORDS = frozenset("""
auto break case char const continue default do double else enum extern float for goto if
inline int long register restrict return short signed sizeof static struct switch typedef
union unsigned void volatile while _Alignas _Alignof _Atomic _Bool _Complex _Generic
_Noreturn _Static_assert _Thread_local
""".split())

CPP_KEYWORDS = C_KEYWORDS | frozenset("""
alignas alignof and and_eq asm bitand bitor bool catch char8_t char16_t char32_t class
compl concept const_cast consteval constexpr constinit co_await co_return co_yield decltype
delete dynamic_cast explicit export final friend mutable namespace new noexcept not not_eq
operator or or_eq override private protected public reinterpret_cast requires static_assert
static_cast template this thread_local throw try typeid typename using virtual wchar_t xor
xor_eq
""".split())

LITERAL_WORDS = frozenset({"true", "false", "NULL", "nullptr", "True", "False", "None"})

PY_KEYWORDS = frozenset(keyword.kwlist) - LITERAL_WORDS


def keywords_for(language) -> frozenset:
    language = Language.parse(language)
    if language is Language.Python:
        return PY_KEYWORDS
    if language is Language.Cpp:
        return CPP_KEYWORDS
    if language is Language.C:
        return C_KEYWORDS
    return C_KEYWORDS | PY_KEYWORDS


# -- lexical tokenizer -----------------------------------------------------

_OPERATORS = [
    ">>=", "<<=", "**=", "//=", "->*", "<=>",
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", "::", "**", "//", ":=", ".*",
    "+", "-", "*", "/", "%", "=", "<", ">", "!", "&", "|", "^", "~", "?", "@",
]
_PUNCT = "()[]{};,.:"

_NUMBER = r"(?:0[xX][0-9a-fA-F']+|0[bB][01']+|(?:\d[\d']*\.?[\d']*|\.\d[\d']*)(?:[eEpP][+-]?\d+)?)[A-Za-z_]*"
_IDENT = r"[^\W\d]\w*"
_C_STRING = r"""(?:u8|[LuUR])?"(?:\\.|[^"\\\n])*"?|(?:u8|[LuU])?'(?:\\.|[^'\\\n])*'?"""
_PY_STRING = (
    r"""(?i:[rbuf]{0,2})(?:'''[\s\S]*?(?:'''|\Z)|\"\"\"[\s\S]*?(?:\"\"\"|\Z)"""
    r"""|'(?:\\.|[^'\\\n])*'?|"(?:\\.|[^"\\\n])*"?)"""
)
_OPS = "|".join(re.escape(op) for op in _OPERATORS)


def _lexer(c_style: bool, py_style: bool):
    parts = [r"(?P<ws>\s+)"]
    comments = []
    strings = []
    if c_style:
        comments += [r"//[^\n]*", r"/\*[\s\S]*?(?:\*/|\Z)"]
        strings.append(_C_STRING)
    if py_style:
        comments.append(r"\#[^\n]*")
        strings.insert(0, _PY_STRING)
    parts.append("(?P<comment>%s)" % "|".join(comments))
    parts.append("(?P<string>%s)" % "|".join(strings))
    parts += [
        "(?P<number>%s)" % _NUMBER,
        "(?P<ident>%s)" % _IDENT,
        "(?P<op>%s)" % _OPS,
        "(?P<punct>[%s])" % re.escape(_PUNCT),
        r"(?P<other>.)",
    ]
    return re.compile("|".join(parts), re.DOTALL)


_LEXERS = {
    Language.C: _lexer(True, False),
    Language.Cpp: _lexer(True, False),
    Language.Python: _lexer(False, True),
}
# Unknown: C comments, and '#' lines other than pragmas are comments.
_LEXERS[Language.Unknown] = _lexer(True, True)


def _byte_offsets(text: str):
    """Map char index -> byte index (None when the text is pure ASCII)."""
    if text.isascii():
        return None
    offsets = [0] * (len(text) + 1)
    acc = 0
    for i, ch in enumerate(text):
        offsets[i] = acc
        acc += len(ch.encode("utf-8"))
    offsets[len(text)] = acc
    return offsets


def _char_offsets(text: str):
    """Map byte index -> char index for char boundaries."""
    table = {}
    acc = 0
    for i, ch in enumerate(text):
        table[acc] = i
        acc += len(ch.encode("utf-8"))
    table[acc] = len(text)
    return table


def tokenize_lexical(snippet: CodeSnippet) -> TokenStream:
    """Split source into tokens without a grammar.

    Identifiers are matched whole (``my_func`` stays one token) and
    whitespace is dropped.
    """
    src = snippet.source
    if not src.strip():
        raise EmptySource("source is empty or whitespace-only")
    lang = snippet.language
    keywords = keywords_for(lang)
    lexer = _LEXERS[lang]
    to_byte = _byte_offsets(src)

    pragma_starts = {}
    if lang is not Language.Python:
        raw = src.encode("utf-8")
        chars = _char_offsets(src) if to_byte else None
        for bs, be in _parsing.pragma_spans(raw, lang):
            s, e = (chars[bs], chars[be]) if chars else (bs, be)
            pragma_starts[s] = e

    tokens = []
    pos, n = 0, len(src)
    while pos < n:
        if pos in pragma_starts:
            end = pragma_starts[pos]
            kind, text = TokenKind.PragmaDirective, src[pos:end]
        else:
            m = lexer.match(src, pos)
            group, end = m.lastgroup, m.end()
            text = m.group()
            if group == "ws":
                pos = end
                continue
            if group == "ident":
                if text in LITERAL_WORDS:
                    kind = TokenKind.Literal
                elif text in keywords:
                    kind = TokenKind.Keyword
                else:
                    kind = TokenKind.Identifier
            elif group == "comment":
                kind = TokenKind.Comment
            elif group in ("string", "number"):
                kind = TokenKind.Literal
            elif group == "op":
                kind = TokenKind.Operator
            elif group == "punct":
                kind = TokenKind.Punctuation
            else:
                kind = TokenKind.Other
        span = (to_byte[pos], to_byte[end]) if to_byte else (pos, end)
        tokens.append(Token(text, kind, span))
        pos = end
    return TokenStream(tokens, StreamMode.Lexical)


# -- syntax-tree tokenizer -------------------------------------------------

# Nodes emitted whole even though the grammar gives them children.
ATOMIC_NODES = frozenset({
    "string_literal", "char_literal", "raw_string_literal", "string", "comment",
    "system_lib_string", "user_defined_literal",
})
_IDENT_NODES = frozenset({
    "identifier", "field_identifier", "type_identifier", "namespace_identifier",
    "statement_identifier", "property_identifier",
})
_LITERAL_NODES = frozenset({
    "number_literal", "string_literal", "char_literal", "raw_string_literal",
    "system_lib_string", "user_defined_literal", "integer", "float", "string",
    "true", "false", "null", "none", "nullptr",
})
_KEYWORD_NODES = frozenset({"primitive_type", "this", "auto"})


def _leaf_kind(node, text: str) -> TokenKind:
    t = node.type
    if t == "comment":
        return TokenKind.Comment
    if t in _LITERAL_NODES:
        return TokenKind.Literal
    if t in _IDENT_NODES:
        return TokenKind.Identifier
    if t in _KEYWORD_NODES:
        return TokenKind.Keyword
    if node.is_named:
        return TokenKind.Other
    if text.replace("_", "").isalpha():
        return TokenKind.Keyword
    if text in _PUNCT or text == "...":
        return TokenKind.Punctuation
    return TokenKind.Operator


def _leaves(root):
    stack = [root]
    while stack:
        n = stack.pop()
        if n.child_count == 0 or n.type in ATOMIC_NODES:
            yield n
        else:
            stack.extend(reversed(n.children))


def tokenize_ast(snippet: CodeSnippet) -> TokenStream:
    """Leaves of the parse tree, left to right.

    Each ``#pragma`` line becomes a single PragmaDirective token. Raises
    ParseError when the grammar rejects the source and UnsupportedLanguage
    for ``Language.Unknown``.
    """
    if snippet.language is Language.Unknown:
        raise UnsupportedLanguage("syntax-tree tokenization needs a known language")
    raw = snippet.source.encode("utf-8")
    root = _parsing.parse(raw, snippet.language)
    pragmas = _parsing.pragma_spans(raw, snippet.language)

    tokens = []
    for node in _leaves(root):
        s, e = node.start_byte, node.end_byte
        if e <= s:
            continue
        if any(ps < e and s < pe for ps, pe in pragmas):
            continue
        text = raw[s:e].decode("utf-8")
        if not text.strip():
            continue
        tokens.append(Token(text, _leaf_kind(node, text), (s, e)))
    for ps, pe in pragmas:
        tokens.append(Token(raw[ps:pe].decode("utf-8"), TokenKind.PragmaDirective, (ps, pe)))
    tokens.sort(key=lambda t: t.span[0])
    return TokenStream(tokens, StreamMode.AstTraversal)


def tokenize(snippet: CodeSnippet, mode="lexical") -> TokenStream:
    """Tokenize in ``mode`` ("lexical" or "ast").

    In ast mode, sources that do not parse fall back to the lexical
    tokenizer with a warning; standalone snippets often lack context.
    """
    if str(getattr(mode, "value", mode)).lower() in ("lexical",):
        return tokenize_lexical(snippet)
    try:
        return tokenize_ast(snippet)
    except ParseError as exc:
        log.warning("%s; falling back to lexical tokenization", exc)
        return tokenize_lexical(snippet)


# -- vocabulary ------------------------------------------------------------

CLS, SEP, UNK, PAD = "[CLS]", "[SEP]", "[UNK]", "[PAD]"
SPECIAL_TOKENS = (CLS, SEP, UNK, PAD)


@dataclass
class Vocabulary:
    """Dense token -> id map. Ids 0..3 are the special tokens."""

    token_to_id: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = {tok: i for i, tok in enumerate(SPECIAL_TOKENS)}
        for tok in sorted(self.token_to_id, key=self.token_to_id.get):
            if tok not in merged:
                merged[tok] = len(merged)
        self.token_to_id = merged
        self._id_to_token = list(merged)

    def __len__(self):
        return len(self.token_to_id)

    def __contains__(self, token):
        return token in self.token_to_id

    def id(self, token: str) -> int:
        return self.token_to_id.get(token, self.token_to_id[UNK])

    def token(self, idx: int) -> str:
        return self._id_to_token[idx]

    def add_tokens(self, new_tokens: Iterable[str]) -> int:
        added = 0
        for tok in new_tokens:
            if tok in self.token_to_id:
                continue
            self.token_to_id[tok] = len(self._id_to_token)
            self._id_to_token.append(tok)
            added += 1
        return added

    @classmethod
    def from_streams(cls, streams, min_count=1) -> "Vocabulary":
        """Build a vocabulary from token streams, most frequent first."""
        counts = {}
        for stream in streams:
            for tok in stream:
                counts[tok.text] = counts.get(tok.text, 0) + 1
        vocab = cls()
        ranked = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
        vocab.add_tokens(ranked)
        return vocab

    def to_json(self) -> str:
        return json.dumps(self._id_to_token, ensure_ascii=False)

    @classmethod
    def from_json(cls, text) -> "Vocabulary":
        vocab = cls()
        vocab.add_tokens(json.loads(text))
        return vocab


def add_tokens(vocab: Vocabulary, new_tokens) -> int:
    """Add tokens verbatim (no stripping or normalization); returns how many were new."""
    return vocab.add_tokens(new_tokens)


def encode(stream: TokenStream, vocab: Vocabulary, add_special: bool = True) -> list:
    ids = [vocab.id(tok.text) for tok in stream]
    if add_special:
        ids = [vocab.id(CLS)] + ids + [vocab.id(SEP)]
    return ids


def decode(ids, vocab: Vocabulary, skip_special: bool = True) -> list:
    special = {vocab.id(t) for t in SPECIAL_TOKENS} if skip_special else set()
    return [vocab.token(i) for i in ids if i not in special]
