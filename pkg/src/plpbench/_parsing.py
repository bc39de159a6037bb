"""tree-sitter glue shared by the tokenizer, the program-graph builder and CodeBLEU."""

import functools
import re

import tree_sitter
import tree_sitter_c
import tree_sitter_cpp
import tree_sitter_python

from .errors import EmptySource, ParseError, UnsupportedLanguage

_GRAMMARS = {
    "C": tree_sitter_c.language,
    "Cpp": tree_sitter_cpp.language,
    "Python": tree_sitter_python.language,
}

# Pragmas are matched on raw text; C grammars split them over preproc nodes.
# A trailing backslash continues the directive onto the next line.
PRAGMA_RE = re.compile(rb"^[ \t]*(#[ \t]*pragma\b(?:[^\n]*\\\r?\n)*[^\n]*)", re.MULTILINE)


@functools.lru_cache(maxsize=None)
def _language(name):
    return tree_sitter.Language(_GRAMMARS[name]())


def parser_for(language):
    """Fresh parser for a ``Language`` value (parsers are not thread-safe)."""
    name = getattr(language, "value", language)
    if name not in _GRAMMARS:
        raise UnsupportedLanguage(f"no grammar for language {name!r}")
    return tree_sitter.Parser(_language(name))


def first_error(node):
    """Byte offset of the first ERROR or MISSING node, or None."""
    if not node.has_error:
        return None
    stack = [node]
    while stack:
        n = stack.pop()
        if n.is_error or n.is_missing:
            return n.start_byte
        stack.extend(reversed([c for c in n.children if c.has_error or c.is_missing]))
    return node.start_byte


def parse(source: bytes, language):
    """Parse ``source`` and return the root node, raising ParseError on any error node."""
    if not source.strip():
        raise EmptySource("source is empty")
    tree = parser_for(language).parse(source)
    pos = first_error(tree.root_node)
    if pos is not None:
        raise ParseError(pos)
    return tree.root_node


def pragma_spans(source: bytes, language):
    """(start, end) byte spans of ``#pragma`` directives; none for Python."""
    name = getattr(language, "value", language)
    if name == "Python":
        return []
    spans = []
    for m in PRAGMA_RE.finditer(source):
        start, end = m.span(1)
        while end > start and source[end - 1:end] in (b" ", b"\t", b"\r"):
            end -= 1
        spans.append((start, end))
    return spans


def walk(node):
    """Iterative pre-order traversal."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children))
