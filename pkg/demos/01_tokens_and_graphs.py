"""
Tokens and program graphs
=========================

Source code can be split two ways: a grammar-free lexer, or the leaves of
a tree-sitter syntax tree. Both keep ``my_func`` whole.
"""

from plpbench.graph import EdgeKind, build_program_graph
from plpbench.tokenizer import CodeSnippet, Language, Vocabulary, encode, tokenize_ast, tokenize_lexical

snippet = CodeSnippet('# print string\ndef my_func():\n    print("Hello World")', Language.Python)

# Syntax-tree leaves in source order. Comments and string literals stay atomic.
print(tokenize_ast(snippet).texts)

# The lexer gives the same words plus byte spans and token kinds.
for tok in tokenize_lexical(snippet).tokens[:4]:
    print(f"{tok.kind.value:12} {tok.span} {tok.text!r}")

# OpenMP directives survive as a single token, continuation lines included.
loop = CodeSnippet("#pragma omp parallel for reduction(+:s)\nfor (i = 0; i < n; i++) s += a[i];", Language.C)
print(tokenize_ast(loop).tokens[0])

# A vocabulary maps tokens to ids; [CLS] and [SEP] frame each sequence.
vocab = Vocabulary.from_streams([tokenize_lexical(loop)])
print(encode(tokenize_lexical(loop), vocab)[:8])

# Program graphs add statement order and def-use edges on top of the tree.
graph = build_program_graph(CodeSnippet("int a = 1;\nint b = a + 2;\na = b;", Language.C))
print(len(graph.nodes), "nodes;", len(graph.edges_of(EdgeKind.DefUse)), "def-use edges")
print(graph.def_use_pairs())
