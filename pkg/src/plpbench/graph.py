"""Simplified program graphs built from tree-sitter parse trees.

Nodes are statements, identifier occurrences and call sites. Edges are

* ``AstChild``      -- containment (statement -> nested statement, call site
  or identifier), always forming a forest;
* ``NextStatement`` -- consecutive statements of the same block;
* ``DefUse``        -- nearest preceding write of a name to each later read,
  resolved linearly inside one function body (or the top level). Branches
  are not modelled: "preceding" means earlier in source order.

There are no interprocedural or memory edges.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from . import _parsing
from .errors import UnsupportedLanguage
from .tokenizer import CodeSnippet, Language


class NodeKind(str, enum.Enum):
    Statement = "Statement"
    Identifier = "Identifier"
    CallSite = "CallSite"


class EdgeKind(str, enum.Enum):
    AstChild = "AstChild"
    NextStatement = "NextStatement"
    DefUse = "DefUse"


@dataclass(frozen=True)
class GraphNode:
    id: int
    label: str
    kind: NodeKind
    span: tuple = (0, 0)


@dataclass(frozen=True)
class GraphEdge:
    src: int
    dst: int
    kind: EdgeKind


@dataclass
class ProgramGraph:
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)

    def edges_of(self, kind):
        kind = EdgeKind(kind)
        return [e for e in self.edges if e.kind is kind]

    def nodes_of(self, kind):
        kind = NodeKind(kind)
        return [n for n in self.nodes if n.kind is kind]

    def def_use_pairs(self):
        """(def label, use label) for every DefUse edge."""
        by_id = {n.id: n for n in self.nodes}
        return [(by_id[e.src].label, by_id[e.dst].label) for e in self.edges_of(EdgeKind.DefUse)]

    def to_dict(self):
        return {
            "nodes": [{"id": n.id, "label": n.label, "kind": n.kind.value, "span": list(n.span)} for n in self.nodes],
            "edges": [{"src": e.src, "dst": e.dst, "kind": e.kind.value} for e in self.edges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_json(cls, text) -> "ProgramGraph":
        d = json.loads(text)
        nodes = [GraphNode(n["id"], n["label"], NodeKind(n["kind"]), tuple(n.get("span", (0, 0)))) for n in d["nodes"]]
        edges = [GraphEdge(e["src"], e["dst"], EdgeKind(e["kind"])) for e in d["edges"]]
        return cls(nodes, edges)


_STATEMENT_TYPES = frozenset({
    "declaration", "function_definition", "class_definition", "decorated_definition",
    "type_definition", "template_declaration", "preproc_call", "preproc_include",
    "preproc_def", "preproc_function_def",
})
_CONTAINERS = frozenset({"translation_unit", "compound_statement", "module", "block", "declaration_list"})
_CALLS = frozenset({"call_expression", "call"})
_PATTERNS = frozenset({"pattern_list", "tuple_pattern", "list_pattern", "tuple", "list", "list_splat_pattern"})
_DECLARATORS = frozenset({
    "pointer_declarator", "array_declarator", "reference_declarator", "parenthesized_declarator",
    "init_declarator",
})


def _is_statement(node) -> bool:
    t = node.type
    if t in _STATEMENT_TYPES:
        return True
    return t.endswith("_statement") and t != "compound_statement"


class _Builder:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.graph = ProgramGraph()
        self.defs = {}

    def text(self, node):
        return self.raw[node.start_byte:node.end_byte].decode("utf-8")

    def add(self, label, kind, ts_node, parent):
        nid = len(self.graph.nodes)
        self.graph.nodes.append(GraphNode(nid, label, kind, (ts_node.start_byte, ts_node.end_byte)))
        if parent is not None:
            self.graph.edges.append(GraphEdge(parent, nid, EdgeKind.AstChild))
        return nid

    def edge(self, src, dst, kind):
        self.graph.edges.append(GraphEdge(src, dst, kind))

    # -- def/use events --

    def use(self, ident, parent):
        name = self.text(ident)
        nid = self.add(name, NodeKind.Identifier, ident, parent)
        if name in self.defs:
            self.edge(self.defs[name], nid, EdgeKind.DefUse)
        return nid

    def define(self, ident, parent):
        name = self.text(ident)
        nid = self.add(name, NodeKind.Identifier, ident, parent)
        self.defs[name] = nid
        return nid

    def define_target(self, node, parent):
        """Write to an assignment target; non-name targets (a[i], p->x) are reads."""
        if node.type == "identifier":
            self.define(node, parent)
        elif node.type in _PATTERNS or node.type == "parenthesized_expression":
            for child in node.named_children:
                self.define_target(child, parent)
        else:
            self.visit(node, parent)

    def define_declarator(self, node, parent):
        if node.type == "identifier":
            self.define(node, parent)
        elif node.type == "init_declarator":
            value = node.child_by_field_name("value")
            if value is not None:
                self.visit(value, parent)
            self.define_declarator(node.child_by_field_name("declarator"), parent)
        elif node.type == "array_declarator":
            size = node.child_by_field_name("size")
            if size is not None:
                self.visit(size, parent)
            self.define_declarator(node.child_by_field_name("declarator"), parent)
        elif node.type in _DECLARATORS:
            inner = node.child_by_field_name("declarator")
            if inner is None:
                inner = next((c for c in node.named_children if c.type in _DECLARATORS or c.type == "identifier"), None)
            if inner is not None:
                self.define_declarator(inner, parent)
        # function_declarator in a prototype: nothing is written

    def define_parameters(self, params, parent):
        if params is None:
            return
        for p in params.named_children:
            if p.type == "identifier":
                self.define(p, parent)
            elif p.type in ("parameter_declaration", "optional_parameter_declaration"):
                decl = p.child_by_field_name("declarator")
                if decl is not None:
                    self.define_declarator(decl, parent)
                default = p.child_by_field_name("default_value")
                if default is not None:
                    self.visit(default, parent)
            elif p.type in ("default_parameter", "typed_default_parameter"):
                self.visit(p.child_by_field_name("value"), parent)
                self.define(p.child_by_field_name("name"), parent)
            elif p.type in ("typed_parameter", "list_splat_pattern", "dictionary_splat_pattern"):
                ident = next((c for c in p.named_children if c.type == "identifier"), None)
                if ident is not None:
                    self.define(ident, parent)

    # -- traversal --

    def block(self, children, parent, chain=True):
        prev = None
        for child in children:
            nid = self.visit(child, parent)
            if chain and _is_statement(child):
                if prev is not None:
                    self.edge(prev, nid, EdgeKind.NextStatement)
                prev = nid

    def function(self, node, parent):
        t = node.type
        name_node = node.child_by_field_name("name")
        params = node.child_by_field_name("parameters")
        if name_node is None:
            decl = node.child_by_field_name("declarator")
            while decl is not None and decl.type != "function_declarator":
                decl = decl.child_by_field_name("declarator")
            if decl is not None:
                name_node = decl.child_by_field_name("declarator")
                params = decl.child_by_field_name("parameters")
        label = t if name_node is None else f"{t}:{self.text(name_node)}"
        nid = self.add(label, NodeKind.Statement, node, parent)
        saved, self.defs = self.defs, {}
        self.define_parameters(params, nid)
        body = node.child_by_field_name("body")
        if body is not None:
            if body.type in _CONTAINERS:
                self.block(body.named_children, nid)
            else:
                self.visit(body, nid)
        self.defs = saved
        return nid

    def visit(self, node, parent):
        """Visit ``node``; returns the graph id created for it, if any."""
        if node is None:
            return None
        t = node.type
        if t in ("comment", "string", "string_literal", "char_literal", "raw_string_literal"):
            return None
        if t in ("function_definition", "class_definition"):
            return self.function(node, parent)
        if t in _CONTAINERS:
            self.block(node.named_children, parent)
            return None
        if _is_statement(node):
            label = "pragma" if t == "preproc_call" and self.text(node).lstrip("# \t").startswith("pragma") else t
            nid = self.add(label, NodeKind.Statement, node, parent)
            if t.startswith("preproc"):
                return nid
            if t == "declaration":
                for d in node.children_by_field_name("declarator"):
                    self.define_declarator(d, nid)
            elif t in ("import_statement", "import_from_statement"):
                for ident in _parsing.walk(node):
                    if ident.type == "identifier":
                        self.define(ident, nid)
            elif t == "for_statement" and node.child_by_field_name("left") is not None:
                self.visit(node.child_by_field_name("right"), nid)
                self.define_target(node.child_by_field_name("left"), nid)
                for field_name in ("body", "alternative"):
                    self.visit(node.child_by_field_name(field_name), nid)
            else:
                self.block(node.named_children, nid, chain=False)
            return nid
        if t in _CALLS:
            fn = node.child_by_field_name("function")
            nid = self.add(self.text(fn), NodeKind.CallSite, node, parent)
            if fn.type in ("field_expression", "attribute"):
                self.visit(fn.child_by_field_name("argument") or fn.child_by_field_name("object"), nid)
            elif fn.type not in ("identifier", "qualified_identifier"):
                self.visit(fn, nid)
            self.visit(node.child_by_field_name("arguments"), nid)
            return nid
        if t in ("assignment_expression", "assignment", "augmented_assignment"):
            left, right = node.child_by_field_name("left"), node.child_by_field_name("right")
            op = node.child_by_field_name("operator")
            compound = t == "augmented_assignment" or (op is not None and self.text(op) != "=")
            self.visit(right, parent)
            if compound:
                if left.type == "identifier":
                    self.use(left, parent)
                    self.define(left, parent)
                else:
                    self.visit(left, parent)
            else:
                self.define_target(left, parent)
            return None
        if t == "update_expression":
            arg = node.child_by_field_name("argument")
            if arg is not None and arg.type == "identifier":
                self.use(arg, parent)
                self.define(arg, parent)
            else:
                self.visit(arg, parent)
            return None
        if t == "init_declarator":
            self.define_declarator(node, parent)
            return None
        if t in ("field_expression", "attribute"):
            self.visit(node.child_by_field_name("argument") or node.child_by_field_name("object"), parent)
            return None
        if t == "keyword_argument":
            self.visit(node.child_by_field_name("value"), parent)
            return None
        if t == "identifier":
            return self.use(node, parent)
        for child in node.named_children:
            self.visit(child, parent)
        return None


def build_program_graph(snippet: CodeSnippet) -> ProgramGraph:
    """Build the statement / identifier / call-site graph of a parseable snippet."""
    if snippet.language is Language.Unknown:
        raise UnsupportedLanguage("program graphs need a known language")
    raw = snippet.source.encode("utf-8")
    root = _parsing.parse(raw, snippet.language)
    builder = _Builder(raw)
    builder.block(root.named_children, None)
    return builder.graph
