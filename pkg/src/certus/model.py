"""Argument graphs: typed DAGs of claims, evidence, and defeaters.

Documents are YAML (or JSON, which YAML subsumes) with two top-level keys:

    definitions: |        # optional, global operator definitions
      with lowOrHigh(p1: Premise, p2: Premise) as cases { ... }
    nodes:
      - id: C0
        kind: claim
        text: The system is acceptably safe
        children: [C1, E3]
        certus: lowOrHigh(C1, E3)

Node annotations (`certus`) are stored unparsed; parsing and binding happen
in later stages so a structurally valid graph can always be inspected.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

import yaml

from .errors import DocumentError, InvalidSetError, LadderError
from .fuzzy import LADDER_NAMES, FuzzySet, Ladder, require_valid
from .syntax import RESERVED_WORDS, Canonical, parse_set_literal


class NodeKind(enum.Enum):
    CLAIM = "claim"
    EVIDENCE = "evidence"
    DEFEATER = "defeater"

    @property
    def is_premise(self) -> bool:
        """Claims and evidence support their parent; defeaters oppose it."""
        return self is not NodeKind.DEFEATER


_IDENT = re.compile(r"[A-Za-z_]\w*$")
_NODE_KEYS = {"id", "kind", "text", "children", "certus"}


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    text: str = ""
    annotation: str | None = None


@dataclass(frozen=True)
class ArgumentGraph:
    nodes: tuple[Node, ...]
    edges: dict[str, tuple[str, ...]]  # parent id -> child ids, document order
    definitions: str | None = None
    _by_id: dict[str, Node] = field(init=False, repr=False, compare=False)
    _parents: dict[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_id = {n.id: n for n in self.nodes}
        parents: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for parent in self.nodes:
            for child in self.edges.get(parent.id, ()):
                parents[child].append(parent.id)
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(
            self, "_parents", {k: tuple(v) for k, v in parents.items()}
        )

    def node(self, node_id: str) -> Node:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise DocumentError(f"unknown node id {node_id!r}") from None

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._by_id

    def children(self, node_id: str) -> list[Node]:
        self.node(node_id)
        return [self._by_id[c] for c in self.edges.get(node_id, ())]

    def child_ids(self, node_id: str) -> tuple[str, ...]:
        self.node(node_id)
        return self.edges.get(node_id, ())

    def parent_ids(self, node_id: str) -> tuple[str, ...]:
        self.node(node_id)
        return self._parents[node_id]

    def roots(self) -> list[Node]:
        return [n for n in self.nodes if not self._parents[n.id]]

    def leaves(self) -> list[Node]:
        return [n for n in self.nodes if not self.edges.get(n.id, ())]


def _fail(message: str, where: str | None = None):
    raise DocumentError(f"{where}: {message}" if where else message)


def load_document(source: str) -> ArgumentGraph:
    """Parse document text into an ArgumentGraph; annotations stay unparsed."""
    try:
        data = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        raise DocumentError(f"malformed document: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        _fail("malformed document: top level must be a mapping")
    unknown = set(data) - {"definitions", "nodes"}
    if unknown:
        _fail(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    definitions = data.get("definitions")
    if definitions is not None and not isinstance(definitions, str):
        _fail("definitions must be a string", "definitions")
    raw_nodes = data.get("nodes")
    if raw_nodes is None:
        _fail("missing required key 'nodes'")
    if not isinstance(raw_nodes, list):
        _fail("nodes must be a list")

    nodes: list[Node] = []
    edges: dict[str, tuple[str, ...]] = {}
    seen: set[str] = set()
    for index, raw in enumerate(raw_nodes):
        where = f"nodes[{index}]"
        if not isinstance(raw, dict):
            _fail("node must be a mapping", where)
        node_id = raw.get("id")
        if node_id is not None:
            where = f"{where} (id {node_id!r})"
        unknown = set(raw) - _NODE_KEYS
        if unknown:
            _fail(f"unknown key(s): {', '.join(sorted(unknown))}", where)
        if not isinstance(node_id, str) or not _IDENT.match(node_id):
            _fail("id must be an identifier", where)
        if node_id in RESERVED_WORDS or node_id in LADDER_NAMES:
            _fail(f"id {node_id!r} collides with a reserved word", where)
        if node_id in seen:
            _fail(f"duplicate id {node_id!r}", where)
        seen.add(node_id)
        kind_text = raw.get("kind")
        try:
            kind = NodeKind(kind_text)
        except ValueError:
            _fail(
                f"kind must be one of claim, evidence, defeater; got {kind_text!r}",
                where,
            )
        text = raw.get("text", "")
        if not isinstance(text, str):
            _fail("text must be a string", where)
        annotation = raw.get("certus")
        if annotation is not None and not isinstance(annotation, str):
            _fail("certus must be a string", where)
        children = raw.get("children", [])
        if not isinstance(children, list) or not all(
            isinstance(c, str) for c in children
        ):
            _fail("children must be a list of node ids", where)
        if len(set(children)) != len(children):
            _fail("children contains a duplicate id", where)
        nodes.append(Node(node_id, kind, text, annotation))
        if children:
            edges[node_id] = tuple(children)

    for parent, children in edges.items():
        for child in children:
            if child not in seen:
                _fail(
                    f"edge to missing id {child!r}", f"node {parent!r}"
                )
    return ArgumentGraph(tuple(nodes), edges, definitions)


def _literal_block_str(dumper, value):
    if "\n" in value:
        return dumper.represent_scalar("tag:yaml.org,2002:str", value, style="|")
    return dumper.represent_scalar("tag:yaml.org,2002:str", value)


class _Dumper(yaml.SafeDumper):
    pass


_Dumper.add_representer(str, _literal_block_str)


def serialize_document(graph: ArgumentGraph) -> str:
    """Emit document text that load_document reads back to an equal graph."""
    data: dict = {}
    if graph.definitions is not None:
        data["definitions"] = graph.definitions
    data["nodes"] = []
    for node in graph.nodes:
        entry: dict = {"id": node.id, "kind": node.kind.value}
        if node.text:
            entry["text"] = node.text
        children = graph.edges.get(node.id)
        if children:
            entry["children"] = list(children)
        if node.annotation is not None:
            entry["certus"] = node.annotation
        data["nodes"].append(entry)
    return yaml.dump(
        data, Dumper=_Dumper, sort_keys=False, allow_unicode=True, width=100000
    )


def check_acyclic(graph: ArgumentGraph) -> list[str] | None:
    """None iff the graph is a DAG; otherwise one cycle as an id sequence
    starting and ending at the same node."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = {n.id: WHITE for n in graph.nodes}
    stack: list[str] = []

    def visit(start: str) -> list[str] | None:
        # iterative DFS keeping the grey path in `stack`
        todo: list[tuple[str, int]] = [(start, 0)]
        stack.append(start)
        color[start] = GREY
        while todo:
            node_id, child_index = todo[-1]
            children = graph.edges.get(node_id, ())
            if child_index == len(children):
                todo.pop()
                stack.pop()
                color[node_id] = BLACK
                continue
            todo[-1] = (node_id, child_index + 1)
            child = children[child_index]
            if color[child] == GREY:
                return stack[stack.index(child) :] + [child]
            if color[child] == WHITE:
                color[child] = GREY
                stack.append(child)
                todo.append((child, 0))
        return None

    for node in graph.nodes:
        if color[node.id] == WHITE:
            cycle = visit(node.id)
            if cycle is not None:
                return cycle
    return None


def load_ladder(source: str) -> Ladder:
    """Read a canonical-ladder override: a mapping from the seven names to set
    literals, or to raw breakpoint lists [[x, mu], ...]."""
    try:
        data = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        raise LadderError(f"malformed ladder file: {exc}") from exc
    if not isinstance(data, dict):
        raise LadderError("ladder file must be a mapping of name -> set")
    sets: dict[str, FuzzySet] = {}
    for name, value in data.items():
        if isinstance(value, str):
            expr = parse_set_literal(value)
            if isinstance(expr, Canonical):
                raise LadderError(
                    f"{name}: define the set with a literal, not a canonical name"
                )
            sets[name] = expr.build(None)
        elif isinstance(value, list):
            try:
                fs = FuzzySet(tuple((float(x), float(mu)) for x, mu in value))
                require_valid(fs)
            except (InvalidSetError, TypeError, ValueError) as exc:
                raise LadderError(f"{name}: {exc}") from exc
            sets[name] = fs
        else:
            raise LadderError(f"{name}: expected a set literal or breakpoint list")
    return Ladder(sets)
