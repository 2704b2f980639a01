"""Resolve parsed annotations against the graph.

Binding enforces the scope rules: conditions and outcomes may reference only
direct children of the annotated node, operator calls resolve by lexical
search (the node itself, then ancestors breadth-first in document order, then
the document's global definitions), and operator bodies are inlined with the
call's concrete arguments so later stages see plain `cases` expressions.

Error codes raised here: REF001 unresolved or out-of-scope reference,
OP001 unknown operator, OP002 arity mismatch, OP003 parameter-type mismatch,
OP004 recursive operator definition, MAC001 unexpanded macro.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Union

from .errors import BindError, CertusSyntaxError
from .fuzzy import DEFAULT_LADDER, FuzzySet, Ladder
from .model import ArgumentGraph, NodeKind
from .syntax import (
    And,
    Annotation,
    Assignment,
    Atom,
    Canonical,
    Case,
    Cases,
    DirectProp,
    ExtremumOutcome,
    MacroCall,
    NodeSource,
    OperatorCall,
    OperatorDef,
    Or,
    RefOutcome,
    SetExpr,
    SetOutcome,
    annotation_refs,
    parse_definitions,
    parse_node_source,
)

GLOBAL_SITE = ""  # scope key for document-level definitions


@dataclass(frozen=True)
class BoundAssign:
    expr: SetExpr
    value: FuzzySet


@dataclass(frozen=True)
class BoundDirect:
    source: str  # a direct child id


@dataclass(frozen=True)
class BoundCases:
    ast: Cases  # fully inlined; every reference is a direct child id
    mechanism: str  # cases | operator | macro-expanded
    name: str | None = None  # operator or macro name when applicable
    snap: bool = False  # snap child values to the ladder before matching
    refs: tuple[str, ...] = ()


Bound = Union[BoundAssign, BoundDirect, BoundCases]


def _kind_accepts(param_kind: str, node_kind: NodeKind) -> bool:
    if param_kind == "Any":
        return True
    if param_kind == "Defeater":
        return node_kind is NodeKind.DEFEATER
    return node_kind.is_premise  # Premise = claim or evidence


class DefinitionScopes:
    """Operator-definition lookup across the node/ancestor/global scopes."""

    def __init__(
        self,
        graph: ArgumentGraph,
        sources: dict[str, NodeSource],
        global_defs: tuple[OperatorDef, ...],
    ):
        self._graph = graph
        self._defs = {nid: ns.definitions for nid, ns in sources.items()}
        self._defs[GLOBAL_SITE] = global_defs

    def search_order(self, site: str) -> list[str]:
        if site == GLOBAL_SITE:
            return [GLOBAL_SITE]
        order = [site]
        seen = {site}
        queue = deque([site])
        while queue:
            for parent in self._graph.parent_ids(queue.popleft()):
                if parent not in seen:
                    seen.add(parent)
                    order.append(parent)
                    queue.append(parent)
        order.append(GLOBAL_SITE)
        return order

    def resolve(self, site: str, name: str) -> tuple[OperatorDef, str]:
        """Find `name` starting from `site`; returns the definition and the
        scope it was found in."""
        for scope in self.search_order(site):
            for d in self._defs.get(scope, ()):
                if d.name == name:
                    return d, scope
        raise BindError(f"unknown operator {name!r}", code="OP001")

    def all_definitions(self) -> list[tuple[str, OperatorDef]]:
        pairs = [(site, d) for site, defs in self._defs.items() for d in defs]
        return sorted(pairs, key=lambda p: (p[0], p[1].name))


def _substitute_condition(cond, mapping):
    if isinstance(cond, Atom):
        right = cond.right
        if isinstance(right, str):
            right = mapping[right]
        return Atom(mapping[cond.left], cond.op, right)
    items = tuple(_substitute_condition(i, mapping) for i in cond.items)
    return type(cond)(items)


def _substitute_outcome(outcome, mapping):
    if isinstance(outcome, RefOutcome):
        return RefOutcome(mapping[outcome.name])
    if isinstance(outcome, ExtremumOutcome):
        return ExtremumOutcome(outcome.mode, tuple(mapping[r] for r in outcome.refs))
    return outcome


def substitute_cases(ast: Cases, mapping: dict[str, str]) -> Cases:
    """Rewrite every reference through `mapping` (param name -> node id)."""
    cases = tuple(
        Case(
            _substitute_condition(c.condition, mapping),
            _substitute_outcome(c.outcome, mapping),
        )
        for c in ast.cases
    )
    otherwise = (
        _substitute_outcome(ast.otherwise, mapping)
        if ast.otherwise is not None
        else None
    )
    return Cases(cases, otherwise, ast.origin)


def inline_operator_call(
    call: OperatorCall,
    site: str,
    graph: ArgumentGraph,
    scopes: DefinitionScopes,
    _stack: tuple[tuple[str, str], ...] = (),
) -> Cases:
    """Resolve `call` from `site` and inline the body with concrete node ids,
    recursing through operator-call bodies."""
    definition, found_at = scopes.resolve(site, call.name)
    key = (definition.name, found_at)
    if key in _stack:
        chain = " -> ".join(name for name, _ in _stack + (key,))
        raise BindError(f"recursive operator definition: {chain}", code="OP004")
    if len(call.args) != len(definition.params):
        raise BindError(
            f"operator {call.name!r} takes {len(definition.params)} argument(s),"
            f" got {len(call.args)}",
            code="OP002",
        )
    for param, arg in zip(definition.params, call.args):
        kind = graph.node(arg).kind
        if not _kind_accepts(param.kind, kind):
            raise BindError(
                f"operator {call.name!r} parameter {param.name!r} requires"
                f" {param.kind}, but {arg!r} is a {kind.value}",
                code="OP003",
            )
    mapping = {p.name: a for p, a in zip(definition.params, call.args)}
    body = definition.body
    if isinstance(body, Cases):
        return substitute_cases(body, mapping)
    if isinstance(body, OperatorCall):
        inner = OperatorCall(body.name, tuple(mapping[a] for a in body.args))
        return inline_operator_call(
            inner, found_at, graph, scopes, _stack + (key,)
        )
    raise BindError(
        f"operator {call.name!r} body calls macro #{body.name},"
        " which has not been expanded",
        code="MAC001",
    )


def bind_annotation(
    ast: Annotation,
    graph: ArgumentGraph,
    node_id: str,
    scopes: DefinitionScopes,
    ladder: Ladder = DEFAULT_LADDER,
) -> Bound:
    """Bind one annotation at its node; raises BindError on scope violations."""
    children = set(graph.child_ids(node_id))

    def require_child(ref: str, role: str):
        if ref not in children:
            detail = (
                "not a node in this document"
                if ref not in graph
                else f"not a direct child of {node_id!r}"
            )
            raise BindError(f"{role} {ref!r} is {detail}", code="REF001")

    if isinstance(ast, Assignment):
        return BoundAssign(ast.value, ast.value.build(ladder))
    if isinstance(ast, DirectProp):
        require_child(ast.source, "propagation source")
        return BoundDirect(ast.source)
    if isinstance(ast, Cases):
        refs = annotation_refs(ast)
        for ref in refs:
            require_child(ref, "reference")
        if ast.origin is not None:
            return BoundCases(ast, "macro-expanded", ast.origin.macro, True, tuple(refs))
        return BoundCases(ast, "cases", None, False, tuple(refs))
    if isinstance(ast, OperatorCall):
        for arg in ast.args:
            require_child(arg, "operator argument")
        inlined = inline_operator_call(ast, node_id, graph, scopes)
        refs = tuple(annotation_refs(inlined))
        return BoundCases(inlined, "operator", ast.name, inlined.origin is not None, refs)
    assert isinstance(ast, MacroCall)
    raise BindError(
        f"macro #{ast.name} has not been expanded; run expansion first",
        code="MAC001",
    )


@dataclass(frozen=True)
class Problem:
    node_id: str  # GLOBAL_SITE for document-level definition problems
    code: str
    message: str


@dataclass
class GraphAnalysis:
    """Parsed and bound view of a graph, with any parse/bind problems."""

    graph: ArgumentGraph
    ladder: Ladder
    sources: dict[str, NodeSource]
    global_defs: tuple[OperatorDef, ...]
    scopes: DefinitionScopes
    bound: dict[str, Bound]
    problems: list[Problem]

    def allows(self, node_id: str) -> frozenset[str]:
        ns = self.sources.get(node_id)
        return ns.allows if ns is not None else frozenset()


def analyze_graph(graph: ArgumentGraph, ladder: Ladder = DEFAULT_LADDER) -> GraphAnalysis:
    """Parse all annotation sources and bind them; collect problems instead
    of stopping at the first."""
    problems: list[Problem] = []
    global_defs: tuple[OperatorDef, ...] = ()
    if graph.definitions:
        try:
            global_defs = tuple(parse_definitions(graph.definitions))
        except CertusSyntaxError as exc:
            problems.append(Problem(GLOBAL_SITE, "PARSE001", f"definitions: {exc}"))
    sources: dict[str, NodeSource] = {}
    for node in graph.nodes:
        if node.annotation is None:
            continue
        try:
            sources[node.id] = parse_node_source(node.annotation, node.id)
        except CertusSyntaxError as exc:
            problems.append(Problem(node.id, "PARSE001", str(exc)))
    scopes = DefinitionScopes(graph, sources, global_defs)
    bound: dict[str, Bound] = {}
    for node in graph.nodes:
        ns = sources.get(node.id)
        if ns is None or ns.annotation is None:
            continue
        try:
            bound[node.id] = bind_annotation(
                ns.annotation, graph, node.id, scopes, ladder
            )
        except BindError as exc:
            problems.append(Problem(node.id, exc.code, str(exc)))
    return GraphAnalysis(graph, ladder, sources, global_defs, scopes, bound, problems)


def demanded_ids(graph: ArgumentGraph, bound: dict[str, Bound]) -> list[str]:
    """Nodes evaluation must produce values for: everything reachable from
    the roots, not descending past assignments (shorting) or missing
    annotations."""
    order: list[str] = []
    seen: set[str] = set()
    queue = deque(n.id for n in graph.roots())
    while queue:
        node_id = queue.popleft()
        if node_id in seen:
            continue
        seen.add(node_id)
        order.append(node_id)
        b = bound.get(node_id)
        if b is None or isinstance(b, BoundAssign):
            continue
        queue.extend(graph.child_ids(node_id))
    return order
