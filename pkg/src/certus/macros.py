"""Macro expansion: rewrite macro calls into concrete `cases` expressions.

Expansion happens before binding and preflight. The built-in FUSE macro is
expanded in-process; other names are served by external provider processes
speaking a line-delimited JSON protocol over stdin/stdout:

    engine -> {"certus-macro-protocol": 1}
    provider -> {"ok": true, "macros": ["WEIGHTED_FUSE", ...]}
    engine -> {"id": 1, "macro": "...", "node": {"id", "kind"},
               "children": [{"id", "kind", "confidence"}, ...], "args": [...]}
    provider -> {"id": 1, "cases": "<source>"} or {"id": 1, "error": "<msg>"}

Built-in names shadow providers; among providers, registration order wins.
Every expansion is validated (parse, in-scope references, totality) before
it replaces the macro, and carries an `// expanded-from:` pragma so reports
can show where the cases came from.

Error codes: MAC001 unknown macro, MAC002 provider-reported error, MAC003
protocol or transport failure, MAC004 timeout, MAC005 expansion rejected
(bad usage or invalid expansion text).
"""

from __future__ import annotations

import itertools
import json
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass, replace
from typing import Sequence

from .binding import GLOBAL_SITE, Problem
from .errors import CertusSyntaxError, MacroError
from .fuzzy import DEFAULT_LADDER, LADDER_NAMES, Ladder
from .model import ArgumentGraph, Node
from .syntax import (
    And,
    Atom,
    Canonical,
    Case,
    Cases,
    MacroCall,
    NodeSource,
    OperatorDef,
    Origin,
    SetOutcome,
    annotation_refs,
    parse_annotation,
    parse_definitions,
    parse_node_source,
)

BUILTIN_VIA = "builtin"
DEFAULT_FUSE_CAP = 6
DEFAULT_TIMEOUT = 10.0
PROTOCOL_VERSION = 1


@dataclass(frozen=True)
class ChildInfo:
    ref: str
    kind: str  # claim | evidence | defeater, or a lowercased param type
    confidence: str | None = None  # assigned set name/literal when known

    @property
    def is_defeater(self) -> bool:
        return self.kind == "defeater"


@dataclass(frozen=True)
class MacroRequest:
    macro: str
    node_id: str
    node_kind: str
    children: tuple[ChildInfo, ...]
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class ExpandedExpression:
    source: str  # rendered cases text including the provenance pragma
    macro: str
    via: str
    ast: Cases  # parsed form, origin set


def _finish(ast: Cases, macro: str, via: str) -> ExpandedExpression:
    ast = replace(ast, origin=Origin(macro, via))
    return ExpandedExpression(ast.render(), macro, via, ast)


def fuse_signs(children: Sequence[ChildInfo]) -> list[int]:
    signs = []
    for child in children:
        if child.kind == "any":
            raise MacroError(
                f"FUSE cannot score parameter {child.ref!r} of type Any;"
                " declare it Premise or Defeater",
                code="MAC005",
            )
        signs.append(-1 if child.is_defeater else 1)
    return signs


def expand_fuse(
    children: Sequence[ChildInfo],
    ladder: Ladder = DEFAULT_LADDER,
    max_children: int = DEFAULT_FUSE_CAP,
) -> ExpandedExpression:
    """Enumerate every canonical combination of the children, scoring
    premises positively and defeaters negatively, and emit one case per
    combination whose outcome is the floor of the mean score."""
    n = len(children)
    if n == 0:
        raise MacroError("FUSE requires at least one child", code="MAC005")
    if n > max_children:
        raise MacroError(
            f"FUSE over {n} children would expand to {7 ** n} cases"
            f" (cap {max_children}); write an explicit cases expression"
            " or raise the cap",
            code="MAC005",
        )
    signs = fuse_signs(children)
    arms = []
    for combo in itertools.product(range(len(LADDER_NAMES)), repeat=n):
        atoms = tuple(
            Atom(child.ref, "is", Canonical(LADDER_NAMES[score]))
            for child, score in zip(children, combo)
        )
        condition = atoms[0] if n == 1 else And(atoms)
        total = sum(sign * score for sign, score in zip(signs, combo))
        outcome = ladder.unscore(total // n)
        arms.append(Case(condition, SetOutcome(Canonical(outcome))))
    return _finish(Cases(tuple(arms)), "FUSE", BUILTIN_VIA)


class MacroProvider:
    """Client for one external macro provider process."""

    def __init__(self, command: str, timeout: float = DEFAULT_TIMEOUT):
        self.command = command
        self.timeout = timeout
        self.macros: tuple[str, ...] = ()
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue = queue.Queue()
        self._next_id = 0

    def _fail(self, message: str, code: str = "MAC003"):
        raise MacroError(f"provider {self.command!r}: {message}", code=code)

    def start(self):
        try:
            self._proc = subprocess.Popen(
                shlex.split(self.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            self._fail(f"could not start: {exc}")

        def pump(stdout, lines):
            for line in stdout:
                lines.put(line)
            lines.put(None)

        threading.Thread(
            target=pump, args=(self._proc.stdout, self._lines), daemon=True
        ).start()
        self._send({"certus-macro-protocol": PROTOCOL_VERSION})
        reply = self._recv()
        if reply.get("ok") is not True or not isinstance(reply.get("macros"), list):
            self._fail(f"bad handshake reply: {reply}")
        self.macros = tuple(str(m) for m in reply["macros"])

    def _send(self, payload: dict):
        try:
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self._fail("process closed its input (exited?)")

    def _recv(self) -> dict:
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self._fail(f"no reply within {self.timeout:g}s", code="MAC004")
        if line is None:
            self._fail("process exited before replying")
        try:
            payload = json.loads(line)
        except json.JSONDecodeError:
            self._fail(f"reply is not valid JSON: {line.strip()!r}")
        if not isinstance(payload, dict):
            self._fail(f"reply is not an object: {line.strip()!r}")
        return payload

    def expand(self, request: MacroRequest) -> str:
        """One request/response exchange; returns the provider's cases text."""
        self._next_id += 1
        self._send(
            {
                "id": self._next_id,
                "macro": request.macro,
                "node": {"id": request.node_id, "kind": request.node_kind},
                "children": [
                    {"id": c.ref, "kind": c.kind, "confidence": c.confidence}
                    for c in request.children
                ],
                "args": list(request.args),
            }
        )
        reply = self._recv()
        if reply.get("id") != self._next_id:
            self._fail(f"reply id {reply.get('id')!r} does not match request")
        if "error" in reply:
            self._fail(str(reply["error"]), code="MAC002")
        cases = reply.get("cases")
        if not isinstance(cases, str):
            self._fail("reply carries neither 'cases' nor 'error'")
        return cases

    def close(self):
        if self._proc is None:
            return
        try:
            self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=2)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc_info):
        self.close()


def _validate_expansion(
    text: str,
    macro: str,
    via: str,
    context: str | None,
    allowed_refs: Sequence[str],
    ladder: Ladder,
    max_enumeration: int,
) -> ExpandedExpression:
    from .preflight import first_uncovered  # local: preflight also imports engine

    try:
        ast = parse_annotation(text, context)
    except CertusSyntaxError as exc:
        raise MacroError(
            f"expansion of #{macro} via {via} does not parse: {exc}", code="MAC005"
        ) from exc
    if not isinstance(ast, Cases):
        raise MacroError(
            f"expansion of #{macro} via {via} must be a cases expression",
            code="MAC005",
        )
    loose = [r for r in annotation_refs(ast) if r not in allowed_refs]
    if loose:
        raise MacroError(
            f"expansion of #{macro} via {via} references out-of-scope"
            f" name(s): {', '.join(loose)}",
            code="MAC005",
        )
    if via != BUILTIN_VIA:  # built-in expansions are total by construction
        uncovered = first_uncovered(
            ast, annotation_refs(ast), ladder, snap=True, limit=max_enumeration
        )
        if uncovered is not None:
            combo = ", ".join(f"{r}={v}" for r, v in uncovered)
            raise MacroError(
                f"expansion of #{macro} via {via} is not total:"
                f" no case matches {combo}",
                code="MAC005",
            )
    return _finish(ast, macro, via)


class _Expander:
    def __init__(
        self,
        graph: ArgumentGraph,
        providers: Sequence[MacroProvider],
        ladder: Ladder,
        max_children: int,
        max_enumeration: int,
    ):
        self.graph = graph
        self.providers = providers
        self.ladder = ladder
        self.max_children = max_children
        self.max_enumeration = max_enumeration
        self.problems: list[Problem] = []

    def dispatch(self, request: MacroRequest) -> ExpandedExpression:
        if not request.children:
            raise MacroError(
                f"macro #{request.macro} at {request.node_id!r} has no"
                " children to expand over",
                code="MAC005",
            )
        if request.macro == "FUSE":
            if request.args:
                raise MacroError(
                    "FUSE takes no arguments; it always fuses all children",
                    code="MAC005",
                )
            return expand_fuse(request.children, self.ladder, self.max_children)
        for provider in self.providers:
            if request.macro in provider.macros:
                text = provider.expand(request)
                return _validate_expansion(
                    text,
                    request.macro,
                    provider.command,
                    None,
                    [c.ref for c in request.children],
                    self.ladder,
                    self.max_enumeration,
                )
        raise MacroError(
            f"unknown macro #{request.macro}: not built in and no provider"
            " advertises it",
            code="MAC001",
        )

    def child_confidence(self, node: Node) -> str | None:
        if node.annotation is None:
            return None
        try:
            ns = parse_node_source(node.annotation, node.id)
        except CertusSyntaxError:
            return None
        ast = ns.annotation
        from .syntax import Assignment

        if isinstance(ast, Assignment):
            return ast.value.render()
        return None

    def expand_definition(self, definition: OperatorDef, where: str) -> OperatorDef:
        """Rewrite a definition whose body is a macro call; parameters act as
        the macro's children, typed by their declared parameter kinds."""
        if not isinstance(definition.body, MacroCall):
            return definition
        call = definition.body
        children = tuple(
            ChildInfo(p.name, p.kind.lower()) for p in definition.params
        )
        request = MacroRequest(call.name, where, "claim", children, call.args)
        expansion = self.dispatch(request)
        return OperatorDef(definition.name, definition.params, expansion.ast)

    def expand_node(self, node: Node) -> Node:
        if node.annotation is None:
            return node
        try:
            ns = parse_node_source(node.annotation, node.id)
        except CertusSyntaxError as exc:
            self.problems.append(Problem(node.id, "PARSE001", str(exc)))
            return node
        changed = False
        new_defs = []
        for definition in ns.definitions:
            try:
                rewritten = self.expand_definition(definition, node.id)
            except MacroError as exc:
                self.problems.append(Problem(node.id, exc.code, str(exc)))
                rewritten = definition
            changed = changed or rewritten is not definition
            new_defs.append(rewritten)
        annotation = ns.annotation
        if isinstance(annotation, MacroCall):
            children = tuple(
                ChildInfo(c.id, c.kind.value, self.child_confidence(c))
                for c in self.graph.children(node.id)
            )
            request = MacroRequest(
                annotation.name, node.id, node.kind.value, children, annotation.args
            )
            try:
                annotation = self.dispatch(request).ast
                changed = True
            except MacroError as exc:
                self.problems.append(Problem(node.id, exc.code, str(exc)))
        if not changed:
            return node
        source = NodeSource(tuple(new_defs), annotation, ns.allows).render()
        return Node(node.id, node.kind, node.text, source)

    def expand_globals(self, definitions: str | None) -> str | None:
        if not definitions:
            return definitions
        try:
            defs = parse_definitions(definitions)
        except CertusSyntaxError as exc:
            self.problems.append(
                Problem(GLOBAL_SITE, "PARSE001", f"definitions: {exc}")
            )
            return definitions
        new_defs = []
        changed = False
        for definition in defs:
            try:
                rewritten = self.expand_definition(definition, GLOBAL_SITE)
            except MacroError as exc:
                self.problems.append(Problem(GLOBAL_SITE, exc.code, str(exc)))
                rewritten = definition
            changed = changed or rewritten is not definition
            new_defs.append(rewritten)
        if not changed:
            return definitions
        return "\n".join(d.render() for d in new_defs)


def expand_all(
    graph: ArgumentGraph,
    providers: Sequence[MacroProvider] = (),
    ladder: Ladder = DEFAULT_LADDER,
    max_children: int = DEFAULT_FUSE_CAP,
    max_enumeration: int = 10**6,
) -> tuple[ArgumentGraph, list[Problem]]:
    """Replace every macro call (annotations and operator bodies) with its
    validated cases expansion. Untouched sources are preserved byte-for-byte,
    so a macro-free document round-trips unchanged and a second pass is a
    no-op."""
    expander = _Expander(graph, providers, ladder, max_children, max_enumeration)
    definitions = expander.expand_globals(graph.definitions)
    nodes = tuple(expander.expand_node(node) for node in graph.nodes)
    if definitions == graph.definitions and all(
        a is b for a, b in zip(nodes, graph.nodes)
    ):
        return graph, expander.problems
    return ArgumentGraph(nodes, graph.edges, definitions), expander.problems
