"""Confidence propagation: evaluate bound annotations up the DAG.

Evaluation is demand-driven from the roots. Assignments stop the descent
(shorting, when the node has children); every other annotated node consumes
its children's computed sets. Nodes cut off by a short are left unevaluated
and explain() reports the shorting ancestor instead of a value.

assess() assumes preflight passed; the defensive EvalErrors it raises on a
no-matching-case or missing child value indicate a checker bug, not a user
error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .binding import (
    Bound,
    BoundAssign,
    BoundCases,
    BoundDirect,
    GraphAnalysis,
    demanded_ids,
    substitute_cases,
)
from .errors import EvalError
from .fuzzy import (
    DEFAULT_LADDER,
    FuzzySet,
    Ladder,
    compare,
    contains_set,
    describe,
    extremum,
    overlaps,
    rank,
    subset_of,
)
from .model import ArgumentGraph
from .syntax import (
    And,
    Atom,
    Cases,
    Condition,
    ExtremumOutcome,
    OperatorDef,
    Outcome,
    RefOutcome,
    SetOutcome,
)

Env = dict[str, FuzzySet]

_SET_PREDICATES = {"is": subset_of, "contains": contains_set, "overlaps": overlaps}


def condition_holds(cond: Condition, env: Env, ladder: Ladder) -> bool:
    if isinstance(cond, Atom):
        left = env[cond.left]
        right = (
            env[cond.right]
            if isinstance(cond.right, str)
            else cond.right.build(ladder)
        )
        predicate = _SET_PREDICATES.get(cond.op)
        if predicate is not None:
            return predicate(left, right)
        return compare(left, right, cond.op)
    results = (condition_holds(item, env, ladder) for item in cond.items)
    return all(results) if isinstance(cond, And) else any(results)


def _outcome_value(outcome: Outcome, env: Env, ladder: Ladder) -> FuzzySet:
    if isinstance(outcome, SetOutcome):
        return outcome.expr.build(ladder)
    if isinstance(outcome, RefOutcome):
        return env[outcome.name]
    assert isinstance(outcome, ExtremumOutcome)
    return extremum([env[r] for r in outcome.refs], outcome.mode)


def evaluate_cases(
    ast: Cases, env: Env, ladder: Ladder = DEFAULT_LADDER
) -> tuple[FuzzySet, Union[int, str]]:
    """First case (in order of appearance) whose condition holds wins;
    `otherwise` matches when no case does. Returns (value, matched index or
    "otherwise")."""
    for index, case in enumerate(ast.cases):
        if condition_holds(case.condition, env, ladder):
            return _outcome_value(case.outcome, env, ladder), index
    if ast.otherwise is not None:
        return _outcome_value(ast.otherwise, env, ladder), "otherwise"
    raise EvalError(
        "no matching case and no otherwise; preflight should have caught this"
    )


def apply_operator(
    definition: OperatorDef,
    args: list[str],
    env: Env,
    ladder: Ladder = DEFAULT_LADDER,
) -> FuzzySet:
    """Evaluate an operator body with `args` bound to its parameters.

    Arity and parameter kinds are checked at bind time; this assumes them.
    """
    if not isinstance(definition.body, Cases):
        raise EvalError(
            f"operator {definition.name!r} body must be inlined to cases first"
        )
    mapping = {p.name: a for p, a in zip(definition.params, args)}
    value, _ = evaluate_cases(
        substitute_cases(definition.body, mapping), env, ladder
    )
    return value


@dataclass(frozen=True)
class Snap:
    child: str
    original: str  # description of the pre-snap set
    snapped_to: str  # canonical name used for matching


@dataclass(frozen=True)
class Trace:
    mechanism: str  # assignment | shorting | direct | cases | operator | macro-expanded
    matched: Union[int, str, None] = None  # case index or "otherwise"
    matched_text: str | None = None  # source of the winning arm
    inputs: tuple[tuple[str, FuzzySet], ...] = ()  # child values consumed
    name: str | None = None  # operator or macro name
    snaps: tuple[Snap, ...] = ()


@dataclass
class Assessment:
    results: dict[str, FuzzySet]  # demanded nodes, roots first
    traces: dict[str, Trace]
    ladder: Ladder
    shorted_by: dict[str, str]  # unevaluated node -> shorting ancestor

    def to_dict(self) -> dict:
        out: dict = {}
        for node_id, value in self.results.items():
            trace = self.traces[node_id]
            entry: dict = {
                "set": describe(value, self.ladder),
                "rank": round(rank(value), 12),
                "trace": {"mechanism": trace.mechanism},
            }
            t = entry["trace"]
            if trace.name is not None:
                t["name"] = trace.name
            if trace.matched is not None:
                t["matched"] = trace.matched
                t["matched_text"] = trace.matched_text
            if trace.inputs:
                t["inputs"] = {
                    child: describe(v, self.ladder) for child, v in trace.inputs
                }
            if trace.snaps:
                t["snaps"] = [
                    {
                        "child": s.child,
                        "original": s.original,
                        "snapped_to": s.snapped_to,
                    }
                    for s in trace.snaps
                ]
            out[node_id] = entry
        return out


def _evaluation_order(graph: ArgumentGraph, bound: dict[str, Bound]) -> list[str]:
    """Demanded nodes, children before parents (depth-first postorder)."""

    def edges(node_id: str):
        b = bound.get(node_id)
        if b is None or isinstance(b, BoundAssign):
            return ()
        return graph.child_ids(node_id)

    order: list[str] = []
    seen: set[str] = set()
    for root in graph.roots():
        if root.id in seen:
            continue
        seen.add(root.id)
        stack = [(root.id, iter(edges(root.id)))]
        while stack:
            node_id, children = stack[-1]
            advanced = False
            for child in children:
                if child not in seen:
                    seen.add(child)
                    stack.append((child, iter(edges(child))))
                    advanced = True
                    break
            if not advanced:
                order.append(node_id)
                stack.pop()
    return order


def assess(analysis: GraphAnalysis) -> Assessment:
    """Evaluate every demanded node; see module docstring for the contract."""
    graph, bound, ladder = analysis.graph, analysis.bound, analysis.ladder
    if analysis.problems:
        raise EvalError(
            "cannot assess a graph with parse or bind problems; run preflight"
        )
    results: dict[str, FuzzySet] = {}
    traces: dict[str, Trace] = {}

    def child_value(node_id: str, child: str) -> FuzzySet:
        if child not in results:
            raise EvalError(
                f"missing value for {child!r} while evaluating {node_id!r};"
                " preflight should have caught this"
            )
        return results[child]

    for node_id in _evaluation_order(graph, bound):
        b = bound.get(node_id)
        if b is None:
            raise EvalError(
                f"demanded node {node_id!r} has no annotation;"
                " preflight should have caught this"
            )
        if isinstance(b, BoundAssign):
            mechanism = "shorting" if graph.child_ids(node_id) else "assignment"
            results[node_id] = b.value
            traces[node_id] = Trace(mechanism)
        elif isinstance(b, BoundDirect):
            value = child_value(node_id, b.source)
            results[node_id] = value
            traces[node_id] = Trace("direct", inputs=((b.source, value),))
        else:
            env = {c: child_value(node_id, c) for c in b.refs}
            inputs = tuple(env.items())
            snaps: list[Snap] = []
            if b.snap:
                for child, value in env.items():
                    if ladder.name_of(value) is None:
                        name = ladder.nearest(value)
                        snaps.append(
                            Snap(child, describe(value, ladder), name)
                        )
                        env[child] = ladder.set_of(name)
            value, matched = evaluate_cases(b.ast, env, ladder)
            if matched == "otherwise":
                matched_text = f"otherwise -> {b.ast.otherwise.render()}"
            else:
                matched_text = b.ast.cases[matched].render()
            results[node_id] = value
            traces[node_id] = Trace(
                b.mechanism, matched, matched_text, inputs, b.name, tuple(snaps)
            )

    # order results roots-first for reporting
    report_order = demanded_ids(graph, bound)
    results = {nid: results[nid] for nid in report_order}
    traces = {nid: traces[nid] for nid in report_order}

    shorted_by: dict[str, str] = {}
    for node_id in report_order:
        if isinstance(bound.get(node_id), BoundAssign):
            queue = list(graph.child_ids(node_id))
            while queue:
                below = queue.pop(0)
                if below in results or below in shorted_by:
                    continue
                shorted_by[below] = node_id
                queue.extend(graph.child_ids(below))
    return Assessment(results, traces, ladder, shorted_by)


def mechanism_text(trace: Trace) -> str:
    """One-line account of how a result was produced, e.g. for reports."""
    if trace.mechanism == "assignment":
        return "assigned"
    if trace.mechanism == "shorting":
        return "assigned (shorting; children not evaluated)"
    if trace.mechanism == "direct":
        return f"propagated from {trace.inputs[0][0]}"
    what = {
        "cases": "cases",
        "operator": f"operator {trace.name}",
        "macro-expanded": f"macro {trace.name} (expanded)",
    }[trace.mechanism]
    arm = (
        "otherwise"
        if trace.matched == "otherwise"
        else f"case {trace.matched + 1}"
    )
    return f"{what}, {arm}: {trace.matched_text}"


def explain(assessment: Assessment, node_id: str) -> str:
    """Human-readable derivation of one node's result, recursing through the
    consumed child values down to the assignments."""
    if node_id not in assessment.results:
        if node_id in assessment.shorted_by:
            raise EvalError(
                f"{node_id} not evaluated (shorted at {assessment.shorted_by[node_id]})"
            )
        raise EvalError(f"{node_id} has no result")

    ladder = assessment.ladder
    lines: list[str] = []

    def walk(nid: str, depth: int):
        trace = assessment.traces[nid]
        value = describe(assessment.results[nid], ladder)
        lines.append(f"{'  ' * depth}{nid} = {value} -- {mechanism_text(trace)}")
        for snap in trace.snaps:
            lines.append(
                f"{'  ' * (depth + 1)}({snap.child} snapped from"
                f" {snap.original} to {snap.snapped_to} for matching)"
            )
        for child, _ in trace.inputs:
            walk(child, depth + 1)

    walk(node_id, 0)
    return "\n".join(lines)
