"""Static checks run after macro expansion and before assessment.

Finding codes (stable):
    CYC001   cycle in the graph (all other checks skipped)
    PARSE001 annotation or definition source does not parse
    REF001   unresolved or out-of-scope reference
    OP001    unknown operator          OP002  arity mismatch
    OP003    parameter-type mismatch   OP004  recursive operator definition
    MAC001-MAC005 macro expansion problems (see macros module)
    ANN001   node is demanded by evaluation but has no annotation
    COV001   root-to-leaf path with no confidence assignment
    SHORT001 assignment on a non-leaf node (shorting), warning
    TOT001   cases expression is not total over the vocabulary
    DEF000   defeater rules skipped: enumeration over the limit, warning
    DEF001   raising a defeater raises the output (anti-monotonicity)
    DEF002   raising a premise lowers the output (monotonicity), warning
    DEF003   output above `low` while a defeater is `certain`

If run_preflight passes, assess() cannot hit a no-matching-case or
unresolved-reference error on the same graph.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field

from .binding import (
    Bound,
    BoundAssign,
    BoundCases,
    GLOBAL_SITE,
    GraphAnalysis,
    Problem,
    analyze_graph,
    demanded_ids,
)
from .engine import _outcome_value, condition_holds, evaluate_cases
from .errors import EvalError
from .fuzzy import (
    DEFAULT_LADDER,
    FuzzySet,
    LADDER_NAMES,
    Ladder,
    describe,
    rank,
    subset_of,
)
from .model import ArgumentGraph, NodeKind, check_acyclic
from .syntax import And, Atom, Canonical, Cases, SetOutcome

DEFAULT_ENUMERATION_LIMIT = 10**6
_RANK_TOL = 1e-12

SEVERITIES = {
    "CYC001": "error",
    "PARSE001": "error",
    "REF001": "error",
    "OP001": "error",
    "OP002": "error",
    "OP003": "error",
    "OP004": "error",
    "MAC001": "error",
    "MAC002": "error",
    "MAC003": "error",
    "MAC004": "error",
    "MAC005": "error",
    "ANN001": "error",
    "COV001": "error",
    "SHORT001": "warning",
    "TOT001": "error",
    "DEF000": "warning",
    "DEF001": "error",
    "DEF002": "warning",
    "DEF003": "error",
}


@dataclass(frozen=True)
class Finding:
    severity: str  # error | warning
    code: str
    node_id: str  # GLOBAL_SITE for document-level findings
    message: str
    witness: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        out = {
            "severity": self.severity,
            "code": self.code,
            "node": self.node_id,
            "message": self.message,
        }
        if self.witness:
            out["witness"] = list(self.witness)
        return out


@dataclass
class PreflightReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not any(f.severity == "error" for f in self.findings)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "findings": [f.to_dict() for f in self.findings],
        }


def _finding(code: str, node_id: str, message: str, witness=()) -> Finding:
    return Finding(SEVERITIES[code], code, node_id, message, tuple(witness))


class EnumerationLimit(Exception):
    """Vocabulary enumeration would exceed the configured combination limit."""


# --- totality ----------------------------------------------------------------


def document_vocabulary(analysis: GraphAnalysis) -> list[FuzzySet]:
    """Canonical ladder plus every set literal a node in this document could
    compute: assignment values and case outcomes, including operator bodies."""
    ladder = analysis.ladder
    vocab = [ladder.set_of(name) for name in LADDER_NAMES]

    def add(expr):
        if isinstance(expr, Canonical):
            return
        fs = expr.build(ladder)
        if fs not in vocab:
            vocab.append(fs)

    def scan_cases(ast: Cases):
        for case in ast.cases:
            if isinstance(case.outcome, SetOutcome):
                add(case.outcome.expr)
        if isinstance(ast.otherwise, SetOutcome):
            add(ast.otherwise.expr)

    def scan_annotation(ast):
        from .syntax import Assignment

        if isinstance(ast, Assignment):
            add(ast.value)
        elif isinstance(ast, Cases):
            scan_cases(ast)

    for ns in analysis.sources.values():
        if ns.annotation is not None:
            scan_annotation(ns.annotation)
        for definition in ns.definitions:
            if isinstance(definition.body, Cases):
                scan_cases(definition.body)
    for definition in analysis.global_defs:
        if isinstance(definition.body, Cases):
            scan_cases(definition.body)
    return vocab


def _exact_signature(case, refs: tuple[str, ...]):
    """For an arm of the form `r1 is c1 and ... and rn is cn` covering every
    ref exactly once, return the canonical-name tuple in refs order."""
    atoms = (
        case.condition.items
        if isinstance(case.condition, And)
        else (case.condition,)
    )
    seen: dict[str, str] = {}
    for atom in atoms:
        if (
            not isinstance(atom, Atom)
            or atom.op != "is"
            or not isinstance(atom.right, Canonical)
            or atom.left in seen
        ):
            return None
        seen[atom.left] = atom.right.name
    if set(seen) != set(refs):
        return None
    return tuple(seen[r] for r in refs)


def _compile_complete(ast: Cases, refs: tuple[str, ...]):
    """If the arms are exactly one case per canonical combination, in ladder
    enumeration order (what macro expansion produces), return the
    {signature tuple -> case} table; else None."""
    if len(ast.cases) != len(LADDER_NAMES) ** len(refs):
        return None
    table = {}
    expected = itertools.product(LADDER_NAMES, repeat=len(refs))
    for case, combo in zip(ast.cases, expected):
        sig = _exact_signature(case, refs)
        if sig != combo:
            return None
        table[sig] = case
    return table


def first_uncovered(
    ast: Cases,
    refs,
    ladder: Ladder,
    snap: bool,
    limit: int = DEFAULT_ENUMERATION_LIMIT,
    vocabulary: list[FuzzySet] | None = None,
):
    """First vocabulary combination no case matches, or None if total.

    Used by macro validation; check_totality reports all (well, the first
    10 plus a count). Raises EnumerationLimit when |vocab|^n exceeds `limit`.
    """
    found = _uncovered(ast, tuple(refs), ladder, snap, limit, vocabulary, 1)
    return found[0][0] if found[0] else None


def _uncovered(
    ast: Cases,
    refs: tuple[str, ...],
    ladder: Ladder,
    snap: bool,
    limit: int,
    vocabulary: list[FuzzySet] | None,
    keep: int,
) -> tuple[list[tuple[tuple[str, str], ...]], int]:
    """(up to `keep` uncovered combos as ((ref, set name), ...), exact count)."""
    if ast.otherwise is not None or not refs:
        return [], 0
    if snap or vocabulary is None:
        vocab = [ladder.set_of(name) for name in LADDER_NAMES]
    else:
        vocab = vocabulary
    if len(vocab) ** len(refs) > limit:
        raise EnumerationLimit
    names = [describe(v, ladder) for v in vocab]

    table = _compile_complete(ast, refs)
    if table is not None:
        # every arm is an exact canonical combination; value v is covered at
        # any position iff v is a subset of some canonical set
        covered = [
            any(subset_of(v, ladder.set_of(c)) for c in LADDER_NAMES)
            for v in vocab
        ]
        if all(covered):
            return [], 0
        per_position = sum(1 for c in covered if c)
        count = len(vocab) ** len(refs) - per_position ** len(refs)
        witnesses = []
        for combo in itertools.product(range(len(vocab)), repeat=len(refs)):
            if all(covered[i] for i in combo):
                continue
            witnesses.append(tuple(zip(refs, (names[i] for i in combo))))
            if len(witnesses) >= keep:
                break
        return witnesses, count

    witnesses = []
    count = 0
    for combo in itertools.product(range(len(vocab)), repeat=len(refs)):
        env = {r: vocab[i] for r, i in zip(refs, combo)}
        if snap:
            env = {
                r: ladder.set_of(ladder.nearest(v))
                if ladder.name_of(v) is None
                else v
                for r, v in env.items()
            }
        if any(condition_holds(c.condition, env, ladder) for c in ast.cases):
            continue
        count += 1
        if len(witnesses) < keep:
            witnesses.append(tuple(zip(refs, (names[i] for i in combo))))
    return witnesses, count


def _combo_text(combo) -> str:
    return ", ".join(f"{ref}={name}" for ref, name in combo)


def check_totality(
    bound: BoundCases,
    node_id: str,
    ladder: Ladder,
    vocabulary: list[FuzzySet],
    limit: int = DEFAULT_ENUMERATION_LIMIT,
) -> list[Finding]:
    try:
        witnesses, count = _uncovered(
            bound.ast, bound.refs, ladder, bound.snap, limit, vocabulary, 10
        )
    except EnumerationLimit:
        return [
            _finding(
                "TOT001",
                node_id,
                f"totality enumeration for {node_id} exceeds {limit}"
                " combinations; add an otherwise arm",
            )
        ]
    if not count:
        return []
    shown = [_combo_text(w) for w in witnesses]
    more = f" (first {len(shown)} of {count})" if count > len(shown) else ""
    return [
        _finding(
            "TOT001",
            node_id,
            f"cases at {node_id} is not total: {count} uncovered"
            f" combination(s){more}; add an otherwise arm or cover them",
            shown,
        )
    ]


# --- coverage ----------------------------------------------------------------


def check_assignment_coverage(
    graph: ArgumentGraph, bound: dict[str, Bound]
) -> list[Finding]:
    """COV001 for each root-to-leaf path with no assignment (first 10, plus a
    count per root); SHORT001 warning for each assignment on a non-leaf."""
    findings: list[Finding] = []
    assigned = {nid for nid, b in bound.items() if isinstance(b, BoundAssign)}

    for node_id in assigned:
        if graph.child_ids(node_id):
            findings.append(
                _finding(
                    "SHORT001",
                    node_id,
                    f"assignment on non-leaf {node_id} shorts its subtree;"
                    " descendants on this path will not be evaluated",
                )
            )

    # count uncovered paths per node by dynamic programming
    uncovered_below: dict[str, int] = {}

    def count_below(node_id: str) -> int:
        if node_id in uncovered_below:
            return uncovered_below[node_id]
        if node_id in assigned:
            result = 0
        else:
            children = graph.child_ids(node_id)
            result = (
                1 if not children else sum(count_below(c) for c in children)
            )
        uncovered_below[node_id] = result
        return result

    for root in graph.roots():
        total = count_below(root.id)
        if not total:
            continue
        witnesses: list[list[str]] = []

        def walk(node_id: str, path: list[str]):
            if len(witnesses) >= 10 or node_id in assigned:
                return
            path = path + [node_id]
            children = graph.child_ids(node_id)
            if not children:
                witnesses.append(path)
                return
            for child in children:
                walk(child, path)

        walk(root.id, [])
        for path in witnesses:
            findings.append(
                _finding(
                    "COV001",
                    root.id,
                    "path with no confidence assignment: " + " -> ".join(path),
                    path,
                )
            )
        if total > len(witnesses):
            findings.append(
                _finding(
                    "COV001",
                    root.id,
                    f"{total - len(witnesses)} more path(s) below {root.id}"
                    " have no confidence assignment",
                )
            )
    return findings


# --- defeater rules ----------------------------------------------------------


def _canonical_outputs(
    ast: Cases, refs: tuple[str, ...], ladder: Ladder, limit: int
) -> dict[tuple[int, ...], FuzzySet]:
    """Map every canonical score combination over refs to the cases output."""
    n = len(refs)
    if len(LADDER_NAMES) ** n > limit:
        raise EnumerationLimit
    sets = [ladder.set_of(name) for name in LADDER_NAMES]
    outputs: dict[tuple[int, ...], FuzzySet] = {}
    table = _compile_complete(ast, refs)
    if table is not None and ast.otherwise is None:
        # first match of an exact-arm table: `certain` also satisfies the
        # earlier `is very_high` arm, every other pair is exact
        shadow = {
            score: next(
                i
                for i, name in enumerate(LADDER_NAMES)
                if subset_of(sets[score], ladder.set_of(name))
            )
            for score in range(len(LADDER_NAMES))
        }
        for combo in itertools.product(range(len(LADDER_NAMES)), repeat=n):
            sig = tuple(LADDER_NAMES[shadow[s]] for s in combo)
            case = table[sig]
            env = {r: sets[s] for r, s in zip(refs, combo)}
            outputs[combo] = _outcome_value(case.outcome, env, ladder)
        return outputs
    for combo in itertools.product(range(len(LADDER_NAMES)), repeat=n):
        env = {r: sets[s] for r, s in zip(refs, combo)}
        outputs[combo], _ = evaluate_cases(ast, env, ladder)
    return outputs


def check_defeater_rules(
    bound: BoundCases,
    node_id: str,
    graph: ArgumentGraph,
    ladder: Ladder,
    allows: frozenset[str] = frozenset(),
    limit: int = DEFAULT_ENUMERATION_LIMIT,
) -> list[Finding]:
    """Evaluate the expression over every canonical combination and check the
    defeater ruleset (see module docstring). Assumes the expression is total;
    callers should skip nodes that already failed totality."""
    refs = bound.refs
    kinds = {r: graph.node(r).kind for r in refs}
    defeater_positions = [i for i, r in enumerate(refs) if kinds[r] is NodeKind.DEFEATER]
    premise_positions = [i for i, r in enumerate(refs) if kinds[r] is not NodeKind.DEFEATER]
    wanted = {"DEF001", "DEF002", "DEF003"} - allows
    if not refs or not wanted:
        return []
    if not defeater_positions and wanted <= {"DEF001", "DEF003"}:
        return []

    try:
        outputs = _canonical_outputs(bound.ast, refs, ladder, limit)
    except EnumerationLimit:
        return [
            _finding(
                "DEF000",
                node_id,
                f"defeater rules for {node_id} skipped: enumeration exceeds"
                f" {limit} combinations",
            )
        ]
    except EvalError:
        return []  # not total; reported by check_totality

    findings: list[Finding] = []
    top = len(LADDER_NAMES) - 1
    low_rank = rank(ladder.set_of("low"))

    def combo_text(combo) -> str:
        return ", ".join(
            f"{r}={LADDER_NAMES[s]}" for r, s in zip(refs, combo)
        )

    def first_violation(positions, rising_is_bad: bool):
        for combo, value in outputs.items():
            for position in positions:
                if combo[position] == top:
                    continue
                raised = list(combo)
                raised[position] += 1
                after = outputs[tuple(raised)]
                delta = rank(after) - rank(value)
                if rising_is_bad and delta > _RANK_TOL:
                    return combo, position, value, after
                if not rising_is_bad and delta < -_RANK_TOL:
                    return combo, position, value, after
        return None

    if "DEF001" in wanted and defeater_positions:
        hit = first_violation(defeater_positions, rising_is_bad=True)
        if hit is not None:
            combo, position, before, after = hit
            ref = refs[position]
            findings.append(
                _finding(
                    "DEF001",
                    node_id,
                    f"raising defeater {ref} one step increases the output of"
                    f" {node_id}: at {combo_text(combo)} the output is"
                    f" {describe(before, ladder)}, but raising {ref} gives"
                    f" {describe(after, ladder)}",
                    [combo_text(combo)],
                )
            )
    if "DEF002" in wanted and premise_positions:
        hit = first_violation(premise_positions, rising_is_bad=False)
        if hit is not None:
            combo, position, before, after = hit
            ref = refs[position]
            findings.append(
                _finding(
                    "DEF002",
                    node_id,
                    f"raising premise {ref} one step lowers the output of"
                    f" {node_id}: at {combo_text(combo)} the output is"
                    f" {describe(before, ladder)}, but raising {ref} gives"
                    f" {describe(after, ladder)}",
                    [combo_text(combo)],
                )
            )
    if "DEF003" in wanted and defeater_positions:
        for combo, value in outputs.items():
            if all(combo[p] != top for p in defeater_positions):
                continue
            if rank(value) > low_rank + _RANK_TOL:
                findings.append(
                    _finding(
                        "DEF003",
                        node_id,
                        f"output of {node_id} is {describe(value, ladder)} while"
                        f" a defeater is certain (at {combo_text(combo)});"
                        " cap it at low or disable with `// allow: DEF003`",
                        [combo_text(combo)],
                    )
                )
                break
    return findings


# --- composition ---------------------------------------------------------------


def run_preflight(
    graph: ArgumentGraph,
    ladder: Ladder = DEFAULT_LADDER,
    analysis: GraphAnalysis | None = None,
    expansion_problems: Sequence[Problem] = (),
    limit: int = DEFAULT_ENUMERATION_LIMIT,
) -> PreflightReport:
    """All checks, in dependency order, as one deterministic report.

    Callers expand macros first and pass any expansion problems in; bind
    problems duplicating a reported expansion failure are dropped.
    """
    cycle = check_acyclic(graph)
    if cycle is not None:
        return PreflightReport(
            [
                _finding(
                    "CYC001",
                    cycle[0],
                    "argument graph has a cycle: " + " -> ".join(cycle),
                    cycle,
                )
            ]
        )
    if analysis is None:
        analysis = analyze_graph(graph, ladder)

    findings: list[Finding] = []
    problem_nodes: set[str] = set()
    seen_problems: set[tuple[str, str, str]] = set()
    macro_failed = {p.node_id for p in expansion_problems}

    def add_problem(problem: Problem):
        key = (problem.node_id, problem.code, problem.message)
        if key in seen_problems:
            return
        seen_problems.add(key)
        problem_nodes.add(problem.node_id)
        findings.append(_finding(problem.code, problem.node_id, problem.message))

    for problem in expansion_problems:
        add_problem(problem)
    for problem in analysis.problems:
        # binding reports a leftover macro call; the expansion failure that
        # left it behind is already in the report
        if problem.code == "MAC001" and problem.node_id in macro_failed:
            continue
        add_problem(problem)

    for node_id in demanded_ids(graph, analysis.bound):
        if node_id not in analysis.bound and node_id not in problem_nodes:
            findings.append(
                _finding(
                    "ANN001",
                    node_id,
                    f"{node_id} is needed by evaluation but has no annotation",
                )
            )

    findings.extend(check_assignment_coverage(graph, analysis.bound))

    vocabulary = document_vocabulary(analysis)
    for node_id, b in analysis.bound.items():
        if not isinstance(b, BoundCases):
            continue
        totality = check_totality(b, node_id, ladder, vocabulary, limit)
        findings.extend(totality)
        if not totality:
            findings.extend(
                check_defeater_rules(
                    b, node_id, graph, ladder, analysis.allows(node_id), limit
                )
            )

    findings.sort(key=lambda f: (f.node_id, f.code))
    return PreflightReport(findings)
