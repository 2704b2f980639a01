"""Static-check tests: coverage, totality, defeater rules, composition."""

import itertools

import pytest

from certus.binding import GLOBAL_SITE, Problem, analyze_graph
from certus.engine import condition_holds
from certus.fuzzy import DEFAULT_LADDER, LADDER_NAMES, describe
from certus.macros import expand_all
from certus.model import load_document
from certus.preflight import (
    EnumerationLimit,
    Finding,
    PreflightReport,
    check_totality,
    document_vocabulary,
    first_uncovered,
    run_preflight,
)
from certus.syntax import parse_annotation

L = DEFAULT_LADDER


def preflight(doc, **kw):
    return run_preflight(load_document(doc), **kw)


def codes(report):
    return [(f.node_id, f.code) for f in report.findings]


CLEAN_DOC = """
nodes:
  - id: C0
    kind: claim
    children: [E1, E2]
    certus: |
      cases { E1 ge high and E2 ge high -> high; otherwise -> med }
  - id: E1
    kind: evidence
    certus: E1 is high
  - id: E2
    kind: evidence
    certus: E2 is very_high
"""


class TestReport:
    def test_clean_document_passes_with_no_findings(self):
        report = preflight(CLEAN_DOC)
        assert report.passed
        assert report.findings == []

    def test_warnings_do_not_fail(self):
        report = PreflightReport(
            [Finding("warning", "SHORT001", "C0", "shorted")]
        )
        assert report.passed

    def test_errors_fail(self):
        report = PreflightReport(
            [
                Finding("warning", "SHORT001", "C0", "shorted"),
                Finding("error", "TOT001", "C1", "not total"),
            ]
        )
        assert not report.passed

    def test_to_dict(self):
        report = PreflightReport(
            [Finding("error", "COV001", "C0", "no assignment", ("C0", "E1"))]
        )
        assert report.to_dict() == {
            "passed": False,
            "findings": [
                {
                    "severity": "error",
                    "code": "COV001",
                    "node": "C0",
                    "message": "no assignment",
                    "witness": ["C0", "E1"],
                }
            ],
        }


class TestCoverage:
    def test_unassigned_path_is_cov001(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [E1, E2]
    certus: |
      cases { E1 ge high -> high; otherwise -> med }
  - id: E1
    kind: evidence
    certus: E1 is high
  - id: E2
    kind: evidence
"""
        )
        assert not report.passed
        cov = [f for f in report.findings if f.code == "COV001"]
        assert len(cov) == 1
        assert cov[0].node_id == "C0"
        assert cov[0].witness == ("C0", "E2")
        assert "C0 -> E2" in cov[0].message

    def test_shorting_is_a_warning(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [E1]
    certus: C0 is med
  - id: E1
    kind: evidence
"""
        )
        assert report.passed
        assert codes(report) == [("C0", "SHORT001")]

    def test_paths_capped_at_ten_with_count(self):
        leaves = [f"E{i}" for i in range(12)]
        doc = "nodes:\n"
        doc += "  - id: C0\n    kind: claim\n    children: [%s]\n" % ", ".join(leaves)
        doc += "    certus: |\n      cases { E0 ge zero -> E0; otherwise -> low }\n"
        for leaf in leaves:
            doc += f"  - id: {leaf}\n    kind: evidence\n"
        report = preflight(doc)
        cov = [f for f in report.findings if f.code == "COV001"]
        assert len(cov) == 11  # ten witnesses plus a remainder count
        assert "2 more path(s)" in cov[-1].message

    def test_assignment_anywhere_on_path_counts(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [C1]
    certus: C0 is C1
  - id: C1
    kind: claim
    children: [E1]
    certus: C1 is med
  - id: E1
    kind: evidence
"""
        )
        cov = [f for f in report.findings if f.code == "COV001"]
        assert cov == []  # C1's (shorting) assignment covers the path


class TestTotality:
    def test_otherwise_is_total(self):
        ast = parse_annotation("cases { E1 is med -> med; otherwise -> low }")
        assert first_uncovered(ast, ["E1"], L, snap=False) is None

    def test_single_is_arm_leaves_six_uncovered(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [E1]
    certus: |
      cases { E1 is high -> high }
  - id: E1
    kind: evidence
    certus: E1 is high
"""
        )
        tot = [f for f in report.findings if f.code == "TOT001"]
        assert len(tot) == 1
        assert "6 uncovered" in tot[0].message
        assert len(tot[0].witness) == 6
        assert "E1=zero" in tot[0].witness[0]

    def test_first_uncovered_in_enumeration_order(self):
        ast = parse_annotation("cases { E1 is high -> high }")
        assert first_uncovered(ast, ["E1"], L, snap=False) == (("E1", "zero"),)

    def test_witnesses_capped_at_ten(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [E1, E2]
    certus: |
      cases { E1 is high and E2 is high -> high }
  - id: E1
    kind: evidence
    certus: E1 is high
  - id: E2
    kind: evidence
    certus: E2 is high
"""
        )
        tot = [f for f in report.findings if f.code == "TOT001"]
        assert "48 uncovered" in tot[0].message
        assert "first 10 of 48" in tot[0].message
        assert len(tot[0].witness) == 10

    def test_fuse_expansion_is_total(self):
        graph, _ = expand_all(
            load_document(
                """
nodes:
  - id: C0
    kind: claim
    children: [E1, D1]
    certus: '#FUSE'
  - id: E1
    kind: evidence
    certus: E1 is med
  - id: D1
    kind: defeater
    certus: D1 is low
"""
            )
        )
        report = run_preflight(graph)
        assert report.passed
        assert codes(report) == []

    def test_custom_assigned_literal_enters_vocabulary(self):
        arms = "; ".join(f"E1 is {name} -> {name}" for name in LADDER_NAMES)
        report = preflight(
            f"""
nodes:
  - id: C0
    kind: claim
    children: [E1]
    certus: |
      cases {{ {arms} }}
  - id: E1
    kind: evidence
    certus: E1 is triangle(0.15,0.5,0.85)
"""
        )
        tot = [f for f in report.findings if f.code == "TOT001"]
        assert len(tot) == 1
        assert tot[0].witness == ("E1=triangle(0.15,0.5,0.85)",)

    def test_outcome_literals_enter_vocabulary(self):
        # C1 can output the literal, so C0's canonical-only table is partial
        arms = "; ".join(f"C1 is {name} -> {name}" for name in LADDER_NAMES)
        report = preflight(
            f"""
nodes:
  - id: C0
    kind: claim
    children: [C1]
    certus: |
      cases {{ {arms} }}
  - id: C1
    kind: claim
    children: [E1]
    certus: |
      cases {{ E1 ge high -> triangle(0.15,0.5,0.85); otherwise -> E1 }}
  - id: E1
    kind: evidence
    certus: E1 is high
"""
        )
        tot = [f for f in report.findings if f.code == "TOT001"]
        assert len(tot) == 1
        assert tot[0].node_id == "C0"

    def test_enumeration_limit_advises_otherwise(self):
        graph, _ = expand_all(
            load_document(
                """
nodes:
  - id: C0
    kind: claim
    children: [E1, E2, E3]
    certus: '#FUSE'
  - id: E1
    kind: evidence
    certus: E1 is med
  - id: E2
    kind: evidence
    certus: E2 is med
  - id: E3
    kind: evidence
    certus: E3 is med
"""
            )
        )
        report = run_preflight(graph, limit=100)
        tot = [f for f in report.findings if f.code == "TOT001"]
        assert len(tot) == 1
        assert "add an otherwise arm" in tot[0].message

    def test_first_uncovered_raises_over_limit(self):
        ast = parse_annotation("cases { E1 is high and E2 is high -> high }")
        with pytest.raises(EnumerationLimit):
            first_uncovered(ast, ["E1", "E2"], L, snap=False, limit=10)

    def test_agrees_with_brute_force(self):
        sources = [
            "cases { E1 is high -> high; E2 overlaps low -> low }",
            "cases { E1 ge med and E2 ge med -> high; E1 lt med -> low }",
            "cases { E1 gt E2 -> E1; E2 gt E1 -> E2 }",
            "cases { E1 is certain and E2 is certain -> certain }",
        ]
        vocab = [L.set_of(n) for n in LADDER_NAMES]
        for source in sources:
            ast = parse_annotation(source)
            brute = None
            for combo in itertools.product(LADDER_NAMES, repeat=2):
                env = {r: L.set_of(n) for r, n in zip(("E1", "E2"), combo)}
                if not any(
                    condition_holds(c.condition, env, L) for c in ast.cases
                ):
                    brute = (("E1", combo[0]), ("E2", combo[1]))
                    break
            got = first_uncovered(ast, ["E1", "E2"], L, snap=False, vocabulary=vocab)
            assert got == brute, source


class TestDefeaterRules:
    DEFEATED = """
nodes:
  - id: C0
    kind: claim
    children: [D1]
    certus: |
      {annotation}
  - id: D1
    kind: defeater
    certus: D1 is low
"""

    def doc(self, annotation):
        return self.DEFEATED.format(annotation=annotation)

    def test_raising_a_defeater_must_not_raise_output(self):
        report = preflight(
            self.doc("cases { D1 is certain -> certain; otherwise -> low }")
        )
        d1 = [f for f in report.findings if f.code == "DEF001"]
        assert len(d1) == 1
        assert d1[0].severity == "error"
        assert d1[0].witness == ("D1=very_high",)
        assert "raising D1" in d1[0].message

    def test_certain_defeater_caps_output_at_low(self):
        report = preflight(
            self.doc("cases { D1 is certain -> certain; otherwise -> low }")
        )
        d3 = [f for f in report.findings if f.code == "DEF003"]
        assert len(d3) == 1
        assert "D1=certain" in d3[0].witness[0]

    def test_allow_pragma_disables_rules(self):
        report = preflight(
            self.doc(
                "// allow: DEF001, DEF003\n"
                "      cases { D1 is certain -> certain; otherwise -> low }"
            )
        )
        assert report.passed
        assert codes(report) == []

    def test_constant_output_passes(self):
        report = preflight(self.doc("cases { D1 ge zero -> low }"))
        assert report.passed

    def test_high_output_under_certain_defeater_is_def003(self):
        report = preflight(self.doc("cases { D1 ge zero -> high }"))
        assert codes(report) == [("C0", "DEF003")]

    def test_premise_nonmonotonicity_is_a_warning(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [E1]
    certus: |
      cases { E1 is high -> low; otherwise -> high }
  - id: E1
    kind: evidence
    certus: E1 is med
"""
        )
        assert report.passed  # warning only
        d2 = [f for f in report.findings if f.code == "DEF002"]
        assert len(d2) == 1
        assert d2[0].severity == "warning"

    def test_fuse_expansion_passes_all_rules(self):
        graph, _ = expand_all(
            load_document(
                """
nodes:
  - id: C0
    kind: claim
    children: [E1, E2, D1]
    certus: '#FUSE'
  - id: E1
    kind: evidence
    certus: E1 is med
  - id: E2
    kind: evidence
    certus: E2 is high
  - id: D1
    kind: defeater
    certus: D1 is low
"""
            )
        )
        report = run_preflight(graph)
        assert report.passed
        assert codes(report) == []

    def test_skip_over_limit_is_def000(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [E1, D1]
    certus: |
      cases { E1 ge zero and D1 ge zero -> low; otherwise -> low }
  - id: D1
    kind: defeater
    certus: D1 is low
  - id: E1
    kind: evidence
    certus: E1 is med
""",
            limit=10,
        )
        assert codes(report) == [("C0", "DEF000")]
        assert report.passed  # skipped, not failed

    def test_no_defeater_children_is_vacuous_for_d1_d3(self):
        report = preflight(CLEAN_DOC)
        assert [f for f in report.findings if f.code in ("DEF001", "DEF003")] == []


class TestRunPreflight:
    def test_cycle_short_circuits(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [C1]
    certus: C0 is C1
  - id: C1
    kind: claim
    children: [C0]
    certus: C1 is C0
"""
        )
        assert codes(report) == [("C0", "CYC001")]
        assert report.findings[0].witness == ("C0", "C1", "C0")

    def test_unresolved_reference_is_ref001(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [E1]
    certus: |
      cases { E9 ge zero -> low; otherwise -> low }
  - id: E1
    kind: evidence
    certus: E1 is med
"""
        )
        assert ("C0", "REF001") in codes(report)

    def test_unknown_operator_is_op001(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [E1]
    certus: nosuch(E1)
  - id: E1
    kind: evidence
    certus: E1 is med
"""
        )
        assert ("C0", "OP001") in codes(report)

    def test_arity_mismatch_is_op002(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [E1]
    certus: |
      with two(a: Premise, b: Premise) as cases { a ge zero and b ge zero -> low; otherwise -> low }
      two(E1)
  - id: E1
    kind: evidence
    certus: E1 is med
"""
        )
        assert ("C0", "OP002") in codes(report)

    def test_param_kind_mismatch_is_op003(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [D1]
    certus: |
      with one(a: Premise) as cases { a ge zero -> low; otherwise -> low }
      one(D1)
  - id: D1
    kind: defeater
    certus: D1 is low
"""
        )
        assert ("C0", "OP003") in codes(report)

    def test_recursive_operator_is_op004(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [E1]
    certus: |
      with loop(a: Premise) as loop(a)
      loop(E1)
  - id: E1
    kind: evidence
    certus: E1 is med
"""
        )
        assert ("C0", "OP004") in codes(report)

    def test_demanded_node_without_annotation_is_ann001(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [E1, E2]
    certus: |
      cases { E1 ge high -> high; otherwise -> med }
  - id: E1
    kind: evidence
    certus: E1 is high
  - id: E2
    kind: evidence
"""
        )
        assert ("E2", "ANN001") in codes(report)

    def test_global_definition_parse_error(self):
        report = preflight(
            """
definitions: |
  with broken(
nodes:
  - id: C0
    kind: claim
    certus: C0 is high
"""
        )
        assert (GLOBAL_SITE, "PARSE001") in codes(report)

    def test_node_parse_error(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    certus: 'cases {'
"""
        )
        assert ("C0", "PARSE001") in codes(report)

    def test_expansion_problems_merge_and_dedupe(self):
        graph = load_document(CLEAN_DOC)
        problem = Problem("C0", "MAC005", "rejected")
        report = run_preflight(graph, expansion_problems=[problem, problem])
        assert codes(report).count(("C0", "MAC005")) == 1

    def test_leftover_macro_reports_expansion_problem_once(self):
        doc = """
nodes:
  - id: C0
    kind: claim
    children: [E1]
    certus: '#NOPE'
  - id: E1
    kind: evidence
    certus: E1 is med
"""
        graph, problems = expand_all(load_document(doc))
        report = run_preflight(graph, expansion_problems=problems)
        mac = [f for f in report.findings if f.code.startswith("MAC")]
        assert len(mac) == 1
        assert mac[0].code == "MAC001"
        assert "no provider" in mac[0].message

    def test_unexpanded_macro_without_expansion_pass_is_mac001(self):
        report = preflight(
            """
nodes:
  - id: C0
    kind: claim
    children: [E1]
    certus: '#FUSE'
  - id: E1
    kind: evidence
    certus: E1 is med
"""
        )
        assert ("C0", "MAC001") in codes(report)

    def test_findings_sorted_by_node_then_code(self):
        report = preflight(
            """
nodes:
  - id: B
    kind: claim
    children: [A]
    certus: |
      cases { A is high -> high }
  - id: A
    kind: evidence
  - id: Z
    kind: claim
    certus: Z is nosuchname
"""
        )
        keys = [(f.node_id, f.code) for f in report.findings]
        assert keys == sorted(keys)

    def test_mutating_a_total_table_breaks_totality(self):
        graph, _ = expand_all(
            load_document(
                """
nodes:
  - id: C0
    kind: claim
    children: [E1, E2]
    certus: '#FUSE'
  - id: E1
    kind: evidence
    certus: E1 is med
  - id: E2
    kind: evidence
    certus: E2 is very_low
"""
            )
        )
        source = graph.node("C0").annotation
        lines = source.splitlines()
        removed = [l for l in lines if "E1 is zero and E2 is zero" not in l]
        assert len(removed) == len(lines) - 1
        mutated = load_document(
            """
nodes:
  - id: C0
    kind: claim
    children: [E1, E2]
  - id: E1
    kind: evidence
    certus: E1 is med
  - id: E2
    kind: evidence
    certus: E2 is very_low
"""
        )
        nodes = tuple(
            n if n.id != "C0" else type(n)(n.id, n.kind, n.text, "\n".join(removed))
            for n in mutated.nodes
        )
        mutated = type(mutated)(nodes, mutated.edges, mutated.definitions)
        report = run_preflight(mutated)
        tot = [f for f in report.findings if f.code == "TOT001"]
        assert len(tot) == 1
        assert tot[0].witness == ("E1=zero, E2=zero",)


class TestVocabulary:
    def test_canonicals_always_present(self):
        analysis = analyze_graph(load_document(CLEAN_DOC))
        vocab = document_vocabulary(analysis)
        assert len(vocab) == 7

    def test_literals_deduped(self):
        analysis = analyze_graph(
            load_document(
                """
nodes:
  - id: E1
    kind: evidence
    certus: E1 is triangle(0.1,0.2,0.3)
  - id: E2
    kind: evidence
    certus: E2 is triangle(0.1,0.2,0.3)
"""
            )
        )
        vocab = document_vocabulary(analysis)
        assert len(vocab) == 8
        assert describe(vocab[-1], L) == "triangle(0.1,0.2,0.3)"
