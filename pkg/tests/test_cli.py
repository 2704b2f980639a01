"""Command-line interface tests: exit codes, rendering, flags, providers."""

import json
import sys
from pathlib import Path

import pytest

from certus.cli import main
from certus.model import load_document, serialize_document

FAKE = Path(__file__).parent / "providers" / "fake_provider.py"


def fake_command(mode: str) -> str:
    return f"{sys.executable} {FAKE} {mode}"


@pytest.fixture()
def cli(capsys):
    def run(*argv):
        code = main(list(argv))
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return run


NOT_TOTAL_DOC = """
nodes:
  - id: C0
    kind: claim
    children: [E1]
    certus: |
      cases { E1 is high -> high }
  - id: E1
    kind: evidence
    certus: E1 is med
"""

SHORTED_DOC = """
nodes:
  - id: C0
    kind: claim
    children: [E1]
    certus: C0 is med
  - id: E1
    kind: evidence
    certus: E1 is high
"""

CAUTIOUS_DOC = """
nodes:
  - id: C0
    kind: claim
    children: [E1, E2]
    certus: "#CAUTIOUS"
  - id: E1
    kind: evidence
    certus: E1 is med
  - id: E2
    kind: evidence
    certus: E2 is very_low
"""

UNKNOWN_MACRO_DOC = """
nodes:
  - id: C0
    kind: claim
    children: [E1]
    certus: "#NOPE"
  - id: E1
    kind: evidence
    certus: E1 is med
"""

# Default shapes with a narrower high: rank (0.6+0.7)/2 + (0.2-0.1)/4 = 0.675.
CUSTOM_LADDER = """
zero: point(0)
very_low: trapezoid(0, 0.1, 0.2, 0.3)
low: trapezoid(0.2, 0.3, 0.4, 0.5)
med: trapezoid(0.35, 0.45, 0.55, 0.65)
high: trapezoid(0.5, 0.6, 0.7, 0.9)
very_high: trapezoid(0.8, 0.9, 1.0, 1.0)
certain: point(1)
"""


def write(tmp_path: Path, name: str, text: str) -> str:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestCheck:
    def test_clean_corpus_passes(self, cli, corpus_dir):
        code, out, err = cli("check", str(corpus_dir / "simple_step.yaml"))
        assert code == 0
        assert out.strip() == "preflight passed"
        assert err == ""

    def test_warnings_do_not_fail(self, cli, corpus_dir):
        code, out, _ = cli("check", str(corpus_dir / "reusable_operator.yaml"))
        assert code == 0
        assert "warning DEF002 C0:" in out
        assert "warning DEF002 C1:" in out
        assert "\n  - " in out  # witness lines are indented bullets
        assert out.rstrip().endswith("preflight passed")

    def test_json_report(self, cli, corpus_dir):
        code, out, _ = cli(
            "check", str(corpus_dir / "simple_step.yaml"), "--format", "json"
        )
        assert code == 0
        assert json.loads(out) == {"passed": True, "findings": []}

    def test_findings_fail_with_exit_1(self, cli, tmp_path):
        doc = write(tmp_path, "doc.yaml", NOT_TOTAL_DOC)
        code, out, _ = cli("check", doc)
        assert code == 1
        assert "error TOT001 C0:" in out
        assert out.rstrip().endswith("preflight failed")

    def test_json_failed_report(self, cli, tmp_path):
        doc = write(tmp_path, "doc.yaml", NOT_TOTAL_DOC)
        code, out, _ = cli("check", doc, "--format", "json")
        assert code == 1
        report = json.loads(out)
        assert report["passed"] is False
        assert {f["code"] for f in report["findings"]} == {"TOT001"}

    def test_missing_file_is_usage_error(self, cli, tmp_path):
        code, out, err = cli("check", str(tmp_path / "absent.yaml"))
        assert code == 2
        assert out == ""
        assert "cannot read" in err

    def test_malformed_document_is_usage_error(self, cli, tmp_path):
        doc = write(tmp_path, "doc.yaml", "nodes: [")
        code, _, err = cli("check", doc)
        assert code == 2
        assert doc in err

    def test_bad_annotation_is_a_finding(self, cli, tmp_path):
        doc = write(
            tmp_path,
            "doc.yaml",
            "nodes:\n  - id: C0\n    kind: claim\n    certus: C0 izz med\n",
        )
        code, out, _ = cli("check", doc)
        assert code == 1
        assert "error PARSE001 C0:" in out

    def test_dot_format_rejected(self, cli, corpus_dir):
        code, _, err = cli(
            "check", str(corpus_dir / "simple_step.yaml"), "--format", "dot"
        )
        assert code == 2
        assert "not supported" in err

    def test_no_arguments_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_unknown_command_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["prove", "x.yaml"])
        assert exc.value.code == 2


class TestExpand:
    def test_macro_rewritten_in_place(self, cli, corpus_dir):
        code, out, err = cli("expand", str(corpus_dir / "fuse_pair.yaml"))
        assert code == 0
        assert err == ""
        assert "#FUSE" not in out
        assert "// expanded-from: FUSE via builtin" in out
        assert "cases {" in out

    def test_macro_free_document_round_trips(self, cli, corpus_dir):
        source = (corpus_dir / "simple_step.yaml").read_text(encoding="utf-8")
        code, out, _ = cli("expand", str(corpus_dir / "simple_step.yaml"))
        assert code == 0
        assert out == serialize_document(load_document(source))

    def test_expansion_is_idempotent(self, cli, corpus_dir, tmp_path):
        _, once, _ = cli("expand", str(corpus_dir / "fuse_pair.yaml"))
        again = write(tmp_path, "expanded.yaml", once)
        _, twice, _ = cli("expand", again)
        assert once == twice

    def test_unknown_macro_fails(self, cli, tmp_path):
        doc = write(tmp_path, "doc.yaml", UNKNOWN_MACRO_DOC)
        code, out, err = cli("expand", doc)
        assert code == 1
        assert out == ""
        assert "MAC001" in err and "C0" in err

    def test_json_format_rejected(self, cli, corpus_dir):
        code, _, err = cli(
            "expand", str(corpus_dir / "fuse_pair.yaml"), "--format", "json"
        )
        assert code == 2
        assert "not supported" in err

    def test_output_flag_writes_file(self, cli, corpus_dir, tmp_path):
        target = tmp_path / "out.yaml"
        code, out, _ = cli(
            "expand", str(corpus_dir / "fuse_pair.yaml"), "--output", str(target)
        )
        assert code == 0
        assert out == ""
        assert "// expanded-from: FUSE via builtin" in target.read_text(
            encoding="utf-8"
        )


class TestAssess:
    def test_text_output(self, cli, corpus_dir):
        code, out, err = cli("assess", str(corpus_dir / "simple_step.yaml"))
        assert code == 0
        assert err == ""
        lines = out.splitlines()
        assert lines[0] == "C0: high"
        assert "E1: high" in lines
        assert "E2: very_high" in lines

    @pytest.mark.parametrize(
        "name,root_line",
        [
            ("simple_step.yaml", "C0: high"),
            ("reusable_operator.yaml", "C0: low"),
            ("fuse_pair.yaml", "C0: low"),
            ("composite_argument.yaml", "C6000: med"),
        ],
    )
    def test_corpus_roots(self, cli, corpus_dir, name, root_line):
        code, out, _ = cli("assess", str(corpus_dir / name))
        assert code == 0
        assert out.splitlines()[0] == root_line

    def test_trace_lines(self, cli, corpus_dir):
        code, out, _ = cli(
            "assess", str(corpus_dir / "simple_step.yaml"), "--trace"
        )
        assert code == 0
        lines = out.splitlines()
        at = lines.index("C0: high")
        assert lines[at + 1] == (
            "  cases, case 1: E1 ge high and E2 ge high -> high"
        )
        assert lines[at + 2] == "  inputs: E1=high, E2=very_high"
        assert "  assigned" in lines

    def test_trace_names_expanded_macro(self, cli, corpus_dir):
        _, out, _ = cli("assess", str(corpus_dir / "fuse_pair.yaml"), "--trace")
        assert any(
            line.startswith("  macro FUSE (expanded), case ")
            for line in out.splitlines()
        )

    def test_json_output(self, cli, corpus_dir):
        code, out, _ = cli(
            "assess", str(corpus_dir / "simple_step.yaml"), "--format", "json"
        )
        assert code == 0
        data = json.loads(out)
        assert set(data) == {"C0", "E1", "E2"}
        assert data["C0"]["set"] == "high"
        assert data["C0"]["rank"] == pytest.approx(0.70, abs=1e-9)
        assert data["C0"]["trace"]["mechanism"] == "cases"

    def test_dot_output(self, cli, corpus_dir):
        code, out, _ = cli(
            "assess",
            str(corpus_dir / "composite_argument.yaml"),
            "--format",
            "dot",
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "digraph certus {"
        assert lines[-1] == "}"
        assert '  "C6000" [shape=box, label="C6000\\nmed"];' in lines
        assert '  "E6121" [shape=ellipse, label="E6121\\nvery_high"];' in lines
        assert '  "D6113" [shape=octagon, label="D6113\\nvery_low"];' in lines
        assert '  "C6000" -> "C6100";' in lines

    def test_findings_block_assessment(self, cli, tmp_path):
        doc = write(tmp_path, "doc.yaml", NOT_TOTAL_DOC)
        code, out, err = cli("assess", doc)
        assert code == 1
        assert out == ""
        assert "error TOT001 C0:" in err
        assert "preflight failed" in err

    def test_warnings_go_to_stderr(self, cli, corpus_dir):
        code, out, err = cli("assess", str(corpus_dir / "reusable_operator.yaml"))
        assert code == 0
        assert "warning DEF002 C0:" in err
        assert out.splitlines()[0] == "C0: low"

    def test_shorted_nodes_are_reported(self, cli, tmp_path):
        doc = write(tmp_path, "doc.yaml", SHORTED_DOC)
        code, out, _ = cli("assess", doc)
        assert code == 0
        assert "C0: med" in out
        assert "E1: not evaluated (shorted at C0)" in out

    def test_output_flag_writes_file(self, cli, corpus_dir, tmp_path):
        target = tmp_path / "report.json"
        _, direct, _ = cli(
            "assess", str(corpus_dir / "simple_step.yaml"), "--format", "json"
        )
        code, out, _ = cli(
            "assess",
            str(corpus_dir / "simple_step.yaml"),
            "--format",
            "json",
            "--output",
            str(target),
        )
        assert code == 0
        assert out == ""
        assert target.read_text(encoding="utf-8") == direct

    def test_custom_ladder_changes_ranks(self, cli, corpus_dir, tmp_path):
        ladder = write(tmp_path, "ladder.yaml", CUSTOM_LADDER)
        code, out, _ = cli(
            "assess",
            str(corpus_dir / "simple_step.yaml"),
            "--ladder",
            ladder,
            "--format",
            "json",
        )
        assert code == 0
        data = json.loads(out)
        assert data["C0"]["set"] == "high"
        assert data["C0"]["rank"] == pytest.approx(0.675, abs=1e-9)

    def test_missing_ladder_is_usage_error(self, cli, corpus_dir, tmp_path):
        code, _, err = cli(
            "assess",
            str(corpus_dir / "simple_step.yaml"),
            "--ladder",
            str(tmp_path / "absent.yaml"),
        )
        assert code == 2
        assert "cannot read" in err

    def test_invalid_ladder_is_usage_error(self, cli, corpus_dir, tmp_path):
        ladder = write(tmp_path, "ladder.yaml", "high: point(0.7)\n")
        code, _, err = cli(
            "assess", str(corpus_dir / "simple_step.yaml"), "--ladder", ladder
        )
        assert code == 2


class TestProviders:
    def test_provider_flag(self, cli, tmp_path):
        doc = write(tmp_path, "doc.yaml", CAUTIOUS_DOC)
        code, out, _ = cli(
            "assess", doc, "--macro-provider", fake_command("ok")
        )
        assert code == 0
        assert out.splitlines()[0] == "C0: very_low"  # min(med, very_low)

    def test_provider_pragma_names_command(self, cli, tmp_path):
        doc = write(tmp_path, "doc.yaml", CAUTIOUS_DOC)
        code, out, _ = cli(
            "expand", doc, "--macro-provider", fake_command("ok")
        )
        assert code == 0
        assert "// expanded-from: CAUTIOUS via " in out

    def test_env_var_is_fallback(self, cli, tmp_path, monkeypatch):
        monkeypatch.setenv("CERTUS_MACRO_PROVIDER", fake_command("ok"))
        doc = write(tmp_path, "doc.yaml", CAUTIOUS_DOC)
        code, out, _ = cli("assess", doc)
        assert code == 0
        assert out.splitlines()[0] == "C0: very_low"

    def test_flag_overrides_env(self, cli, tmp_path, monkeypatch):
        monkeypatch.setenv(
            "CERTUS_MACRO_PROVIDER", f"{sys.executable} {tmp_path}/absent.py x"
        )
        doc = write(tmp_path, "doc.yaml", CAUTIOUS_DOC)
        code, out, _ = cli(
            "assess", doc, "--macro-provider", fake_command("ok")
        )
        assert code == 0
        assert out.splitlines()[0] == "C0: very_low"

    def test_provider_error_reported(self, cli, tmp_path):
        doc = write(tmp_path, "doc.yaml", CAUTIOUS_DOC)
        code, out, err = cli(
            "expand", doc, "--macro-provider", fake_command("error")
        )
        assert code == 1
        assert out == ""
        assert "MAC002" in err

    def test_unstartable_provider_fails(self, cli, tmp_path):
        doc = write(tmp_path, "doc.yaml", CAUTIOUS_DOC)
        code, _, err = cli(
            "expand", doc, "--macro-provider", str(tmp_path / "nope")
        )
        assert code == 1
        assert "could not start" in err

    def test_provider_timeout_flag(self, cli, tmp_path):
        doc = write(tmp_path, "doc.yaml", CAUTIOUS_DOC)
        code, _, err = cli(
            "expand",
            doc,
            "--macro-provider",
            fake_command("slow"),
            "--provider-timeout",
            "0.4",
        )
        assert code == 1
        assert "MAC004" in err


class TestExplain:
    def test_full_derivation(self, cli, corpus_dir):
        code, out, _ = cli(
            "explain", str(corpus_dir / "simple_step.yaml"), "C0"
        )
        assert code == 0
        assert out.splitlines() == [
            "C0 = high -- cases, case 1: E1 ge high and E2 ge high -> high",
            "  E1 = high -- assigned",
            "  E2 = very_high -- assigned",
        ]

    def test_unknown_node_is_usage_error(self, cli, corpus_dir):
        code, _, err = cli(
            "explain", str(corpus_dir / "simple_step.yaml"), "ZZ"
        )
        assert code == 2
        assert "no result" in err

    def test_shorted_node_is_usage_error(self, cli, tmp_path):
        doc = write(tmp_path, "doc.yaml", SHORTED_DOC)
        code, _, err = cli("explain", doc, "E1")
        assert code == 2
        assert "shorted at C0" in err

    def test_json_format_rejected(self, cli, corpus_dir):
        code, _, err = cli(
            "explain",
            str(corpus_dir / "simple_step.yaml"),
            "C0",
            "--format",
            "json",
        )
        assert code == 2
        assert "not supported" in err


class TestExpansionTransparency:
    @pytest.mark.parametrize(
        "name",
        [
            "simple_step.yaml",
            "reusable_operator.yaml",
            "fuse_pair.yaml",
            "composite_argument.yaml",
        ],
    )
    def test_expand_then_assess_matches_direct(
        self, cli, corpus_dir, tmp_path, name
    ):
        expanded = tmp_path / "expanded.yaml"
        code, _, _ = cli(
            "expand", str(corpus_dir / name), "--output", str(expanded)
        )
        assert code == 0
        code, direct, _ = cli(
            "assess", str(corpus_dir / name), "--format", "json"
        )
        assert code == 0
        code, indirect, _ = cli("assess", str(expanded), "--format", "json")
        assert code == 0
        assert direct == indirect
