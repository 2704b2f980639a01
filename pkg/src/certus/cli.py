"""Command-line front end.

Commands:
    check    run static checks and print the findings
    expand   write the document with every macro replaced by its expansion
    assess   run checks, then print every computed confidence
    explain  print the derivation of one node's result

Exit codes: 0 success, 1 findings or failed checks, 2 usage or parse errors.
CERTUS_MACRO_PROVIDER supplies a default provider command when no
--macro-provider flag is given.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys

import yaml

from .binding import analyze_graph
from .engine import Assessment, assess, explain, mechanism_text
from .errors import CertusError, EvalError, MacroError
from .fuzzy import DEFAULT_LADDER, Ladder, describe
from .macros import DEFAULT_TIMEOUT, MacroProvider, expand_all
from .model import ArgumentGraph, load_document, load_ladder, serialize_document
from .preflight import (
    DEFAULT_ENUMERATION_LIMIT,
    PreflightReport,
    run_preflight,
)

USAGE_ERROR = 2
FINDINGS = 1

KIND_SHAPES = {"claim": "box", "evidence": "ellipse", "defeater": "octagon"}


class _Fail(Exception):
    def __init__(self, message: str, status: int):
        super().__init__(message)
        self.status = status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="certus",
        description="Assess confidence in assurance-case arguments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("check", "run static checks on a document"),
        ("expand", "expand macros and print the rewritten document"),
        ("assess", "check, evaluate, and print per-node confidence"),
        ("explain", "show how one node's confidence was derived"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("input", help="argument document (YAML)")
        if name == "explain":
            cmd.add_argument("node", help="node id to explain")
        cmd.add_argument(
            "--format",
            choices=("text", "json", "dot"),
            default="text",
            help="output format (dot is assess-only)",
        )
        cmd.add_argument(
            "--ladder",
            metavar="PATH",
            help="YAML file overriding the seven canonical sets",
        )
        cmd.add_argument(
            "--macro-provider",
            metavar="COMMAND",
            action="append",
            default=[],
            help="macro provider command (repeatable)",
        )
        cmd.add_argument(
            "--max-enumeration",
            type=int,
            default=DEFAULT_ENUMERATION_LIMIT,
            metavar="N",
            help="totality/defeater-rule enumeration limit",
        )
        cmd.add_argument(
            "--provider-timeout",
            type=float,
            default=DEFAULT_TIMEOUT,
            metavar="SECONDS",
            help="per-request macro provider timeout",
        )
        cmd.add_argument("--trace", action="store_true", help="include traces")
        cmd.add_argument(
            "--output", metavar="PATH", help="write output here instead of stdout"
        )
    return parser


def _load_graph(path: str) -> ArgumentGraph:
    try:
        with open(path, encoding="utf-8") as fh:
            return load_document(fh.read())
    except OSError as exc:
        raise _Fail(f"cannot read {path}: {exc}", USAGE_ERROR)
    except (CertusError, yaml.YAMLError) as exc:
        raise _Fail(f"{path}: {exc}", USAGE_ERROR)


def _load_ladder(path: str | None) -> Ladder:
    if path is None:
        return DEFAULT_LADDER
    try:
        with open(path, encoding="utf-8") as fh:
            return load_ladder(fh.read())
    except OSError as exc:
        raise _Fail(f"cannot read {path}: {exc}", USAGE_ERROR)
    except (CertusError, yaml.YAMLError) as exc:
        raise _Fail(f"{path}: {exc}", USAGE_ERROR)


def _provider_commands(args) -> list[str]:
    if args.macro_provider:
        return args.macro_provider
    fallback = os.environ.get("CERTUS_MACRO_PROVIDER")
    return [fallback] if fallback else []


def _expand(graph, args, ladder, stack: contextlib.ExitStack):
    providers = []
    for command in _provider_commands(args):
        provider = MacroProvider(command, timeout=args.provider_timeout)
        try:
            stack.enter_context(provider)
        except MacroError as exc:
            raise _Fail(str(exc), FINDINGS)
        providers.append(provider)
    return expand_all(
        graph, providers, ladder, max_enumeration=args.max_enumeration
    )


def _emit(text: str, args):
    if not text.endswith("\n"):
        text += "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _require_text_format(args, command: str):
    if args.format != "text":
        raise _Fail(f"--format {args.format} is not supported for {command}",
                    USAGE_ERROR)


def render_findings(report: PreflightReport) -> str:
    lines = []
    for f in report.findings:
        where = f.node_id if f.node_id else "<document>"
        lines.append(f"{f.severity} {f.code} {where}: {f.message}")
        for item in f.witness:
            lines.append(f"  - {item}")
    lines.append("preflight " + ("passed" if report.passed else "failed"))
    return "\n".join(lines)


def render_assessment_text(
    assessment: Assessment, graph: ArgumentGraph, trace: bool
) -> str:
    lines = []
    for node_id, value in assessment.results.items():
        lines.append(f"{node_id}: {describe(value, assessment.ladder)}")
        if not trace:
            continue
        t = assessment.traces[node_id]
        lines.append(f"  {mechanism_text(t)}")
        if t.inputs:
            shown = ", ".join(
                f"{c}={describe(v, assessment.ladder)}" for c, v in t.inputs
            )
            lines.append(f"  inputs: {shown}")
        for s in t.snaps:
            lines.append(
                f"  ({s.child} snapped from {s.original} to {s.snapped_to})"
            )
    for node_id, ancestor in sorted(assessment.shorted_by.items()):
        lines.append(f"{node_id}: not evaluated (shorted at {ancestor})")
    return "\n".join(lines)


def render_dot(assessment: Assessment, graph: ArgumentGraph) -> str:
    lines = ["digraph certus {"]
    for node in graph.nodes:
        shape = KIND_SHAPES[node.kind.value]
        if node.id in assessment.results:
            label = f"{node.id}\\n{describe(assessment.results[node.id], assessment.ladder)}"
        else:
            label = f"{node.id}\\n(not evaluated)"
        lines.append(f'  "{node.id}" [shape={shape}, label="{label}"];')
    for node in graph.nodes:
        for child in graph.child_ids(node.id):
            lines.append(f'  "{node.id}" -> "{child}";')
    lines.append("}")
    return "\n".join(lines)


def cmd_check(args) -> int:
    ladder = _load_ladder(args.ladder)
    graph = _load_graph(args.input)
    with contextlib.ExitStack() as stack:
        expanded, problems = _expand(graph, args, ladder, stack)
    report = run_preflight(
        expanded,
        ladder,
        expansion_problems=problems,
        limit=args.max_enumeration,
    )
    if args.format == "json":
        _emit(json.dumps(report.to_dict(), indent=2), args)
    else:
        _require_text_format(args, "check")
        _emit(render_findings(report), args)
    return 0 if report.passed else FINDINGS


def cmd_expand(args) -> int:
    _require_text_format(args, "expand")
    ladder = _load_ladder(args.ladder)
    graph = _load_graph(args.input)
    with contextlib.ExitStack() as stack:
        expanded, problems = _expand(graph, args, ladder, stack)
    if problems:
        for p in problems:
            where = p.node_id if p.node_id else "<document>"
            print(f"error {p.code} {where}: {p.message}", file=sys.stderr)
        return FINDINGS
    _emit(serialize_document(expanded), args)
    return 0


def _checked_assessment(args) -> tuple[Assessment, ArgumentGraph]:
    """Shared by assess and explain: expand, preflight (mandatory), assess."""
    ladder = _load_ladder(args.ladder)
    graph = _load_graph(args.input)
    with contextlib.ExitStack() as stack:
        expanded, problems = _expand(graph, args, ladder, stack)
    analysis = analyze_graph(expanded, ladder)
    report = run_preflight(
        expanded,
        ladder,
        analysis=analysis,
        expansion_problems=problems,
        limit=args.max_enumeration,
    )
    if not report.passed:
        raise _Fail(render_findings(report), FINDINGS)
    for finding in report.findings:  # warnings only at this point
        where = finding.node_id if finding.node_id else "<document>"
        print(
            f"{finding.severity} {finding.code} {where}: {finding.message}",
            file=sys.stderr,
        )
    return assess(analysis), expanded


def cmd_assess(args) -> int:
    assessment, graph = _checked_assessment(args)
    if args.format == "json":
        _emit(json.dumps(assessment.to_dict(), indent=2), args)
    elif args.format == "dot":
        _emit(render_dot(assessment, graph), args)
    else:
        _emit(render_assessment_text(assessment, graph, args.trace), args)
    return 0


def cmd_explain(args) -> int:
    _require_text_format(args, "explain")
    assessment, _ = _checked_assessment(args)
    try:
        _emit(explain(assessment, args.node), args)
    except EvalError as exc:
        raise _Fail(str(exc), USAGE_ERROR)
    return 0


COMMANDS = {
    "check": cmd_check,
    "expand": cmd_expand,
    "assess": cmd_assess,
    "explain": cmd_explain,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except _Fail as exc:
        print(str(exc), file=sys.stderr)
        return exc.status


if __name__ == "__main__":
    sys.exit(main())
