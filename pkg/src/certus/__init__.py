"""Certus: fuzzy-set confidence assessment for assurance-case arguments."""

from .binding import GraphAnalysis, Problem, analyze_graph
from .engine import (
    Assessment,
    Snap,
    Trace,
    apply_operator,
    assess,
    evaluate_cases,
    explain,
)
from .errors import (
    BindError,
    CertusError,
    CertusSyntaxError,
    DocumentError,
    DomainError,
    EvalError,
    InvalidSetError,
    LadderError,
    MacroError,
)
from .fuzzy import (
    DEFAULT_LADDER,
    LADDER_NAMES,
    FuzzySet,
    Ladder,
    compare,
    contains_set,
    describe,
    extremum,
    membership,
    overlaps,
    point,
    rank,
    subset_of,
    trapezoid,
    triangle,
    validate_set,
)
from .macros import (
    ChildInfo,
    MacroProvider,
    MacroRequest,
    expand_all,
    expand_fuse,
)
from .model import (
    ArgumentGraph,
    Node,
    NodeKind,
    load_document,
    load_ladder,
    serialize_document,
)
from .preflight import (
    Finding,
    PreflightReport,
    check_assignment_coverage,
    check_totality,
    document_vocabulary,
    run_preflight,
)

__all__ = [
    "ArgumentGraph",
    "Assessment",
    "BindError",
    "CertusError",
    "CertusSyntaxError",
    "ChildInfo",
    "DEFAULT_LADDER",
    "DocumentError",
    "DomainError",
    "EvalError",
    "Finding",
    "FuzzySet",
    "GraphAnalysis",
    "InvalidSetError",
    "LADDER_NAMES",
    "Ladder",
    "LadderError",
    "MacroError",
    "MacroProvider",
    "MacroRequest",
    "Node",
    "NodeKind",
    "PreflightReport",
    "Problem",
    "Snap",
    "Trace",
    "analyze_graph",
    "apply_operator",
    "assess",
    "check_assignment_coverage",
    "check_totality",
    "compare",
    "contains_set",
    "describe",
    "document_vocabulary",
    "evaluate_cases",
    "expand_all",
    "expand_fuse",
    "explain",
    "extremum",
    "load_document",
    "load_ladder",
    "membership",
    "overlaps",
    "point",
    "rank",
    "run_preflight",
    "serialize_document",
    "subset_of",
    "trapezoid",
    "triangle",
    "validate_set",
]
