"""Tokenizer, AST, parser, and printer for annotation and definition source.

The concrete syntax:

    annotation   = assignment | cases | opcall | macrocall
    assignment   = ident "is" ( setexpr | ident )
    cases        = "cases" "{" case { ";" case } [ ";" "otherwise" "->" outcome ] "}"
    case         = cond "->" outcome
    cond         = conj { "or" conj }
    conj         = atom { "and" atom }
    atom         = "(" cond ")" | ident cmp ( setexpr | ident )
    cmp          = "is" | "contains" | "overlaps" | ">" | "<" | ">=" | "<="
                 | "gt" | "lt" | "ge" | "le"
    outcome      = setexpr | ident | ("min"|"max") "(" ident { "," ident } ")"
    setexpr      = canonicalname | "point(" num ")" | "triangle(" num "," num "," num ")"
                 | "trapezoid(" num "," num "," num "," num ")"
    opcall       = ident "(" ident { "," ident } ")"
    macrocall    = "#" UPPERIDENT [ "(" ident { "," ident } ")" ]
    definitions  = { "with" ident "(" param { "," param } ")" "as"
                     ( cases | opcall | macrocall ) }
    param        = ident ":" ( "Premise" | "Defeater" | "Any" )

`//` starts a comment running to end of line.  Two comment pragmas carry
tool metadata: `// expanded-from: NAME via PROVIDER` marks a cases
expression produced by macro expansion, and `// allow: CODE[, CODE...]`
disables the named preflight rules for the annotated node.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from .errors import CertusSyntaxError, DomainError
from .fuzzy import FuzzySet, LADDER_NAMES, point, trapezoid, triangle

KEYWORDS = frozenset(
    "is contains overlaps gt lt ge le and or cases otherwise with as min max".split()
)
PARAM_KINDS = ("Premise", "Defeater", "Any")
SET_CONSTRUCTORS = ("point", "triangle", "trapezoid")
RESERVED_WORDS = KEYWORDS | set(SET_CONSTRUCTORS) | set(PARAM_KINDS)

_SYMBOLS = ("->", ">=", "<=", ">", "<", "{", "}", "(", ")", ",", ";", ":", "#")
_CMP_SYMBOLS = {">": "gt", "<": "lt", ">=": "ge", "<=": "le"}
_CMP_WORDS = ("is", "contains", "overlaps", "gt", "lt", "ge", "le")

_PRAGMA_EXPANDED = re.compile(r"expanded-from:\s*(\w+)\s+via\s+(.+?)\s*$")
_PRAGMA_ALLOW = re.compile(r"allow:\s*([A-Z0-9, ]+)\s*$")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | NUMBER | KW | SYM | COMMENT | EOF
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    """Split source into tokens with line/column positions (1-based)."""
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            end = source.find("\n", i)
            end = n if end < 0 else end
            tokens.append(Token("COMMENT", source[i + 2 : end].strip(), line, col))
            col += end - i
            i = end
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = "KW" if word in KEYWORDS else "IDENT"
            tokens.append(Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == ".":
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            tokens.append(Token("NUMBER", source[i:j], line, col))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token("SYM", sym, line, col))
                col += len(sym)
                i += len(sym)
                break
        else:
            raise CertusSyntaxError(f"illegal character {ch!r}", line, col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


# --- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Canonical:
    name: str

    def build(self, ladder) -> FuzzySet:
        return ladder.set_of(self.name)

    def render(self) -> str:
        return self.name


@dataclass(frozen=True)
class PointLit:
    v: float

    def build(self, ladder) -> FuzzySet:
        return point(self.v)

    def render(self) -> str:
        return f"point({_num(self.v)})"


@dataclass(frozen=True)
class TriangleLit:
    a: float
    b: float
    c: float

    def build(self, ladder) -> FuzzySet:
        return triangle(self.a, self.b, self.c)

    def render(self) -> str:
        return f"triangle({_num(self.a)},{_num(self.b)},{_num(self.c)})"


@dataclass(frozen=True)
class TrapezoidLit:
    a: float
    b: float
    c: float
    d: float

    def build(self, ladder) -> FuzzySet:
        return trapezoid(self.a, self.b, self.c, self.d)

    def render(self) -> str:
        return f"trapezoid({_num(self.a)},{_num(self.b)},{_num(self.c)},{_num(self.d)})"


SetExpr = Union[Canonical, PointLit, TriangleLit, TrapezoidLit]


def _num(v: float) -> str:
    return format(v, "g")


@dataclass(frozen=True)
class Atom:
    left: str
    op: str  # is | contains | overlaps | gt | lt | ge | le
    right: Union[SetExpr, str]  # a set expression or a node/param reference

    def render(self) -> str:
        right = self.right.render() if not isinstance(self.right, str) else self.right
        return f"{self.left} {self.op} {right}"


@dataclass(frozen=True)
class And:
    items: tuple

    def render(self) -> str:
        parts = [
            f"({item.render()})" if isinstance(item, Or) else item.render()
            for item in self.items
        ]
        return " and ".join(parts)


@dataclass(frozen=True)
class Or:
    items: tuple

    def render(self) -> str:
        return " or ".join(item.render() for item in self.items)


Condition = Union[Atom, And, Or]


@dataclass(frozen=True)
class SetOutcome:
    expr: SetExpr

    def render(self) -> str:
        return self.expr.render()


@dataclass(frozen=True)
class RefOutcome:
    name: str

    def render(self) -> str:
        return self.name


@dataclass(frozen=True)
class ExtremumOutcome:
    mode: str  # min | max
    refs: tuple[str, ...]

    def render(self) -> str:
        return f"{self.mode}({', '.join(self.refs)})"


Outcome = Union[SetOutcome, RefOutcome, ExtremumOutcome]


@dataclass(frozen=True)
class Case:
    condition: Condition
    outcome: Outcome

    def render(self) -> str:
        return f"{self.condition.render()} -> {self.outcome.render()}"


@dataclass(frozen=True)
class Origin:
    """Provenance of a macro-expanded cases expression."""

    macro: str
    via: str  # "builtin" or the provider command

    def render(self) -> str:
        return f"// expanded-from: {self.macro} via {self.via}"


@dataclass(frozen=True)
class Assignment:
    target: str
    value: SetExpr

    def render(self) -> str:
        return f"{self.target} is {self.value.render()}"


@dataclass(frozen=True)
class DirectProp:
    target: str
    source: str

    def render(self) -> str:
        return f"{self.target} is {self.source}"


@dataclass(frozen=True)
class Cases:
    cases: tuple[Case, ...]
    otherwise: Outcome | None = None
    origin: Origin | None = None

    def render(self) -> str:
        arms = [c.render() for c in self.cases]
        if self.otherwise is not None:
            arms.append(f"otherwise -> {self.otherwise.render()}")
        if len(arms) > 3:
            body = ";\n  ".join(arms)
            text = "cases {\n  " + body + "\n}"
        else:
            text = "cases { " + "; ".join(arms) + " }"
        if self.origin is not None:
            text = self.origin.render() + "\n" + text
        return text


@dataclass(frozen=True)
class OperatorCall:
    name: str
    args: tuple[str, ...]

    def render(self) -> str:
        return f"{self.name}({', '.join(self.args)})"


@dataclass(frozen=True)
class MacroCall:
    name: str
    args: tuple[str, ...] = ()

    def render(self) -> str:
        if self.args:
            return f"#{self.name}({', '.join(self.args)})"
        return f"#{self.name}"


Annotation = Union[Assignment, DirectProp, Cases, OperatorCall, MacroCall]


@dataclass(frozen=True)
class Param:
    name: str
    kind: str  # Premise | Defeater | Any

    def render(self) -> str:
        return f"{self.name}: {self.kind}"


@dataclass(frozen=True)
class OperatorDef:
    name: str
    params: tuple[Param, ...]
    body: Union[Cases, OperatorCall, MacroCall]

    def render(self) -> str:
        params = ", ".join(p.render() for p in self.params)
        return f"with {self.name}({params}) as {self.body.render()}"


@dataclass(frozen=True)
class NodeSource:
    """Everything a node's annotation string can carry."""

    definitions: tuple[OperatorDef, ...]
    annotation: Annotation | None
    allows: frozenset[str] = frozenset()

    def render(self) -> str:
        parts = [d.render() for d in self.definitions]
        if self.annotation is not None:
            parts.append(self.annotation.render())
        if self.allows:
            parts.insert(0, "// allow: " + ", ".join(sorted(self.allows)))
        return "\n".join(parts)


def condition_refs(cond: Condition) -> list[str]:
    """Node/param references in a condition, in appearance order, deduplicated."""
    refs: list[str] = []

    def walk(c):
        if isinstance(c, Atom):
            if c.left not in refs:
                refs.append(c.left)
            if isinstance(c.right, str) and c.right not in refs:
                refs.append(c.right)
        else:
            for item in c.items:
                walk(item)

    walk(cond)
    return refs


def outcome_refs(outcome: Outcome) -> list[str]:
    if isinstance(outcome, RefOutcome):
        return [outcome.name]
    if isinstance(outcome, ExtremumOutcome):
        return list(outcome.refs)
    return []


def annotation_refs(ast: Annotation) -> list[str]:
    """All node/param references an annotation consumes, in appearance order."""
    refs: list[str] = []

    def add(names):
        for n in names:
            if n not in refs:
                refs.append(n)

    if isinstance(ast, DirectProp):
        add([ast.source])
    elif isinstance(ast, Cases):
        for case in ast.cases:
            add(condition_refs(case.condition))
            add(outcome_refs(case.outcome))
        if ast.otherwise is not None:
            add(outcome_refs(ast.otherwise))
    elif isinstance(ast, (OperatorCall, MacroCall)):
        add(ast.args)
    return refs


# --- Parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[Token]):
        self._tokens = [t for t in tokens if t.kind != "COMMENT"]
        self._comments = [t for t in tokens if t.kind == "COMMENT"]
        self._pos = 0

    @property
    def current(self) -> Token:
        return self._tokens[self._pos]

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.current
        return tok.kind == kind and (text is None or tok.text == text)

    def advance(self) -> Token:
        tok = self.current
        if tok.kind != "EOF":
            self._pos += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> Token:
        if not self.at(kind, text):
            want = text or kind.lower()
            raise CertusSyntaxError(
                f"expected {want!r}, found {self.current.text or 'end of input'!r}",
                self.current.line,
                self.current.col,
            )
        return self.advance()

    def fail(self, message: str):
        raise CertusSyntaxError(message, self.current.line, self.current.col)

    # -- productions --

    def annotation(self, context: str | None) -> Annotation:
        if self.at("KW", "cases"):
            return self.cases()
        if self.at("SYM", "#"):
            return self.macrocall()
        target = self.ident("annotation target")
        if self.at("KW", "is"):
            self.advance()
            if context is not None and target != context:
                self.fail(
                    f"assignment target {target!r} must be the annotated node {context!r}"
                )
            rhs = self.set_expr_or_ref()
            if isinstance(rhs, str):
                return DirectProp(target, rhs)
            return Assignment(target, rhs)
        if self.at("SYM", "("):
            return OperatorCall(target, self.ident_args())
        self.fail("expected 'is' or '(' after identifier")

    def cases(self) -> Cases:
        origin = self._pending_origin()
        self.expect("KW", "cases")
        self.expect("SYM", "{")
        if self.at("KW", "otherwise"):
            self.fail("cases requires at least one condition arm before otherwise")
        arms = [self.case()]
        otherwise = None
        while self.at("SYM", ";"):
            self.advance()
            if self.at("SYM", "}"):
                break  # tolerate a trailing separator
            if self.at("KW", "otherwise"):
                self.advance()
                self.expect("SYM", "->")
                otherwise = self.outcome()
                if self.at("SYM", ";"):
                    self.advance()
                break
            arms.append(self.case())
        self.expect("SYM", "}")
        return Cases(tuple(arms), otherwise, origin)

    def case(self) -> Case:
        cond = self.condition()
        self.expect("SYM", "->")
        return Case(cond, self.outcome())

    def condition(self) -> Condition:
        items = [self.conjunction()]
        while self.at("KW", "or"):
            self.advance()
            items.append(self.conjunction())
        if len(items) == 1:
            return items[0]
        # flatten so parenthesized disjunctions round-trip as one Or
        flat: list = []
        for item in items:
            flat.extend(item.items) if isinstance(item, Or) else flat.append(item)
        return Or(tuple(flat))

    def conjunction(self) -> Condition:
        items = [self.atom()]
        while self.at("KW", "and"):
            self.advance()
            items.append(self.atom())
        if len(items) == 1:
            return items[0]
        flat: list = []
        for item in items:
            flat.extend(item.items) if isinstance(item, And) else flat.append(item)
        return And(tuple(flat))

    def atom(self) -> Condition:
        if self.at("SYM", "("):
            self.advance()
            inner = self.condition()
            self.expect("SYM", ")")
            return inner
        left = self.ident("comparison subject")
        op = self.cmp()
        return Atom(left, op, self.set_expr_or_ref())

    def cmp(self) -> str:
        tok = self.current
        if tok.kind == "KW" and tok.text in _CMP_WORDS:
            self.advance()
            return tok.text
        if tok.kind == "SYM" and tok.text in _CMP_SYMBOLS:
            self.advance()
            return _CMP_SYMBOLS[tok.text]
        self.fail(f"expected a comparison operator, found {tok.text!r}")

    def outcome(self) -> Outcome:
        if self.at("KW", "min") or self.at("KW", "max"):
            mode = self.advance().text
            return ExtremumOutcome(mode, self.ident_args())
        rhs = self.set_expr_or_ref()
        if isinstance(rhs, str):
            return RefOutcome(rhs)
        return SetOutcome(rhs)

    def set_expr_or_ref(self) -> Union[SetExpr, str]:
        tok = self.current
        if tok.kind == "IDENT" and tok.text in LADDER_NAMES:
            self.advance()
            return Canonical(tok.text)
        if tok.kind == "IDENT" and tok.text in SET_CONSTRUCTORS:
            return self.set_literal()
        if tok.kind == "IDENT":
            self.advance()
            return tok.text
        self.fail(f"expected a fuzzy set or identifier, found {tok.text!r}")

    def set_literal(self) -> SetExpr:
        tok = self.expect("IDENT")
        args = []
        self.expect("SYM", "(")
        args.append(self.number())
        while self.at("SYM", ","):
            self.advance()
            args.append(self.number())
        self.expect("SYM", ")")
        arity = {"point": 1, "triangle": 3, "trapezoid": 4}[tok.text]
        if len(args) != arity:
            raise CertusSyntaxError(
                f"{tok.text} takes {arity} argument(s), got {len(args)}",
                tok.line,
                tok.col,
            )
        try:
            if tok.text == "point":
                expr = PointLit(*args)
            elif tok.text == "triangle":
                expr = TriangleLit(*args)
            else:
                expr = TrapezoidLit(*args)
            expr.build(None)  # literals never touch the ladder; validates ranges
        except DomainError as exc:
            raise CertusSyntaxError(str(exc), tok.line, tok.col) from exc
        return expr

    def number(self) -> float:
        tok = self.expect("NUMBER")
        return float(tok.text)

    def ident(self, what: str) -> str:
        tok = self.current
        if tok.kind != "IDENT":
            self.fail(f"expected {what}, found {tok.text or 'end of input'!r}")
        self.advance()
        return tok.text

    def ident_args(self) -> tuple[str, ...]:
        self.expect("SYM", "(")
        args = [self.ident("argument")]
        while self.at("SYM", ","):
            self.advance()
            args.append(self.ident("argument"))
        self.expect("SYM", ")")
        return tuple(args)

    def macrocall(self) -> MacroCall:
        self.expect("SYM", "#")
        tok = self.current
        name = self.ident("macro name")
        if not re.fullmatch(r"[A-Z][A-Z0-9_]*", name):
            raise CertusSyntaxError(
                f"macro names must be uppercase identifiers, got {name!r}",
                tok.line,
                tok.col,
            )
        args = self.ident_args() if self.at("SYM", "(") else ()
        return MacroCall(name, args)

    def definition(self) -> OperatorDef:
        self.expect("KW", "with")
        name_tok = self.current
        name = self.ident("operator name")
        self.expect("SYM", "(")
        params = [self.param()]
        while self.at("SYM", ","):
            self.advance()
            params.append(self.param())
        self.expect("SYM", ")")
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise CertusSyntaxError(
                f"duplicate parameter name in {name!r}", name_tok.line, name_tok.col
            )
        self.expect("KW", "as")
        if self.at("KW", "cases"):
            body = self.cases()
        elif self.at("SYM", "#"):
            body = self.macrocall()
        else:
            call_name = self.ident("operator body")
            body = OperatorCall(call_name, self.ident_args())
        loose = [r for r in annotation_refs(body) if r not in names]
        if loose:
            raise CertusSyntaxError(
                f"operator {name!r} references undeclared parameter(s): {', '.join(loose)}",
                name_tok.line,
                name_tok.col,
            )
        return OperatorDef(name, tuple(params), body)

    def param(self) -> Param:
        name = self.ident("parameter name")
        self.expect("SYM", ":")
        tok = self.current
        kind = self.ident("parameter type")
        if kind not in PARAM_KINDS:
            raise CertusSyntaxError(
                f"parameter type must be one of {', '.join(PARAM_KINDS)}, got {kind!r}",
                tok.line,
                tok.col,
            )
        return Param(name, kind)

    def _pending_origin(self) -> Origin | None:
        # The pragma comment applies to the next `cases` after it.
        tok = self.current
        best = None
        for comment in self._comments:
            if (comment.line, comment.col) < (tok.line, tok.col):
                m = _PRAGMA_EXPANDED.match(comment.text)
                if m:
                    best = Origin(m.group(1), m.group(2))
        if best is not None:
            self._comments = [
                c
                for c in self._comments
                if not ((c.line, c.col) < (tok.line, tok.col) and _PRAGMA_EXPANDED.match(c.text))
            ]
        return best

    def expect_eof(self):
        if not self.at("EOF"):
            self.fail(f"unexpected trailing input {self.current.text!r}")


def _collect_allows(tokens: list[Token]) -> frozenset[str]:
    allows = set()
    for tok in tokens:
        if tok.kind == "COMMENT":
            m = _PRAGMA_ALLOW.match(tok.text)
            if m:
                allows.update(code.strip() for code in m.group(1).split(",") if code.strip())
    return frozenset(allows)


def parse_annotation(source: str, context: str | None = None) -> Annotation:
    """Parse a single annotation; `context` is the annotated node's id."""
    parser = _Parser(tokenize(source))
    ast = parser.annotation(context)
    parser.expect_eof()
    return ast


def parse_definitions(source: str) -> list[OperatorDef]:
    """Parse a block of operator definitions (may be empty)."""
    parser = _Parser(tokenize(source))
    defs: list[OperatorDef] = []
    while parser.at("KW", "with"):
        d = parser.definition()
        if any(prev.name == d.name for prev in defs):
            parser.fail(f"operator {d.name!r} defined twice in the same block")
        defs.append(d)
    parser.expect_eof()
    return defs


def parse_node_source(source: str, context: str | None = None) -> NodeSource:
    """Parse a node's annotation string: optional definitions, then at most
    one annotation."""
    tokens = tokenize(source)
    parser = _Parser(tokens)
    defs: list[OperatorDef] = []
    while parser.at("KW", "with"):
        d = parser.definition()
        if any(prev.name == d.name for prev in defs):
            parser.fail(f"operator {d.name!r} defined twice in the same block")
        defs.append(d)
    annotation = None
    if not parser.at("EOF"):
        annotation = parser.annotation(context)
    parser.expect_eof()
    return NodeSource(tuple(defs), annotation, _collect_allows(tokens))


def parse_set_literal(source: str) -> SetExpr:
    """Parse a bare set expression (used by the ladder override file)."""
    parser = _Parser(tokenize(source))
    expr = parser.set_expr_or_ref()
    parser.expect_eof()
    if isinstance(expr, str):
        raise CertusSyntaxError(f"{source!r} is not a set literal or canonical name")
    return expr
