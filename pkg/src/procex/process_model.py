"""Textual process definitions: parsing, validation, and structural analysis.

A process definition declares numeric case attributes, a start edge, and a
graph of activities, gateways, and labeled end nodes. Two gateway kinds exist:

* ``xor`` gateways route deterministically by evaluating guard expressions
  over the case attributes (first matching ``when`` branch wins, with a
  mandatory ``otherwise`` fallback);
* ``choice`` gateways route stochastically with fixed branch probabilities.

The grammar is line-oriented only by convention. Newlines are ordinary
whitespace to the parser, so gateway blocks may span lines; the keywords
(``process``, ``attr``, ``numeric``, ``in``, ``start``, ``activity``,
``gateway``, ``choice``, ``when``, ``otherwise``, ``end``, ``label``) are
reserved and cannot be used as names. ``#`` starts a comment that runs to the
end of the line.

Routing graphs must be acyclic with every declared node reachable from the
start edge; loops and parallel branches are out of scope, which keeps path
enumeration finite.

Everything in this module is an immutable value; all functions are pure.
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping, Union

import numpy as np
from importlib import resources

from .errors import (
    BadProbabilitySumError,
    CyclicGraphError,
    DslSyntaxError,
    DuplicateNameError,
    InvalidDefinitionError,
    MissingAttributeError,
    UnknownAttributeError,
    UnknownTargetError,
    UnreachableNodeError,
)

__all__ = [
    "Comparison",
    "Not",
    "And",
    "Or",
    "GuardExpr",
    "AttributeDecl",
    "Activity",
    "XorBranch",
    "XorGateway",
    "ChoiceBranch",
    "ChoiceGateway",
    "EndNode",
    "Node",
    "ProcessDefinition",
    "Finding",
    "ValidationReport",
    "CausalityGraph",
    "parse_process",
    "parse_process_structure",
    "parse_guard",
    "serialize_process",
    "format_guard",
    "validate",
    "eval_guard",
    "eval_guard_batch",
    "guard_attributes",
    "derive_causality_graph",
    "reachable_indicators",
    "topological_order",
    "node_successors",
    "fixture_path",
    "POSITIVE",
    "NEGATIVE",
    "LABELS",
]

POSITIVE = "POSITIVE"
NEGATIVE = "NEGATIVE"
LABELS = (POSITIVE, NEGATIVE)

_KEYWORDS = frozenset(
    {
        "process",
        "attr",
        "numeric",
        "in",
        "start",
        "activity",
        "gateway",
        "choice",
        "when",
        "otherwise",
        "end",
        "label",
    }
)
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

PROBABILITY_TOL = 1e-9


# ---------------------------------------------------------------------------
# Guard expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Comparison:
    """``attribute op value`` with op one of ``<``, ``<=``, ``>``, ``>=``, ``==``."""

    attribute: str
    op: str
    value: float


@dataclass(frozen=True)
class Not:
    operand: "GuardExpr"


@dataclass(frozen=True)
class And:
    left: "GuardExpr"
    right: "GuardExpr"


@dataclass(frozen=True)
class Or:
    left: "GuardExpr"
    right: "GuardExpr"


GuardExpr = Union[Comparison, Not, And, Or]

_CMP_FUNCS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "==": operator.eq,
}


def eval_guard(guard: GuardExpr, attrs: Mapping[str, float]) -> bool:
    """Evaluate a guard against a single attribute assignment."""
    if isinstance(guard, Comparison):
        try:
            value = attrs[guard.attribute]
        except KeyError:
            raise MissingAttributeError(
                f"guard references attribute {guard.attribute!r} "
                "which is absent from the assignment"
            ) from None
        return bool(_CMP_FUNCS[guard.op](value, guard.value))
    if isinstance(guard, Not):
        return not eval_guard(guard.operand, attrs)
    if isinstance(guard, And):
        return eval_guard(guard.left, attrs) and eval_guard(guard.right, attrs)
    if isinstance(guard, Or):
        return eval_guard(guard.left, attrs) or eval_guard(guard.right, attrs)
    raise TypeError(f"not a guard expression: {guard!r}")


def eval_guard_batch(guard: GuardExpr, attrs: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorized :func:`eval_guard` over column arrays of equal length."""
    if isinstance(guard, Comparison):
        try:
            col = attrs[guard.attribute]
        except KeyError:
            raise MissingAttributeError(
                f"guard references attribute {guard.attribute!r} "
                "which is absent from the assignment"
            ) from None
        return _CMP_FUNCS[guard.op](np.asarray(col), guard.value)
    if isinstance(guard, Not):
        return ~eval_guard_batch(guard.operand, attrs)
    if isinstance(guard, And):
        return eval_guard_batch(guard.left, attrs) & eval_guard_batch(guard.right, attrs)
    if isinstance(guard, Or):
        return eval_guard_batch(guard.left, attrs) | eval_guard_batch(guard.right, attrs)
    raise TypeError(f"not a guard expression: {guard!r}")


def guard_attributes(guard: GuardExpr) -> frozenset[str]:
    """Set of attribute names mentioned anywhere in the guard."""
    if isinstance(guard, Comparison):
        return frozenset({guard.attribute})
    if isinstance(guard, Not):
        return guard_attributes(guard.operand)
    if isinstance(guard, (And, Or)):
        return guard_attributes(guard.left) | guard_attributes(guard.right)
    raise TypeError(f"not a guard expression: {guard!r}")


def _fmt_num(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


_PREC_OR = 1
_PREC_AND = 2
_PREC_ATOM = 3


def format_guard(guard: GuardExpr, _parent: int = 0) -> str:
    """Render a guard in canonical concrete syntax (reparses to an equal AST)."""
    if isinstance(guard, Comparison):
        text, prec = f"{guard.attribute} {guard.op} {_fmt_num(guard.value)}", _PREC_ATOM
    elif isinstance(guard, Not):
        text, prec = f"!({format_guard(guard.operand)})", _PREC_ATOM
    elif isinstance(guard, And):
        text = f"{format_guard(guard.left, _PREC_AND)} && {format_guard(guard.right, _PREC_AND + 1)}"
        prec = _PREC_AND
    elif isinstance(guard, Or):
        text = f"{format_guard(guard.left, _PREC_OR)} || {format_guard(guard.right, _PREC_OR + 1)}"
        prec = _PREC_OR
    else:
        raise TypeError(f"not a guard expression: {guard!r}")
    if prec < _parent:
        return f"({text})"
    return text


# ---------------------------------------------------------------------------
# Nodes and definitions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttributeDecl:
    name: str
    lower: float
    upper: float


@dataclass(frozen=True)
class Activity:
    name: str
    successor: str


@dataclass(frozen=True)
class XorBranch:
    guard: GuardExpr
    target: str


@dataclass(frozen=True)
class XorGateway:
    name: str
    branches: tuple[XorBranch, ...]
    otherwise: str


@dataclass(frozen=True)
class ChoiceBranch:
    probability: float
    target: str


@dataclass(frozen=True)
class ChoiceGateway:
    name: str
    branches: tuple[ChoiceBranch, ...]


@dataclass(frozen=True)
class EndNode:
    name: str
    label: str


Node = Union[Activity, XorGateway, ChoiceGateway, EndNode]


def node_successors(node: Node) -> tuple[str, ...]:
    """Names of the nodes an edge leads to, in declared branch order."""
    if isinstance(node, Activity):
        return (node.successor,)
    if isinstance(node, XorGateway):
        return tuple(b.target for b in node.branches) + (node.otherwise,)
    if isinstance(node, ChoiceGateway):
        return tuple(b.target for b in node.branches)
    if isinstance(node, EndNode):
        return ()
    raise TypeError(f"not a node: {node!r}")


@dataclass(frozen=True)
class ProcessDefinition:
    """A full process: attributes, a start edge, and the routing graph.

    ``attributes`` and ``nodes`` keep declaration order; the sorted views
    below define the canonical feature order used elsewhere in the package.
    """

    name: str
    attributes: tuple[AttributeDecl, ...]
    start: str
    nodes: tuple[Node, ...]

    @cached_property
    def _node_map(self) -> dict[str, Node]:
        return {n.name: n for n in self.nodes}

    def node(self, name: str) -> Node:
        return self._node_map[name]

    def has_node(self, name: str) -> bool:
        return name in self._node_map

    @cached_property
    def activity_names(self) -> tuple[str, ...]:
        """Activity names sorted lexicographically."""
        return tuple(sorted(n.name for n in self.nodes if isinstance(n, Activity)))

    @cached_property
    def attribute_names(self) -> tuple[str, ...]:
        """Attribute names sorted lexicographically."""
        return tuple(sorted(a.name for a in self.attributes))

    @cached_property
    def attribute_bounds(self) -> dict[str, tuple[float, float]]:
        return {a.name: (a.lower, a.upper) for a in self.attributes}

    @cached_property
    def xor_gateways(self) -> tuple[XorGateway, ...]:
        return tuple(n for n in self.nodes if isinstance(n, XorGateway))

    @cached_property
    def choice_gateways(self) -> tuple[ChoiceGateway, ...]:
        return tuple(n for n in self.nodes if isinstance(n, ChoiceGateway))

    @cached_property
    def end_nodes(self) -> tuple[EndNode, ...]:
        return tuple(n for n in self.nodes if isinstance(n, EndNode))


def topological_order(defn: ProcessDefinition) -> tuple[str, ...]:
    """Node names ordered so every node appears after all its predecessors.

    Deterministic (Kahn's algorithm seeded in declaration order). Requires an
    acyclic graph; raises ``CyclicGraphError`` otherwise.
    """
    indeg = {n.name: 0 for n in defn.nodes}
    for node in defn.nodes:
        for succ in node_successors(node):
            if succ in indeg:
                indeg[succ] += 1
    queue = [n.name for n in defn.nodes if indeg[n.name] == 0]
    order: list[str] = []
    while queue:
        name = queue.pop(0)
        order.append(name)
        for succ in node_successors(defn.node(name)):
            if succ in indeg:
                indeg[succ] -= 1
                if indeg[succ] == 0:
                    queue.append(succ)
    if len(order) != len(defn.nodes):
        stuck = sorted(set(indeg) - set(order))
        raise CyclicGraphError(f"cycle through nodes {stuck}")
    return tuple(order)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""(?P<ws>[^\S\n]+)
      | (?P<comment>\#[^\n]*)
      | (?P<nl>\n)
      | (?P<num>-?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
      | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<sym>->|<=|>=|==|&&|\|\||[{}()\[\],:<>!])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "word" | "sym" | "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DslSyntaxError(line, col, "a token", repr(text[pos]))
        kind = m.lastgroup
        chunk = m.group()
        if kind == "nl":
            line += 1
            col = 1
        else:
            if kind in ("num", "word", "sym"):
                tokens.append(_Token(kind, chunk, line, col))
            col += len(chunk)
        pos = m.end()
    tokens.append(_Token("eof", "<end of input>", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self._tokens = tokens
        self._pos = 0

    def _peek(self) -> _Token:
        return self._tokens[self._pos]

    def _next(self) -> _Token:
        tok = self._tokens[self._pos]
        if tok.kind != "eof":
            self._pos += 1
        return tok

    def _error(self, expected: str, tok: _Token) -> DslSyntaxError:
        found = tok.text if tok.kind == "eof" else repr(tok.text)
        return DslSyntaxError(tok.line, tok.col, expected, found)

    def _expect_sym(self, text: str) -> _Token:
        tok = self._next()
        if tok.kind != "sym" or tok.text != text:
            raise self._error(repr(text), tok)
        return tok

    def _expect_word(self, text: str) -> _Token:
        tok = self._next()
        if tok.kind != "word" or tok.text != text:
            raise self._error(repr(text), tok)
        return tok

    def _ident(self) -> str:
        tok = self._next()
        if tok.kind != "word":
            raise self._error("an identifier", tok)
        if tok.text in _KEYWORDS:
            raise self._error("an identifier (not a keyword)", tok)
        return tok.text

    def _number(self) -> float:
        tok = self._next()
        if tok.kind != "num":
            raise self._error("a number", tok)
        return float(tok.text)

    # -- declarations ------------------------------------------------------

    def parse(self) -> ProcessDefinition:
        self._expect_word("process")
        name = self._ident()
        attributes: list[AttributeDecl] = []
        nodes: list[Node] = []
        start: str | None = None
        while True:
            tok = self._peek()
            if tok.kind == "eof":
                break
            if tok.kind != "word":
                raise self._error("a declaration keyword", tok)
            if tok.text == "attr":
                attributes.append(self._parse_attr())
            elif tok.text == "start":
                if start is not None:
                    raise DuplicateNameError("start edge declared more than once")
                self._next()
                self._expect_sym("->")
                start = self._ident()
            elif tok.text == "activity":
                self._next()
                a_name = self._ident()
                self._expect_sym("->")
                nodes.append(Activity(a_name, self._ident()))
            elif tok.text == "gateway":
                nodes.append(self._parse_gateway())
            elif tok.text == "end":
                self._next()
                e_name = self._ident()
                self._expect_word("label")
                tok = self._next()
                if tok.kind != "word" or tok.text not in LABELS:
                    raise self._error("'POSITIVE' or 'NEGATIVE'", tok)
                nodes.append(EndNode(e_name, tok.text))
            else:
                raise self._error(
                    "one of 'attr', 'start', 'activity', 'gateway', 'end'", tok
                )
        return ProcessDefinition(
            name=name,
            attributes=tuple(attributes),
            start="" if start is None else start,
            nodes=tuple(nodes),
        )

    def _parse_attr(self) -> AttributeDecl:
        self._expect_word("attr")
        name = self._ident()
        self._expect_sym(":")
        self._expect_word("numeric")
        self._expect_word("in")
        self._expect_sym("[")
        lower = self._number()
        self._expect_sym(",")
        upper = self._number()
        self._expect_sym("]")
        return AttributeDecl(name, lower, upper)

    def _parse_gateway(self) -> Node:
        self._expect_word("gateway")
        name = self._ident()
        tok = self._peek()
        if tok.kind == "word" and tok.text == "choice":
            self._next()
            self._expect_sym("{")
            branches: list[ChoiceBranch] = []
            while self._peek().kind == "num":
                p = self._number()
                self._expect_sym("->")
                branches.append(ChoiceBranch(p, self._ident()))
            self._expect_sym("}")
            return ChoiceGateway(name, tuple(branches))
        self._expect_sym("{")
        whens: list[XorBranch] = []
        while True:
            tok = self._peek()
            if tok.kind == "word" and tok.text == "when":
                self._next()
                guard = self._parse_or()
                self._expect_sym("->")
                whens.append(XorBranch(guard, self._ident()))
            elif tok.kind == "word" and tok.text == "otherwise":
                self._next()
                self._expect_sym("->")
                otherwise = self._ident()
                break
            else:
                raise self._error("'when' or 'otherwise'", tok)
        self._expect_sym("}")
        return XorGateway(name, tuple(whens), otherwise)

    # -- guard expressions -------------------------------------------------

    def _parse_or(self) -> GuardExpr:
        expr = self._parse_and()
        while self._peek().kind == "sym" and self._peek().text == "||":
            self._next()
            expr = Or(expr, self._parse_and())
        return expr

    def _parse_and(self) -> GuardExpr:
        expr = self._parse_unary()
        while self._peek().kind == "sym" and self._peek().text == "&&":
            self._next()
            expr = And(expr, self._parse_unary())
        return expr

    def _parse_unary(self) -> GuardExpr:
        if self._peek().kind == "sym" and self._peek().text == "!":
            self._next()
            return Not(self._parse_primary())
        return self._parse_primary()

    def _parse_primary(self) -> GuardExpr:
        tok = self._peek()
        if tok.kind == "sym" and tok.text == "(":
            self._next()
            expr = self._parse_or()
            self._expect_sym(")")
            return expr
        attribute = self._ident()
        tok = self._next()
        if tok.kind != "sym" or tok.text not in _CMP_FUNCS:
            raise self._error("a comparison operator", tok)
        return Comparison(attribute, tok.text, self._number())


def parse_guard(text: str) -> GuardExpr:
    """Parse a standalone guard expression (mainly for tests and tooling)."""
    parser = _Parser(_tokenize(text))
    expr = parser._parse_or()
    trailing = parser._peek()
    if trailing.kind != "eof":
        raise parser._error("end of input", trailing)
    return expr


_RAISABLE_RULES = {
    "DuplicateName": DuplicateNameError,
    "UnknownTarget": UnknownTargetError,
    "UnknownAttribute": UnknownAttributeError,
    "CyclicGraph": CyclicGraphError,
    "UnreachableNode": UnreachableNodeError,
    "BadProbabilitySum": BadProbabilitySumError,
    "BadProbabilityValue": BadProbabilitySumError,
}


def parse_process_structure(text: str) -> ProcessDefinition:
    """Parse without validating, so tooling can inspect invalid definitions.

    Still raises ``DslSyntaxError`` (and ``DuplicateNameError`` for a second
    start edge); everything else is left for :func:`validate` to report.
    """
    return _Parser(_tokenize(text)).parse()


def parse_process(text: str) -> ProcessDefinition:
    """Parse and fully validate process text.

    Raises ``DslSyntaxError`` with line/column on malformed input, and a typed
    structural error (``DuplicateNameError``, ``UnknownTargetError``,
    ``UnknownAttributeError``, ``CyclicGraphError``, ``UnreachableNodeError``,
    ``BadProbabilitySumError``, or ``InvalidDefinitionError``) when the text
    parses but violates a definition invariant.
    """
    defn = parse_process_structure(text)
    report = validate(defn)
    if report.findings:
        first = report.findings[0]
        exc = _RAISABLE_RULES.get(first.rule, InvalidDefinitionError)
        raise exc(f"{first.subject}: {first.message}")
    return defn


def serialize_process(defn: ProcessDefinition) -> str:
    """Render a definition in canonical text form.

    ``parse_process(serialize_process(d))`` equals ``d`` for any valid ``d``,
    and serialize∘parse is the identity on already-canonical text.
    """
    lines = [f"process {defn.name}"]
    for a in defn.attributes:
        lines.append(
            f"attr {a.name}: numeric in [{_fmt_num(a.lower)}, {_fmt_num(a.upper)}]"
        )
    lines.append(f"start -> {defn.start}")
    for node in defn.nodes:
        if isinstance(node, Activity):
            lines.append(f"activity {node.name} -> {node.successor}")
        elif isinstance(node, XorGateway):
            parts = [f"gateway {node.name} {{"]
            for branch in node.branches:
                parts.append(f"when {format_guard(branch.guard)} -> {branch.target}")
            parts.append(f"otherwise -> {node.otherwise} }}")
            lines.append(" ".join(parts))
        elif isinstance(node, ChoiceGateway):
            parts = [f"gateway {node.name} choice {{"]
            for branch in node.branches:
                parts.append(f"{_fmt_num(branch.probability)} -> {branch.target}")
            parts.append("}")
            lines.append(" ".join(parts))
        elif isinstance(node, EndNode):
            lines.append(f"end {node.name} label {node.label}")
        else:
            raise TypeError(f"not a node: {node!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Finding:
    """One violated rule: which rule, on which subject, and why."""

    rule: str
    subject: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def ok(self) -> bool:
        return not self.findings


def _check_name(findings: list[Finding], kind: str, name: str) -> None:
    if not _NAME_RE.match(name) or name in _KEYWORDS:
        findings.append(
            Finding("BadName", name, f"{kind} name {name!r} is not a legal identifier")
        )


def validate(defn: ProcessDefinition) -> ValidationReport:
    """Check every structural invariant; findings are data, not exceptions.

    Rules reported: BadName, DuplicateName, BadAttributeBounds, BadLabel,
    BadProbabilityValue, BadProbabilitySum, MissingStart, UnknownTarget,
    UnknownAttribute, NoEndNode, CyclicGraph, UnreachableNode.
    """
    findings: list[Finding] = []

    _check_name(findings, "process", defn.name)
    seen_attrs: set[str] = set()
    for a in defn.attributes:
        _check_name(findings, "attribute", a.name)
        if a.name in seen_attrs:
            findings.append(
                Finding("DuplicateName", a.name, "attribute declared more than once")
            )
        seen_attrs.add(a.name)
        if not a.lower < a.upper:
            findings.append(
                Finding(
                    "BadAttributeBounds",
                    a.name,
                    f"bounds [{a.lower}, {a.upper}] are not an increasing interval",
                )
            )

    seen_nodes: set[str] = set()
    for node in defn.nodes:
        _check_name(findings, "node", node.name)
        if node.name in seen_nodes:
            findings.append(
                Finding("DuplicateName", node.name, "node declared more than once")
            )
        seen_nodes.add(node.name)
        if isinstance(node, EndNode) and node.label not in LABELS:
            findings.append(
                Finding("BadLabel", node.name, f"label {node.label!r} is not allowed")
            )
        if isinstance(node, ChoiceGateway):
            total = 0.0
            for branch in node.branches:
                total += branch.probability
                if not 0.0 < branch.probability <= 1.0:
                    findings.append(
                        Finding(
                            "BadProbabilityValue",
                            node.name,
                            f"branch probability {branch.probability} outside (0, 1]",
                        )
                    )
            if abs(total - 1.0) > PROBABILITY_TOL:
                findings.append(
                    Finding(
                        "BadProbabilitySum",
                        node.name,
                        f"branch probabilities sum to {total!r}, not 1",
                    )
                )

    targets_ok = True
    if not defn.start:
        findings.append(Finding("MissingStart", defn.name, "no start edge declared"))
        targets_ok = False
    elif not defn.has_node(defn.start):
        findings.append(
            Finding("UnknownTarget", defn.start, "start edge points at an undeclared node")
        )
        targets_ok = False
    for node in defn.nodes:
        for succ in node_successors(node):
            if not defn.has_node(succ):
                findings.append(
                    Finding(
                        "UnknownTarget",
                        succ,
                        f"edge from {node.name!r} points at an undeclared node",
                    )
                )
                targets_ok = False

    declared = frozenset(a.name for a in defn.attributes)
    for node in defn.nodes:
        if isinstance(node, XorGateway):
            for branch in node.branches:
                for attr in sorted(guard_attributes(branch.guard) - declared):
                    findings.append(
                        Finding(
                            "UnknownAttribute",
                            attr,
                            f"guard on {node.name!r} references an undeclared attribute",
                        )
                    )

    if not defn.end_nodes:
        findings.append(Finding("NoEndNode", defn.name, "no end node declared"))

    if targets_ok and not any(f.rule == "DuplicateName" for f in findings):
        try:
            topological_order(defn)
        except CyclicGraphError as exc:
            findings.append(Finding("CyclicGraph", defn.name, str(exc)))
        else:
            reached = {defn.start}
            frontier = [defn.start]
            while frontier:
                for succ in node_successors(defn.node(frontier.pop())):
                    if succ not in reached:
                        reached.add(succ)
                        frontier.append(succ)
            for node in defn.nodes:
                if node.name not in reached:
                    findings.append(
                        Finding(
                            "UnreachableNode",
                            node.name,
                            "node cannot be reached from the start edge",
                        )
                    )

    return ValidationReport(tuple(findings))


# ---------------------------------------------------------------------------
# Causality graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CausalityGraph:
    """Directed (attribute -> activity) edges, lexicographically sorted."""

    edges: tuple[tuple[str, str], ...]

    @cached_property
    def edge_set(self) -> frozenset[tuple[str, str]]:
        return frozenset(self.edges)

    def sources(self) -> tuple[str, ...]:
        return tuple(sorted({s for s, _ in self.edges}))

    def targets_of(self, attribute: str) -> tuple[str, ...]:
        return tuple(sorted({t for s, t in self.edges if s == attribute}))

    def to_json_dict(self) -> dict:
        return {"edges": [[s, t] for s, t in self.edges]}


def _reachable_activity_sets(defn: ProcessDefinition) -> dict[str, frozenset[str]]:
    """For each node, the activities reachable from it along any branch."""
    reach: dict[str, frozenset[str]] = {}
    for name in reversed(topological_order(defn)):
        node = defn.node(name)
        acc: frozenset[str] = frozenset()
        for succ in node_successors(node):
            acc |= reach[succ]
        if isinstance(node, Activity):
            acc |= {node.name}
        reach[name] = acc
    return reach


def derive_causality_graph(defn: ProcessDefinition) -> CausalityGraph:
    """Read attribute-to-activity causal edges off the routing structure.

    An edge (attr, activity) exists iff attr occurs in some guard of an xor
    gateway and the activity is reachable downstream of a strict, non-empty
    subset of that gateway's branches (``when`` branches and ``otherwise``
    alike). Activities reachable on every branch, or on none, are not
    influenced by how the gateway routes.
    """
    reach = _reachable_activity_sets(defn)
    edges: set[tuple[str, str]] = set()
    for node in defn.nodes:
        if not isinstance(node, XorGateway):
            continue
        attrs: frozenset[str] = frozenset()
        for branch in node.branches:
            attrs |= guard_attributes(branch.guard)
        if not attrs:
            continue
        branch_sets = [reach[b.target] for b in node.branches]
        branch_sets.append(reach[node.otherwise])
        for activity in frozenset().union(*branch_sets):
            hits = sum(activity in s for s in branch_sets)
            if 0 < hits < len(branch_sets):
                edges.update((attr, activity) for attr in attrs)
    return CausalityGraph(edges=tuple(sorted(edges)))


# ---------------------------------------------------------------------------
# Conformance support set
# ---------------------------------------------------------------------------

def reachable_indicators(
    defn: ProcessDefinition, attrs: Mapping[str, float]
) -> frozenset[tuple[int, ...]]:
    """All activity-indicator vectors realizable under a fixed assignment.

    Xor gateways route deterministically by their guards under ``attrs``
    (values outside declared bounds are evaluated literally); choice branches
    remain free, so the result enumerates every root-to-end path the
    assignment permits. Vector positions follow ``defn.activity_names``.
    """
    names = defn.activity_names
    memo: dict[str, frozenset[frozenset[str]]] = {}

    def visit(name: str) -> frozenset[frozenset[str]]:
        if name in memo:
            return memo[name]
        node = defn.node(name)
        if isinstance(node, EndNode):
            out: frozenset[frozenset[str]] = frozenset({frozenset()})
        elif isinstance(node, Activity):
            out = frozenset(s | {node.name} for s in visit(node.successor))
        elif isinstance(node, XorGateway):
            target = node.otherwise
            for branch in node.branches:
                if eval_guard(branch.guard, attrs):
                    target = branch.target
                    break
            out = visit(target)
        elif isinstance(node, ChoiceGateway):
            acc: frozenset[frozenset[str]] = frozenset()
            for branch in node.branches:
                acc |= visit(branch.target)
            out = acc
        else:
            raise TypeError(f"not a node: {node!r}")
        memo[name] = out
        return out

    return frozenset(
        tuple(1 if n in s else 0 for n in names) for s in visit(defn.start)
    )


# ---------------------------------------------------------------------------
# Bundled fixture
# ---------------------------------------------------------------------------

def fixture_path(name: str = "loan.bp") -> Path:
    """Filesystem path of a bundled process fixture."""
    return Path(str(resources.files("procex").joinpath("fixtures", name)))


def load_fixture(name: str = "loan.bp") -> ProcessDefinition:
    """Parse a bundled process fixture."""
    return parse_process(fixture_path(name).read_text(encoding="utf-8"))
