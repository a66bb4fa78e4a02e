"""Quantifier-free formulas over relational languages, plus open
interpretations applied pointwise to finite structures.

Concrete syntax (precedence low to high): ``<->``, ``->``, ``|``, ``&``,
``!``; atoms are ``xi=xj``, ``xi!=xj`` (sugar for the negated equality),
``P(xi,...,xk)`` and the truth constant ``T``; parentheses group.

Evaluation convention on canonical structures: equality atoms compare the
assigned vertices, predicate atoms are false whenever the realized tuple
repeats a vertex (relations only ever hold on injective tuples).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import (
    ArityError,
    FormulaSyntaxError,
    LanguageMismatch,
    UnknownPredicate,
    VariableOutOfRange,
)
from .structures import Language, Structure, as_structure, make_structure


class Node:
    pass


@dataclass(frozen=True)
class Top(Node):
    pass


@dataclass(frozen=True)
class Eq(Node):
    left: int
    right: int


@dataclass(frozen=True)
class Atom(Node):
    predicate: str
    variables: tuple[int, ...]


@dataclass(frozen=True)
class Not(Node):
    child: Node


@dataclass(frozen=True)
class And(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Or(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Implies(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Iff(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Formula:
    """An open formula with free variables x1..xk over a fixed language."""

    root: Node
    language: Language
    k: int


_TOKEN = re.compile(r"\s*(<->|->|!=|[|&!()=,]|[A-Za-z_][A-Za-z_0-9]*)")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens, language: Language, k: int, length: int):
        self.tokens = tokens
        self.i = 0
        self.language = language
        self.k = k
        self.length = length

    def peek(self):
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def pos(self):
        return self.tokens[self.i][1] if self.i < len(self.tokens) else self.length

    def take(self, expected=None):
        tok, pos = self.take_any(expected or "a token")
        if expected is not None and tok != expected:
            raise FormulaSyntaxError(f"expected {expected!r}, got {tok!r}", pos)
        return tok, pos

    def take_any(self, description):
        if self.i >= len(self.tokens):
            raise FormulaSyntaxError(f"expected {description}, got end of input", self.length)
        tok, pos = self.tokens[self.i]
        self.i += 1
        return tok, pos

    def parse(self) -> Node:
        node = self.iff()
        if self.i < len(self.tokens):
            raise FormulaSyntaxError(f"trailing input {self.peek()!r}", self.pos())
        return node

    def iff(self) -> Node:
        node = self.implies()
        while self.peek() == "<->":
            self.take()
            node = Iff(node, self.implies())
        return node

    def implies(self) -> Node:
        node = self.disjunction()
        if self.peek() == "->":
            self.take()
            return Implies(node, self.implies())
        return node

    def disjunction(self) -> Node:
        node = self.conjunction()
        while self.peek() == "|":
            self.take()
            node = Or(node, self.conjunction())
        return node

    def conjunction(self) -> Node:
        node = self.unary()
        while self.peek() == "&":
            self.take()
            node = And(node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek() == "!":
            self.take()
            return Not(self.unary())
        return self.atom()

    def variable(self) -> int:
        tok, pos = self.take_any("a variable")
        m = re.fullmatch(r"x([0-9]+)", tok)
        if not m:
            raise FormulaSyntaxError(f"expected a variable, got {tok!r}", pos)
        index = int(m.group(1))
        if not (1 <= index <= self.k):
            raise VariableOutOfRange(f"variable x{index} outside x1..x{self.k}")
        return index

    def atom(self) -> Node:
        tok = self.peek()
        if tok == "(":
            self.take()
            node = self.iff()
            self.take(")")
            return node
        if tok == "T":
            self.take()
            return Top()
        if tok is not None and re.fullmatch(r"x[0-9]+", tok):
            left = self.variable()
            op, pos = self.take_any("'=' or '!='")
            if op == "=":
                return Eq(left, self.variable())
            if op == "!=":
                return Not(Eq(left, self.variable()))
            raise FormulaSyntaxError(f"expected '=' or '!=', got {op!r}", pos)
        if tok is not None and re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", tok):
            name, pos = self.take()
            if name not in self.language.names:
                raise UnknownPredicate(f"unknown predicate {name!r}")
            self.take("(")
            variables = [self.variable()]
            while self.peek() == ",":
                self.take()
                variables.append(self.variable())
            self.take(")")
            if len(variables) != self.language.arity(name):
                raise ArityError(
                    f"{name} takes {self.language.arity(name)} arguments, got {len(variables)}"
                )
            return Atom(name, tuple(variables))
        raise FormulaSyntaxError(f"expected an atom, got {tok!r}", self.pos())


def parse_formula(text: str, language: Language, k: int) -> Formula:
    """Parse the concrete syntax into a formula with free variables x1..xk."""
    parser = _Parser(_tokenize(text), language, k, len(text))
    return Formula(parser.parse(), language, k)


_LEVEL = {Iff: 0, Implies: 1, Or: 2, And: 3, Not: 4}


def _print(node: Node, parent_level: int) -> str:
    if isinstance(node, Top):
        return "T"
    if isinstance(node, Eq):
        return f"x{node.left}=x{node.right}"
    if isinstance(node, Atom):
        return node.predicate + "(" + ",".join(f"x{v}" for v in node.variables) + ")"
    if isinstance(node, Not):
        if isinstance(node.child, Eq):
            return f"x{node.child.left}!=x{node.child.right}"
        return "!" + _print(node.child, _LEVEL[Not])
    level = _LEVEL[type(node)]
    op = {Iff: " <-> ", Implies: " -> ", Or: " | ", And: " & "}[type(node)]
    # right operand of -> continues the chain; everything else associates left
    if isinstance(node, Implies):
        text = _print(node.left, level + 1) + op + _print(node.right, level)
    else:
        text = _print(node.left, level) + op + _print(node.right, level + 1)
    return "(" + text + ")" if level < parent_level else text


def print_formula(F: Formula) -> str:
    """Canonical printer; ``parse_formula`` round-trips its output."""
    return _print(F.root, 0)


def evaluate_formula(F: Formula, M, assignment) -> bool:
    """Truth value of F in M under the assignment (repeats allowed)."""
    M = as_structure(M)
    values = tuple(assignment)
    if len(values) != F.k:
        raise ArityError(f"formula has {F.k} free variables, assignment has {len(values)}")
    if M.language != F.language:
        raise LanguageMismatch("formula and structure languages differ")
    for v in values:
        if not (1 <= v <= M.size):
            raise VariableOutOfRange(f"assigned vertex {v} outside 1..{M.size}")
    return _eval(F.root, M, values)


def _eval(node: Node, M: Structure, values) -> bool:
    if isinstance(node, Top):
        return True
    if isinstance(node, Eq):
        return values[node.left - 1] == values[node.right - 1]
    if isinstance(node, Atom):
        realized = tuple(values[v - 1] for v in node.variables)
        if len(set(realized)) != len(realized):
            return False
        return realized in M.rel(node.predicate)
    if isinstance(node, Not):
        return not _eval(node.child, M, values)
    if isinstance(node, And):
        return _eval(node.left, M, values) and _eval(node.right, M, values)
    if isinstance(node, Or):
        return _eval(node.left, M, values) or _eval(node.right, M, values)
    if isinstance(node, Implies):
        return (not _eval(node.left, M, values)) or _eval(node.right, M, values)
    if isinstance(node, Iff):
        return _eval(node.left, M, values) == _eval(node.right, M, values)
    raise TypeError(f"unknown node {node!r}")


def _conjoin(parts) -> Node:
    node = None
    for part in parts:
        node = part if node is None else And(node, part)
    return Top() if node is None else node


def open_diagram(M) -> Formula:
    """The open formula satisfied exactly by the embeddings of M."""
    M = as_structure(M)
    n = M.size
    parts = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            parts.append(Not(Eq(i, j)))
    from itertools import permutations

    for (name, arity), rel in zip(M.language.predicates, M.relations):
        for tup in permutations(range(1, n + 1), arity):
            atom = Atom(name, tup)
            parts.append(atom if tup in rel else Not(atom))
    return Formula(_conjoin(parts), M.language, n)


@dataclass(frozen=True)
class Interpretation:
    """Maps each source predicate to an open formula over the target language."""

    source: Language
    target: Language
    defs: tuple[tuple[str, Formula], ...]

    def __post_init__(self):
        by_name = dict(self.defs)
        for name, arity in self.source.predicates:
            F = by_name.get(name)
            if F is None:
                raise UnknownPredicate(f"no defining formula for {name!r}")
            if F.k != arity:
                raise ArityError(f"formula for {name!r} must have {arity} free variables")
            if F.language != self.target:
                raise LanguageMismatch(f"formula for {name!r} not over the target language")

    def formula(self, name: str) -> Formula:
        return dict(self.defs)[name]


def interpretation(source: Language, target: Language, defs: dict) -> Interpretation:
    """Build an interpretation from a dict of formula texts or ``Formula``s."""
    built = []
    for name, arity in source.predicates:
        raw = defs[name]
        F = raw if isinstance(raw, Formula) else parse_formula(raw, target, arity)
        built.append((name, F))
    return Interpretation(source, target, tuple(built))


def interpretation_from_json(data: dict) -> Interpretation:
    source = Language(tuple((p["name"], p["arity"]) for p in data["source"]))
    target = Language(tuple((p["name"], p["arity"]) for p in data["target"]))
    return interpretation(source, target, data["defs"])


def interpretation_to_json(I: Interpretation) -> dict:
    return {
        "source": [{"name": n, "arity": k} for n, k in I.source.predicates],
        "target": [{"name": n, "arity": k} for n, k in I.target.predicates],
        "defs": {name: print_formula(F) for name, F in I.defs},
    }


def apply_interpretation(I: Interpretation, M) -> Structure:
    """The source-language structure induced on M's vertices by I.

    Only injective tuples are tested, so the output is canonical.
    """
    from itertools import permutations

    M = as_structure(M)
    if M.language != I.target:
        raise LanguageMismatch("structure is not over the interpretation's target language")
    rels = {}
    for name, arity in I.source.predicates:
        F = I.formula(name)
        rels[name] = [
            tup
            for tup in permutations(M.vertices, arity)
            if _eval(F.root, M, tup)
        ]
    return make_structure(I.source, M.size, rels)
