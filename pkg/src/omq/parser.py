"""Text syntax for knowledge bases and conjunctive queries.

KB files have three blocks in fixed order::

    tbox { A <= exists r . B; inv(r) <= s; }
    abox { A(a); r(a, b); }
    closed { A; }        # optional

Comments run from ``#`` to end of line.  Operator precedence is
``not`` > ``and`` > ``or``; quantifiers take a single role, a dot and a
concept at ``not`` level, so ``exists r . A and B`` reads as
``(exists r . A) and B``.  Identifiers match ``[A-Za-z][A-Za-z0-9_]*``;
a leading underscore is reserved for machine-generated names.

An axiom ``x <= y`` between two bare names is a role inclusion when
either name is known to be a role (it occurs under a quantifier, in
``inv(...)``, in a binary assertion, or is forced by another role
inclusion); otherwise it is read as a concept inclusion.

Queries are written Datalog style: ``q(x, y) :- attends(x, y).``  All
terms in query atoms are variables; individuals are not allowed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Union

from .syntax import (And, Assertion, Axiom, Bot, Concept, ConceptAssert,
                     ConceptIncl, Exists, Forall, KnowledgeBase, Name, Nominal,
                     Not, OmqError, Or, RoleAssert, RoleExpr, RoleIncl, Top)


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class ParseError(OmqError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.span = span
        self.message = message


class _Token(NamedTuple):
    kind: str  # NAME, SYM, EOF
    text: str
    span: SourceSpan


_KEYWORDS = {"tbox", "abox", "closed", "top", "bot", "not", "and", "or",
             "exists", "forall", "inv"}

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<comment>#[^\n]*)|(?P<nl>\n)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sym><=|:-|[{}();,.])"
)


def _tokenize(text: str, filename: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             SourceSpan(filename, line, col))
        span = SourceSpan(filename, line, col)
        if m.lastgroup == "nl":
            line += 1
            col = 1
        else:
            if m.lastgroup == "name":
                name = m.group()
                if name.startswith("_"):
                    raise ParseError(
                        f"identifier {name!r} is reserved (leading underscore)", span)
                tokens.append(_Token("NAME", name, span))
            elif m.lastgroup == "sym":
                tokens.append(_Token("SYM", m.group(), span))
            col += len(m.group())
        pos = m.end()
    tokens.append(_Token("EOF", "", SourceSpan(filename, line, col)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.pos]

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.cur.span)

    def advance(self) -> _Token:
        tok = self.cur
        self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        return self.cur.text == text and self.cur.kind != "EOF"

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> _Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.cur.text or 'end of input'!r}")
        return self.advance()

    def expect_name(self, what: str = "identifier") -> _Token:
        if self.cur.kind != "NAME" or self.cur.text in _KEYWORDS:
            raise self.error(f"expected {what}, found {self.cur.text or 'end of input'!r}")
        return self.advance()


# ---------------------------------------------------------------------------
# KB parsing


class _AmbiguousIncl(NamedTuple):
    """A ``NAME <= NAME`` axiom whose reading (concept vs role) is open."""
    lhs: str
    rhs: str
    span: SourceSpan


def _parse_role(p: _Parser) -> RoleExpr:
    if p.accept("inv"):
        p.expect("(")
        name = p.expect_name("role name")
        p.expect(")")
        return RoleExpr(name.text, inverted=True)
    name = p.expect_name("role name")
    return RoleExpr(name.text)


def _parse_concept(p: _Parser) -> Concept:
    return _parse_or(p)


def _parse_or(p: _Parser) -> Concept:
    left = _parse_and(p)
    while p.accept("or"):
        left = Or(left, _parse_and(p))
    return left


def _parse_and(p: _Parser) -> Concept:
    left = _parse_unary(p)
    while p.accept("and"):
        left = And(left, _parse_unary(p))
    return left


def _parse_unary(p: _Parser) -> Concept:
    if p.accept("not"):
        return Not(_parse_unary(p))
    if p.accept("exists"):
        role = _parse_role(p)
        p.expect(".")
        return Exists(role, _parse_unary(p))
    if p.accept("forall"):
        role = _parse_role(p)
        p.expect(".")
        return Forall(role, _parse_unary(p))
    return _parse_primary(p)


def _parse_primary(p: _Parser) -> Concept:
    if p.accept("top"):
        return Top()
    if p.accept("bot"):
        return Bot()
    if p.accept("("):
        c = _parse_concept(p)
        p.expect(")")
        return c
    if p.accept("{"):
        ind = p.expect_name("individual name")
        p.expect("}")
        return Nominal(ind.text)
    name = p.expect_name("concept")
    return Name(name.text)


def _parse_axiom(p: _Parser) -> Union[Axiom, _AmbiguousIncl]:
    span = p.cur.span
    # A side that starts with inv( is unambiguously a role.
    if p.at("inv"):
        lhs_role = _parse_role(p)
        p.expect("<=")
        return RoleIncl(lhs_role, _parse_role(p))
    lhs = _parse_concept(p)
    p.expect("<=")
    if p.at("inv"):
        if not isinstance(lhs, Name):
            raise p.error("role inclusion with a complex left-hand side")
        return RoleIncl(RoleExpr(lhs.name), _parse_role(p))
    rhs = _parse_concept(p)
    if isinstance(lhs, Name) and isinstance(rhs, Name):
        return _AmbiguousIncl(lhs.name, rhs.name, span)
    return ConceptIncl(lhs, rhs)


def _role_names_in(c: Concept, acc: set[str]) -> None:
    if isinstance(c, Not):
        _role_names_in(c.operand, acc)
    elif isinstance(c, (And, Or)):
        _role_names_in(c.left, acc)
        _role_names_in(c.right, acc)
    elif isinstance(c, (Exists, Forall)):
        acc.add(c.role.name)
        _role_names_in(c.filler, acc)


def parse_kb(text: str, filename: str = "<kb>") -> KnowledgeBase:
    p = _Parser(_tokenize(text, filename))
    p.expect("tbox")
    p.expect("{")
    raw_axioms: list[Union[Axiom, _AmbiguousIncl]] = []
    while not p.accept("}"):
        raw_axioms.append(_parse_axiom(p))
        p.expect(";")

    p.expect("abox")
    p.expect("{")
    assertions: list[tuple[Assertion, SourceSpan]] = []
    while not p.accept("}"):
        span = p.cur.span
        pred = p.expect_name("predicate name")
        p.expect("(")
        first = p.expect_name("individual name")
        if p.accept(","):
            second = p.expect_name("individual name")
            p.expect(")")
            assertions.append((RoleAssert(pred.text, first.text, second.text), span))
        else:
            p.expect(")")
            assertions.append((ConceptAssert(pred.text, first.text), span))
        p.expect(";")

    closed: list[str] = []
    if p.accept("closed"):
        p.expect("{")
        while not p.accept("}"):
            tok = p.expect_name("predicate name")
            if tok.text in closed:
                raise ParseError(f"duplicate closed predicate {tok.text!r}", tok.span)
            closed.append(tok.text)
            p.expect(";")
    if p.cur.kind != "EOF":
        raise p.error(f"unexpected trailing input {p.cur.text!r}")

    # Resolve NAME <= NAME axioms: role inclusion iff connected to a known
    # role through quantifiers, inv(...), binary assertions, or other role
    # inclusions (propagated to a fixpoint); concept inclusion otherwise.
    roles: set[str] = set()
    for ax in raw_axioms:
        if isinstance(ax, RoleIncl):
            roles.add(ax.lhs.name)
            roles.add(ax.rhs.name)
        elif isinstance(ax, ConceptIncl):
            _role_names_in(ax.lhs, roles)
            _role_names_in(ax.rhs, roles)
    roles.update(a.role for a, _ in assertions if isinstance(a, RoleAssert))
    changed = True
    while changed:
        changed = False
        for ax in raw_axioms:
            if isinstance(ax, _AmbiguousIncl) and (ax.lhs in roles) != (ax.rhs in roles):
                roles.update((ax.lhs, ax.rhs))
                changed = True

    tbox: list[Axiom] = []
    for ax in raw_axioms:
        if isinstance(ax, _AmbiguousIncl):
            if ax.lhs in roles:
                tbox.append(RoleIncl(RoleExpr(ax.lhs), RoleExpr(ax.rhs)))
            else:
                tbox.append(ConceptIncl(Name(ax.lhs), Name(ax.rhs)))
        else:
            tbox.append(ax)

    return KnowledgeBase.of(tbox, closed, [a for a, _ in assertions])


# ---------------------------------------------------------------------------
# Conjunctive queries


@dataclass(frozen=True)
class ConceptAtom:
    concept: str
    var: str

    def __str__(self) -> str:
        return f"{self.concept}({self.var})"


@dataclass(frozen=True)
class RoleAtom:
    role: str
    subject: str
    object: str

    def __str__(self) -> str:
        return f"{self.role}({self.subject},{self.object})"


QueryAtom = Union[ConceptAtom, RoleAtom]


@dataclass(frozen=True)
class ConjunctiveQuery:
    answer_vars: tuple[str, ...]
    atoms: frozenset[QueryAtom]

    def variables(self) -> set[str]:
        out: set[str] = set()
        for a in self.atoms:
            if isinstance(a, ConceptAtom):
                out.add(a.var)
            else:
                out.update((a.subject, a.object))
        return out

    def existential_vars(self) -> set[str]:
        return self.variables() - set(self.answer_vars)


def parse_query(text: str, individuals: Iterable[str] = (),
                filename: str = "<query>") -> ConjunctiveQuery:
    """Parse ``head(vars) :- atom, atom, ... .``

    ``individuals`` lets the caller flag known individual names so that a
    constant in an atom position is reported as an error rather than read
    as a variable.
    """
    known = frozenset(individuals)
    p = _Parser(_tokenize(text, filename))
    p.expect_name("query name")
    p.expect("(")
    answer: list[str] = []
    if not p.at(")"):
        answer.append(p.expect_name("variable").text)
        while p.accept(","):
            answer.append(p.expect_name("variable").text)
    p.expect(")")
    p.expect(":-")

    atoms: list[QueryAtom] = []
    while True:
        pred = p.expect_name("predicate name")
        p.expect("(")
        terms: list[_Token] = [p.expect_name("variable")]
        if p.accept(","):
            terms.append(p.expect_name("variable"))
        p.expect(")")
        for t in terms:
            if t.text in known:
                raise ParseError(
                    f"individual {t.text!r} is not allowed in query atoms", t.span)
        if len(terms) == 1:
            atoms.append(ConceptAtom(pred.text, terms[0].text))
        else:
            atoms.append(RoleAtom(pred.text, terms[0].text, terms[1].text))
        if not p.accept(","):
            break
    p.expect(".")
    if p.cur.kind != "EOF":
        raise p.error(f"unexpected trailing input {p.cur.text!r}")

    query = ConjunctiveQuery(tuple(answer), frozenset(atoms))
    missing = set(answer) - query.variables()
    if missing:
        raise ParseError(
            f"answer variable(s) {', '.join(sorted(missing))} do not occur in the body",
            SourceSpan(filename, 1, 1))
    return query


# ---------------------------------------------------------------------------
# Pretty printing (round-trips through the parser)


def kb_to_text(kb: KnowledgeBase) -> str:
    lines = ["tbox {"]
    lines.extend(f"  {ax};" for ax in kb.tbox)
    lines.append("}")
    lines.append("abox {")
    lines.extend(f"  {a};" for a in kb.abox)
    lines.append("}")
    if kb.sigma:
        lines.append("closed {")
        lines.extend(f"  {name};" for name in sorted(kb.sigma))
        lines.append("}")
    return "\n".join(lines) + "\n"


def query_to_text(q: ConjunctiveQuery) -> str:
    body = ", ".join(str(a) for a in sorted(q.atoms, key=str))
    return f"q({', '.join(q.answer_vars)}) :- {body}.\n"
