"""Concrete syntax for terms and the four file kinds, plus renderers.

Term syntax: ``?x`` (or ``?x.3``) is a variable, a bare identifier is a
constant, ``f(t1, ..., tn)`` an application.  Identifiers use letters,
digits and underscores and may not start with an underscore.

Files are line based; ``#`` starts a comment.  The first meaningful line
selects the kind: ``constraints:``, ``theory <name>``, ``derivation:`` or
``protocol:``.
"""
from __future__ import annotations

import re
from collections.abc import Iterable
from dataclasses import dataclass, field

from .intruder import Derivation, DerivationStep, DeductionRule
from .rewriting import BUILTIN_SIGNATURE, RewriteRule, RewriteTheory, theory_signature
from .terms import App, Signature, Substitution, Symbol, Term, Var
from .solver import ConstraintSystem, DeductionConstraint


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<var>\?[A-Za-z0-9][A-Za-z0-9_]*(?:\.[0-9]+)?)
  | (?P<ident>[A-Za-z0-9][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<assign>:=)
  | (?P<turnstile>\|-|⊢)
  | (?P<punct>[(),={}])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int  # 1-based


def _tokenize(text: str, line: int, col0: int) -> list[_Tok]:
    out, i = [], 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", line, col0 + i)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            out.append(_Tok("punct" if kind == "punct" else kind, value, col0 + i))
        i = m.end()
    return out


class _LineParser:
    """Recursive descent over the tokens of one line."""

    def __init__(self, text: str, line: int, col0: int, arities: dict[str, int]):
        self.toks = _tokenize(text, line, col0)
        self.pos = 0
        self.line = line
        self.end_col = col0 + len(text)
        self.arities = arities

    def peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def error(self, message: str, tok: _Tok | None = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, self.line, tok.col if tok else self.end_col)

    def expect(self, text: str) -> _Tok:
        tok = self.peek()
        if tok is None or tok.text != text:
            found = repr(tok.text) if tok else "end of line"
            raise self.error(f"expected {text!r}, found {found}")
        self.pos += 1
        return tok

    def accept(self, text: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.text == text:
            self.pos += 1
            return True
        return False

    def at_end(self) -> bool:
        return self.pos >= len(self.toks)

    def done(self) -> None:
        if not self.at_end():
            raise self.error(f"unexpected {self.peek().text!r}")

    def term(self) -> Term:
        tok = self.peek()
        if tok is None:
            raise self.error("expected a term, found end of line")
        self.pos += 1
        if tok.kind == "var":
            body = tok.text[1:]
            name, _, idx = body.partition(".")
            return Var(name, int(idx) if idx else 0)
        if tok.kind != "ident":
            raise self.error(f"expected a term, found {tok.text!r}", tok)
        args: list[Term] = []
        if self.accept("("):
            opener = self.toks[self.pos - 1]
            if not self.accept(")"):
                while True:
                    if self.at_end():
                        raise self.error("unclosed parenthesis", opener)
                    args.append(self.term())
                    if self.accept(")"):
                        break
                    if self.at_end():
                        raise self.error("unclosed parenthesis", opener)
                    self.expect(",")
        expected = self.arities.get(tok.text)
        if expected is None:
            self.arities[tok.text] = len(args)
        elif expected != len(args):
            raise self.error(f"{tok.text} expects {expected} argument(s), got {len(args)}", tok)
        return App(tok.text, args)

    def term_list(self) -> list[Term]:
        out = [self.term()]
        while self.accept(","):
            out.append(self.term())
        return out

    def equation(self) -> tuple[Term, Term]:
        u = self.term()
        self.expect("=")
        return u, self.term()

    def substitution(self) -> Substitution:
        self.expect("{")
        bindings: dict[Var, Term] = {}
        if not self.accept("}"):
            while True:
                tok = self.peek()
                v = self.term()
                if not isinstance(v, Var):
                    raise self.error("expected a variable", tok)
                self.expect(":=")
                bindings[v] = self.term()
                if self.accept("}"):
                    break
                self.expect(",")
        return Substitution(bindings)


def _arities(signature: Signature | None = None) -> dict[str, int]:
    sig = signature or BUILTIN_SIGNATURE
    return {s.name: s.arity for s in sig}


def parse_term(text: str, signature: Signature | None = None, line: int = 1) -> Term:
    p = _LineParser(text, line, 1, _arities(signature))
    t = p.term()
    p.done()
    return t


def parse_terms(text: str, signature: Signature | None = None) -> list[Term]:
    p = _LineParser(text, 1, 1, _arities(signature))
    ts = p.term_list()
    p.done()
    return ts


# -- line splitting ------------------------------------------------------------

@dataclass
class _Line:
    number: int
    keyword: str
    body: str
    body_col: int
    indent: int


_KEYWORD = re.compile(r"\s*([A-Za-z][A-Za-z0-9_ ]*?)\s*:(?!=)\s*")


def _lines(text: str) -> list[_Line]:
    out = []
    for n, raw in enumerate(text.splitlines(), 1):
        content = raw.split("#", 1)[0].rstrip()
        if not content.strip():
            continue
        indent = len(content) - len(content.lstrip())
        m = _KEYWORD.match(content)
        if m and not content.lstrip().startswith("theory "):
            out.append(_Line(n, m.group(1), content[m.end():], m.end() + 1, indent))
        else:
            stripped = content.lstrip()
            word, _, rest = stripped.partition(" ")
            col = indent + len(word) + 2
            out.append(_Line(n, word, rest.strip(), col + (len(rest) - len(rest.lstrip())), indent))
    return out


def _parser(line: _Line, arities: dict[str, int]) -> _LineParser:
    return _LineParser(line.body, line.number, line.body_col, arities)


def _header(lines: list[_Line], keyword: str) -> str:
    if not lines or lines[0].keyword != keyword:
        raise ParseError(f"expected '{keyword}:' header", lines[0].number if lines else 1, 1)
    return lines[0].body.strip()


def _theory_name(line: _Line) -> str:
    name = line.body.strip()
    if not name or not re.fullmatch(r"[^\s,]+", name):
        raise ParseError("expected a theory name or file", line.number, line.body_col)
    return name


# -- constraints -----------------------------------------------------------------

def parse_constraints(text: str) -> ConstraintSystem:
    lines = _lines(text)
    name = _header(lines, "constraints")
    arities = _arities()
    theory = None
    knowledge: list[Term] = []
    constraints: list[DeductionConstraint] = []
    equations: list[tuple[Term, Term]] = []
    pending: _Line | None = None
    for line in lines[1:]:
        p = _parser(line, arities)
        if line.keyword == "theory":
            theory = _theory_name(line)
            continue
        if line.keyword == "knows":
            knowledge.extend(t for t in p.term_list() if t not in knowledge)
            pending = line
        elif line.keyword == "deduce":
            constraints.append(DeductionConstraint(tuple(knowledge), p.term()))
            pending = None
        elif line.keyword == "eq":
            equations.append(p.equation())
        else:
            raise ParseError(f"unknown keyword {line.keyword!r}", line.number, line.indent + 1)
        p.done()
    if pending is not None:
        raise ParseError("knowledge added after the last 'deduce:' has no effect", pending.number, 1)
    return ConstraintSystem(tuple(constraints), tuple(equations), name, theory)


def render_constraints(system: ConstraintSystem) -> str:
    out = [f"constraints: {system.name}".rstrip()]
    if system.theory:
        out.append(f"theory: {system.theory}")
    known: list[Term] = []
    for c in system.constraints:
        new = [t for t in c.knowledge if t not in known]
        if new:
            out.append("knows: " + ", ".join(map(str, new)))
            known.extend(new)
        out.append(f"deduce: {c.target}")
    out += [f"eq: {u} = {v}" for u, v in system.equations]
    return "\n".join(out) + "\n"


# -- theories ------------------------------------------------------------------

def parse_theory(text: str) -> RewriteTheory:
    lines = _lines(text)
    if not lines or lines[0].keyword != "theory":
        raise ParseError("expected 'theory <name>' header", lines[0].number if lines else 1, 1)
    name = lines[0].body.strip()
    if not name:
        raise ParseError("theory needs a name", lines[0].number, lines[0].body_col)
    arities: dict[str, int] = {}
    rules: list[RewriteRule] = []
    private: set[str] = set()
    for line in lines[1:]:
        if line.keyword == "rule":
            p = _parser(line, arities)
            lhs = p.term()
            p.expect("->")
            rhs = p.term()
            p.done()
            try:
                rules.append(RewriteRule(lhs, rhs))
            except ValueError as exc:
                raise ParseError(str(exc), line.number, line.body_col) from None
        elif line.keyword == "private":
            private.update(s.strip() for s in line.body.split(",") if s.strip())
        else:
            raise ParseError(f"unknown keyword {line.keyword!r}", line.number, line.indent + 1)
    base = theory_signature(rules, Signature())
    symbols = [Symbol(s.name, s.arity, s.name in private) for s in base]
    for name_ in sorted(private - {s.name for s in base}):
        raise ParseError(f"private symbol {name_!r} does not occur in any rule", lines[0].number, 1)
    return RewriteTheory(name, tuple(rules), Signature.of(*symbols))


def render_theory(theory: RewriteTheory) -> str:
    out = [f"theory {theory.name}"]
    private = sorted(s.name for s in theory.signature if s.private)
    if private:
        out.append("private " + ", ".join(private))
    out += [f"rule {r.lhs} -> {r.rhs}" for r in theory.rules]
    return "\n".join(out) + "\n"


# -- derivations -----------------------------------------------------------------

@dataclass
class DerivationFile:
    name: str
    theory: str
    rules: str  # original | saturated
    derivation: Derivation
    step_rules: tuple[str, ...] = ()

    def __eq__(self, other):
        if not isinstance(other, DerivationFile):
            return NotImplemented
        return (
            self.name == other.name
            and self.theory == other.theory
            and self.rules == other.rules
            and self.derivation.start == other.derivation.start
            and self.derivation.goal == other.derivation.goal
            and [(s.rule.name, s.subst, s.term) for s in self.derivation.steps]
            == [(s.rule.name, s.subst, s.term) for s in other.derivation.steps]
        )


def parse_derivation(text: str, rule_lookup=None) -> DerivationFile:
    """``rule_lookup(theory, rules_kind, name)`` resolves rule names; by
    default the built-in intruder systems are used."""
    lines = _lines(text)
    name = _header(lines, "derivation")
    arities = _arities()
    theory, kind = "dsks", "original"
    start: list[Term] = []
    steps: list[tuple[str, Substitution, Term, _Line]] = []
    goal = None
    for line in lines[1:]:
        p = _parser(line, arities)
        if line.keyword == "theory":
            theory = _theory_name(line)
            continue
        if line.keyword == "rules":
            kind = line.body.strip()
            if kind not in ("original", "saturated"):
                raise ParseError("rules must be 'original' or 'saturated'", line.number, line.body_col)
            continue
        if line.keyword == "knows":
            start.extend(p.term_list())
        elif line.keyword == "step":
            tok = p.peek()
            if tok is None or tok.kind != "ident":
                raise p.error("expected a rule name")
            p.pos += 1
            sigma = p.substitution()
            if not (p.accept("|-") or p.accept("⊢")):
                raise p.error("expected '|-'")
            steps.append((tok.text, sigma, p.term(), line))
        elif line.keyword == "goal":
            goal = p.term()
        else:
            raise ParseError(f"unknown keyword {line.keyword!r}", line.number, line.indent + 1)
        p.done()
    if goal is None:
        raise ParseError("missing 'goal:' line", lines[-1].number, 1)
    lookup = rule_lookup or _builtin_rule
    resolved = []
    for rule_name, sigma, term, line in steps:
        try:
            rule = lookup(theory, kind, rule_name)
        except KeyError as exc:
            raise ParseError(str(exc.args[0]), line.number, line.body_col) from None
        resolved.append(DerivationStep(rule, sigma, term))
    d = Derivation(tuple(start), tuple(resolved), goal)
    return DerivationFile(name, theory, kind, d, tuple(s[0] for s in steps))


def _builtin_rule(theory: str, kind: str, name: str) -> DeductionRule:
    from .intruder import builtin_intruder
    from .saturation import saturate

    system = builtin_intruder(theory)
    rules = system.rules if kind == "original" else saturate(system.rules, system.theory)
    for r in rules:
        if r.name == name:
            return r
    raise KeyError(f"no rule named {name!r} among the {kind} rules of {theory}")


def render_derivation(df: DerivationFile) -> str:
    d = df.derivation
    out = [f"derivation: {df.name}".rstrip(), f"theory: {df.theory}", f"rules: {df.rules}"]
    if d.start:
        out.append("knows: " + ", ".join(map(str, d.start)))
    out += [f"step: {s.rule.name} {s.subst} |- {s.term}" for s in d.steps]
    out.append(f"goal: {d.goal}")
    return "\n".join(out) + "\n"


# -- protocols -------------------------------------------------------------------

@dataclass(frozen=True)
class RoleStep:
    kind: str  # send | recv
    terms: tuple[Term, ...]
    checks: tuple[tuple[Term, Term], ...] = ()


@dataclass(frozen=True)
class Role:
    name: str
    steps: tuple[RoleStep, ...]
    fresh: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    theory: str | None
    knowledge: tuple[Term, ...]
    roles: tuple[Role, ...]
    sessions: tuple[tuple[str, int], ...]
    goal: tuple  # ("reach",) or ("secrecy", term)

    def role(self, name: str) -> Role:
        for r in self.roles:
            if r.name == name:
                return r
        raise KeyError(name)


def parse_protocol(text: str) -> ProtocolSpec:
    lines = _lines(text)
    name = _header(lines, "protocol")
    arities = _arities()
    theory = None
    knowledge: list[Term] = []
    roles: list[Role] = []
    sessions: dict[str, int] = {}
    goal: tuple = ("reach",)
    current: dict | None = None

    def close_role():
        if current is not None:
            roles.append(Role(current["name"], tuple(current["steps"]), tuple(current["fresh"])))

    for line in lines[1:]:
        kw = line.keyword
        if kw.startswith("role "):
            close_role()
            role_name = kw[5:].strip()
            if not re.fullmatch(r"[A-Za-z0-9][A-Za-z0-9_]*", role_name):
                raise ParseError(f"bad role name {role_name!r}", line.number, line.indent + 1)
            if line.body.strip():
                raise ParseError("unexpected text after role header", line.number, line.body_col)
            current = {"name": role_name, "steps": [], "fresh": []}
            continue
        p = _parser(line, arities)
        if kw in ("send", "recv", "check", "fresh"):
            if current is None:
                raise ParseError(f"'{kw}:' outside a role", line.number, line.indent + 1)
            if kw == "fresh":
                for t in p.term_list():
                    if not (isinstance(t, App) and not t.args):
                        raise ParseError("fresh values must be constants", line.number, line.body_col)
                    current["fresh"].append(t.head)
            elif kw == "check":
                steps = current["steps"]
                if not steps or steps[-1].kind != "recv":
                    raise ParseError("'check:' must follow a 'recv:' step", line.number, line.indent + 1)
                last = steps[-1]
                steps[-1] = RoleStep(last.kind, last.terms, last.checks + (p.equation(),))
            else:
                current["steps"].append(RoleStep(kw, tuple(p.term_list())))
            p.done()
            continue
        if kw == "theory":
            theory = _theory_name(line)
        elif kw == "knows":
            knowledge.extend(p.term_list())
            p.done()
        elif kw == "sessions":
            for part in line.body.split(","):
                role_name, eq, count = part.partition("=")
                if not eq or not count.strip().isdigit() or int(count) < 1:
                    raise ParseError("sessions are written 'Role=n' with n >= 1", line.number, line.body_col)
                sessions[role_name.strip()] = int(count)
        elif kw == "goal":
            if line.body.strip() == "reach":
                goal = ("reach",)
            elif line.body.strip().startswith("secrecy"):
                sub = _LineParser(line.body.strip()[len("secrecy"):], line.number, line.body_col + 7, arities)
                goal = ("secrecy", sub.term())
                sub.done()
            else:
                raise ParseError("goal must be 'reach' or 'secrecy <term>'", line.number, line.body_col)
        else:
            raise ParseError(f"unknown keyword {kw!r}", line.number, line.indent + 1)
    close_role()
    names = {r.name for r in roles}
    for r in sessions:
        if r not in names:
            raise ParseError(f"sessions mention unknown role {r!r}", lines[0].number, 1)
    session_list = tuple((r.name, sessions.get(r.name, 1)) for r in roles)
    return ProtocolSpec(name, theory, tuple(knowledge), tuple(roles), session_list, goal)


def render_protocol(spec: ProtocolSpec) -> str:
    out = [f"protocol: {spec.name}".rstrip()]
    if spec.theory:
        out.append(f"theory: {spec.theory}")
    if spec.knowledge:
        out.append("knows: " + ", ".join(map(str, spec.knowledge)))
    for role in spec.roles:
        out.append(f"role {role.name}:")
        if role.fresh:
            out.append("  fresh: " + ", ".join(role.fresh))
        for step in role.steps:
            out.append(f"  {step.kind}: " + ", ".join(map(str, step.terms)))
            out += [f"  check: {u} = {v}" for u, v in step.checks]
    out.append("sessions: " + ", ".join(f"{r}={n}" for r, n in spec.sessions))
    out.append("goal: reach" if spec.goal[0] == "reach" else f"goal: secrecy {spec.goal[1]}")
    return "\n".join(out) + "\n"


# -- dispatch ------------------------------------------------------------------

def parse(text: str):
    """Parse any supported file, choosing the kind from its first line."""
    lines = _lines(text)
    if not lines:
        raise ParseError("empty input", 1, 1)
    kind = lines[0].keyword
    if kind == "constraints":
        return parse_constraints(text)
    if kind == "theory":
        return parse_theory(text)
    if kind == "derivation":
        return parse_derivation(text)
    if kind == "protocol":
        return parse_protocol(text)
    raise ParseError(f"unknown file kind {kind!r}", lines[0].number, lines[0].indent + 1)


def render(obj) -> str:
    if isinstance(obj, ConstraintSystem):
        return render_constraints(obj)
    if isinstance(obj, RewriteTheory):
        return render_theory(obj)
    if isinstance(obj, DerivationFile):
        return render_derivation(obj)
    if isinstance(obj, ProtocolSpec):
        return render_protocol(obj)
    if isinstance(obj, (Var, App)):
        return str(obj)
    raise TypeError(f"cannot render {type(obj).__name__}")
