"""First-order terms, positions and substitutions.

Terms are immutable and hashable.  A constant is an application with no
arguments; variables carry a display name plus an integer index so that
renamed-apart copies (index > 0) never collide with parsed variables
(index 0).
"""
from __future__ import annotations

import itertools
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from typing import Union

Position = tuple[int, ...]
ROOT: Position = ()


class InvalidPosition(LookupError):
    pass


class Var:
    __slots__ = ("name", "index", "_hash")

    def __init__(self, name: str, index: int = 0):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "_hash", hash(("?", name, index)))

    def __setattr__(self, key, value):
        raise AttributeError("terms are immutable")

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Var) and self.name == other.name and self.index == other.index
        )

    def __hash__(self):
        return self._hash

    @property
    def key(self) -> tuple[int, str]:
        return (self.index, self.name)

    def __lt__(self, other: "Var") -> bool:
        return self.key < other.key

    def __repr__(self):
        return f"Var({self.name!r}, {self.index})" if self.index else f"Var({self.name!r})"

    def __str__(self):
        return f"?{self.name}.{self.index}" if self.index else f"?{self.name}"

    def __reduce__(self):
        return (Var, (self.name, self.index))


class App:
    __slots__ = ("head", "args", "_hash", "ground")

    def __init__(self, head: str, args: Iterable["Term"] = ()):
        args = tuple(args)
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "_hash", hash((head, args)))
        object.__setattr__(self, "ground", all(a.ground for a in args))

    def __setattr__(self, key, value):
        raise AttributeError("terms are immutable")

    def __eq__(self, other):
        return self is other or (
            isinstance(other, App)
            and self._hash == other._hash
            and self.head == other.head
            and self.args == other.args
        )

    def __hash__(self):
        return self._hash

    @property
    def arity(self) -> int:
        return len(self.args)

    def __repr__(self):
        return f"App({self.head!r}, {list(self.args)!r})" if self.args else f"App({self.head!r})"

    def __str__(self):
        if not self.args:
            return self.head
        return f"{self.head}({', '.join(map(str, self.args))})"

    def __reduce__(self):
        return (App, (self.head, self.args))


# variables are never ground; the attribute keeps apply() branch-free
Var.ground = False  # type: ignore[attr-defined]

Term = Union[Var, App]


def const(name: str) -> App:
    return App(name, ())


def fn(head: str, *args: Term) -> App:
    return App(head, args)


@dataclass(frozen=True)
class Symbol:
    name: str
    arity: int
    private: bool = False


@dataclass(frozen=True)
class Signature:
    """Named function symbols.  Constants outside the table are free constants."""

    symbols: Mapping[str, Symbol] = field(default_factory=dict)

    @classmethod
    def of(cls, *symbols: Symbol) -> "Signature":
        table: dict[str, Symbol] = {}
        for s in symbols:
            if s.name in table and table[s.name] != s:
                raise ValueError(f"symbol {s.name!r} declared twice")
            table[s.name] = s
        return cls(table)

    def __contains__(self, name: str) -> bool:
        return name in self.symbols

    def __iter__(self) -> Iterator[Symbol]:
        return iter(self.symbols.values())

    def get(self, name: str) -> Symbol | None:
        return self.symbols.get(name)

    def is_private(self, name: str) -> bool:
        s = self.symbols.get(name)
        return s is not None and s.private

    def merge(self, other: "Signature") -> "Signature":
        return Signature.of(*self, *(s for s in other if s.name not in self.symbols))

    def check(self, t: Term) -> None:
        """Raise ValueError if some application disagrees with a declared arity."""
        for s in subterm_iter(t):
            if isinstance(s, App):
                sym = self.symbols.get(s.head)
                if sym is not None and sym.arity != len(s.args):
                    raise ValueError(f"{s.head} expects {sym.arity} arguments, got {len(s.args)}")

    def free_constant(self, name: str) -> App:
        if name in self.symbols:
            raise ValueError(f"{name!r} is a signature symbol, not a free constant")
        return const(name)


def subterm_iter(t: Term) -> Iterator[Term]:
    """Pre-order traversal, duplicates included."""
    stack = [t]
    while stack:
        s = stack.pop()
        yield s
        if isinstance(s, App):
            stack.extend(reversed(s.args))


def subterms(t: Term) -> set[Term]:
    return set(subterm_iter(t))


def subterms_of(ts: Iterable[Term]) -> set[Term]:
    out: set[Term] = set()
    for t in ts:
        out.update(subterm_iter(t))
    return out


def size(t: Term) -> int:
    """Number of distinct subterms."""
    return len(subterms(t))


def node_count(t: Term) -> int:
    return sum(1 for _ in subterm_iter(t))


def vars_of(t: Term) -> set[Var]:
    if isinstance(t, App) and t.ground:
        return set()
    return {s for s in subterm_iter(t) if isinstance(s, Var)}


def vars_in(ts: Iterable[Term]) -> set[Var]:
    out: set[Var] = set()
    for t in ts:
        out |= vars_of(t)
    return out


def ordered_vars(ts: Iterable[Term]) -> list[Var]:
    """Variables in order of first occurrence (pre-order, left to right)."""
    seen: dict[Var, None] = {}
    for t in ts:
        for s in subterm_iter(t):
            if isinstance(s, Var):
                seen.setdefault(s)
    return list(seen)


def occurs(v: Var, t: Term) -> bool:
    if isinstance(t, Var):
        return t == v
    return not t.ground and any(occurs(v, a) for a in t.args)


def positions(t: Term) -> list[Position]:
    """All positions in leftmost-outermost (pre-order) order."""
    out: list[Position] = []

    def walk(s: Term, p: Position) -> None:
        out.append(p)
        if isinstance(s, App):
            for i, a in enumerate(s.args, 1):
                walk(a, p + (i,))

    walk(t, ROOT)
    return out


def nonvar_positions(t: Term) -> list[Position]:
    return [p for p in positions(t) if isinstance(subterm_at(t, p), App)]


def subterm_at(t: Term, p: Position) -> Term:
    for i in p:
        if not isinstance(t, App) or not 1 <= i <= len(t.args):
            raise InvalidPosition(f"position {'.'.join(map(str, p)) or 'ε'} not in term")
        t = t.args[i - 1]
    return t


def replace_at(t: Term, p: Position, s: Term) -> Term:
    if not p:
        return s
    if not isinstance(t, App) or not 1 <= p[0] <= len(t.args):
        raise InvalidPosition(f"position {'.'.join(map(str, p))} not in term")
    i = p[0] - 1
    args = list(t.args)
    args[i] = replace_at(args[i], p[1:], s)
    return App(t.head, args)


def is_prefix(p: Position, q: Position) -> bool:
    """p <= q in the prefix order."""
    return q[: len(p)] == p


class Substitution(Mapping[Var, Term]):
    """Finite map from variables to terms; identity bindings are dropped."""

    __slots__ = ("_map", "_hash")

    def __init__(self, bindings: Mapping[Var, Term] | Iterable[tuple[Var, Term]] = ()):
        items = bindings.items() if isinstance(bindings, Mapping) else bindings
        self._map: dict[Var, Term] = {x: t for x, t in items if x != t}
        self._hash: int | None = None

    def __getitem__(self, x: Var) -> Term:
        return self._map[x]

    def __iter__(self) -> Iterator[Var]:
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._map)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._map.items()))
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Substitution):
            return self._map == other._map
        return NotImplemented

    def __repr__(self):
        return f"Substitution({self._map!r})"

    def __str__(self):
        body = ", ".join(f"{x} := {t}" for x, t in sorted(self._map.items(), key=lambda kv: kv[0].key))
        return "{" + body + "}"

    def __call__(self, t: Term) -> Term:
        return apply(self, t)

    @property
    def support(self) -> frozenset[Var]:
        return frozenset(self._map)

    def compose(self, other: "Substitution") -> "Substitution":
        """self ∘ other, i.e. (self ∘ other)(t) == self(other(t))."""
        out = {x: apply(self, t) for x, t in other._map.items()}
        for x, t in self._map.items():
            out.setdefault(x, t)
        return Substitution(out)

    def restrict(self, variables: Iterable[Var]) -> "Substitution":
        vs = set(variables)
        return Substitution({x: t for x, t in self._map.items() if x in vs})

    def is_ground(self) -> bool:
        return all(isinstance(t, App) and t.ground for t in self._map.values())

    def is_idempotent(self) -> bool:
        dom = self._map.keys()
        return not any(vars_of(t) & dom for t in self._map.values())

    def is_normal(self, normalize) -> bool:
        return all(normalize(t) == t for t in self._map.values())

    def map_images(self, f) -> "Substitution":
        return Substitution({x: f(t) for x, t in self._map.items()})


EMPTY = Substitution()


def apply(sigma: Mapping[Var, Term], t: Term) -> Term:
    if isinstance(t, Var):
        return sigma.get(t, t)
    if t.ground or not sigma:
        return t
    return App(t.head, [apply(sigma, a) for a in t.args])


def apply_all(sigma: Mapping[Var, Term], ts: Iterable[Term]) -> tuple[Term, ...]:
    return tuple(apply(sigma, t) for t in ts)


class Fresh:
    """Monotone supply of variable indices; one per solver run."""

    def __init__(self, start: int = 1):
        self._counter = itertools.count(start)

    def var(self, name: str = "v") -> Var:
        return Var(name, next(self._counter))

    def renaming(self, variables: Iterable[Var]) -> Substitution:
        return Substitution({v: Var(v.name, next(self._counter)) for v in variables})

    def rename(self, *ts: Term) -> tuple[Term, ...]:
        rho = self.renaming(ordered_vars(ts))
        return apply_all(rho, ts)


def canonical(ts: Iterable[Term], name: str = "_") -> tuple[Term, ...]:
    """Rename variables by first occurrence; variants map to equal tuples."""
    ts = tuple(ts)
    rho = Substitution({v: Var(name, i) for i, v in enumerate(ordered_vars(ts), 1)})
    return apply_all(rho, ts)


def is_variant(s: Term, t: Term) -> bool:
    return canonical((s,)) == canonical((t,))
