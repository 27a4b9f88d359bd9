"""Bounded-session protocol compilation into constraint systems.

Each role instance (role plus session number) runs its steps in order; the
compiler enumerates every interleaving of all instances.  Along an
interleaving, honest sends grow the intruder knowledge and honest receives
become deduction constraints plus equations for the receive pattern and
its checks.
"""
from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass

from .solver import ConstraintSystem, DeductionConstraint
from .syntax import ProtocolSpec, Role, RoleStep
from .terms import App, Substitution, Term, Var, apply, vars_in


class UnboundVariable(ValueError):
    """A role sends a variable it has not received yet."""


@dataclass(frozen=True)
class CompiledRun:
    interleaving: tuple[str, ...]  # labels like "A.1" or "A#2.1"
    system: ConstraintSystem


@dataclass(frozen=True)
class _Instance:
    role: Role
    session: int
    multi: bool  # more than one session of this role

    @property
    def tag(self) -> str:
        return f"{self.role.name}#{self.session}" if self.multi else self.role.name

    def renaming(self) -> Substitution:
        """Session-local names for variables and fresh constants."""
        if self.session == 1:
            return Substitution()
        suffix = f"_{self.session}"
        vs = vars_in(t for s in self.role.steps for t in (*s.terms, *[x for eq in s.checks for x in eq]))
        out: dict = {v: Var(v.name + suffix, v.index) for v in vs}
        return Substitution(out)

    def constants(self) -> dict[str, str]:
        if self.session == 1:
            return {}
        return {c: f"{c}_{self.session}" for c in self.role.fresh}


def _rename_constants(t: Term, table: dict[str, str]) -> Term:
    if isinstance(t, Var) or not table:
        return t
    if not t.args:
        return App(table.get(t.head, t.head))
    return App(t.head, [_rename_constants(a, table) for a in t.args])


def check_bindings(role: Role) -> None:
    """Raise UnboundVariable when a send uses a variable not received before."""
    bound: set[Var] = set()
    for i, step in enumerate(role.steps, 1):
        if step.kind == "recv":
            bound |= vars_in(step.terms)
            stray = vars_in(x for eq in step.checks for x in eq) - bound
        else:
            stray = vars_in(step.terms) - bound
        if stray:
            names = ", ".join(sorted(map(str, stray)))
            raise UnboundVariable(f"role {role.name} step {i} uses unbound {names}")


def interleavings(lengths: list[int]) -> Iterator[tuple[int, ...]]:
    """Sequences of instance indices, each index i appearing lengths[i] times."""
    remaining = list(lengths)
    total = sum(lengths)
    seq: list[int] = []

    def rec():
        if len(seq) == total:
            yield tuple(seq)
            return
        for i, n in enumerate(remaining):
            if n:
                remaining[i] -= 1
                seq.append(i)
                yield from rec()
                seq.pop()
                remaining[i] += 1

    yield from rec()


def _instances(spec: ProtocolSpec) -> list[_Instance]:
    out = []
    for role_name, count in spec.sessions:
        role = spec.role(role_name)
        for k in range(1, count + 1):
            out.append(_Instance(role, k, count > 1))
    return out


def compile(spec: ProtocolSpec) -> Iterator[CompiledRun]:  # noqa: A001 - protocol compiler entry point
    """One constraint system per interleaving of the role instances."""
    for role in spec.roles:
        check_bindings(role)
    instances = _instances(spec)
    localized = []
    for inst in instances:
        rho, table = inst.renaming(), inst.constants()
        steps = [
            RoleStep(
                s.kind,
                tuple(_rename_constants(apply(rho, t), table) for t in s.terms),
                tuple((_rename_constants(apply(rho, u), table), _rename_constants(apply(rho, v), table)) for u, v in s.checks),
            )
            for s in inst.role.steps
        ]
        localized.append(steps)
    for order in interleavings([len(s) for s in localized]):
        yield _compile_order(spec, instances, localized, order)


def _compile_order(spec, instances, localized, order) -> CompiledRun:
    knowledge: list[Term] = list(dict.fromkeys(spec.knowledge))
    constraints: list[DeductionConstraint] = []
    equations: list[tuple[Term, Term]] = []
    seen: set[Var] = set()
    progress = [0] * len(instances)
    labels = []
    counter = 0
    for i in order:
        step = localized[i][progress[i]]
        progress[i] += 1
        labels.append(f"{instances[i].tag}.{progress[i]}")
        if step.kind == "send":
            knowledge.extend(t for t in step.terms if t not in knowledge)
            continue
        for pattern in step.terms:
            if isinstance(pattern, Var) and pattern not in seen:
                constraints.append(DeductionConstraint(tuple(knowledge), pattern))
            else:
                counter += 1
                w = Var("msg", counter)
                constraints.append(DeductionConstraint(tuple(knowledge), w))
                equations.append((w, pattern))
            seen |= vars_in([pattern])
        equations.extend(step.checks)
    if spec.goal[0] == "secrecy":
        counter += 1
        w = Var("msg", counter)
        constraints.append(DeductionConstraint(tuple(knowledge), w))
        equations.append((w, spec.goal[1]))
    system = ConstraintSystem(tuple(constraints), tuple(equations), f"{spec.name}[{' '.join(labels)}]", spec.theory)
    return CompiledRun(tuple(labels), system)
