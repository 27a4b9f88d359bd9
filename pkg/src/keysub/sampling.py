"""Seeded generators for property tests and experiments.

Everything takes an explicit ``random.Random`` so runs are reproducible.
"""
from __future__ import annotations

import itertools
import random
from collections.abc import Sequence
from dataclasses import dataclass

from .intruder import IntruderSystem, builtin_intruder
from .rewriting import ONE, ZERO, pk, sig, sk
from .solver import ConstraintSystem, DeductionConstraint
from .terms import App, Substitution, Term, Var, apply, size, subterms_of

AGENTS = ("a", "b", "c")
DATA = ("m", "n")

_PUBLIC = {
    "dsks": (("sig", 2), ("ver", 3), ("skp", 2), ("pkp", 2)),
    "deo": (("sig", 2), ("ver", 3), ("sskp", 2), ("ppkp", 2), ("f", 2)),
}


def _symbols(theory: str, private: bool = True) -> list[tuple[str, int]]:
    syms = list(_PUBLIC[theory]) + [("0", 0), ("1", 0)]
    if private:
        syms += [("pk", 1), ("sk", 1)]
    return syms


def random_term(
    rng: random.Random,
    theory: str,
    max_size: int,
    variables: Sequence[Var] = (),
    constants: Sequence[str] = AGENTS + DATA,
) -> Term:
    """Random term with at most ``max_size`` distinct subterms."""
    funs = [(f, n) for f, n in _symbols(theory) if n > 0]
    leaves: list[Term] = [App(c) for c in constants] + list(variables) + [ZERO, ONE]
    for _ in range(100):
        t = _grow(rng, funs, leaves, depth=rng.randint(0, 4))
        if size(t) <= max_size:
            return t
    return rng.choice(leaves)


def _grow(rng, funs, leaves, depth: int) -> Term:
    if depth == 0 or rng.random() < 0.25:
        return rng.choice(leaves)
    f, n = rng.choice(funs)
    return App(f, [_grow(rng, funs, leaves, depth - 1) for _ in range(n)])


def narrowable_term(rng: random.Random, theory: str, max_size: int = 12) -> Term:
    """Random term biased towards redex shapes, with variables in key places."""
    xs = [Var(n) for n in ("x", "y", "z", "w")]
    for _ in range(200):
        kind = rng.random()
        if kind < 0.5:
            t = _shape(rng, theory, xs)
        else:
            t = random_term(rng, theory, max_size, xs)
        if size(t) <= max_size:
            return t
    return xs[0]


def _leaf(rng, xs) -> Term:
    return rng.choice(xs + [App(c) for c in AGENTS + DATA])


def _shape(rng, theory, xs) -> Term:
    v = lambda: _leaf(rng, xs)  # noqa: E731
    key_maker = "skp" if theory == "dsks" else "sskp"
    pub_maker = "pkp" if theory == "dsks" else "ppkp"
    choices = [
        lambda: App("ver", [v(), v(), v()]),
        lambda: App("ver", [v(), sig(v(), v()), v()]),
        lambda: App("ver", [v(), v(), pk(v())]),
        lambda: App("ver", [v(), sig(v(), sk(v())), App(pub_maker, [v(), v()])]),
        lambda: sig(v(), App(key_maker, [v(), v()])),
        lambda: sig(v(), v()),
        lambda: App("ver", [sig(v(), v()), v(), v()]),
    ]
    if theory == "deo":
        choices.append(lambda: sig(App("f", [v(), v()]), v()))
    return rng.choice(choices)()


# -- ground knowledge -----------------------------------------------------------

def _templates(theory: str) -> list[Term]:
    a, b, c, m = App("a"), App("b"), App("c"), App("m")
    base = [
        a, b, c, m, pk(a), pk(b), pk(c),
        sig(a, sk(b)), sig(m, sk(a)), sig(m, sk(b)), sig(c, sk(c)),
    ]
    if theory == "dsks":
        base += [
            App("skp", [pk(b), sig(a, sk(b))]),
            App("skp", [pk(a), sig(m, sk(a))]),
            App("pkp", [pk(b), sig(a, sk(b))]),
            App("skp", [a, b]),
            App("pkp", [a, b]),
            sig(m, App("skp", [a, b])),
        ]
    else:
        base += [
            App("f", [pk(b), sig(a, sk(b))]),
            App("sskp", [pk(b), sig(a, sk(b))]),
            App("ppkp", [pk(b), sig(a, sk(b))]),
            App("f", [pk(a), sig(m, sk(a))]),
            App("sskp", [pk(a), sig(m, sk(a))]),
            sig(m, App("sskp", [a, b])),
        ]
    return base


def random_knowledge(rng: random.Random, theory: str, max_terms: int = 4, max_size: int = 6) -> list[Term]:
    """Up to ``max_terms`` distinct normal ground terms of size <= max_size."""
    system = builtin_intruder(theory)
    pool = [t for t in _templates(theory) if size(t) <= max_size]
    out: list[Term] = []
    for _ in range(rng.randint(1, max_terms)):
        if rng.random() < 0.7:
            t = rng.choice(pool)
        else:
            t = system.normalize(random_term(rng, theory, max_size))
        if size(t) <= max_size and t not in out:
            out.append(t)
    return out


def candidate_goals(knowledge: Sequence[Term], system: IntruderSystem, max_size: int = 6) -> list[Term]:
    """Subterms of the knowledge, nullary conclusions, and one public
    constructor layer over subterms, all normalized and size-capped."""
    norm = system.normalize
    sub = sorted(subterms_of(knowledge), key=str)
    found = dict.fromkeys(sub)
    found.update(dict.fromkeys([ZERO, ONE]))
    for rule in system.rules:
        c = rule.conclusion
        if not (isinstance(c, App) and rule.is_constructor() and c.args):
            continue
        for args in itertools.product(sub, repeat=len(c.args)):
            t = norm(App(c.head, args))
            if size(t) <= max_size:
                found[t] = None
    return [t for t in found if size(t) <= max_size]


# -- planted constraint systems ------------------------------------------------

@dataclass(frozen=True)
class Planted:
    system: ConstraintSystem
    solution: Substitution


def _derive_random(rng: random.Random, known: list[Term], system: IntruderSystem, max_size: int) -> Term:
    """A term obtained from ``known`` by a few random rule applications."""
    current = list(known)
    produced = rng.choice(current)
    for _ in range(rng.randint(0, 3)):
        rule = rng.choice([r for r in system.rules if r.premises])
        args = {v: rng.choice(current) for v in rule.var_premises}
        t = system.normalize(apply(args, rule.conclusion))
        if size(t) <= max_size:
            current.append(t)
            produced = t
    return produced


def _generalize(rng: random.Random, t: Term, counter: list[int]) -> tuple[Term, dict]:
    """Replace some proper subterms of ``t`` by fresh variables."""
    if isinstance(t, App) and t.args and rng.random() < 0.6:
        args, binding = [], {}
        for a in t.args:
            if rng.random() < 0.4:
                counter[0] += 1
                v = Var(f"p{counter[0]}")
                binding[v] = a
                args.append(v)
            else:
                g, b = _generalize(rng, a, counter)
                binding.update(b)
                args.append(g)
        return App(t.head, args), binding
    return t, {}


def planted_system(rng: random.Random, theory: str, max_constraints: int = 4, max_size: int = 10) -> Planted:
    """A satisfiable system built from a known ground solution."""
    system = builtin_intruder(theory)
    a, b = App("a"), App("b")
    seed = [a, b, App("m"), pk(a), pk(b)]
    known = list(dict.fromkeys(seed + random_knowledge(rng, theory, 3, 6)))
    written = list(known)  # same terms, with honest replies over variables
    constraints, equations = [], []
    solution: dict[Var, Term] = {}
    counter = [0]
    for i in range(1, rng.randint(1, max_constraints) + 1):
        v = Var(f"v{i}")
        goal = _derive_random(rng, known, system, max_size)
        solution[v] = goal
        constraints.append(DeductionConstraint(tuple(written), v))
        if rng.random() < 0.8:
            pattern, binding = _generalize(rng, goal, counter)
            solution.update(binding)
            equations.append((v, pattern))
        forged = _forged_key(goal, theory)
        if forged is not None and rng.random() < 0.5:
            equations.append((App("ver", [forged[0], forged[1], v]), ONE))
        check = _verification(goal, theory)
        if check is not None and rng.random() < 0.6:
            equations.append((App("ver", [check[0], v, check[1]]), ONE))
        # an honest agent answers with a signature over what it received
        signer = sk(rng.choice([a, b]))
        reply = system.normalize(sig(goal, signer))
        if size(reply) <= max_size and reply not in known:
            known.append(reply)
            written.append(sig(v, signer))
    cs = ConstraintSystem(tuple(constraints), tuple(equations), f"planted-{theory}", theory)
    return Planted(cs, Substitution(solution))


def _verification(goal: Term, theory: str):
    """(message, public key) under which a signature goal verifies."""
    if not (isinstance(goal, App) and goal.head == "sig"):
        return None
    msg, key = goal.args
    if isinstance(key, App) and key.head == "sk":
        return msg, pk(key.args[0])
    maker = {"dsks": ("skp", "pkp"), "deo": ("sskp", "ppkp")}[theory]
    if isinstance(key, App) and key.head == maker[0]:
        return msg, App(maker[1], key.args)
    return None


def _forged_key(goal: Term, theory: str):
    """For a forged public key pkp(pk(y), sig(x, sk(y))), the (message, signature)
    pair that verifies under it by rule 3."""
    head = "pkp" if theory == "dsks" else "ppkp"
    if not (isinstance(goal, App) and goal.head == head):
        return None
    k, s = goal.args
    if not (isinstance(k, App) and k.head == "pk" and isinstance(s, App) and s.head == "sig"):
        return None
    if s.args[1] != sk(k.args[0]):
        return None
    msg = s.args[0] if theory == "dsks" else App("f", [k, s])
    return msg, s


def unsat_system(rng: random.Random, theory: str, max_constraints: int = 4) -> ConstraintSystem:
    """A system whose last goal is a private key or a constant outside all
    rules and all knowledge."""
    knowledge = random_knowledge(rng, theory, 4, 6)
    present = {t.head for t in subterms_of(knowledge) if isinstance(t, App) and not t.args}
    constraints, equations = [], []
    n = rng.randint(1, max_constraints)
    for i in range(1, n):
        constraints.append(DeductionConstraint(tuple(knowledge), Var(f"v{i}")))
    if rng.random() < 0.5:
        agent = App(rng.choice(AGENTS))
        bad = sk(agent)
        if bad in knowledge:
            bad = sk(App("d"))
    else:
        fresh = "nfresh"
        assert fresh not in present
        bad = App(fresh)
    v = Var(f"v{n}")
    constraints.append(DeductionConstraint(tuple(knowledge), v))
    equations.append((v, bad))
    return ConstraintSystem(tuple(constraints), tuple(equations), f"unsat-{theory}", theory)
