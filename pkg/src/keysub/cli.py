"""Command line front end.

Exit codes: ``solve`` 0 SAT, 1 UNSAT, 2 error or inconclusive; ``unify`` and
``check`` return 0 on success and 1 on a negative answer; errors are 2.
"""
from __future__ import annotations

import argparse
import json
import sys
from contextlib import ExitStack
from dataclasses import dataclass
from pathlib import Path

from .intruder import builtin_intruder, check_derivation, intruder_for_theory
from .narrowing import equational_unify
from .protocol import UnboundVariable, compile as compile_protocol
from .rewriting import RewriteBudgetExceeded, RewriteTheory, builtin_theory, check_convergence
from .saturation import SaturationCapExceeded, saturate
from .solver import ConstraintSystem, Solution, SolverConfig, SolverError, solve
from .syntax import DerivationFile, ParseError, ProtocolSpec, parse, parse_term
from .unify import mgu


class UsageError(Exception):
    pass


@dataclass
class AttackReport:
    verdict: str
    interleaving: tuple[str, ...]
    solution: Solution | None
    text: str


def load_theory(name: str, base: Path | None = None) -> RewriteTheory:
    """A built-in theory by name, or a theory file (relative paths also tried against ``base``)."""
    if name in ("dsks", "deo", "empty"):
        return builtin_theory(name)
    path = Path(name)
    if not path.is_absolute() and base is not None and not path.exists():
        path = base / path
    if not path.exists():
        raise UsageError(f"unknown theory {name!r} (not dsks, deo, empty or an existing file)")
    theory = parse(path.read_text())
    if not isinstance(theory, RewriteTheory):
        raise UsageError(f"{path} is not a theory file")
    return theory


def render_solution(verdict: str, solution: Solution | None, interleaving=()) -> str:
    lines = [verdict]
    if solution is not None:
        for v, t in sorted(solution.substitution.items(), key=lambda kv: kv[0].key):
            lines.append(f"{v} := {t}")
        if interleaving:
            lines.append("# interleaving: " + " ".join(interleaving))
        for i, w in enumerate(solution.witnesses, 1):
            if not w.steps:
                lines.append(f"# witness {i}: {w.goal} is known")
            for step in w.steps:
                lines.append(f"# witness {i}: {step}")
    return "\n".join(lines)


def cmd_solve(args) -> int:
    path = Path(args.file)
    obj = parse(path.read_text())
    if not isinstance(obj, (ConstraintSystem, ProtocolSpec)):
        raise UsageError(f"{path} is neither a constraint file nor a protocol file")
    theory_name = args.theory or obj.theory
    if theory_name is None:
        raise UsageError("no theory given (use --theory or a 'theory:' line)")
    theory = load_theory(theory_name, path.parent)
    config = SolverConfig()
    if args.budget is not None:
        config.node_budget = args.budget
    if args.time_limit is not None:
        config.time_budget = args.time_limit
    with ExitStack() as stack:
        if args.trace:
            out = stack.enter_context(open(args.trace, "w"))
            config.trace = lambda rec: out.write(json.dumps(rec, ensure_ascii=False) + "\n")
        if isinstance(obj, ConstraintSystem):
            result = solve(obj, theory, config)
            print(render_solution(result.verdict, result.solution))
            if result.verdict == "INCONCLUSIVE":
                print(f"# {result.reason}", file=sys.stderr)
            return {"SAT": 0, "UNSAT": 1}.get(result.verdict, 2)
        report = attack(obj, theory, config)
        print(report.text)
        return {"SAT": 0, "UNSAT": 1}.get(report.verdict, 2)


def attack(spec: ProtocolSpec, theory: RewriteTheory, config: SolverConfig) -> AttackReport:
    """Try every interleaving; the first satisfiable one is the attack."""
    inconclusive = None
    for run in compile_protocol(spec):
        result = solve(run.system, theory, config)
        if config.trace is not None:
            config.trace({"event": "interleaving", "order": list(run.interleaving), "verdict": result.verdict})
        if result.sat:
            text = render_solution("SAT", result.solution, run.interleaving)
            return AttackReport("SAT", run.interleaving, result.solution, text)
        if result.verdict == "INCONCLUSIVE":
            inconclusive = result
    if inconclusive is not None:
        return AttackReport("INCONCLUSIVE", (), None, "INCONCLUSIVE")
    return AttackReport("UNSAT", (), None, "UNSAT")


def cmd_saturate(args) -> int:
    theory = load_theory(args.theory)
    if args.theory in ("dsks", "deo"):
        system = builtin_intruder(args.theory)
    else:
        system = intruder_for_theory(theory)
    for rule in saturate(system.rules, theory, args.cap):
        print(rule)
    return 0


def cmd_normalize(args) -> int:
    theory = load_theory(args.theory)
    t = parse_term(args.term, theory.signature if args.theory not in ("dsks", "deo") else None)
    print(theory.normalize(t))
    return 0


def cmd_unify(args) -> int:
    theory = load_theory(args.theory)
    sig = theory.signature if args.theory not in ("dsks", "deo", "empty") else None
    s, t = parse_term(args.left, sig), parse_term(args.right, sig)
    if theory.is_empty:
        sigma = mgu(s, t)
        solutions = [] if sigma is None else [sigma]
    else:
        solutions = equational_unify([(s, t)], theory)
    if not solutions:
        print("not unifiable")
        return 1
    for sigma in solutions:
        print(sigma)
    return 0


def cmd_check(args) -> int:
    path = Path(args.file)
    obj = parse(path.read_text())
    if not isinstance(obj, DerivationFile):
        raise UsageError(f"{path} is not a derivation file")
    system = builtin_intruder(obj.theory)
    if obj.rules == "saturated":
        system = system.with_rules(saturate(system.rules, system.theory))
    result = check_derivation(obj.derivation, system)
    if result:
        print("valid")
        return 0
    print(f"invalid at step {result.failed_step}: {result.reason}")
    return 1


def cmd_convergence(args) -> int:
    report = check_convergence(load_theory(args.theory))
    print(report)
    for a, b in report.unjoinable:
        print(f"# unjoinable: {a} <> {b}")
    return 0 if report.convergent else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="keysub", description="Reachability for protocols over signatures with key substitution.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="decide a constraint or protocol file")
    s.add_argument("file")
    s.add_argument("--theory", help="dsks, deo or a theory file (overrides the file's theory line)")
    s.add_argument("--budget", type=int, help="maximum number of search nodes")
    s.add_argument("--time-limit", type=float, help="wall clock budget in seconds")
    s.add_argument("--trace", help="write the decision log as JSON lines to this path")
    s.set_defaults(run=cmd_solve)

    s = sub.add_parser("saturate", help="print the saturated deduction rules")
    s.add_argument("theory")
    s.add_argument("--cap", type=int, default=256)
    s.set_defaults(run=cmd_saturate)

    s = sub.add_parser("normalize", help="print the normal form of a term")
    s.add_argument("term")
    s.add_argument("--theory", default="dsks")
    s.set_defaults(run=cmd_normalize)

    s = sub.add_parser("unify", help="complete set of unifiers modulo a theory")
    s.add_argument("left")
    s.add_argument("right")
    s.add_argument("--theory", default="dsks")
    s.set_defaults(run=cmd_unify)

    s = sub.add_parser("check", help="replay a derivation file")
    s.add_argument("file")
    s.set_defaults(run=cmd_check)

    s = sub.add_parser("convergence", help="check termination and local confluence of a theory")
    s.add_argument("theory")
    s.set_defaults(run=cmd_convergence)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (
        ParseError,
        UsageError,
        SolverError,
        UnboundVariable,
        SaturationCapExceeded,
        RewriteBudgetExceeded,
        OSError,
        KeyError,
    ) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"keysub: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
