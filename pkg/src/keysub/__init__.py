"""Symbolic reachability for protocols whose signature scheme lets an
attacker forge key pairs (duplicate signature key selection) or new messages
for existing signatures (destructive exclusive ownership)."""

from .intruder import (
    I_DEO,
    I_DSKS,
    L_DEO,
    L_DSKS,
    DeductionRule,
    Derivation,
    DerivationStep,
    IntruderSystem,
    check_derivation,
    deducible,
    one_step,
)
from .narrowing import equational_unify, guess_normal_forms, narrow_step, narrowing_tree
from .rewriting import DEO, DSKS, R_DEO, R_DSKS, RewriteRule, RewriteTheory, check_convergence, critical_pairs
from .saturation import saturate, subsumes
from .solver import (
    ConstraintSystem,
    DeductionConstraint,
    SolverConfig,
    SolveResult,
    check_wellformed,
    solve,
)
from .syntax import ParseError, parse, parse_term, render
from .terms import App, Fresh, Signature, Substitution, Symbol, Var, apply, size, subterms
from .unify import mgu, solve_system

__version__ = "0.1.0"
