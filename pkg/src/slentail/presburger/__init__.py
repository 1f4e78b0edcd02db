"""Presburger arithmetic over the naturals."""
from __future__ import annotations

from functools import lru_cache

from .. import syntax as sx
from .cooper import budget, clear_caches, decide, eliminate, qe, satisfiable
from .formula import (
    FALSE, TRUE, And, Dvd, Eq, Exists, FalseF, Forall, LinearTerm, Le, Not, Or,
    PbFormula, TrueF, evaluate, free_vars, from_pure, linear_term, mk_and,
    mk_dvd, mk_eq, mk_exists, mk_forall, mk_iff, mk_implies, mk_le, mk_not,
    mk_or, nnf, size,
)
from .smtlib import to_smtlib

__all__ = [
    "FALSE", "TRUE", "And", "Dvd", "Eq", "Exists", "FalseF", "Forall",
    "LinearTerm", "Le", "Not", "Or", "PbFormula", "TrueF", "budget",
    "clear_caches", "decide", "eliminate", "evaluate", "free_vars",
    "from_pure", "is_satisfiable", "linear_term", "mk_and", "mk_dvd", "mk_eq",
    "mk_exists", "mk_forall", "mk_iff", "mk_implies", "mk_le", "mk_not",
    "mk_or", "nnf", "pure_entails", "qe", "satisfiable", "size", "to_smtlib",
]


@lru_cache(maxsize=1 << 14)
def is_satisfiable(p: sx.PureFormula) -> bool:
    """Whether some assignment of naturals to the free variables makes ``p`` true."""
    return satisfiable(qe(from_pure(p)))


def pure_entails(p: sx.PureFormula, goal: sx.PureFormula) -> bool:
    """Whether ``p`` implies ``goal`` for every assignment of naturals."""
    return not is_satisfiable(sx.conj(p, sx.Not(goal)))
