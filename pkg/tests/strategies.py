"""Hypothesis strategies for syntax trees the parser can produce."""
from __future__ import annotations

from hypothesis import strategies as st

from slentail.syntax import (
    Arr, Const, Dll, Entailment, Eq, Le, Ls, Lt, Neq, PointsTo, Sum, SymbolicHeap,
    Var, conj,
)

NAMES = ("x", "y", "z", "a", "b")

atomic_terms = st.one_of(
    st.sampled_from(NAMES).map(Var),
    st.integers(0, 12).map(Const),
)


@st.composite
def terms(draw, max_summands: int = 3):
    parts = draw(st.lists(atomic_terms, min_size=1, max_size=max_summands))
    t = parts[0]
    for p in parts[1:]:
        t = Sum(t, p)
    return t


@st.composite
def pure_parts(draw, max_atoms: int = 3):
    ops = st.sampled_from((Eq, Neq, Le, Lt))
    atoms = draw(st.lists(st.tuples(ops, terms(), terms()), max_size=max_atoms))
    return conj(*(op(l, r) for op, l, r in atoms))


@st.composite
def spatial_atoms(draw, pt: int = 2, lists: bool = True):
    kinds = ["pto", "arr"] + (["ls", "dll"] if lists else [])
    kind = draw(st.sampled_from(kinds))
    if kind == "pto":
        return PointsTo(draw(terms()), tuple(draw(terms()) for _ in range(pt)))
    if kind == "arr":
        return Arr(draw(terms()), draw(terms()))
    if kind == "ls":
        return Ls(draw(terms()), draw(terms()))
    return Dll(*(draw(terms()) for _ in range(4)))


@st.composite
def heaps(draw, pt: int = 2, lists: bool = True, binders: bool = True, max_atoms: int = 3):
    spatial = tuple(draw(st.lists(spatial_atoms(pt, lists), max_size=max_atoms)))
    bound = ()
    if binders:
        bound = tuple(draw(st.lists(st.sampled_from(("u", "v", "w")), unique=True, max_size=2)))
    return SymbolicHeap(bound, draw(pure_parts()), spatial)


@st.composite
def entailments(draw, pt: int = 2, lists: bool = True):
    ante = draw(heaps(pt, lists))
    succs = tuple(draw(st.lists(heaps(pt, lists), max_size=3)))
    return Entailment(ante, succs)
