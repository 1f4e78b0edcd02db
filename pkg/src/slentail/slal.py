"""Decision procedure for arrays plus singly and doubly linked lists.

Antecedent lists are removed by unroll collapse, which turns one entailment
into finitely many judgments whose antecedents only use ``->`` and ``Arr``.
Succedent lists are then removed by a measured proof search; list-free
leaves are closed by the array decider.

Side conditions of the form "Pi is satisfiable" or "Pi entails t = t'" are
evaluated against the pure part of the antecedent strengthened with the
facts its spatial part forces: allocated addresses are positive, arrays are
non-empty and distinct atoms occupy disjoint cells.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator

from . import presburger as pb
from .errors import FragmentError, ResourceExceeded
from .sla import MEASURE_STATS, MeasureError, SlaOptions, decide_sla_raw
from .syntax import (
    FALSE, Arr, Const, Dll, Emp, Entailment, Eq, Exists, FreshNames,
    Le, Ls, Lt, Neq, Not, PointsTo, SymbolicHeap, Var, all_names, conj,
    count_lists, count_points_to, disj, is_list_free,
)
from .verdict import INVALID, VALID, Outcome, Verdict, resource_exceeded


class RuleId(enum.Enum):
    START = "Start"
    UNSAT_L = "UnsatL"
    UNSAT_R = "UnsatR"
    MAPSTO_LS_EM = "MapsToLsEM"
    MAPSTO_LS = "MapsToLs"
    LS_ELIM = "LsElim"
    MAPSTO_DLL_EM = "MapsToDllEM"
    MAPSTO_DLL = "MapsToDll"
    DLL_ELIM = "DllElim"
    ARR_LIST_EM = "ArrListEM"
    ARR_LS = "ArrLs"
    ARR_DLL = "ArrDll"

    def __str__(self):
        return self.value


# the order in which search tries the rules
SEARCH_ORDER = (
    RuleId.UNSAT_L, RuleId.START, RuleId.UNSAT_R, RuleId.MAPSTO_LS_EM,
    RuleId.ARR_LIST_EM, RuleId.LS_ELIM, RuleId.ARR_LS, RuleId.MAPSTO_LS,
    RuleId.MAPSTO_DLL_EM, RuleId.DLL_ELIM, RuleId.ARR_DLL, RuleId.MAPSTO_DLL,
)


@dataclass(frozen=True)
class Judgment:
    antecedent: SymbolicHeap
    succedents: tuple = ()

    def __post_init__(self):
        if not self.antecedent.is_qf or not all(s.is_qf for s in self.succedents):
            raise FragmentError("judgments are quantifier-free")
        if not is_list_free(self.antecedent):
            raise FragmentError("judgment antecedents must be list-free")

    @staticmethod
    def of(e: Entailment) -> "Judgment":
        return Judgment(e.antecedent, tuple(e.succedents))

    def entailment(self) -> Entailment:
        return Entailment(self.antecedent, self.succedents)

    def strengthen(self, extra) -> "Judgment":
        a = self.antecedent
        return Judgment(SymbolicHeap((), conj(a.pure, extra), a.spatial), self.succedents)

    def with_succedents(self, succedents) -> "Judgment":
        return Judgment(self.antecedent, tuple(succedents))

    def __str__(self):
        return str(self.entailment())


@dataclass(frozen=True)
class DerivationTree:
    rule: RuleId
    conclusion: Judgment
    premises: tuple = ()

    def rules(self) -> Iterator[RuleId]:
        yield self.rule
        for p in self.premises:
            yield from p.rules()

    def render(self, indent: int = 0) -> str:
        lines = ["  " * indent + f"{self.rule}: {self.conclusion}"]
        lines += [p.render(indent + 1) for p in self.premises]
        return "\n".join(lines)

    def __str__(self):
        return self.render()


# ----------------------------------------------------------- unroll collapse


def eliminate_antecedent_lists(e: Entailment) -> list[Judgment]:
    """Replace antecedent list atoms by their collapsed unrollings.

    The leftmost list atom is split first; new atoms take its place in the
    spatial sequence.  Fresh variables are free in the resulting judgments.
    """
    if not e.antecedent.is_qf or not all(s.is_qf for s in e.succedents):
        raise FragmentError("entailments with lists must be quantifier-free")
    fresh = FreshNames(all_names(e))
    todo = [(e.antecedent.pure, tuple(e.antecedent.spatial))]
    out = []
    while todo:
        pure, spatial = todo.pop(0)
        k = next((i for i, a in enumerate(spatial) if isinstance(a, (Ls, Dll))), None)
        if k is None:
            out.append(Judgment(SymbolicHeap((), pure, spatial), tuple(e.succedents)))
            continue
        a, before, after = spatial[k], spatial[:k], spatial[k + 1:]
        cases = []
        if isinstance(a, Ls):
            t, u = a.start, a.end
            z, y1, y2 = Var(fresh("z")), Var(fresh("y")), Var(fresh("y"))
            cases.append((conj(pure, Eq(t, u)), ()))
            cases.append((pure, (PointsTo(t, (z, y1)), PointsTo(z, (u, y2)))))
        else:
            t, u, v, w = a.a, a.b, a.c, a.d
            z = Var(fresh("z"))
            cases.append((conj(pure, Eq(t, u), Eq(v, w)), ()))
            cases.append((conj(pure, Eq(t, v)), (PointsTo(t, (u, w)),)))
            cases.append((pure, (PointsTo(t, (z, w)), PointsTo(z, (v, t)), PointsTo(v, (u, z)))))
        todo[:0] = [(p, before + mid + after) for p, mid in cases]
    return out


# ------------------------------------------------------ cells and heaps


def cell_formula(sigma, t):
    """Pure formula saying that address ``t`` is allocated by ``sigma``."""
    parts = []
    for a in sigma:
        if isinstance(a, Emp):
            continue
        if isinstance(a, PointsTo):
            parts.append(Eq(t, a.addr))
        elif isinstance(a, Arr):
            parts.append(conj(Le(a.lo, t), Le(t, a.hi)))
        else:
            raise FragmentError(f"cell_formula expects list-free heaps, got {a}")
    return disj(*parts) if parts else FALSE


def footprint_constraint(sigma):
    """What the list-free spatial formula ``sigma`` forces on the store."""
    atoms = [a for a in sigma if not isinstance(a, (Emp, Ls, Dll))]
    parts = []
    for a in atoms:
        if isinstance(a, PointsTo):
            parts.append(Lt(Const(0), a.addr))
        else:
            parts.append(Lt(Const(0), a.lo))
            parts.append(Le(a.lo, a.hi))
    for i, a in enumerate(atoms):
        for b in atoms[i + 1:]:
            parts.append(_disjoint(a, b))
    return conj(*parts)


def _disjoint(a, b):
    if isinstance(a, PointsTo) and isinstance(b, PointsTo):
        return Neq(a.addr, b.addr)
    if isinstance(a, PointsTo):
        return disj(Lt(a.addr, b.lo), Lt(b.hi, a.addr))
    if isinstance(b, PointsTo):
        return _disjoint(b, a)
    return disj(Lt(a.hi, b.lo), Lt(b.hi, a.lo))


def heap_pure(phi: SymbolicHeap):
    return conj(phi.pure, footprint_constraint(phi.spatial))


def _sat(phi: SymbolicHeap, *extra) -> bool:
    return pb.is_satisfiable(conj(heap_pure(phi), *extra))


def _entails(phi: SymbolicHeap, goal) -> bool:
    return not _sat(phi, Not(goal))


def _covered(sigma, phi_sigma, name):
    """Every cell of ``sigma`` is a cell of ``phi_sigma``."""
    x = Var(name)
    parts = []
    for a in sigma:
        if isinstance(a, PointsTo):
            parts.append(cell_formula(phi_sigma, a.addr))
        elif isinstance(a, Arr):
            inside = conj(Le(a.lo, x), Le(x, a.hi))
            parts.append(Not(Exists(name, conj(inside, Not(cell_formula(phi_sigma, x))))))
    return conj(*parts)


def _agree(phi_sigma, psi_sigma):
    """Points-to atoms of both sides at the same address store the same values."""
    parts = []
    for a in phi_sigma:
        if not isinstance(a, PointsTo):
            continue
        for b in psi_sigma:
            if isinstance(b, PointsTo) and len(a.values) == len(b.values):
                same = conj(*(Eq(u, v) for u, v in zip(a.values, b.values)))
                parts.append(disj(Neq(a.addr, b.addr), same))
            elif isinstance(b, PointsTo):
                parts.append(Neq(a.addr, b.addr))
    return conj(*parts)


def jointly_satisfiable(phi: SymbolicHeap, psi: SymbolicHeap) -> bool:
    """Whether some model satisfies both ``phi`` (list-free) and ``psi``.

    Exact when ``psi`` is list-free.  With lists in ``psi`` the list atoms are
    ignored and only inclusion of the remaining footprint is required, which
    can only over-approximate.
    """
    name = FreshNames(all_names((phi, psi)))("x")
    rest = tuple(a for a in psi.spatial if not isinstance(a, (Ls, Dll)))
    parts = [psi.pure, footprint_constraint(rest), _covered(rest, phi.spatial, name),
             _agree(phi.spatial, rest)]
    if len(rest) == len(psi.spatial):
        parts.append(_covered(phi.spatial, rest, name))
    return _sat(phi, *parts)


# ------------------------------------------------------------- degrees


@dataclass(frozen=True, order=True)
class Degree:
    lists: int
    unfold: int
    em: int


def _lists_in(psi):
    return [a for a in psi.spatial if isinstance(a, (Ls, Dll))]


def _head(a):
    return a.start if isinstance(a, Ls) else a.a


def _pair_degree(phi: SymbolicHeap, sigma, lst) -> int:
    t2 = _head(lst)
    if isinstance(sigma, PointsTo):
        conds = (Eq(sigma.addr, t2), Neq(sigma.addr, t2))
    elif isinstance(sigma, Arr):
        conds = (conj(Le(sigma.lo, t2), Le(t2, sigma.hi)), disj(Lt(t2, sigma.lo), Lt(sigma.hi, t2)))
    else:
        return 0
    return int(all(_sat(phi, c) for c in conds))


def degree(psi: SymbolicHeap, phi: SymbolicHeap) -> Degree:
    em = sum(_pair_degree(phi, s, l) for s in phi.spatial for l in _lists_in(psi))
    return Degree(count_lists(psi), count_points_to(phi) - count_points_to(psi), em)


def measure(j: Judgment) -> tuple:
    return tuple(sorted((degree(p, j.antecedent) for p in j.succedents), reverse=True))


def measure_less(j1: Judgment, j2: Judgment) -> bool:
    return measure(j1) < measure(j2)


# --------------------------------------------------------------- rules


def _replace(seq, i, new):
    return tuple(seq[:i]) + tuple(new) + tuple(seq[i + 1:])


def _without_atom(psi: SymbolicHeap, k: int, extra, inserted=()):
    return SymbolicHeap((), conj(psi.pure, extra) if extra is not None else psi.pure,
                        _replace(psi.spatial, k, inserted))


def _list_sites(j: Judgment, kinds):
    """(succedent index, atom index, atom) for list atoms, leftmost first."""
    for i, psi in enumerate(j.succedents):
        for k, a in enumerate(psi.spatial):
            if isinstance(a, kinds):
                yield i, k, a


def _empty_case(a):
    if isinstance(a, Ls):
        return Eq(a.start, a.end)
    return conj(Eq(a.a, a.b), Eq(a.c, a.d))


def _elim(j: Judgment, i: int, k: int, a) -> tuple:
    psi = j.succedents[i]
    return (j.with_succedents(_replace(j.succedents, i, [_without_atom(psi, k, _empty_case(a))])),)


def _start(j):
    if not is_list_free(j.entailment()):
        return None
    v = decide_sla_raw(j.entailment(), SlaOptions())
    if v.outcome is Outcome.CONDITION_VIOLATED:
        raise FragmentError(f"array decider rejected a leaf: {v}")
    return () if v.is_valid else None


def _unsat_l(j):
    return None if _sat(j.antecedent) else ()


def _unsat_r(j):
    for i, psi in enumerate(j.succedents):
        if not jointly_satisfiable(j.antecedent, psi):
            return (j.with_succedents(_replace(j.succedents, i, [])),)
    return None


def _points_to_em(j, kind):
    phi = j.antecedent
    for s in phi.spatial:
        if not isinstance(s, PointsTo):
            continue
        for _, _, a in _list_sites(j, kind):
            t2 = _head(a)
            if _sat(phi, Eq(s.addr, t2)) and _sat(phi, Neq(s.addr, t2)):
                return (j.strengthen(Eq(s.addr, t2)), j.strengthen(Neq(s.addr, t2)))
    return None


def _arr_list_em(j):
    phi = j.antecedent
    for s in phi.spatial:
        if not isinstance(s, Arr):
            continue
        for _, _, a in _list_sites(j, (Ls, Dll)):
            t2 = _head(a)
            inside = conj(Le(s.lo, t2), Le(t2, s.hi))
            if _sat(phi, inside) and _sat(phi, disj(Lt(t2, s.lo), Lt(s.hi, t2))):
                return (j.strengthen(inside), j.strengthen(Lt(s.hi, t2)), j.strengthen(Lt(t2, s.lo)))
    return None


def _list_elim(j, kind):
    phi = j.antecedent
    for i, k, a in _list_sites(j, kind):
        if not _sat(phi, cell_formula(phi.spatial, _head(a))):
            return _elim(j, i, k, a)
    return None


def _arr_list(j, kind):
    phi = j.antecedent
    for s in phi.spatial:
        if not isinstance(s, Arr):
            continue
        for i, k, a in _list_sites(j, kind):
            t2 = _head(a)
            if _entails(phi, conj(Le(s.lo, t2), Le(t2, s.hi))):
                return _elim(j, i, k, a)
    return None


def _points_to_unfold(j, kind):
    phi = j.antecedent
    for s in phi.spatial:
        if not isinstance(s, PointsTo) or len(s.values) < 2:
            continue
        for i, k, a in _list_sites(j, kind):
            if not _entails(phi, Eq(s.addr, _head(a))):
                continue
            psi = j.succedents[i]
            v = s.values[0]
            if kind is Ls:
                cell = PointsTo(a.start, s.values)
                rest = Ls(v, a.end)
            else:
                cell = PointsTo(s.addr, (v, a.d) + tuple(s.values[2:]))
                rest = Dll(v, a.b, a.c, a.a)
            empty = _without_atom(psi, k, _empty_case(a))
            unfolded = _without_atom(psi, k, None, (cell, rest))
            return (j.with_succedents(_replace(j.succedents, i, [empty, unfolded])),)
    return None


_RULES = {
    RuleId.START: _start,
    RuleId.UNSAT_L: _unsat_l,
    RuleId.UNSAT_R: _unsat_r,
    RuleId.MAPSTO_LS_EM: lambda j: _points_to_em(j, Ls),
    RuleId.MAPSTO_DLL_EM: lambda j: _points_to_em(j, Dll),
    RuleId.ARR_LIST_EM: _arr_list_em,
    RuleId.LS_ELIM: lambda j: _list_elim(j, Ls),
    RuleId.DLL_ELIM: lambda j: _list_elim(j, Dll),
    RuleId.ARR_LS: lambda j: _arr_list(j, Ls),
    RuleId.ARR_DLL: lambda j: _arr_list(j, Dll),
    RuleId.MAPSTO_LS: lambda j: _points_to_unfold(j, Ls),
    RuleId.MAPSTO_DLL: lambda j: _points_to_unfold(j, Dll),
}


def apply_rule(r: RuleId, j: Judgment) -> tuple | None:
    """Premises of the chosen instance of ``r`` concluding ``j``, or None."""
    return _RULES[r](j)


# -------------------------------------------------------------- search


def search(j: Judgment, check_measure: bool = True) -> DerivationTree | None:
    """Proof search trying rules in a fixed priority order; None on failure."""
    for r in SEARCH_ORDER:
        premises = apply_rule(r, j)
        if premises is not None:
            break
    else:
        return None
    if check_measure and r not in (RuleId.START, RuleId.UNSAT_L):
        for p in premises:
            MEASURE_STATS["checks"] += 1
            if not measure_less(p, j):
                MEASURE_STATS["violations"] += 1
                raise MeasureError(f"{r} did not decrease the measure at {j}")
    subtrees = []
    for p in premises:
        sub = search(p, check_measure)
        if sub is None:
            return None
        subtrees.append(sub)
    return DerivationTree(r, j, tuple(subtrees))


def check_derivation(tree: DerivationTree) -> bool:
    """Re-check every node of ``tree`` against its rule."""
    try:
        premises = apply_rule(tree.rule, tree.conclusion)
    except (FragmentError, ResourceExceeded):
        return False
    if premises is None or len(premises) != len(tree.premises):
        return False
    if any(p != sub.conclusion for p, sub in zip(premises, tree.premises)):
        return False
    return all(check_derivation(sub) for sub in tree.premises)


@dataclass(frozen=True)
class SlalResult:
    verdict: Verdict
    judgments: tuple = ()
    proofs: tuple = ()


def prove_slal(e: Entailment, check_measure: bool = True) -> SlalResult:
    """Run the full procedure and keep the derivation of every judgment."""
    judgments = tuple(eliminate_antecedent_lists(e))
    proofs = []
    try:
        for j in judgments:
            tree = search(j, check_measure)
            proofs.append(tree)
            if tree is None:
                return SlalResult(INVALID, judgments, tuple(proofs))
    except ResourceExceeded as exc:
        return SlalResult(resource_exceeded(str(exc)), judgments, tuple(proofs))
    return SlalResult(VALID, judgments, tuple(proofs))


def decide_slal(e: Entailment, check_measure: bool = True) -> Verdict:
    return prove_slal(e, check_measure).verdict
