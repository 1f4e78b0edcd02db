"""Entailment checking for symbolic heaps with arrays (no list predicates).

The pipeline: split the antecedent into its sorted permutations, translate
each sorted entailment into a Presburger formula with ``translate_P``, remove
the temporary difference terms, and decide ``forall z. exists y. F``.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

from . import presburger as pb
from .errors import FragmentError, MalformedDifference, ResourceExceeded
from .syntax import (
    FALSE, TRUE, And, Arr, Const, Diff, Emp, Entailment, Eq, Exists,
    FalseP, FreshNames, Le, Lt, Neq, Not, Or, PointsTo, Sum, SymbolicHeap,
    TrueP, Var, all_names, conj, disj, free_vars, implies, is_list_free,
    substitute,
)
from .verdict import INVALID, VALID, Verdict, condition_violated, resource_exceeded


@dataclass(frozen=True)
class RightPair:
    pure: object
    spatial: tuple


@dataclass(frozen=True)
class TransProblem:
    pure: object
    spatial: tuple
    rights: tuple
    fresh_zs: tuple = ()


# ------------------------------------------------- sortedness helpers


def precede_constraint(t, sigma) -> object:
    """``t < sigma``: t lies strictly before the first address of ``sigma``."""
    for atom in sigma:
        if isinstance(atom, Emp):
            continue
        if isinstance(atom, PointsTo):
            return _lt(t, atom.addr)
        if isinstance(atom, Arr):
            return _lt(t, atom.lo)
        raise FragmentError(f"list predicate {atom} in an array-only formula")
    return TRUE


def _sorted_prime(sigma) -> list:
    out = []
    for k, atom in enumerate(sigma):
        rest = sigma[k + 1:]
        if isinstance(atom, Emp):
            continue
        if isinstance(atom, PointsTo):
            out.append(precede_constraint(atom.addr, rest))
        elif isinstance(atom, Arr):
            out.append(_le(atom.lo, atom.hi))
            out.append(precede_constraint(atom.hi, rest))
        else:
            raise FragmentError(f"list predicate {atom} in an array-only formula")
    return out


def sorted_constraint(sigma) -> object:
    """Addresses positive and strictly increasing from left to right."""
    return _conj(precede_constraint(Const(0), sigma), *_sorted_prime(sigma))


def permutations(sigma) -> list:
    """All orderings of the atoms, in ``itertools.permutations`` order."""
    if not sigma:
        return [()]
    return [tuple(p) for p in itertools.permutations(sigma)]


def distinct_permutations(sigma) -> list:
    return list(dict.fromkeys(permutations(sigma)))


# ------------------------------------------------ linear folding helpers
#
# Difference terms are read as integer subtraction, which is exactly what
# cross-addition implements, so folding through linear forms is faithful.


@lru_cache(maxsize=1 << 16)
def _lin(t) -> pb.LinearTerm:
    if isinstance(t, Var):
        return pb.LinearTerm.var(t.name)
    if isinstance(t, Const):
        return pb.LinearTerm.const(t.n)
    if isinstance(t, Sum):
        return _lin(t.left) + _lin(t.right)
    if isinstance(t, Diff):
        return _lin(t.left) - _lin(t.right)
    raise TypeError(t)


def _fold(atom):
    """Evaluate an atom whose truth does not depend on its variables."""
    if isinstance(atom, (Eq, Neq)):
        f = pb.mk_eq(_lin(atom.left) - _lin(atom.right))
    elif isinstance(atom, Le):
        f = pb.mk_le(_lin(atom.left) - _lin(atom.right))
    else:
        f = pb.mk_le(_lin(atom.left) - _lin(atom.right) + pb.LinearTerm.const(1))
    if isinstance(f, (pb.TrueF, pb.FalseF)):
        truth = isinstance(f, pb.TrueF)
        if isinstance(atom, Neq):
            truth = not truth
        return TRUE if truth else FALSE
    return atom


def _lt(a, b):
    return _fold(Lt(a, b))


def _le(a, b):
    return _fold(Le(a, b))


def _eq(a, b):
    return _fold(Eq(a, b))


def _conj(*parts):
    f = conj(*parts)
    if isinstance(f, FalseP) or (isinstance(f, And) and any(isinstance(a, FalseP) for a in f.args)):
        return FALSE
    return f


def _term(lt: pb.LinearTerm):
    """Rebuild a term from a linear form; a difference only if needed."""
    def build(coeffs, c):
        parts = []
        for name, k in coeffs:
            parts.extend([Var(name)] * k)
        if c or not parts:
            parts.append(Const(c))
        out = parts[0]
        for p in parts[1:]:
            out = Sum(out, p)
        return out

    pos = [(k, v) for k, v in lt.coeffs if v > 0]
    neg = [(k, -v) for k, v in lt.coeffs if v < 0]
    if not neg and lt.constant >= 0:
        return build(pos, lt.constant)
    return Diff(build(pos, max(lt.constant, 0)), build(neg, max(-lt.constant, 0)))


def _shift(t, m, extra: int):
    """The term ``t + m + extra`` in simplified form."""
    return _term(_lin(t) + _lin(m) + pb.LinearTerm.const(extra))


def _known_le(pi, a, b) -> bool:
    """Whether ``a <= b`` is syntactically evident from the conjuncts of ``pi``."""
    want = pb.mk_le(_lin(a) - _lin(b))
    if isinstance(want, pb.TrueF):
        return True
    for c in (pi.args if isinstance(pi, And) else (pi,)):
        if isinstance(c, (Le, Lt)):
            extra = pb.LinearTerm.const(1 if isinstance(c, Lt) else 0)
            if pb.mk_le(_lin(c.left) - _lin(c.right) + extra) == want:
                return True
        elif isinstance(c, Eq):
            d = _lin(c.left) - _lin(c.right)
            if pb.mk_le(d) == want or pb.mk_le(-d) == want:
                return True
    return False


# ------------------------------------------------------- translation


class MeasureError(AssertionError):
    """The translation failed to make progress within its window."""


@dataclass
class _Context:
    fresh: FreshNames
    pt: int
    check_measure: bool = True
    guard_inverted: bool = True
    trace: list | None = None
    positive_empty: bool = False
    prune: bool = False
    steps: int = 0
    measure_checks: int = 0


MEASURE_STATS = {"checks": 0, "violations": 0}


def _measure(sigma, rights):
    return (len(sigma) + sum(len(r.spatial) for r in rights), len(rights))


def _pair(pure, spatial):
    return None if isinstance(pure, FalseP) else RightPair(pure, spatial)


def translate_P(p: TransProblem, fresh: FreshNames | None = None, pt: int | None = None,
                check_measure: bool = True, guard_inverted: bool = True,
                trace: list | None = None, positive_empty: bool = False,
                prune: bool = False):
    """Translate a sorted entailment problem into a pure formula.

    The result may contain difference terms; pass it through
    :func:`eliminate_differences` before handing it to the arithmetic layer.
    ``guard_inverted=False`` gives the bare clause set, in which a right-hand
    array whose end precedes its start can be consumed as if it were empty.

    The (empty) clause states only the ordering of the leftover atoms, not
    that their addresses are positive; callers put positivity into ``pure``
    once, as :func:`sorted_cases` does.  ``positive_empty=True`` repeats it
    at every (empty) leaf, which gives the same verdicts in that setting.

    With ``prune`` a subproblem whose pure part is unsatisfiable becomes
    ``true`` without being expanded.  Every leaf below it is an implication
    from a strengthening of that pure part, so the result is equivalent.
    """
    if fresh is None:
        fresh = FreshNames(all_names((p.pure, p.spatial) + tuple((r.pure, r.spatial) for r in p.rights)))
    if pt is None:
        pt = _points_to_arity((p.spatial,) + tuple(r.spatial for r in p.rights)) or 1
    ctx = _Context(fresh, pt, check_measure, guard_inverted, trace,
                   positive_empty=positive_empty, prune=prune)
    rights = tuple(r for r in p.rights if not isinstance(r.pure, FalseP))
    m0 = _measure(p.spatial, rights)
    return _P(p.pure, p.spatial, rights, p.fresh_zs, ctx, (m0, 0, len(rights) + 2))


def _points_to_arity(spatials) -> int | None:
    for sigma in spatials:
        for a in sigma:
            if isinstance(a, PointsTo):
                return len(a.values)
    return None


def _step(ctx, name, window, children):
    """Recurse into child problems, checking the termination measure."""
    ctx.steps += 1
    if ctx.trace is not None:
        ctx.trace.append(name)
    anchor, count, bound = window
    out = []
    for pi, sigma, rights, zs in children:
        rights = tuple(r for r in rights if r is not None)
        if ctx.check_measure:
            ctx.measure_checks += 1
            MEASURE_STATS["checks"] += 1
            m = _measure(sigma, rights)
            if m < anchor:
                child_window = (m, 0, len(rights) + 2)
            else:
                child_window = (anchor, count + 1, bound)
                if count + 1 > bound:
                    MEASURE_STATS["violations"] += 1
                    raise MeasureError(f"measure {anchor} not decreased within {bound} steps ({name})")
        else:
            child_window = window
        out.append(_P(pi, sigma, rights, zs, ctx, child_window))
    return out


def _P(pi, sigma, rights, zs, ctx: _Context, window):
    if isinstance(pi, FalseP):
        return TRUE
    if ctx.prune and not pb.is_satisfiable(eliminate_differences(pi)):
        return TRUE
    # (EmpL)
    if sigma and isinstance(sigma[0], Emp):
        return _step(ctx, "EmpL", window, [(pi, sigma[1:], rights, zs)])[0]
    # (EmpR)
    for i, r in enumerate(rights):
        if r.spatial and isinstance(r.spatial[0], Emp):
            new = rights[:i] + (RightPair(r.pure, r.spatial[1:]),) + rights[i + 1:]
            return _step(ctx, "EmpR", window, [(pi, sigma, new, zs)])[0]
    if not sigma:
        for i, r in enumerate(rights):
            if r.spatial:  # (EmpNEmp)
                return _step(ctx, "EmpNEmp", window, [(pi, sigma, rights[:i] + rights[i + 1:], zs)])[0]
        if rights:  # (EmpEmp)
            ctx.steps += 1
            if ctx.trace is not None:
                ctx.trace.append("EmpEmp")
            return implies(pi, disj(*(r.pure for r in rights)))
    else:
        for i, r in enumerate(rights):
            if not r.spatial:  # (NEmpEmp)
                return _step(ctx, "NEmpEmp", window, [(pi, sigma, rights[:i] + rights[i + 1:], zs)])[0]
    if not rights:  # (empty)
        ctx.steps += 1
        if ctx.trace is not None:
            ctx.trace.append("empty")
        order = sorted_constraint(sigma) if ctx.positive_empty else _conj(*_sorted_prime(sigma))
        return Not(_conj(pi, order))

    head, rest = sigma[0], sigma[1:]
    heads = [r.spatial[0] for r in rights]
    for h in (head, *heads):
        if not isinstance(h, (PointsTo, Arr)):
            raise FragmentError(f"list predicate {h} in an array-only formula")

    if isinstance(head, PointsTo):
        if all(isinstance(h, PointsTo) for h in heads):
            return _points_to_points_to(pi, head, rest, rights, zs, ctx, window)
        i = next(k for k, h in enumerate(heads) if isinstance(h, Arr))
        return _points_to_arr(pi, sigma, head, rights, i, zs, ctx, window)

    if any(isinstance(h, PointsTo) for h in heads):
        return _arr_points_to(pi, head, rest, rights, zs, ctx, window)
    if ctx.guard_inverted:
        for i, h in enumerate(heads):
            if not _known_le(pi, h.lo, h.hi):
                return _arr_guard(pi, sigma, rights, i, h, zs, ctx, window)
    return _arr_arr(pi, head, rest, rights, zs, ctx, window)


def _points_to_points_to(pi, head, rest, rights, zs, ctx, window):
    t, u = head.addr, head.values
    new_rights = []
    for r in rights:
        h, sigma_i = r.spatial[0], r.spatial[1:]
        if len(h.values) != len(u):
            raise FragmentError(f"points-to arity mismatch between {head} and {h}")
        eqs = [_eq(t, h.addr)] + [_eq(a, b) for a, b in zip(u, h.values)]
        new_rights.append(_pair(_conj(r.pure, *eqs, precede_constraint(h.addr, sigma_i)), sigma_i))
    child = (_conj(pi, precede_constraint(t, rest)), rest, tuple(new_rights), zs)
    return _step(ctx, "PtoPto", window, [child])[0]


def _points_to_arr(pi, sigma, head, rights, i, zs, ctx, window):
    r = rights[i]
    arr, sigma_i = r.spatial[0], r.spatial[1:]
    ti, ti2 = arr.lo, arr.hi
    one = RightPair(r.pure, (PointsTo(ti, head.values),) + sigma_i)
    more = RightPair(r.pure, (PointsTo(ti, head.values), Arr(Sum(ti, Const(1)), ti2)) + sigma_i)
    children = [
        (_conj(pi, _eq(ti2, ti)), sigma, rights[:i] + (one,) + rights[i + 1:], zs),
        (_conj(pi, _lt(ti, ti2)), sigma, rights[:i] + (more,) + rights[i + 1:], zs),
        (_conj(pi, _lt(ti2, ti)), sigma, rights[:i] + rights[i + 1:], zs),
    ]
    return _conj(*_step(ctx, "PtoArr", window, children))


def _arr_points_to(pi, head, rest, rights, zs, ctx, window):
    t, t2 = head.lo, head.hi
    z = tuple(ctx.fresh("z") for _ in range(ctx.pt))
    z2 = tuple(ctx.fresh("z") for _ in range(ctx.pt))
    children = [
        (_conj(pi, _lt(t, t2)),
         (PointsTo(t, tuple(map(Var, z))), Arr(Sum(t, Const(1)), t2)) + rest, rights, zs + z),
        (_conj(pi, _eq(t2, t)), (PointsTo(t, tuple(map(Var, z2))),) + rest, rights, zs + z2),
    ]
    return _conj(*_step(ctx, "ArrPto", window, children))


def _arr_guard(pi, sigma, rights, i, h, zs, ctx, window):
    """Split on whether the head array of right pair ``i`` is well formed.

    An inverted right array is unsatisfiable, so its pair is dropped; the
    split is exhaustive, so it is sound even when the bounds mention
    existential variables.
    """
    children = [
        (_conj(pi, _le(h.lo, h.hi)), sigma, rights, zs),
        (_conj(pi, _lt(h.hi, h.lo)), sigma, rights[:i] + rights[i + 1:], zs),
    ]
    return _conj(*_step(ctx, "ArrGuard", window, children))


def _masks(n, must_in, must_out):
    """Subsets of range(n) containing ``must_in`` and avoiding ``must_out``, in mask order."""
    free = [k for k in range(n) if k not in must_in and k not in must_out]
    base = sum(1 << k for k in must_in)
    out = []
    for bits in range(1 << len(free)):
        out.append(base | sum(1 << k for i, k in enumerate(free) if bits >> i & 1))
    return sorted(out)


def _arr_arr(pi, head, rest, rights, zs, ctx, window):
    t, t2 = head.lo, head.hi
    m = Diff(t2, t)
    n = len(rights)
    ms = [Diff(r.spatial[0].hi, r.spatial[0].lo) for r in rights]
    children = []
    # family one: the left array ends no later than the right arrays in sub
    eqs = [_eq(m, mk) for mk in ms]
    lts = [_lt(m, mk) for mk in ms]
    must_in = {k for k in range(n) if isinstance(lts[k], FalseP)}
    must_out = {k for k in range(n) if isinstance(eqs[k], FalseP)}
    if not must_in & must_out:
        for mask in _masks(n, must_in, must_out):
            sub = frozenset(k for k in range(n) if mask >> k & 1)
            cond = [eqs[k] if k in sub else lts[k] for k in range(n)]
            left = _conj(pi, *cond, _le(t, t2), precede_constraint(t2, rest))
            if isinstance(left, FalseP):
                continue
            children.append((left, rest, _consume(rights, sub, t, m), zs))
    # family two: some right array, the first in sub, ends strictly earlier
    for j in range(n):
        mp = ms[j]
        first = _lt(mp, m)
        if isinstance(first, FalseP):
            continue
        eqs = [_eq(mp, mk) for mk in ms]
        lts = [_lt(mp, mk) for mk in ms]
        must_in = {j} | {k for k in range(j + 1, n) if isinstance(lts[k], FalseP)}
        must_out = set(range(j)) | {k for k in range(j + 1, n) if isinstance(eqs[k], FalseP)}
        if must_in & must_out:
            continue
        for mask in _masks(n, must_in, must_out):
            sub = frozenset(k for k in range(n) if mask >> k & 1)
            cond = [first] + [eqs[k] if k in sub else lts[k] for k in range(n)]
            left = _conj(pi, *cond)
            if isinstance(left, FalseP):
                continue
            children.append((left, (Arr(_shift(t, mp, 1), t2),) + rest, _consume(rights, sub, t, mp), zs))
    return _conj(*_step(ctx, "ArrArr", window, children))


def _consume(rights, sub, t, m):
    out = []
    for k, r in enumerate(rights):
        arr, sigma_k = r.spatial[0], r.spatial[1:]
        if k in sub:
            out.append(_pair(_conj(r.pure, _eq(t, arr.lo), precede_constraint(arr.hi, sigma_k)), sigma_k))
        else:
            out.append(_pair(_conj(r.pure, _eq(t, arr.lo)), (Arr(_shift(arr.lo, m, 1), arr.hi),) + sigma_k))
    return tuple(out)


# ------------------------------------------------- difference removal


def _flatten(t):
    """(positive summands, negative summands) of an extended term."""
    if isinstance(t, Sum):
        lp, ln = _flatten(t.left)
        rp, rn = _flatten(t.right)
        return lp + rp, ln + rn
    if isinstance(t, Diff):
        lp, ln = _flatten(t.left)
        rp, rn = _flatten(t.right)
        return lp + rn, ln + rp
    return [t], []


def _has_diff(t) -> bool:
    if isinstance(t, Diff):
        return True
    if isinstance(t, Sum):
        return _has_diff(t.left) or _has_diff(t.right)
    return False


def _sum(parts):
    if not parts:
        return Const(0)
    out = parts[0]
    for p in parts[1:]:
        out = Sum(out, p)
    return out


def eliminate_differences(f):
    """Rewrite ``a + (u - t) op b`` into ``a + u op b + t`` throughout ``f``."""
    if isinstance(f, (Eq, Neq, Le, Lt)):
        if not (_has_diff(f.left) or _has_diff(f.right)):
            return f
        lp, ln = _flatten(f.left)
        rp, rn = _flatten(f.right)
        out = type(f)(_sum(lp + rn), _sum(rp + ln))
        if _has_diff(out.left) or _has_diff(out.right):
            raise MalformedDifference(f"difference survived in {out}")
        return out
    if isinstance(f, (And, Or)):
        return type(f)(tuple(eliminate_differences(a) for a in f.args))
    if isinstance(f, Not):
        return Not(eliminate_differences(f.arg))
    if isinstance(f, Exists):
        return Exists(f.var, eliminate_differences(f.body))
    if isinstance(f, (TrueP, FalseP)):
        return f
    raise TypeError(f"not a pure formula: {f!r}")


# ------------------------------------------------------ size condition


def size_condition_violation(e: Entailment):
    """The first succedent array whose length depends on that succedent's binders."""
    for s in e.succedents:
        ys = set(s.bound_vars)
        if not ys:
            continue
        for atom in s.spatial:
            if isinstance(atom, Arr):
                length = _lin(atom.hi) - _lin(atom.lo)
                if length.vars & ys:
                    return atom
    return None


def check_size_condition(e: Entailment) -> bool:
    return size_condition_violation(e) is None


# ----------------------------------------------------------- decision


@dataclass
class SlaOptions:
    pt: int | None = None
    prune: bool = True
    guard_inverted: bool = True
    check_measure: bool = True
    positive_empty: bool = False


@dataclass
class SortedCase:
    """One sorted entailment produced by the permutation split."""

    antecedent: tuple
    formula: object
    universals: tuple
    existentials: tuple
    stats: dict = field(default_factory=dict)

    def sentence(self) -> pb.PbFormula:
        body = pb.from_pure(eliminate_differences(self.formula))
        return pb.mk_forall(self.universals, pb.mk_exists(self.existentials, body))


def _prepare(e: Entailment, fresh: FreshNames):
    """Drop antecedent binders and build the right pairs for every permutation."""
    ante = e.antecedent
    if ante.bound_vars:
        ren = {x: Var(fresh(x)) for x in ante.bound_vars}
        ante = SymbolicHeap((), substitute(ante.pure, ren), substitute(ante.spatial, ren))
    pairs, ys = [], []
    for s in e.succedents:
        for perm in distinct_permutations(s.spatial):
            ren = {y: Var(fresh(y)) for y in s.bound_vars}
            ys.extend(v.name for v in ren.values())
            pairs.append(RightPair(substitute(s.pure, ren), substitute(perm, ren)))
    return ante, pairs, ys


def sorted_cases(e: Entailment, options: SlaOptions | None = None) -> Iterator[SortedCase]:
    """Translate every sorted entailment of ``e`` (size condition not checked)."""
    options = options or SlaOptions()
    if not is_list_free(e):
        raise FragmentError("list predicates are outside the array-only fragment")
    fresh = FreshNames(all_names(e))
    ante, pairs, ys = _prepare(e, fresh)
    pt = options.pt or _points_to_arity((ante.spatial,) + tuple(p.spatial for p in pairs)) or 1
    if options.prune:
        pairs = [p for p in pairs if pb.is_satisfiable(_conj(p.pure, sorted_constraint(p.spatial)))]
    base_vars = free_vars(e) | set(ys) | free_vars(ante)
    for perm in distinct_permutations(ante.spatial):
        pi = _conj(ante.pure, sorted_constraint(perm))
        if options.prune and not pb.is_satisfiable(pi):
            continue
        ctx_stats: dict = {}
        trace: list = []
        f = translate_P(TransProblem(pi, perm, tuple(pairs)), fresh=fresh, pt=pt,
                        check_measure=options.check_measure,
                        guard_inverted=options.guard_inverted, trace=trace,
                        positive_empty=options.positive_empty, prune=options.prune)
        ctx_stats["clauses"] = dict(Counter(trace))
        used_ys = tuple(y for y in ys if y in free_vars(f))
        universals = tuple(sorted(free_vars(f) - set(ys)))
        zs = tuple(sorted(free_vars(f) - base_vars))
        ctx_stats["fresh_z"] = zs
        yield SortedCase(perm, f, universals, used_ys, ctx_stats)


def _valid_case(case: SortedCase) -> bool:
    """Decide ``forall universals. exists existentials. F``."""
    body = pb.from_pure(eliminate_differences(case.formula))
    ys = set(case.existentials)
    conjuncts = body.args if isinstance(body, pb.And) else (body,)
    # conjuncts sharing no existential can be checked separately
    groups: list[tuple[set, list]] = []
    for c in conjuncts:
        vs = set(pb.free_vars(c)) & ys
        merged = [g for g in groups if g[0] & vs]
        keep = [g for g in groups if not (g[0] & vs)]
        new = (set(vs), [c])
        for g in merged:
            new[0].update(g[0])
            new[1][:0] = g[1]
        groups = keep + [new]
    # cheap groups first so failures surface early
    groups.sort(key=lambda g: (len(g[0]), pb.size(pb.mk_and(g[1]))))
    for vs, cs in groups:
        g = pb.mk_and(cs)
        if vs:
            g = pb.qe(pb.mk_exists(sorted(vs), g))
        if pb.satisfiable(pb.mk_not(pb.nnf(g))):
            return False
    return True


def decide_sla_raw(e: Entailment, options: SlaOptions | None = None) -> Verdict:
    """Like :func:`decide_sla` but lets :class:`ResourceExceeded` escape."""
    bad = size_condition_violation(e)
    if bad is not None:
        return condition_violated(str(bad))
    for case in sorted_cases(e, options):
        if not _valid_case(case):
            return INVALID
    return VALID


def decide_sla(e: Entailment, options: SlaOptions | None = None) -> Verdict:
    try:
        return decide_sla_raw(e, options)
    except ResourceExceeded as exc:
        return resource_exceeded(str(exc))
