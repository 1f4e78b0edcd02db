"""Brute-force semantics for differential testing.

Stores map variables to naturals and heaps map positive locations to value
tuples.  Everything here works by enumeration inside explicit bounds and is
never used to produce a shipped verdict.

Two evaluators for ``*`` are provided: a naive one that tries every split
of the heap, and a footprint-matching one that only follows the cells an
atom can occupy.  The matcher also accepts heaps whose contents are partly
unknown (slots), which lets :func:`find_countermodel` reason about array
contents without enumerating every value they could hold.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping

from .syntax import (
    And, Arr, Const, Dll, Emp, Entailment, Eq, Exists, FalseP, Le, Ls, Lt, Neq,
    Not, Or, PointsTo, Sum, SymbolicHeap, TrueP, Var, free_vars,
)

Store = Mapping[str, int]


@dataclass(frozen=True)
class Bounds:
    max_value: int
    max_heap_size: int
    max_unfold: int | None = None

    @property
    def unfold(self) -> int:
        return self.max_heap_size + 1 if self.max_unfold is None else self.max_unfold


@dataclass(frozen=True)
class HeapModel:
    """A finite heap as sorted ``(location, values)`` pairs."""

    cells: tuple = ()

    def __post_init__(self):
        locs = [l for l, _ in self.cells]
        if any(l <= 0 for l in locs):
            raise ValueError("location 0 is not allocatable")
        if len(set(locs)) != len(locs):
            raise ValueError("duplicate location")
        object.__setattr__(self, "cells", tuple(sorted(self.cells)))

    @staticmethod
    def of(mapping: Mapping[int, tuple]) -> "HeapModel":
        return HeapModel(tuple((l, tuple(v)) for l, v in mapping.items()))

    def as_dict(self) -> dict:
        return dict(self.cells)

    @property
    def dom(self) -> frozenset:
        return frozenset(l for l, _ in self.cells)

    def __len__(self):
        return len(self.cells)

    def __str__(self):
        return "{" + ", ".join(f"{l}->({', '.join(map(str, v))})" for l, v in self.cells) + "}"


class UnboundedQuantifier(ValueError):
    """Evaluating a quantifier needs a positive value bound."""


# ---------------------------------------------------------------- terms


def eval_term(t, s: Store) -> int:
    if isinstance(t, Var):
        return s[t.name]
    if isinstance(t, Const):
        return t.n
    if isinstance(t, Sum):
        return eval_term(t.left, s) + eval_term(t.right, s)
    raise TypeError(f"cannot evaluate {t!r}")


def eval_pure(p, s: Store, max_value: int | None = None) -> bool:
    if isinstance(p, TrueP):
        return True
    if isinstance(p, FalseP):
        return False
    if isinstance(p, Eq):
        return eval_term(p.left, s) == eval_term(p.right, s)
    if isinstance(p, Neq):
        return eval_term(p.left, s) != eval_term(p.right, s)
    if isinstance(p, Le):
        return eval_term(p.left, s) <= eval_term(p.right, s)
    if isinstance(p, Lt):
        return eval_term(p.left, s) < eval_term(p.right, s)
    if isinstance(p, And):
        return all(eval_pure(a, s, max_value) for a in p.args)
    if isinstance(p, Or):
        return any(eval_pure(a, s, max_value) for a in p.args)
    if isinstance(p, Not):
        return not eval_pure(p.arg, s, max_value)
    if isinstance(p, Exists):
        if not max_value:
            raise UnboundedQuantifier(f"no value bound for Ex {p.var}")
        inner = dict(s)
        for v in range(max_value + 1):
            inner[p.var] = v
            if eval_pure(p.body, inner, max_value):
                return True
        return False
    raise TypeError(f"not a pure formula: {p!r}")


# ------------------------------------------------------ naive splitting


def _atom_naive(a, s: Store, h: dict, unfold: int) -> bool:
    if isinstance(a, Emp):
        return not h
    if isinstance(a, PointsTo):
        loc = eval_term(a.addr, s)
        return set(h) == {loc} and h[loc] == tuple(eval_term(v, s) for v in a.values)
    if isinstance(a, Arr):
        lo, hi = eval_term(a.lo, s), eval_term(a.hi, s)
        return lo <= hi and set(h) == set(range(lo, hi + 1))
    if isinstance(a, Ls):
        return _ls_k(eval_term(a.start, s), eval_term(a.end, s), h, unfold)
    if isinstance(a, Dll):
        args = [eval_term(t, s) for t in (a.a, a.b, a.c, a.d)]
        return _dll_k(*args, h, unfold)
    raise TypeError(a)


def _ls_k(t: int, u: int, h: dict, k: int) -> bool:
    """ls^k(t,u): k-fold unfolding, read literally."""
    if k == 0:
        return False
    if t == u and not h:
        return True
    if t in h and len(h[t]) >= 1:
        rest = {l: v for l, v in h.items() if l != t}
        return _ls_k(h[t][0], u, rest, k - 1)
    return False


def _dll_k(t: int, u: int, v: int, w: int, h: dict, k: int) -> bool:
    if k == 0:
        return False
    if t == u and v == w and not h:
        return True
    if t in h and len(h[t]) >= 2 and h[t][1] == w:
        rest = {l: x for l, x in h.items() if l != t}
        return _dll_k(h[t][0], u, v, t, rest, k - 1)
    return False


def _star_naive(atoms, s: Store, h: dict, unfold: int, right_first: bool = False) -> bool:
    if not atoms:
        return not h
    if right_first:
        first, rest = atoms[-1], atoms[:-1]
    else:
        first, rest = atoms[0], atoms[1:]
    locs = sorted(h)
    for r in range(len(locs) + 1):
        for part in itertools.combinations(locs, r):
            h1 = {l: h[l] for l in part}
            if not _atom_naive(first, s, h1, unfold):
                continue
            h2 = {l: v for l, v in h.items() if l not in h1}
            if _star_naive(rest, s, h2, unfold, right_first):
                return True
    return False


# --------------------------------------------------- footprint matching


@dataclass(frozen=True)
class Slot:
    """An unknown heap content: field ``field`` of the cell at ``loc``."""

    loc: int
    field: int


def _require(req: dict, cell_value, want: int):
    """Extend ``req`` so that ``cell_value`` equals ``want``; None on conflict."""
    if isinstance(cell_value, Slot):
        have = req.get(cell_value)
        if have is None:
            out = dict(req)
            out[cell_value] = want
            return out
        return req if have == want else None
    return req if cell_value == want else None


def _pointer_choices(req: dict, cell_value, targets) -> Iterator[tuple[int, dict]]:
    """Possible values of a next-pointer field that can still lead somewhere."""
    if isinstance(cell_value, Slot):
        if cell_value in req:
            yield req[cell_value], req
            return
        for z in sorted(targets):
            out = dict(req)
            out[cell_value] = z
            yield z, out
    else:
        yield cell_value, req


def _match_atom(a, s: Store, h: dict, free: frozenset, req: dict, unfold: int):
    """Yield (used locations, requirements) for every way ``a`` fits in ``free``."""
    if isinstance(a, Emp):
        yield frozenset(), req
    elif isinstance(a, PointsTo):
        loc = eval_term(a.addr, s)
        if loc in free and len(h[loc]) == len(a.values):
            r = req
            for cell, t in zip(h[loc], a.values):
                r = _require(r, cell, eval_term(t, s))
                if r is None:
                    return
            yield frozenset((loc,)), r
    elif isinstance(a, Arr):
        lo, hi = eval_term(a.lo, s), eval_term(a.hi, s)
        if lo <= hi and hi - lo + 1 <= len(free):
            cells = frozenset(range(lo, hi + 1))
            if cells <= free:
                yield cells, req
    elif isinstance(a, Ls):
        yield from _match_ls(eval_term(a.start, s), eval_term(a.end, s), h, free, frozenset(), req, unfold)
    elif isinstance(a, Dll):
        args = [eval_term(t, s) for t in (a.a, a.b, a.c, a.d)]
        yield from _match_dll(*args, h, free, frozenset(), req, unfold)
    else:
        raise TypeError(a)


def _match_ls(t, u, h, free, used, req, k):
    if k == 0:
        return
    if t == u:
        yield used, req
    if t in free and len(h[t]) >= 1:
        rest = free - {t}
        for z, r in _pointer_choices(req, h[t][0], rest | {u}):
            yield from _match_ls(z, u, h, rest, used | {t}, r, k - 1)


def _match_dll(t, u, v, w, h, free, used, req, k):
    if k == 0:
        return
    if t == u and v == w:
        yield used, req
    if t in free and len(h[t]) >= 2:
        r0 = _require(req, h[t][1], w)
        if r0 is None:
            return
        rest = free - {t}
        for z, r in _pointer_choices(r0, h[t][0], rest | {u}):
            yield from _match_dll(z, u, v, t, h, rest, used | {t}, r, k - 1)


def _match_star(atoms, s, h, free, req, unfold) -> Iterator[dict]:
    """Requirements under which the heap ``h`` restricted to ``free`` satisfies ``atoms``."""
    if not atoms:
        if not free:
            yield req
        return
    # match atoms with a fixed footprint first; order is irrelevant for *
    k = next((i for i, a in enumerate(atoms) if isinstance(a, (PointsTo, Arr, Emp))), 0)
    first, rest = atoms[k], atoms[:k] + atoms[k + 1:]
    for used, r in _match_atom(first, s, h, free, req, unfold):
        yield from _match_star(rest, s, h, free - used, r, unfold)


def _spatial_match(atoms, s, h: dict, unfold: int) -> Iterator[dict]:
    return _match_star(tuple(atoms), s, h, frozenset(h), {}, unfold)


# ------------------------------------------------------------ satisfies


def satisfies(s: Store, h: HeapModel | Mapping, f, bounds: Bounds | None = None,
              method: str = "match") -> bool:
    """``s, h |= f`` for a symbolic heap or a pure formula.

    ``method`` selects the evaluator for ``*``: ``"match"`` (footprint
    matching), ``"naive"`` (all splits, left atom first) or ``"naive-right"``
    (all splits, right atom first).
    """
    heap = h.as_dict() if isinstance(h, HeapModel) else dict(h)
    max_value = bounds.max_value if bounds else None
    unfold = bounds.unfold if bounds else len(heap) + 1
    if not isinstance(f, SymbolicHeap):
        return eval_pure(f, s, max_value)
    if f.bound_vars:
        if not max_value:
            raise UnboundedQuantifier("existential symbolic heap needs a value bound")
        inner = dict(s)
        for vals in itertools.product(range(max_value + 1), repeat=len(f.bound_vars)):
            inner.update(zip(f.bound_vars, vals))
            if _qf_satisfies(inner, heap, f, max_value, unfold, method):
                return True
        return False
    return _qf_satisfies(s, heap, f, max_value, unfold, method)


def _qf_satisfies(s, heap, f, max_value, unfold, method) -> bool:
    if not eval_pure(f.pure, s, max_value):
        return False
    if method == "match":
        return any(True for _ in _spatial_match(f.spatial, s, heap, unfold))
    return _star_naive(tuple(f.spatial), s, heap, unfold, right_first=(method == "naive-right"))


# ---------------------------------------------------- model enumeration


def _stores(names, max_value) -> Iterator[dict]:
    names = sorted(names)
    for vals in itertools.product(range(max_value + 1), repeat=len(names)):
        yield dict(zip(names, vals))


def _atom_args(a) -> tuple:
    if isinstance(a, PointsTo):
        return (a.addr,) + tuple(a.values)
    if isinstance(a, Arr):
        return (a.lo, a.hi)
    if isinstance(a, Ls):
        return (a.start, a.end)
    if isinstance(a, Dll):
        return (a.a, a.b, a.c, a.d)
    return ()


def _terms(x) -> Iterator:
    if isinstance(x, Entailment):
        for f in (x.antecedent,) + tuple(x.succedents):
            yield from _terms(f)
    elif isinstance(x, SymbolicHeap):
        for a in x.spatial:
            for t in _atom_args(a):
                yield from _subterms(t)


def _subterms(t) -> Iterator:
    yield t
    if isinstance(t, Sum):
        yield from _subterms(t.left)
        yield from _subterms(t.right)


class _Unbound(Exception):
    pass


class _ShapeSearch:
    """Constructive enumeration of antecedent heaps with unknown contents as slots.

    ``local`` variables occur only bare in the antecedent's spatial part; they
    are bound while building the heap instead of being enumerated up front,
    and those occurring once in a content position become slots.  With
    ``symmetric`` set (no arrays anywhere), values outside the relevant set
    are interchangeable and only the least of them is tried.
    """

    def __init__(self, b: Bounds, pt: int, local=(), slot_local=(), symmetric=False, relevant=()):
        self.b, self.pt = b, pt
        self.local = frozenset(local)
        self.slot_local = frozenset(slot_local)
        self.symmetric = symmetric
        self.relevant = frozenset(relevant)

    def ev(self, t, s):
        if isinstance(t, Var):
            if t.name not in s:
                raise _Unbound(t.name)
            return s[t.name]
        if isinstance(t, Const):
            return t.n
        return self.ev(t.left, s) + self.ev(t.right, s)

    def _known(self, s, heap) -> set:
        out = set(self.relevant) | set(heap)
        out.update(v for v in s.values() if not isinstance(v, Slot))
        for cell in heap.values():
            out.update(c for c in cell if not isinstance(c, Slot))
        return out

    def candidates(self, s, heap, address: bool, exclude=()) -> list:
        lo = 1 if address else 0
        allowed = [x for x in range(lo, self.b.max_value + 1)
                   if not (address and (x in heap or x in exclude))]
        if not self.symmetric:
            return allowed
        known = self._known(s, heap)
        out = [x for x in allowed if x in known]
        fresh = next((x for x in allowed if x not in known), None)
        return out + ([fresh] if fresh is not None else [])

    def run(self, atoms, s, heap=None) -> Iterator[tuple[dict, dict]]:
        yield from self._gen(tuple(atoms), dict(s), dict(heap or {}))

    def _gen(self, atoms, s, heap):
        if not atoms:
            yield s, heap
            return
        a, rest = atoms[0], atoms[1:]
        args = _atom_args(a)
        for i, t in enumerate(args):
            if isinstance(t, Var) and t.name not in s and t.name not in self.slot_local:
                address = i == 0 and not isinstance(a, Arr)
                for val in self.candidates(s, heap, address):
                    yield from self._gen(atoms, {**s, t.name: val}, heap)
                return
        b = self.b
        ev = self.ev

        def usable(loc):
            return 1 <= loc <= b.max_value and loc not in heap

        if isinstance(a, Emp):
            yield from self._gen(rest, s, heap)
        elif isinstance(a, PointsTo):
            loc = ev(a.addr, s)
            if usable(loc) and len(heap) < b.max_heap_size:
                cell, s2 = [], s
                for j, v in enumerate(a.values):
                    if isinstance(v, Var) and v.name in self.slot_local:
                        s2 = {**s2, v.name: Slot(loc, j)}
                        cell.append(Slot(loc, j))
                    else:
                        cell.append(ev(v, s))
                yield from self._gen(rest, s2, {**heap, loc: tuple(cell)})
        elif isinstance(a, Arr):
            lo, hi = ev(a.lo, s), ev(a.hi, s)
            if lo <= hi and len(heap) + hi - lo + 1 <= b.max_heap_size and all(usable(l) for l in range(lo, hi + 1)):
                new = dict(heap)
                for l in range(lo, hi + 1):
                    new[l] = tuple(Slot(l, j) for j in range(self.pt))
                yield from self._gen(rest, s, new)
        elif isinstance(a, Ls):
            u = ev(a.end, s)

            def walk(t, h, k):
                if k == 0:
                    return
                if t == u:
                    yield from self._gen(rest, s, h)
                if 1 <= t <= b.max_value and t not in h and len(h) < b.max_heap_size:
                    h1 = {**h, t: (None,)}
                    for z in sorted({u} | set(self.candidates(s, h1, True))):
                        new = {**h, t: (z,) + tuple(Slot(t, j) for j in range(1, self.pt))}
                        yield from walk(z, new, k - 1)

            yield from walk(ev(a.start, s), heap, b.unfold)
        elif isinstance(a, Dll):
            u, v = ev(a.b, s), ev(a.c, s)

            def walk(t, w, h, k):
                if k == 0:
                    return
                if t == u and v == w:
                    yield from self._gen(rest, s, h)
                if 1 <= t <= b.max_value and t not in h and len(h) < b.max_heap_size:
                    h1 = {**h, t: (None, w)}
                    for z in sorted({u} | set(self.candidates(s, h1, True))):
                        new = {**h, t: (z, w) + tuple(Slot(t, j) for j in range(2, self.pt))}
                        yield from walk(z, t, new, k - 1)

            yield from walk(ev(a.a, s), ev(a.d, s), heap, b.unfold)
        else:
            raise TypeError(a)


def _fixed_first(spatial) -> tuple:
    # atoms with a fixed footprint fail fast, so place them before lists
    return tuple(sorted(spatial, key=lambda a: isinstance(a, (Ls, Dll))))


def _arity(*heaps) -> int:
    for f in heaps:
        for a in f.spatial:
            if isinstance(a, PointsTo):
                return len(a.values)
            if isinstance(a, (Ls, Dll)):
                return 2
    return 1


def _fill(heap: dict, values: Mapping) -> HeapModel:
    return HeapModel.of({l: tuple(values.get(c, c) if isinstance(c, Slot) else c for c in v)
                         for l, v in heap.items()})


def enumerate_models(phi: SymbolicHeap, b: Bounds, extra_vars=(), pt: int | None = None
                     ) -> Iterator[tuple[dict, HeapModel]]:
    """Every model of the QF heap ``phi`` within the bounds, in a fixed order.

    Store values and heap contents range over ``0..max_value``; locations over
    ``1..max_value``.  ``extra_vars`` adds variables to the store.
    """
    if phi.bound_vars:
        raise ValueError("enumerate_models expects a quantifier-free heap")
    pt = pt or _arity(phi)
    names = free_vars(phi) | set(extra_vars)
    search = _ShapeSearch(b, pt)
    for s in _stores(names, b.max_value):
        if not eval_pure(phi.pure, s, b.max_value):
            continue
        for _, shape in search.run(_fixed_first(phi.spatial), s):
            slots = [c for v in shape.values() for c in v if isinstance(c, Slot)]
            for vals in itertools.product(range(b.max_value + 1), repeat=len(slots)):
                yield dict(s), _fill(shape, dict(zip(slots, vals)))


def _minterms(succ: SymbolicHeap, s, heap, b: Bounds) -> Iterator[dict]:
    """Slot requirements under which ``succ`` holds; ``{}`` means it always holds."""
    if succ.bound_vars:
        inner = dict(s)
        for vals in itertools.product(range(b.max_value + 1), repeat=len(succ.bound_vars)):
            inner.update(zip(succ.bound_vars, vals))
            if eval_pure(succ.pure, inner, b.max_value):
                yield from _spatial_match(succ.spatial, inner, heap, b.unfold)
        return
    if eval_pure(succ.pure, s, b.max_value):
        yield from _spatial_match(succ.spatial, s, heap, b.unfold)


def _avoid(slots, minterms, max_value) -> dict | None:
    """An assignment of values in ``0..max_value`` to slots containing no minterm."""
    if any(not m for m in minterms):
        return None
    candidates = {}
    for sl in slots:
        mentioned = sorted({m[sl] for m in minterms if sl in m and m[sl] <= max_value})
        other = next((v for v in range(max_value + 1) if v not in mentioned), None)
        candidates[sl] = ([other] if other is not None else []) + mentioned

    def dfs(i, chosen, live):
        if not live:
            out = dict(chosen)
            for sl in slots[i:]:
                out[sl] = candidates[sl][0] if candidates[sl] else 0
            return out
        if i == len(slots):
            return None
        sl = slots[i]
        for v in candidates[sl]:
            still = [m for m in live if m.get(sl, v) == v]
            # a surviving minterm whose slots are all chosen is satisfied
            if any(all(k in chosen or k == sl for k in m) for m in still):
                continue
            chosen[sl] = v
            got = dfs(i + 1, chosen, still)
            if got is not None:
                return got
            del chosen[sl]
        return None

    return dfs(0, {}, list(minterms))


def _locals(e: Entailment) -> tuple[set, set]:
    """Antecedent variables that can be bound lazily, and those that are plain slots."""
    ante = e.antecedent
    outside = free_vars(ante.pure) | free_vars(tuple(e.succedents))
    counts: dict[str, int] = {}
    content_only: dict[str, bool] = {}
    nested = set()
    for a in ante.spatial:
        for i, t in enumerate(_atom_args(a)):
            if isinstance(t, Var):
                counts[t.name] = counts.get(t.name, 0) + 1
                content = isinstance(a, PointsTo) and i > 0
                content_only[t.name] = content_only.get(t.name, True) and content
            else:
                nested |= free_vars(t)
            if isinstance(a, Arr):
                nested |= free_vars(t)
    local = {v for v in counts if v not in outside and v not in nested}
    slot_local = {v for v in local if counts[v] == 1 and content_only[v]}
    return local, slot_local


def find_countermodel(e: Entailment, b: Bounds, pt: int | None = None, reduce: bool = True
                      ) -> tuple[dict, HeapModel] | None:
    """A model of the antecedent within the bounds falsifying every succedent.

    With ``reduce`` off every store and location is tried; the reductions
    only skip candidates that are equivalent to one already tried.
    """
    if e.antecedent.bound_vars:
        raise ValueError("find_countermodel expects a quantifier-free antecedent")
    pt = pt or _arity(e.antecedent, *e.succedents)
    ante = e.antecedent
    local, slot_local = _locals(e) if reduce else (set(), set())
    symmetric = reduce and not any(isinstance(a, Arr) for f in (ante,) + tuple(e.succedents) for a in f.spatial)
    names = free_vars(e) - local
    for s0 in _stores(names, b.max_value):
        if not eval_pure(ante.pure, s0, b.max_value):
            continue
        relevant = {0} | {eval_term(t, s0) for t in _terms(e) if free_vars(t) <= s0.keys()}
        search = _ShapeSearch(b, pt, local, slot_local, symmetric, relevant)
        for s, shape in search.run(_fixed_first(ante.spatial), s0):
            minterms = []
            for succ in e.succedents:
                minterms.extend(_minterms(succ, s, shape, b))
                if any(not m for m in minterms):
                    break
            slots = sorted({c for v in shape.values() for c in v if isinstance(c, Slot)},
                           key=lambda c: (c.loc, c.field))
            values = _avoid(slots, minterms, b.max_value)
            if values is not None:
                store = {k: values.get(v, 0) if isinstance(v, Slot) else v for k, v in s.items()}
                return store, _fill(shape, values)
    return None


def holds_within(e: Entailment, b: Bounds, pt: int | None = None, reduce: bool = True) -> bool:
    return find_countermodel(e, b, pt, reduce) is None
