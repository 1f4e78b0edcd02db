"""Cooper-style quantifier elimination over the naturals.

Each eliminated variable is relativised to ``x >= 0``.  That lower bound sits
at the top of the conjunction, so the "minus infinity" disjunct of Cooper's
method is always false and the B-set variant reduces to plain test points
(with -1 always among them); the A-set variant is used instead when it has
fewer points.

Closed sentences are decided without building the fully eliminated formula:
an existential block is explored depth first, one test point at a time, with
memoisation on the residual formulas.
"""
from __future__ import annotations

import threading
from functools import lru_cache
from math import gcd
from typing import Iterable, Iterator

from ..errors import ResourceExceeded
from .formula import (
    FALSE, TRUE, And, Dvd, Eq, Exists, FalseF, Forall, LinearTerm, Le, Not, Or,
    PbFormula, TrueF, free_vars, mk_and, mk_dvd, mk_eq, mk_le, mk_not, mk_or,
    nnf, size,
)

DEFAULT_NODE_BUDGET = 10**6

_local = threading.local()


def node_budget() -> int:
    return getattr(_local, "budget", DEFAULT_NODE_BUDGET)


class budget:
    """Context manager that sets the node budget for the current thread."""

    def __init__(self, nodes: int):
        self.nodes = nodes

    def __enter__(self):
        self._old = node_budget()
        _local.budget = self.nodes
        return self

    def __exit__(self, *exc):
        _local.budget = self._old


def _check(f: PbFormula) -> PbFormula:
    n = size(f)
    if n > node_budget():
        raise ResourceExceeded(f"intermediate formula has {n} nodes (budget {node_budget()})")
    return f


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


# ------------------------------------------------------------ literals


def _literals(f: PbFormula) -> Iterator[PbFormula]:
    """Atoms of an NNF formula together with their ``Not`` wrapper, if any."""
    if isinstance(f, (And, Or)):
        for a in f.args:
            yield from _literals(a)
    elif isinstance(f, (Eq, Le, Dvd, Not)):
        yield f


def _atom(lit):
    return lit.arg if isinstance(lit, Not) else lit


def _map_literals(f: PbFormula, fn) -> PbFormula:
    if isinstance(f, And):
        return mk_and(_map_literals(a, fn) for a in f.args)
    if isinstance(f, Or):
        return mk_or(_map_literals(a, fn) for a in f.args)
    if isinstance(f, (Eq, Le, Dvd)):
        return fn(f)
    if isinstance(f, Not):
        return mk_not(fn(f.arg))
    return f


def _rebuild(atom, lt: LinearTerm, d: int | None = None) -> PbFormula:
    if isinstance(atom, Eq):
        return mk_eq(lt)
    if isinstance(atom, Le):
        return mk_le(lt)
    return mk_dvd(d if d is not None else atom.d, lt)


def _subst(f: PbFormula, x: str, t: LinearTerm) -> PbFormula:
    return _map_literals(f, lambda a: _rebuild(a, a.lt.substitute(x, t)) if a.lt.coeff(x) else a)


# --------------------------------------------------------- elimination


def _equality_instance(x: str, conjuncts: tuple) -> PbFormula | None:
    """Eliminate ``x`` from a conjunction that contains ``a*x + r = 0``."""
    best = None
    for c in conjuncts:
        if isinstance(c, Eq) and c.lt.coeff(x):
            if best is None or abs(c.lt.coeff(x)) < abs(best.lt.coeff(x)):
                best = c
    if best is None:
        return None
    lt = best.lt if best.lt.coeff(x) > 0 else -best.lt
    a = lt.coeff(x)
    r = lt.without(x)
    minus_r = -r

    def scaled(atom):
        c = atom.lt.coeff(x)
        if not c:
            return atom
        new = atom.lt.scale(a).without(x) + minus_r.scale(c)
        return _rebuild(atom, new, atom.d * a if isinstance(atom, Dvd) else None)

    body = _map_literals(mk_and(conjuncts), scaled)
    # x = -r/a must be a natural number
    return mk_and((body, mk_dvd(a, r), mk_le(r)))


def _normalise_unit(x: str, f: PbFormula) -> tuple[PbFormula, int]:
    """Scale every literal so ``x`` has coefficient +-1; returns (formula, delta)."""
    delta = 1
    for lit in _literals(f):
        c = _atom(lit).lt.coeff(x)
        if c:
            delta = _lcm(delta, abs(c))
    if delta == 1:
        return f, 1

    def unit(atom):
        c = atom.lt.coeff(x)
        if not c:
            return atom
        k = delta // abs(c)
        lt = atom.lt.scale(k).without(x) + LinearTerm.var(x, 1 if c > 0 else -1)
        return _rebuild(atom, lt, atom.d * k if isinstance(atom, Dvd) else None)

    return mk_and((_map_literals(f, unit), mk_dvd(delta, LinearTerm.var(x)))), delta


def _test_points(x: str, f: PbFormula):
    """Cooper data for a unit-coefficient formula: (B points, A points, D)."""
    lower, upper, mod = [], [], 1
    for lit in _literals(f):
        atom = _atom(lit)
        c = atom.lt.coeff(x)
        if not c:
            continue
        r = atom.lt.without(x)
        if isinstance(atom, Dvd):
            mod = _lcm(mod, atom.d)
        elif isinstance(atom, Le):
            if isinstance(lit, Not):
                raise AssertionError("negated inequality in NNF")
            if c < 0:  # x >= r
                lower.append(r.plus_const(-1))
            else:  # x <= -r
                upper.append((-r).plus_const(1))
        else:
            e = r.scale(-c)
            if isinstance(lit, Not):
                lower.append(e)
                upper.append(e)
            else:
                lower.append(e.plus_const(-1))
                upper.append(e.plus_const(1))
    return list(dict.fromkeys(lower)), list(dict.fromkeys(upper)), mod


def _plus_infinity(x: str, f: PbFormula) -> PbFormula:
    def at_inf(atom):
        c = atom.lt.coeff(x)
        if not c or isinstance(atom, Dvd):
            return atom
        if isinstance(atom, Eq):
            return FALSE
        return TRUE if c < 0 else FALSE

    return _map_literals(f, at_inf)


def cooper_disjuncts(x: str, f: PbFormula) -> Iterator[PbFormula]:
    """x-free formulas whose disjunction is equivalent to ``Ex x >= 0 . f``.

    ``f`` must be quantifier free and in NNF.  The disjuncts are produced
    lazily so callers may stop at the first true one.
    """
    if x not in free_vars(f):
        yield f
        return
    if isinstance(f, Or):
        for a in f.args:
            yield from cooper_disjuncts(x, a)
        return
    conjuncts = f.args if isinstance(f, And) else (f,)
    outside = tuple(c for c in conjuncts if x not in free_vars(c))
    inside = tuple(c for c in conjuncts if x in free_vars(c))
    if outside:
        rest = mk_and(outside)
        if isinstance(rest, FalseF):
            return
        for d in cooper_disjuncts(x, mk_and(inside)):
            yield mk_and((rest, d))
        return
    eq = _equality_instance(x, conjuncts)
    if eq is not None:
        yield eq
        return
    g, _ = _normalise_unit(x, f)
    if isinstance(g, FalseF):
        return
    lower, upper, mod = _test_points(x, g)
    # x >= 0 contributes the lower test point -1.  The literal itself is not
    # kept in g (it would fold to true), so every test point re-asserts it.
    lower = list(dict.fromkeys([LinearTerm.const(-1)] + lower))
    if len(lower) <= len(upper) + 1:
        for b in lower:
            for j in range(1, mod + 1):
                yield _at(g, x, b.plus_const(j))
    else:
        inf = _plus_infinity(x, g)
        for j in range(1, mod + 1):
            yield _subst(inf, x, LinearTerm.const(-j))
        for a in upper:
            for j in range(1, mod + 1):
                yield _at(g, x, a.plus_const(-j))


def _at(g: PbFormula, x: str, t: LinearTerm) -> PbFormula:
    """``g[x := t]`` together with ``t >= 0``."""
    nonneg = mk_le(-t)
    if isinstance(nonneg, FalseF):
        return FALSE
    return mk_and((nonneg, _subst(g, x, t)))


def eliminate(x: str, f: PbFormula) -> PbFormula:
    """Quantifier-free equivalent of ``Ex x . f`` for quantifier-free NNF ``f``."""
    out = []
    total = 0
    for d in cooper_disjuncts(x, f):
        if isinstance(d, TrueF):
            return TRUE
        if isinstance(d, FalseF):
            continue
        total += size(d)
        if total > node_budget():
            raise ResourceExceeded(f"eliminating {x} exceeded the node budget {node_budget()}")
        out.append(d)
    return _check(mk_or(out))


def qe(f: PbFormula) -> PbFormula:
    """Equivalent quantifier-free formula (all variables range over naturals)."""
    return _qe(nnf(f))


def _qe(f: PbFormula) -> PbFormula:
    if isinstance(f, And):
        return mk_and(_qe(a) for a in f.args)
    if isinstance(f, Or):
        return mk_or(_qe(a) for a in f.args)
    if isinstance(f, Exists):
        return eliminate(f.var, _qe(f.body))
    if isinstance(f, Forall):
        return mk_not(eliminate(f.var, mk_not(_qe(f.body))))
    return f


# ------------------------------------------------------------ decision


def decide(f: PbFormula) -> bool:
    """Truth of a closed formula over the naturals."""
    fv = free_vars(f)
    if fv:
        raise ValueError(f"decide needs a closed formula; free: {sorted(fv)}")
    return _decide(nnf(f))


def _decide(f: PbFormula) -> bool:
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, And):
        return all(_decide(a) for a in f.args)
    if isinstance(f, Or):
        return any(_decide(a) for a in f.args)
    if isinstance(f, Exists):
        xs, body = _block(f, Exists)
        return satisfiable(_qe(body), xs)
    if isinstance(f, Forall):
        xs, body = _block(f, Forall)
        return not satisfiable(mk_not(_qe(body)), xs)
    # a closed atom
    from .formula import evaluate
    return evaluate(f, {})


def _block(f, kind):
    xs = []
    while isinstance(f, kind):
        xs.append(f.var)
        f = f.body
    return xs, f


def satisfiable(f: PbFormula, xs: Iterable[str] | None = None) -> bool:
    """Whether the quantifier-free NNF ``f`` has a model over the naturals.

    ``xs`` is accepted for symmetry with an existential block; every free
    variable of ``f`` is treated as existentially quantified.
    """
    return _sat(f)


@lru_cache(maxsize=1 << 16)
def _sat(f: PbFormula) -> bool:
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Or):
        return any(_sat(a) for a in f.args)
    fv = free_vars(f)
    if not fv:
        from .formula import evaluate
        return evaluate(f, {})
    comps = _components(f)
    if len(comps) > 1:
        # cheapest components first, so an unsatisfiable one is found early
        return all(_sat(c) for c in sorted(comps, key=size))
    x = _pick_variable(f, fv)
    return any(_sat(d) for d in cooper_disjuncts(x, f))


def _components(f: PbFormula) -> list:
    """Split a conjunction into groups of conjuncts that share no variable."""
    if not isinstance(f, And):
        return [f]
    groups: list[tuple[set, list]] = []
    for c in f.args:
        vs = set(free_vars(c))
        merged = [g for g in groups if g[0] & vs]
        rest = [g for g in groups if not (g[0] & vs)]
        new_vs, new_cs = set(vs), [c]
        for g in merged:
            new_vs |= g[0]
            new_cs = g[1] + new_cs
        groups = rest + [(new_vs, new_cs)]
    return [mk_and(cs) for _, cs in groups]


def _pick_variable(f: PbFormula, fv) -> str:
    """Prefer a variable fixed by an equality, then the fewest test points."""
    conjuncts = f.args if isinstance(f, And) else (f,)
    for c in conjuncts:
        if isinstance(c, Eq):
            return min(c.lt.vars)
    best, best_cost = None, None
    for x in sorted(fv):
        lower = upper = 0
        mod = 1
        delta = 1
        for lit in _literals(f):
            atom = _atom(lit)
            c = atom.lt.coeff(x)
            if not c:
                continue
            delta = _lcm(delta, abs(c))
            if isinstance(atom, Dvd):
                mod = _lcm(mod, atom.d)
            elif isinstance(atom, Le) and c < 0:
                lower += 1
            elif isinstance(atom, Le):
                upper += 1
            else:
                lower += 1
                upper += 1
        cost = (min(lower + 1, upper + 1) * _lcm(mod, delta), x)
        if best_cost is None or cost < best_cost:
            best, best_cost = x, cost
    return best


def clear_caches() -> None:
    _sat.cache_clear()
