"""Random Presburger sentences whose truth bounded enumeration decides exactly."""
from __future__ import annotations

import math
import random

from slentail.presburger import (
    And, Eq, Le, Not, Or, Exists, Forall, LinearTerm, mk_and, mk_eq, mk_implies, mk_le, mk_not,
    mk_or,
)
from slentail.presburger.formula import Dvd


def random_atom(rng: random.Random, names):
    coeffs = {x: rng.randint(-3, 3) for x in names if rng.random() < 0.7}
    lt = LinearTerm.of(coeffs, rng.randint(0, 5) * rng.choice((1, -1)))
    kind = rng.random()
    if kind < 0.45:
        return mk_le(lt)
    if kind < 0.8:
        return mk_eq(lt)
    if kind < 0.9:
        return mk_not(mk_eq(lt))
    d = rng.randint(2, 3)
    return Dvd(d, lt) if not lt.is_const() else mk_le(lt)


def random_qf(rng: random.Random, names, depth: int = 2):
    if depth == 0 or rng.random() < 0.3:
        return random_atom(rng, names)
    parts = [random_qf(rng, names, depth - 1) for _ in range(rng.randint(2, 3))]
    return mk_and(parts) if rng.random() < 0.5 else mk_or(parts)


def _atoms(f):
    if isinstance(f, (And, Or)):
        for a in f.args:
            yield from _atoms(a)
    elif isinstance(f, Not):
        yield from _atoms(f.arg)
    elif isinstance(f, (Eq, Le, Dvd)):
        yield f


def period_bound(f) -> int:
    """lcm of the divisors, times the largest coefficient, plus the largest constant."""
    divisor, coeff, const = 1, 1, 0
    for a in _atoms(f):
        if isinstance(a, Dvd):
            divisor = math.lcm(divisor, a.d)
        coeff = max([coeff] + [abs(c) for _, c in a.lt.coeffs])
        const = max(const, abs(a.lt.constant))
    return divisor * coeff + const


def guard(names, f, bound: int, rng: random.Random):
    """Close ``f`` with quantifiers over ``names``, each guarded by ``x <= bound``.

    The guard makes evaluation with quantifiers ranging over ``0..bound``
    exact, even under quantifier alternation.
    """
    for x in reversed(names):
        g = mk_le(LinearTerm.of({x: 1}, -bound))
        if rng.random() < 0.5:
            f = Exists(x, mk_and((g, f)))
        else:
            f = Forall(x, mk_implies(g, f))
    return f


def random_sentence(rng: random.Random):
    """A closed formula with 1..3 quantifiers and its period bound."""
    names = ["x", "y", "z"][: rng.randint(1, 3)]
    body = random_qf(rng, names)
    bound = period_bound(body)
    return guard(names, body, bound, rng), bound
