"""Presburger formulas over the naturals in a canonical linear form.

Atoms are ``lt = 0``, ``lt <= 0`` and ``d | lt`` for a linear term ``lt``.
The ``mk_*`` constructors normalise atoms (gcd reduction, sign convention,
constant folding), so structurally equal formulas are syntactically equal
more often and trivial atoms never survive.  Folding assumes every variable
denotes a natural number; Cooper elimination keeps that sound because the
eliminated variable always carries an explicit ``x >= 0`` conjunct.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Iterable, Mapping, Union

from .. import syntax as sx
from ..errors import MalformedDifference


@dataclass(frozen=True)
class LinearTerm:
    """``sum(c * x) + constant``; ``coeffs`` is a sorted tuple of (name, c) with c != 0."""

    coeffs: tuple = ()
    constant: int = 0

    @staticmethod
    def of(coeffs: Mapping[str, int] | None = None, constant: int = 0) -> "LinearTerm":
        items = tuple(sorted((k, v) for k, v in (coeffs or {}).items() if v))
        return LinearTerm(items, constant)

    @staticmethod
    def var(name: str, c: int = 1) -> "LinearTerm":
        return LinearTerm(((name, c),), 0) if c else LinearTerm((), 0)

    @staticmethod
    def const(n: int) -> "LinearTerm":
        return LinearTerm((), n)

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def coeff(self, x: str) -> int:
        for k, v in self.coeffs:
            if k == x:
                return v
        return 0

    @property
    def vars(self) -> frozenset:
        return frozenset(k for k, _ in self.coeffs)

    def is_const(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "LinearTerm") -> "LinearTerm":
        d = self.as_dict()
        for k, v in other.coeffs:
            d[k] = d.get(k, 0) + v
        return LinearTerm.of(d, self.constant + other.constant)

    def __neg__(self) -> "LinearTerm":
        return LinearTerm(tuple((k, -v) for k, v in self.coeffs), -self.constant)

    def __sub__(self, other: "LinearTerm") -> "LinearTerm":
        return self + (-other)

    def scale(self, k: int) -> "LinearTerm":
        if k == 0:
            return LinearTerm()
        return LinearTerm(tuple((n, v * k) for n, v in self.coeffs), self.constant * k)

    def without(self, x: str) -> "LinearTerm":
        return LinearTerm(tuple((k, v) for k, v in self.coeffs if k != x), self.constant)

    def plus_const(self, n: int) -> "LinearTerm":
        return LinearTerm(self.coeffs, self.constant + n)

    def substitute(self, x: str, t: "LinearTerm") -> "LinearTerm":
        c = self.coeff(x)
        if not c:
            return self
        return self.without(x) + t.scale(c)

    def evaluate(self, env: Mapping[str, int]) -> int:
        return self.constant + sum(v * env[k] for k, v in self.coeffs)

    def __str__(self) -> str:
        parts = []
        for k, v in self.coeffs:
            if v == 1:
                parts.append(f"+ {k}")
            elif v == -1:
                parts.append(f"- {k}")
            elif v < 0:
                parts.append(f"- {-v}*{k}")
            else:
                parts.append(f"+ {v}*{k}")
        if self.constant or not parts:
            parts.append(f"- {-self.constant}" if self.constant < 0 else f"+ {self.constant}")
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]


# ------------------------------------------------------------- formulas
#
# Hashes are computed once at construction; formulas are used heavily as
# dictionary keys by the memoising decision procedure.


class _Node:
    __slots__ = ()

    def __hash__(self):
        return self._h

    def _seal(self, *parts):
        object.__setattr__(self, "_h", hash((type(self).__name__,) + parts))


@dataclass(frozen=True, eq=True)
class TrueF(_Node):
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        self._seal()

    __hash__ = _Node.__hash__

    def __str__(self):
        return "true"


@dataclass(frozen=True, eq=True)
class FalseF(_Node):
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        self._seal()

    __hash__ = _Node.__hash__

    def __str__(self):
        return "false"


@dataclass(frozen=True, eq=True)
class Eq(_Node):
    lt: LinearTerm
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        self._seal(self.lt)

    __hash__ = _Node.__hash__

    def __str__(self):
        return f"{self.lt} = 0"


@dataclass(frozen=True, eq=True)
class Le(_Node):
    lt: LinearTerm
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        self._seal(self.lt)

    __hash__ = _Node.__hash__

    def __str__(self):
        return f"{self.lt} <= 0"


@dataclass(frozen=True, eq=True)
class Dvd(_Node):
    d: int
    lt: LinearTerm
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError("divisibility modulus must be positive")
        self._seal(self.d, self.lt)

    __hash__ = _Node.__hash__

    def __str__(self):
        return f"{self.d} | {self.lt}"


@dataclass(frozen=True, eq=True)
class Not(_Node):
    arg: "PbFormula"
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        self._seal(self.arg)

    __hash__ = _Node.__hash__

    def __str__(self):
        return f"~({self.arg})"


@dataclass(frozen=True, eq=True)
class And(_Node):
    args: tuple
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        self._seal(self.args)

    __hash__ = _Node.__hash__

    def __str__(self):
        return "(" + " & ".join(map(str, self.args)) + ")" if self.args else "true"


@dataclass(frozen=True, eq=True)
class Or(_Node):
    args: tuple
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        self._seal(self.args)

    __hash__ = _Node.__hash__

    def __str__(self):
        return "(" + " | ".join(map(str, self.args)) + ")" if self.args else "false"


@dataclass(frozen=True, eq=True)
class Exists(_Node):
    var: str
    body: "PbFormula"
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        self._seal(self.var, self.body)

    __hash__ = _Node.__hash__

    def __str__(self):
        return f"(E {self.var}. {self.body})"


@dataclass(frozen=True, eq=True)
class Forall(_Node):
    var: str
    body: "PbFormula"
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        self._seal(self.var, self.body)

    __hash__ = _Node.__hash__

    def __str__(self):
        return f"(A {self.var}. {self.body})"


PbFormula = Union[TrueF, FalseF, Eq, Le, Dvd, Not, And, Or, Exists, Forall]
TRUE = TrueF()
FALSE = FalseF()
ATOMS = (Eq, Le, Dvd)


# ------------------------------------------------------ smart builders


def _content(lt: LinearTerm) -> int:
    g = 0
    for _, v in lt.coeffs:
        g = gcd(g, v)
    return g


def mk_le(lt: LinearTerm) -> PbFormula:
    if lt.is_const():
        return TRUE if lt.constant <= 0 else FALSE
    # every variable denotes a natural, so sign-definite atoms fold
    if lt.constant <= 0 and all(v < 0 for _, v in lt.coeffs):
        return TRUE
    if lt.constant > 0 and all(v > 0 for _, v in lt.coeffs):
        return FALSE
    g = _content(lt)
    if g > 1:
        lt = LinearTerm(tuple((k, v // g) for k, v in lt.coeffs), -((-lt.constant) // g))
    return Le(lt)


def mk_eq(lt: LinearTerm) -> PbFormula:
    if lt.is_const():
        return TRUE if lt.constant == 0 else FALSE
    if lt.constant > 0 and all(v > 0 for _, v in lt.coeffs):
        return FALSE
    if lt.constant < 0 and all(v < 0 for _, v in lt.coeffs):
        return FALSE
    g = _content(lt)
    if lt.constant % g:
        return FALSE
    if g > 1:
        lt = LinearTerm(tuple((k, v // g) for k, v in lt.coeffs), lt.constant // g)
    if lt.coeffs[0][1] < 0:
        lt = -lt
    return Eq(lt)


def mk_dvd(d: int, lt: LinearTerm) -> PbFormula:
    d = abs(d)
    if d == 1:
        return TRUE
    # symmetric residues keep unit coefficients at +-1, which Cooper relies on
    coeffs = tuple((k, r) for k, r in ((k, _sym(v, d)) for k, v in lt.coeffs) if r)
    c = lt.constant % d
    if not coeffs:
        return TRUE if c == 0 else FALSE
    g = d
    for _, v in coeffs:
        g = gcd(g, v)
    if c % g:
        return FALSE
    if g > 1:
        d //= g
        coeffs = tuple((k, _sym(v // g, d)) for k, v in coeffs)
        c //= g
        if d == 1:
            return TRUE
    if coeffs[0][1] < 0:
        coeffs = tuple((k, _sym(-v, d)) for k, v in coeffs)
        c = -c % d
    return Dvd(d, LinearTerm(coeffs, c))


def _sym(v: int, d: int) -> int:
    r = v % d
    return r - d if r > d // 2 else r


def mk_not(f: PbFormula) -> PbFormula:
    """Negation pushed through connectives; the result is in NNF if ``f`` is."""
    if isinstance(f, TrueF):
        return FALSE
    if isinstance(f, FalseF):
        return TRUE
    if isinstance(f, Le):
        return mk_le(-f.lt + LinearTerm.const(1))
    if isinstance(f, (Eq, Dvd)):
        return Not(f)
    if isinstance(f, Not):
        return f.arg
    if isinstance(f, And):
        return mk_or(mk_not(a) for a in f.args)
    if isinstance(f, Or):
        return mk_and(mk_not(a) for a in f.args)
    if isinstance(f, Exists):
        return Forall(f.var, mk_not(f.body))
    if isinstance(f, Forall):
        return Exists(f.var, mk_not(f.body))
    raise TypeError(f)


def mk_and(args: Iterable[PbFormula]) -> PbFormula:
    out: list = []
    seen = set()
    for a in args:
        if isinstance(a, TrueF):
            continue
        if isinstance(a, FalseF):
            return FALSE
        for b in a.args if isinstance(a, And) else (a,):
            if b not in seen:
                seen.add(b)
                out.append(b)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def mk_or(args: Iterable[PbFormula]) -> PbFormula:
    out: list = []
    seen = set()
    for a in args:
        if isinstance(a, FalseF):
            continue
        if isinstance(a, TrueF):
            return TRUE
        for b in a.args if isinstance(a, Or) else (a,):
            if b not in seen:
                seen.add(b)
                out.append(b)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def mk_implies(a: PbFormula, b: PbFormula) -> PbFormula:
    return mk_or((mk_not(a), b))


def mk_iff(a: PbFormula, b: PbFormula) -> PbFormula:
    return mk_and((mk_implies(a, b), mk_implies(b, a)))


def mk_exists(xs: Iterable[str], body: PbFormula) -> PbFormula:
    for x in reversed(list(xs)):
        if x in free_vars(body):
            body = Exists(x, body)
    return body


def mk_forall(xs: Iterable[str], body: PbFormula) -> PbFormula:
    for x in reversed(list(xs)):
        if x in free_vars(body):
            body = Forall(x, body)
    return body


def nnf(f: PbFormula) -> PbFormula:
    """Negation normal form, re-normalising atoms on the way."""
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Eq):
        return mk_eq(f.lt)
    if isinstance(f, Le):
        return mk_le(f.lt)
    if isinstance(f, Dvd):
        return mk_dvd(f.d, f.lt)
    if isinstance(f, Not):
        return mk_not(nnf(f.arg))
    if isinstance(f, And):
        return mk_and(nnf(a) for a in f.args)
    if isinstance(f, Or):
        return mk_or(nnf(a) for a in f.args)
    if isinstance(f, Exists):
        return Exists(f.var, nnf(f.body))
    if isinstance(f, Forall):
        return Forall(f.var, nnf(f.body))
    raise TypeError(f)


# ------------------------------------------------------------- queries


def free_vars(f: PbFormula) -> frozenset:
    if isinstance(f, (TrueF, FalseF)):
        return frozenset()
    if isinstance(f, (Eq, Le, Dvd)):
        return f.lt.vars
    if isinstance(f, Not):
        return free_vars(f.arg)
    if isinstance(f, (And, Or)):
        out: frozenset = frozenset()
        for a in f.args:
            out = out | free_vars(a)
        return out
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - {f.var}
    raise TypeError(f)


def is_qf(f: PbFormula) -> bool:
    if isinstance(f, (Exists, Forall)):
        return False
    if isinstance(f, Not):
        return is_qf(f.arg)
    if isinstance(f, (And, Or)):
        return all(map(is_qf, f.args))
    return True


def size(f: PbFormula) -> int:
    if isinstance(f, Not):
        return 1 + size(f.arg)
    if isinstance(f, (And, Or)):
        return 1 + sum(map(size, f.args))
    if isinstance(f, (Exists, Forall)):
        return 1 + size(f.body)
    return 1


def substitute(f: PbFormula, x: str, t: LinearTerm) -> PbFormula:
    """Replace the free variable ``x`` by ``t`` (``t`` must not mention bound names)."""
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Eq):
        return mk_eq(f.lt.substitute(x, t))
    if isinstance(f, Le):
        return mk_le(f.lt.substitute(x, t))
    if isinstance(f, Dvd):
        return mk_dvd(f.d, f.lt.substitute(x, t))
    if isinstance(f, Not):
        return mk_not(substitute(f.arg, x, t))
    if isinstance(f, And):
        return mk_and(substitute(a, x, t) for a in f.args)
    if isinstance(f, Or):
        return mk_or(substitute(a, x, t) for a in f.args)
    if isinstance(f, (Exists, Forall)):
        if f.var == x:
            return f
        if f.var in t.vars:
            raise ValueError(f"substitution would capture {f.var}")
        return type(f)(f.var, substitute(f.body, x, t))
    raise TypeError(f)


def evaluate(f: PbFormula, env: Mapping[str, int], bound: int | None = None) -> bool:
    """Truth of ``f`` under ``env``; quantifiers range over ``0..bound``."""
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Eq):
        return f.lt.evaluate(env) == 0
    if isinstance(f, Le):
        return f.lt.evaluate(env) <= 0
    if isinstance(f, Dvd):
        return f.lt.evaluate(env) % f.d == 0
    if isinstance(f, Not):
        return not evaluate(f.arg, env, bound)
    if isinstance(f, And):
        return all(evaluate(a, env, bound) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, env, bound) for a in f.args)
    if isinstance(f, (Exists, Forall)):
        if bound is None:
            raise ValueError("bounded evaluation of a quantifier needs a bound")
        inner = dict(env)
        want = isinstance(f, Exists)
        for v in range(bound + 1):
            inner[f.var] = v
            if evaluate(f.body, inner, bound) == want:
                return want
        return not want
    raise TypeError(f)


# ------------------------------------------------- from surface syntax


def linear_term(t: sx.Term) -> LinearTerm:
    if isinstance(t, sx.Var):
        return LinearTerm.var(t.name)
    if isinstance(t, sx.Const):
        return LinearTerm.const(t.n)
    if isinstance(t, sx.Sum):
        return linear_term(t.left) + linear_term(t.right)
    if isinstance(t, sx.Diff):
        raise MalformedDifference(f"difference term {t} reached the arithmetic layer")
    raise TypeError(f"not a term: {t!r}")


def from_pure(p: sx.PureFormula) -> PbFormula:
    """Canonical Presburger form of a pure formula; abbreviations are expanded."""
    if isinstance(p, sx.TrueP):
        return TRUE
    if isinstance(p, sx.FalseP):
        return FALSE
    if isinstance(p, sx.Eq):
        return mk_eq(linear_term(p.left) - linear_term(p.right))
    if isinstance(p, sx.Neq):
        return mk_not(mk_eq(linear_term(p.left) - linear_term(p.right)))
    if isinstance(p, sx.Le):
        return mk_le(linear_term(p.left) - linear_term(p.right))
    if isinstance(p, sx.Lt):
        return mk_le(linear_term(p.left) - linear_term(p.right) + LinearTerm.const(1))
    if isinstance(p, sx.And):
        return mk_and(from_pure(a) for a in p.args)
    if isinstance(p, sx.Or):
        return mk_or(from_pure(a) for a in p.args)
    if isinstance(p, sx.Not):
        return mk_not(from_pure(p.arg))
    if isinstance(p, sx.Exists):
        return Exists(p.var, from_pure(p.body))
    raise TypeError(f"not a pure formula: {p!r}")
