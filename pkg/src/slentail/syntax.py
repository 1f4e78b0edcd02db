"""Abstract syntax for symbolic heaps with arrays and lists.

Terms are naturals built from variables, constants and ``+``.  Pure formulas
are Presburger formulas over those terms; spatial formulas are ordered
sequences of atoms (order matters for the sorted-heap machinery, so ``*`` is
never treated as commutative here).

All nodes are immutable and hashable.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Union


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"constants are naturals, got {self.n}")

    def __str__(self) -> str:
        return str(self.n)


@dataclass(frozen=True)
class Sum:
    left: "Term"
    right: "Term"

    def __str__(self) -> str:
        return " + ".join(_paren_diff(t) for t in summands(self))


@dataclass(frozen=True)
class Diff:
    """Extended term ``left - right``.

    Only the SLA translator builds these; they are removed again by
    :func:`slentail.sla.eliminate_differences` before anything reaches the
    arithmetic back end.  The parser never produces one.
    """

    left: "Term"
    right: "Term"

    def __str__(self) -> str:
        return f"({self.left} - {self.right})"


Term = Union[Var, Const, Sum, Diff]


def _paren_diff(t: Term) -> str:
    return str(t)


def summands(t: Term) -> list[Term]:
    if isinstance(t, Sum):
        return summands(t.left) + summands(t.right)
    return [t]


def plus(*terms: Term | int | str) -> Term:
    """Left-nested sum of the arguments; ints become constants, strs variables."""
    ts = [as_term(t) for t in terms]
    if not ts:
        return Const(0)
    out = ts[0]
    for t in ts[1:]:
        out = Sum(out, t)
    return out


def as_term(t: Term | int | str) -> Term:
    if isinstance(t, int):
        return Const(t)
    if isinstance(t, str):
        return Var(t)
    return t


# ------------------------------------------------------- pure formulas


@dataclass(frozen=True)
class TrueP:
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class FalseP:
    def __str__(self) -> str:
        return "false"


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class Neq:
    left: Term
    right: Term

    def __str__(self) -> str:
        return f"{self.left} != {self.right}"


@dataclass(frozen=True)
class Le:
    left: Term
    right: Term

    def __str__(self) -> str:
        return f"{self.left} <= {self.right}"


@dataclass(frozen=True)
class Lt:
    left: Term
    right: Term

    def __str__(self) -> str:
        return f"{self.left} < {self.right}"


@dataclass(frozen=True)
class And:
    args: tuple

    def __str__(self) -> str:
        if not self.args:
            return "true"
        return " & ".join(_wrap(a) for a in self.args)


@dataclass(frozen=True)
class Or:
    args: tuple

    def __str__(self) -> str:
        if not self.args:
            return "false"
        return "(" + " | ".join(_wrap(a) for a in self.args) + ")"


@dataclass(frozen=True)
class Not:
    arg: "PureFormula"

    def __str__(self) -> str:
        return f"~({self.arg})"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "PureFormula"

    def __str__(self) -> str:
        return f"(Ex {self.var} . {self.body})"


PureFormula = Union[TrueP, FalseP, Eq, Neq, Le, Lt, And, Or, Not, Exists]
PURE_ATOMS = (Eq, Neq, Le, Lt)
TRUE = TrueP()
FALSE = FalseP()


def _wrap(f: PureFormula) -> str:
    if isinstance(f, And) and len(f.args) > 1:
        return f"({f})"
    return str(f)


def conj(*parts: PureFormula) -> PureFormula:
    """Flattening conjunction; drops ``true``, keeps everything else in order."""
    out: list = []
    for p in parts:
        if isinstance(p, TrueP):
            continue
        if isinstance(p, And):
            out.extend(a for a in p.args if not isinstance(a, TrueP))
        else:
            out.append(p)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(*parts: PureFormula) -> PureFormula:
    out: list = []
    for p in parts:
        if isinstance(p, FalseP):
            continue
        if isinstance(p, Or):
            out.extend(p.args)
        else:
            out.append(p)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def implies(a: PureFormula, b: PureFormula) -> PureFormula:
    return disj(Not(a), b)


def conjuncts(f: PureFormula) -> tuple:
    if isinstance(f, TrueP):
        return ()
    if isinstance(f, And):
        return f.args
    return (f,)


# ------------------------------------------------------------- spatial


@dataclass(frozen=True)
class Emp:
    def __str__(self) -> str:
        return "Emp"


@dataclass(frozen=True)
class PointsTo:
    addr: Term
    values: tuple

    def __str__(self) -> str:
        return f"{self.addr} -> (" + ", ".join(map(str, self.values)) + ")"


@dataclass(frozen=True)
class Arr:
    lo: Term
    hi: Term

    def __str__(self) -> str:
        return f"Arr({self.lo}, {self.hi})"


@dataclass(frozen=True)
class Ls:
    start: Term
    end: Term

    def __str__(self) -> str:
        return f"ls({self.start}, {self.end})"


@dataclass(frozen=True)
class Dll:
    a: Term
    b: Term
    c: Term
    d: Term

    def __str__(self) -> str:
        return f"dll({self.a}, {self.b}, {self.c}, {self.d})"


SpatialAtom = Union[Emp, PointsTo, Arr, Ls, Dll]
LIST_ATOMS = (Ls, Dll)
EMP = Emp()


def render_spatial(atoms: tuple) -> str:
    return " * ".join(map(str, atoms)) if atoms else "Emp"


@dataclass(frozen=True)
class SymbolicHeap:
    """``Ex bound_vars . pure & spatial``; an empty ``spatial`` means ``Emp``."""

    bound_vars: tuple = ()
    pure: PureFormula = TRUE
    spatial: tuple = ()

    def __post_init__(self):
        if len(set(self.bound_vars)) != len(self.bound_vars):
            raise ValueError(f"repeated binder in {self.bound_vars}")
        # a lone Emp and the empty sequence are the same heap; keep one spelling
        if self.spatial == (EMP,):
            object.__setattr__(self, "spatial", ())

    @property
    def is_qf(self) -> bool:
        return not self.bound_vars

    def __str__(self) -> str:
        body = render_spatial(self.spatial)
        if not isinstance(self.pure, TrueP):
            body = f"{self.pure} & {body}"
        if self.bound_vars:
            body = "Ex " + " ".join(self.bound_vars) + " . " + body
        return body


@dataclass(frozen=True)
class Entailment:
    antecedent: SymbolicHeap
    succedents: tuple = ()

    def __str__(self) -> str:
        rhs = " , ".join(map(str, self.succedents))
        return f"{self.antecedent} |- {rhs}".rstrip()


Node = Union[Term, PureFormula, SpatialAtom, SymbolicHeap, Entailment, tuple]


# ------------------------------------------------------ free variables


def free_vars(x) -> frozenset:
    """Free variables of any syntax node (or tuple/list of nodes)."""
    if isinstance(x, Var):
        return frozenset((x.name,))
    if isinstance(x, (Const, TrueP, FalseP, Emp)):
        return frozenset()
    if isinstance(x, (Sum, Diff, Eq, Neq, Le, Lt)):
        return free_vars(x.left) | free_vars(x.right)
    if isinstance(x, (And, Or)):
        return _union(x.args)
    if isinstance(x, Not):
        return free_vars(x.arg)
    if isinstance(x, Exists):
        return free_vars(x.body) - {x.var}
    if isinstance(x, PointsTo):
        return free_vars(x.addr) | _union(x.values)
    if isinstance(x, Arr):
        return free_vars(x.lo) | free_vars(x.hi)
    if isinstance(x, Ls):
        return free_vars(x.start) | free_vars(x.end)
    if isinstance(x, Dll):
        return _union((x.a, x.b, x.c, x.d))
    if isinstance(x, SymbolicHeap):
        return (free_vars(x.pure) | _union(x.spatial)) - set(x.bound_vars)
    if isinstance(x, Entailment):
        return free_vars(x.antecedent) | _union(x.succedents)
    if isinstance(x, (tuple, list, frozenset, set)):
        return _union(x)
    raise TypeError(f"not a syntax node: {x!r}")


def _union(xs: Iterable) -> frozenset:
    out: frozenset = frozenset()
    for x in xs:
        out = out | free_vars(x)
    return out


def all_names(x) -> frozenset:
    """Free and bound names, used to pick fresh names."""
    if isinstance(x, Exists):
        return all_names(x.body) | {x.var}
    if isinstance(x, SymbolicHeap):
        return free_vars(x) | set(x.bound_vars) | all_names(x.pure)
    if isinstance(x, Entailment):
        return all_names(x.antecedent).union(*(all_names(s) for s in x.succedents))
    if isinstance(x, (And, Or)):
        return frozenset().union(*(all_names(a) for a in x.args))
    if isinstance(x, Not):
        return all_names(x.arg)
    if isinstance(x, (tuple, list)):
        return frozenset().union(*(all_names(a) for a in x))
    return free_vars(x)


class FreshNames:
    """Generates ``base#k`` names.  ``#`` cannot appear in parsed identifiers."""

    def __init__(self, avoid: Iterable[str] = ()):
        self._avoid = set(avoid)
        self._counter = itertools.count(1)

    def __call__(self, base: str = "z") -> str:
        base = base.split("#", 1)[0] or "z"
        while True:
            name = f"{base}#{next(self._counter)}"
            if name not in self._avoid:
                self._avoid.add(name)
                return name

    def avoid(self, names: Iterable[str]) -> None:
        self._avoid.update(names)


# -------------------------------------------------------- substitution


def substitute(x, mapping: Mapping[str, Term], fresh: FreshNames | None = None):
    """Simultaneous capture-avoiding substitution of terms for variables."""
    if not mapping:
        return x
    if isinstance(x, Var):
        return mapping.get(x.name, x)
    if isinstance(x, (Const, TrueP, FalseP, Emp)):
        return x
    if isinstance(x, (Sum, Diff, Eq, Neq, Le, Lt)):
        return type(x)(substitute(x.left, mapping, fresh), substitute(x.right, mapping, fresh))
    if isinstance(x, (And, Or)):
        return type(x)(tuple(substitute(a, mapping, fresh) for a in x.args))
    if isinstance(x, Not):
        return Not(substitute(x.arg, mapping, fresh))
    if isinstance(x, Exists):
        binders, body = _rename_apart((x.var,), x.body, mapping, fresh)
        return Exists(binders[0], substitute(body, _drop(mapping, binders), fresh))
    if isinstance(x, PointsTo):
        return PointsTo(substitute(x.addr, mapping, fresh),
                        tuple(substitute(v, mapping, fresh) for v in x.values))
    if isinstance(x, Arr):
        return Arr(substitute(x.lo, mapping, fresh), substitute(x.hi, mapping, fresh))
    if isinstance(x, Ls):
        return Ls(substitute(x.start, mapping, fresh), substitute(x.end, mapping, fresh))
    if isinstance(x, Dll):
        return Dll(*(substitute(t, mapping, fresh) for t in (x.a, x.b, x.c, x.d)))
    if isinstance(x, SymbolicHeap):
        body = (x.pure, x.spatial)
        binders, body = _rename_apart(x.bound_vars, body, mapping, fresh)
        inner = _drop(mapping, binders)
        return SymbolicHeap(binders, substitute(body[0], inner, fresh), substitute(body[1], inner, fresh))
    if isinstance(x, Entailment):
        return Entailment(substitute(x.antecedent, mapping, fresh),
                          tuple(substitute(s, mapping, fresh) for s in x.succedents))
    if isinstance(x, tuple):
        return tuple(substitute(a, mapping, fresh) for a in x)
    raise TypeError(f"not a syntax node: {x!r}")


def _drop(mapping, names):
    return {k: v for k, v in mapping.items() if k not in names}


def _rename_apart(binders, body, mapping, fresh):
    """Rename binders that would capture a variable of the substituted terms."""
    relevant = {k: v for k, v in mapping.items() if k not in binders}
    incoming = _union(relevant.values())
    clash = [b for b in binders if b in incoming]
    if not clash:
        return binders, body
    if fresh is None:
        fresh = FreshNames(incoming | all_names(body) | set(mapping) | set(binders))
    renaming = {b: fresh(b) for b in clash}
    new_binders = tuple(renaming.get(b, b) for b in binders)
    body = substitute(body, {b: Var(n) for b, n in renaming.items()}, fresh)
    return new_binders, body


# --------------------------------------------------- spatial helpers


def atom_terms(a: SpatialAtom) -> tuple:
    if isinstance(a, PointsTo):
        return (a.addr,) + tuple(a.values)
    if isinstance(a, Arr):
        return (a.lo, a.hi)
    if isinstance(a, Ls):
        return (a.start, a.end)
    if isinstance(a, Dll):
        return (a.a, a.b, a.c, a.d)
    return ()


def spatial_terms(spatial) -> frozenset:
    """The set of terms occurring in a spatial formula."""
    if isinstance(spatial, SymbolicHeap):
        spatial = spatial.spatial
    if not isinstance(spatial, tuple):
        spatial = (spatial,)
    return frozenset(t for a in spatial for t in atom_terms(a))


def is_list_free(x) -> bool:
    if isinstance(x, LIST_ATOMS):
        return False
    if isinstance(x, SymbolicHeap):
        return is_list_free(x.spatial)
    if isinstance(x, Entailment):
        return is_list_free(x.antecedent) and all(map(is_list_free, x.succedents))
    if isinstance(x, (tuple, list)):
        return all(map(is_list_free, x))
    return True


def count_points_to(x) -> int:
    atoms = x.spatial if isinstance(x, SymbolicHeap) else x
    return sum(isinstance(a, PointsTo) for a in atoms)


def count_lists(x) -> int:
    atoms = x.spatial if isinstance(x, SymbolicHeap) else x
    return sum(isinstance(a, LIST_ATOMS) for a in atoms)


def render(x) -> str:
    return str(x)


# ------------------------------------------------------ alpha equality


def alpha_normal(x):
    """Rename every binder to a canonical name so equal-up-to-alpha nodes compare equal."""
    if isinstance(x, Entailment):
        return Entailment(alpha_normal(x.antecedent), tuple(alpha_normal(s) for s in x.succedents))
    if isinstance(x, SymbolicHeap):
        if not x.bound_vars:
            return SymbolicHeap((), alpha_normal(x.pure), x.spatial)
        names = tuple(f"_b{i}" for i in range(len(x.bound_vars)))
        ren = {b: Var(n) for b, n in zip(x.bound_vars, names)}
        inner = SymbolicHeap((), substitute(x.pure, ren), substitute(x.spatial, ren))
        return SymbolicHeap(names, alpha_normal(inner.pure), inner.spatial)
    if isinstance(x, Exists):
        body = alpha_normal(x.body)
        name = f"_e{_depth(body)}"
        return Exists(name, substitute(body, {x.var: Var(name)}))
    if isinstance(x, (And, Or)):
        return type(x)(tuple(alpha_normal(a) for a in x.args))
    if isinstance(x, Not):
        return Not(alpha_normal(x.arg))
    return x


def _depth(f) -> int:
    if isinstance(f, Exists):
        return 1 + _depth(f.body)
    if isinstance(f, (And, Or)):
        return max((_depth(a) for a in f.args), default=0)
    if isinstance(f, Not):
        return _depth(f.arg)
    return 0


def alpha_equal(a, b) -> bool:
    return alpha_normal(a) == alpha_normal(b)
