"""SMT-LIB2 export for checking results with an external solver."""
from __future__ import annotations

from .formula import (
    And, Dvd, Eq, Exists, FalseF, Forall, LinearTerm, Le, Not, Or, PbFormula,
    TrueF, free_vars,
)


def _symbol(name: str) -> str:
    # '#' is not a simple-symbol character, so fresh names are quoted
    return name if name.replace("_", "a").isalnum() else f"|{name}|"


def _int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def _term(lt: LinearTerm) -> str:
    parts = []
    for k, v in lt.coeffs:
        parts.append(_symbol(k) if v == 1 else f"(* {_int(v)} {_symbol(k)})")
    if lt.constant or not parts:
        parts.append(_int(lt.constant))
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def _split(lt: LinearTerm) -> tuple[str, str]:
    """Write ``lt`` as ``lhs - rhs`` with non-negative coefficients on both sides."""
    pos = LinearTerm(tuple((k, v) for k, v in lt.coeffs if v > 0), max(lt.constant, 0))
    neg = LinearTerm(tuple((k, -v) for k, v in lt.coeffs if v < 0), max(-lt.constant, 0))
    return _term(pos), _term(neg)


def _expr(f: PbFormula) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Eq):
        lhs, rhs = _split(f.lt)
        return f"(= {lhs} {rhs})"
    if isinstance(f, Le):
        lhs, rhs = _split(f.lt)
        return f"(<= {lhs} {rhs})"
    if isinstance(f, Dvd):
        return f"(= (mod {_term(f.lt)} {f.d}) 0)"
    if isinstance(f, Not):
        return f"(not {_expr(f.arg)})"
    if isinstance(f, (And, Or)):
        if not f.args:
            return "true" if isinstance(f, And) else "false"
        op = "and" if isinstance(f, And) else "or"
        return f"({op} " + " ".join(_expr(a) for a in f.args) + ")"
    if isinstance(f, Exists):
        x = _symbol(f.var)
        return f"(exists (({x} Int)) (and (>= {x} 0) {_expr(f.body)}))"
    if isinstance(f, Forall):
        x = _symbol(f.var)
        return f"(forall (({x} Int)) (=> (>= {x} 0) {_expr(f.body)}))"
    raise TypeError(f)


def to_smtlib(f: PbFormula) -> str:
    """A script whose ``(check-sat)`` answers whether ``f`` is satisfiable.

    Free variables become non-negative constants.  To check validity, export
    the negation and expect ``unsat``.
    """
    lines = ["(set-logic LIA)"]
    for x in sorted(free_vars(f)):
        s = _symbol(x)
        lines.append(f"(declare-const {s} Int)")
        lines.append(f"(assert (>= {s} 0))")
    lines.append(f"(assert {_expr(f)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
