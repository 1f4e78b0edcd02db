import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slentail.errors import ParseError
from slentail.parser import parse_entailment, parse_heap, tokenize
from slentail.syntax import (
    EMP, TRUE, Arr, Const, Dll, Entailment, Eq, Exists, FreshNames, Ls, Lt, Neq, PointsTo,
    Sum, SymbolicHeap, Var, alpha_equal, conj, count_lists, count_points_to, free_vars,
    is_list_free, plus, render, spatial_terms, substitute,
)

from strategies import entailments, heaps, terms

LIST_EXAMPLE = "Arr(1,2) * 3 -> (10,0) * ls(10,20) |- Arr(1,3) * ls(10,20)"


# ------------------------------------------------------------ parser


def test_parse_emp_identity():
    e = parse_entailment("Emp |- Emp")
    assert e.antecedent == SymbolicHeap()
    assert e.succedents == (SymbolicHeap(),)


def test_parse_array_points_to_example():
    e = parse_entailment("Arr(x,x) |- x -> (0) , Ex y . y > 0 & x -> (y)")
    x, y = Var("x"), Var("y")
    assert e.antecedent.spatial == (Arr(x, x),)
    assert e.succedents[0].spatial == (PointsTo(x, (Const(0),)),)
    second = e.succedents[1]
    assert second.bound_vars == ("y",)
    assert second.pure == Lt(Const(0), y)
    assert second.spatial == (PointsTo(x, (y,)),)


def test_parse_list_example():
    e = parse_entailment(LIST_EXAMPLE)
    c = Const
    assert e.antecedent.spatial == (Arr(c(1), c(2)), PointsTo(c(3), (c(10), c(0))), Ls(c(10), c(20)))
    assert e.succedents == (SymbolicHeap((), TRUE, (Arr(c(1), c(3)), Ls(c(10), c(20)))),)


def test_parse_empty_succedent():
    e = parse_entailment("Emp |-")
    assert e.succedents == ()
    assert render(e) == "Emp |-"


def test_parse_comparisons_normalised():
    h = parse_heap("x != y & x > y & x >= 2 & Emp")
    x, y = Var("x"), Var("y")
    assert h.pure.args[0] == Neq(x, y)
    assert h.pure.args[1] == Lt(y, x)
    assert str(h.pure.args[2]) == "2 <= x"


def test_parse_dll_and_sum():
    h = parse_heap("dll(a, b+1, c, d) * a -> (b, c)")
    assert h.spatial[0] == Dll(Var("a"), Sum(Var("b"), Const(1)), Var("c"), Var("d"))


@pytest.mark.parametrize("text", [
    "Emp",                       # no turnstile
    "x -> (1) |- x -> (1, 2)",   # arity mismatch
    "Arr(x) |- Emp",
    "x - 1 = y & Emp |- Emp",    # no subtraction in the surface syntax
    "Ex x x . Emp |- Emp",       # repeated binder
    "y#1 = 0 & Emp |- Emp",      # reserved fresh-name character
    "ls(x,y) |- ls(x,y,z)",
    "Emp |- Emp ,",
])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_entailment(text)


def test_parse_error_has_position():
    with pytest.raises(ParseError) as info:
        parse_entailment("Emp |- Arr(1,)")
    assert "1:" in str(info.value)


def test_tokenize_keywords():
    kinds = [t.kind for t in tokenize("Ex y . ls(y, 0)")]
    assert kinds[0] != kinds[1]


# ------------------------------------------------------ free variables


def test_free_vars_examples():
    assert free_vars(plus("x", 1)) == {"x"}
    assert free_vars(parse_heap("Ex y . y > 0 & x -> (y)")) == {"x"}
    assert free_vars(parse_heap("Arr(a,b) * ls(c,d)").spatial) == {"a", "b", "c", "d"}


# -------------------------------------------------------- substitution


def test_substitute_points_to():
    x, z, y1, u = Var("x"), Var("z"), Var("y1"), Var("u")
    assert substitute(PointsTo(x, (z, y1)), {"z": u}) == PointsTo(x, (u, y1))


def test_substitute_avoids_capture():
    f = Exists("y", Eq(Var("x"), Var("y")))
    g = substitute(f, {"x": Var("y")})
    assert isinstance(g, Exists) and g.var != "y"
    assert g.body == Eq(Var("y"), Var(g.var))


def test_substitute_array_bound():
    t, u = Var("t"), Var("u")
    assert substitute(Arr(t, Sum(t, u)), {"u": Const(3)}) == Arr(t, Sum(t, Const(3)))


def test_substitute_respects_heap_binders():
    h = parse_heap("Ex y . x = y & x -> (y)")
    g = substitute(h, {"x": Var("y")})
    assert free_vars(g) == {"y"}
    assert g.bound_vars != ("y",)


# ----------------------------------------------------- spatial helpers


def test_spatial_terms_examples():
    assert spatial_terms(()) == frozenset()
    assert spatial_terms(parse_heap("x -> (1,2)").spatial) == {Var("x"), Const(1), Const(2)}
    abc = spatial_terms(parse_heap("Arr(a,b) * Arr(b,c)").spatial)
    assert abc == {Var("a"), Var("b"), Var("c")}


def test_list_free_examples():
    assert is_list_free(parse_heap("Arr(1,2) * 3 -> (10,0)"))
    assert not is_list_free(parse_heap("ls(x,y)"))
    assert is_list_free(parse_heap("Emp"))


def test_counts():
    e = parse_entailment(LIST_EXAMPLE)
    assert count_points_to(e.antecedent.spatial) == 1
    assert count_lists(e.antecedent.spatial) == 1


def test_lone_emp_is_empty_spatial():
    assert SymbolicHeap((), TRUE, (EMP,)) == SymbolicHeap()


def test_repeated_binder_rejected():
    with pytest.raises(ValueError):
        SymbolicHeap(("y", "y"))


def test_fresh_names_unparsable_and_distinct():
    fresh = FreshNames({"z#1"})
    names = {fresh("z") for _ in range(5)}
    assert len(names) == 5 and "z#1" not in names
    assert all("#" in n for n in names)


# ------------------------------------------------------------ render


def test_round_trip_list_example():
    e = parse_entailment(LIST_EXAMPLE)
    assert parse_entailment(render(e)) == e


def test_render_emp_and_binders():
    assert "Emp" in render(parse_entailment("Emp |- Emp"))
    assert render(parse_heap("Ex y . y > 0 & x -> (y)")).startswith("Ex y .")


def test_conj_flattens_and_simplifies():
    a, b = Eq(Var("x"), Const(1)), Lt(Var("x"), Var("y"))
    assert conj() == TRUE
    assert conj(TRUE, a) == a
    assert conj(conj(a, b), a).args == (a, b, a)


# ---------------------------------------------------------- properties


@settings(max_examples=200, deadline=None)
@given(entailments())
def test_round_trip_property(e):
    assert alpha_equal(parse_entailment(render(e)), e)


@settings(max_examples=200, deadline=None)
@given(heaps(), st.sampled_from("xyzab"), terms())
def test_substitution_free_vars(h, x, t):
    out = substitute(h, {x: t})
    assert free_vars(out) <= (free_vars(h) - {x}) | free_vars(t)


@settings(max_examples=200, deadline=None)
@given(heaps(), st.randoms(use_true_random=False))
def test_spatial_helpers_order_invariant(h, rnd):
    atoms = list(h.spatial)
    rnd.shuffle(atoms)
    assert spatial_terms(tuple(atoms)) == spatial_terms(h.spatial)
    assert is_list_free(tuple(atoms)) == is_list_free(h.spatial)


def test_entailment_str():
    e = Entailment(SymbolicHeap(), (SymbolicHeap((), Eq(Var("x"), Const(0))),))
    assert str(e) == "Emp |- x = 0 & Emp"
