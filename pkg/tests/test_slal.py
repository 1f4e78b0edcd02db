import random
from collections import Counter

import pytest

from slentail.errors import FragmentError
from slentail.oracle import Bounds, holds_within
from slentail.parser import parse_entailment, parse_heap
from slentail.slal import (
    SEARCH_ORDER, Degree, DerivationTree, Judgment, RuleId, apply_rule, cell_formula,
    check_derivation, decide_slal, degree, eliminate_antecedent_lists, jointly_satisfiable,
    measure, measure_less, prove_slal, search,
)
from slentail.syntax import (
    FALSE, Arr, Const, Dll, Eq, Le, Ls, PointsTo, SymbolicHeap, Var, conj, disj, free_vars,
)
from slentail.verdict import Outcome

from corpus import random_atom, random_entailment, random_heap, random_pure

LIST_EXAMPLE = "Arr(1,2) * 3 -> (10,0) * ls(10,20) |- Arr(1,3) * ls(10,20)"


def judgment(text):
    return Judgment.of(parse_entailment(text))


def j_b():
    return eliminate_antecedent_lists(parse_entailment(LIST_EXAMPLE))[1]


# ---------------------------------------------------------- unroll collapse


def test_collapse_list_example():
    ja, jb = eliminate_antecedent_lists(parse_entailment(LIST_EXAMPLE))
    assert str(ja) == "10 = 20 & Arr(1, 2) * 3 -> (10, 0) |- Arr(1, 3) * ls(10, 20)"
    assert str(jb) == ("Arr(1, 2) * 3 -> (10, 0) * 10 -> (z#1, y#2) * z#1 -> (20, y#3)"
                       " |- Arr(1, 3) * ls(10, 20)")


def test_collapse_list_free_unchanged():
    e = parse_entailment("Arr(1,2) * x -> (1,2) |- Arr(1,2) * x -> (1,2)")
    assert eliminate_antecedent_lists(e) == [Judgment.of(e)]


def test_collapse_dll():
    js = eliminate_antecedent_lists(parse_entailment("dll(t,u,v,w) |- Emp"))
    assert [str(j.antecedent) for j in js] == [
        "t = u & v = w & Emp",
        "t = v & t -> (u, w)",
        "t -> (z#1, w) * z#1 -> (v, t) * v -> (u, z#1)",
    ]


def test_collapse_count_and_freshness():
    rng = random.Random(5)
    for _ in range(50):
        e = random_entailment(rng, True, list_antecedent=True)
        js = eliminate_antecedent_lists(e)
        n_ls = sum(isinstance(a, Ls) for a in e.antecedent.spatial)
        n_dll = sum(isinstance(a, Dll) for a in e.antecedent.spatial)
        assert len(js) == 2 ** n_ls * 3 ** n_dll
        for j in js:
            assert j.succedents == e.succedents
            assert all(not isinstance(a, (Ls, Dll)) for a in j.antecedent.spatial)
            new = free_vars(j.antecedent) - free_vars(e)
            assert all("#" in n for n in new)


def test_collapse_rejects_quantifiers():
    with pytest.raises(FragmentError):
        eliminate_antecedent_lists(parse_entailment("ls(x,y) |- Ex v . x -> (v, v)"))


def test_judgment_antecedent_list_free():
    with pytest.raises(FragmentError):
        judgment("ls(x,y) |- Emp")


# ------------------------------------------------------------ cells


def test_cell_formula_examples():
    t = Var("t")
    assert cell_formula((), t) == FALSE
    assert cell_formula((Arr(Const(1), Const(5)),), Const(3)) == conj(Le(Const(1), Const(3)), Le(Const(3), Const(5)))
    sigma = parse_heap("x -> (a,b) * Arr(u,v)").spatial
    assert cell_formula(sigma, t) == disj(Eq(t, Var("x")), conj(Le(Var("u"), t), Le(t, Var("v"))))


def test_joint_satisfiability():
    phi = parse_heap("x -> (1,2) * Arr(3,4)")
    assert jointly_satisfiable(phi, parse_heap("Arr(3,4) * x -> (1,2)"))
    assert not jointly_satisfiable(phi, parse_heap("x -> (1,3) * Arr(3,4)"))
    assert not jointly_satisfiable(phi, parse_heap("10 = 20 & Arr(3,4) * ls(x,y)"))
    assert not jointly_satisfiable(phi, parse_heap("Arr(3,6) * ls(x,y)"))
    # list atoms are not analysed, so this is kept
    assert jointly_satisfiable(phi, parse_heap("Arr(3,4) * ls(x,y)"))


# ----------------------------------------------------------- degrees


def test_degree_of_list_free_succedent():
    phi = parse_heap("x -> (1,2) * Arr(3,4)")
    d = degree(parse_heap("x -> (1,2)"), phi)
    assert d.lists == 0 and d.em == 0
    assert d.unfold == 0


def test_degree_counts():
    phi = parse_heap("x -> (1,2) * y -> (3,4)")
    d = degree(parse_heap("ls(z, 0) * ls(x, 0)"), phi)
    # z may or may not equal x and y; x equals x
    assert d == Degree(2, 2, 2)


def test_degree_order():
    assert Degree(1, 0, 0) > Degree(0, 5, 5)
    assert Degree(1, -1, 3) < Degree(1, 0, 0)


def test_measure_less_examples():
    j = judgment("x -> (1,2) |- ls(x,0) , x -> (1,2) , Arr(x,x)")
    smaller = j.with_succedents(j.succedents[:2])
    assert measure_less(smaller, j)
    assert not measure_less(j, j)
    (premise,) = apply_rule(RuleId.MAPSTO_LS, j)
    assert measure_less(premise, j)


def test_measure_is_sorted_decreasing():
    j = judgment("x -> (1,2) |- Emp , ls(x,0) , x -> (1,2)")
    m = measure(j)
    assert list(m) == sorted(m, reverse=True)


# ------------------------------------------------------------- rules


def test_maps_to_ls_example():
    (premise,) = apply_rule(RuleId.MAPSTO_LS, j_b())
    assert [str(s) for s in premise.succedents] == [
        "10 = 20 & Arr(1, 3)",
        "Arr(1, 3) * 10 -> (z#1, y#2) * ls(z#1, 20)",
    ]
    (after,) = apply_rule(RuleId.UNSAT_R, premise)
    assert [str(s) for s in after.succedents] == ["Arr(1, 3) * 10 -> (z#1, y#2) * ls(z#1, 20)"]


def test_start_axiom():
    assert apply_rule(RuleId.START, judgment("x -> (1,2) |- Arr(x,x)")) == ()
    assert apply_rule(RuleId.START, judgment("x -> (1,2) |- x -> (2,1)")) is None
    assert apply_rule(RuleId.START, judgment("x -> (1,2) |- ls(x,1)")) is None


def test_unsat_left():
    assert apply_rule(RuleId.UNSAT_L, judgment("x -> (1,2) * x -> (3,4) |- Emp")) == ()
    assert apply_rule(RuleId.UNSAT_L, judgment("Arr(3,1) |- Emp")) == ()
    assert apply_rule(RuleId.UNSAT_L, judgment("x -> (1,2) |- Emp")) is None


def test_maps_to_ls_em():
    j = judgment("x -> (1,2) |- ls(y,0)")
    eq, ne = apply_rule(RuleId.MAPSTO_LS_EM, j)
    assert str(eq.antecedent.pure) == "x = y"
    assert str(ne.antecedent.pure) == "x != y"


def test_arr_list_em():
    j = judgment("Arr(1,4) |- ls(y,0)")
    inside, above, below = apply_rule(RuleId.ARR_LIST_EM, j)
    assert str(inside.antecedent.pure) == "1 <= y & y <= 4"
    assert str(above.antecedent.pure) == "4 < y"
    assert str(below.antecedent.pure) == "y < 1"


def test_list_elim_and_arr_ls():
    (p,) = apply_rule(RuleId.LS_ELIM, judgment("x = 1 & x -> (1,2) |- ls(5,y) * x -> (1,2)"))
    assert str(p.succedents[0]) == "5 = y & x -> (1, 2)"
    # x may be 5, so the list head may be allocated
    assert apply_rule(RuleId.LS_ELIM, judgment("x -> (1,2) |- ls(5,y)")) is None
    (q,) = apply_rule(RuleId.ARR_LS, judgment("Arr(1,4) |- ls(2,y)"))
    assert str(q.succedents[0]) == "2 = y & Emp"


def test_dll_rules():
    (p,) = apply_rule(RuleId.MAPSTO_DLL, judgment("x -> (1,2) |- dll(x,a,b,c)"))
    assert [str(s) for s in p.succedents] == ["x = a & b = c & Emp", "x -> (1, c) * dll(1, a, b, x)"]
    (q,) = apply_rule(RuleId.DLL_ELIM, judgment("x = 1 & x -> (1,2) |- dll(5,a,b,c)"))
    assert str(q.succedents[0]) == "5 = a & b = c & Emp"
    (r,) = apply_rule(RuleId.ARR_DLL, judgment("Arr(1,4) |- dll(2,a,b,c)"))
    assert str(r.succedents[0]) == "2 = a & b = c & Emp"
    eq, ne = apply_rule(RuleId.MAPSTO_DLL_EM, judgment("x -> (1,2) |- dll(y,a,b,c)"))
    assert str(eq.antecedent.pure) == "x = y"


def test_leftmost_choice():
    (p,) = apply_rule(RuleId.LS_ELIM, judgment("x = 1 & x -> (1,2) |- ls(5,a) * ls(6,b) , ls(7,c)"))
    assert [str(s) for s in p.succedents] == ["5 = a & ls(6, b)", "ls(7, c)"]


def test_search_order_complete():
    assert sorted(SEARCH_ORDER, key=str) == sorted(RuleId, key=str)
    assert SEARCH_ORDER[:3] == (RuleId.UNSAT_L, RuleId.START, RuleId.UNSAT_R)


# ------------------------------------------------------------ search


def test_search_unsat_left_leaf():
    ja = eliminate_antecedent_lists(parse_entailment(LIST_EXAMPLE))[0]
    tree = search(ja)
    assert tree == DerivationTree(RuleId.UNSAT_L, ja, ())


def test_search_list_example():
    tree = search(j_b())
    counts = Counter(tree.rules())
    assert counts[RuleId.MAPSTO_LS] == 3
    assert counts[RuleId.UNSAT_R] in (2, 3)
    assert counts[RuleId.MAPSTO_LS_EM] == 1
    assert counts[RuleId.LS_ELIM] == 1
    assert counts[RuleId.START] >= 1
    spine = [r for r in tree.rules()]
    assert spine[:5] == [RuleId.MAPSTO_LS, RuleId.UNSAT_R, RuleId.MAPSTO_LS, RuleId.UNSAT_R,
                         RuleId.MAPSTO_LS_EM]
    assert check_derivation(tree)


def test_search_fails_on_invalid_leaf():
    assert search(judgment("x -> (1,2) |- x -> (2,1)")) is None


def test_render_format():
    tree = search(j_b())
    lines = tree.render().splitlines()
    assert lines[0].startswith("MapsToLs: ")
    assert lines[1].startswith("  UnsatR: ")
    assert all(": " in line for line in lines)


# ------------------------------------------------------ check_derivation


def test_check_derivation_rejects_tampering():
    bad_start = DerivationTree(RuleId.START, judgment("x -> (1,2) |- x -> (2,1)"), ())
    assert not check_derivation(bad_start)
    bad_unsat = DerivationTree(RuleId.UNSAT_L, judgment("x -> (1,2) |- Emp"), ())
    assert not check_derivation(bad_unsat)
    tree = search(j_b())
    wrong_child = DerivationTree(tree.rule, tree.conclusion, (bad_start,))
    assert not check_derivation(wrong_child)
    missing = DerivationTree(tree.rule, tree.conclusion, ())
    assert not check_derivation(missing)


# ------------------------------------------------------------- decide


@pytest.mark.parametrize("text,expected", [
    (LIST_EXAMPLE, Outcome.VALID),
    ("ls(x,y) |- ls(x,y)", Outcome.VALID),
    ("x -> (a,b) |- ls(x,x)", Outcome.INVALID),
    ("x -> (y,a) * y -> (z,b) |- ls(x,z)", Outcome.VALID),
    ("ls(x,y) * y -> (z,w) |- ls(x,z)", Outcome.VALID),
    ("dll(x,y,z,w) |- dll(x,y,z,w)", Outcome.VALID),
    ("ls(x,y) |- ls(y,x)", Outcome.INVALID),
    ("ls(x,y) |- x = y & Emp", Outcome.INVALID),
    ("x -> (y, 0) |- ls(x, y)", Outcome.VALID),
    ("x -> (y, w) |- dll(x, y, x, w)", Outcome.VALID),
])
def test_decide_slal_examples(text, expected):
    assert decide_slal(parse_entailment(text)).outcome is expected


def test_prove_keeps_all_trees():
    r = prove_slal(parse_entailment(LIST_EXAMPLE))
    assert len(r.judgments) == len(r.proofs) == 2
    assert all(check_derivation(t) for t in r.proofs)


# -------------------------------------------------------------- properties


def _random_judgment(rng):
    atoms = []
    while len(atoms) < rng.randint(1, 3):
        a = random_atom(rng, True)
        if not isinstance(a, (Ls, Dll)):
            atoms.append(a)
    ante = SymbolicHeap((), random_pure(rng), tuple(atoms))
    return Judgment(ante, tuple(random_heap(rng, True) for _ in range(rng.randint(1, 2))))


def test_rules_sound_and_locally_complete():
    # for every rule: conclusion valid iff all premises valid, on bounded models
    rng = random.Random(1)
    b = Bounds(6, 4)
    seen = Counter()
    for _ in range(4000):
        j = _random_judgment(rng)
        for r in RuleId:
            if seen[r] >= 50:
                continue
            premises = apply_rule(r, j)
            if premises is None:
                continue
            seen[r] += 1
            conclusion = holds_within(j.entailment(), b)
            assert conclusion == all(holds_within(p.entailment(), b) for p in premises), (r, j)
        if all(seen[r] >= 50 for r in RuleId):
            break
    assert all(seen[r] >= 50 for r in RuleId), seen


def test_search_trees_check():
    rng = random.Random(3)
    for _ in range(60):
        for j in eliminate_antecedent_lists(random_entailment(rng, True)):
            tree = search(j)
            if tree is not None:
                assert check_derivation(tree)


def _stuck_leaf(j):
    for r in SEARCH_ORDER:
        premises = apply_rule(r, j)
        if premises is not None:
            break
    else:
        return j
    for p in premises:
        leaf = _stuck_leaf(p)
        if leaf is not None:
            return leaf
    return None


def test_stuck_judgments_have_countermodels():
    # a judgment where no rule applies is invalid
    rng = random.Random(7)
    stuck = 0
    for _ in range(25):
        for j in eliminate_antecedent_lists(random_entailment(rng, True)):
            leaf = _stuck_leaf(j)
            if leaf is None:
                continue
            stuck += 1
            assert not holds_within(leaf.entailment(), Bounds(6, 4)), leaf
            break
    assert stuck > 0
