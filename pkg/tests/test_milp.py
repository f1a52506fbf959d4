import itertools
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import completable, eval_tree, random_lcf_tree
from stlplan.lcf import LcfArena, LinearExpr, VarPool
from stlplan.milp import (
    InfeasibleSolutionError,
    MilpModel,
    SolutionParseError,
    UnboundedVariableError,
    choose_big_m,
    eliminate_disjunctions,
    export_lp,
    import_solution,
    leaf_big_m,
    parse_solution,
    write_solution,
)

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def one_var(lo, hi):
    pool = VarPool()
    x = pool.add("x", lo=lo, hi=hi)
    return LcfArena(pool), x, LinearExpr.var(x)


def test_big_m_example_structure():
    ar, x, X = one_var(-10, 10)
    root = ar.or_([ar.leaf(X), ar.leaf(-X)])
    m = eliminate_disjunctions(ar, root, big_m=20)
    z1, z2 = m.binaries
    Z1, Z2 = LinearExpr.var(z1), LinearExpr.var(z2)
    assert m.constraints == [X + 20 * (1 - Z1), -X + 20 * (1 - Z2), Z1 + Z2 - 1]
    assert m.num_binaries == 2 and m.num_disjunctions == 1


def test_default_big_m_is_per_leaf():
    ar, x, X = one_var(-10, 10)
    m = eliminate_disjunctions(ar, ar.or_([ar.leaf(X), ar.leaf(-X - 5)]))
    assert m.big_m == [11.0, 16.0, 0.0]


@pytest.mark.parametrize("expr,lo,hi,M", [(lambda X: X - 5, 0, 10, 6.0), (lambda X: -X, 0, 4, 5.0)])
def test_leaf_big_m_examples(expr, lo, hi, M):
    ar, x, X = one_var(lo, hi)
    l, h = ar.pool.bounds()
    assert leaf_big_m(expr(X), l, h) == M


def test_constant_leaf_big_m():
    assert leaf_big_m(LinearExpr.const(3.0), np.zeros(0), np.zeros(0)) == 1.0


def test_choose_big_m_only_gated_leaves():
    ar, x, X = one_var(0, 10)
    free = ar.leaf(X - 1)
    o = ar.or_([ar.leaf(X - 5), ar.leaf(-X)])
    Ms = choose_big_m(ar, ar.and_([free, o]))
    assert Ms == {ar.leaf(X - 5): 6.0, ar.leaf(-X): 11.0}


def test_and_of_leaves_has_no_binaries():
    ar, x, X = one_var(0, 10)
    m = eliminate_disjunctions(ar, ar.and_([ar.leaf(X - 1), ar.leaf(5 - X)]))
    assert len(m.constraints) == 2 and m.num_binaries == 0


def test_unbounded_variable_rejected():
    ar, x, X = one_var(-np.inf, 10)
    with pytest.raises(UnboundedVariableError, match="x"):
        eliminate_disjunctions(ar, ar.or_([ar.leaf(X), ar.leaf(1 - X)]))


def test_objective_untouched():
    ar, x, X = one_var(-3, 3)
    m = MilpModel(ar.pool, 2 * X + 1)
    before = m.objective
    eliminate_disjunctions(ar, ar.or_([ar.leaf(X), ar.leaf(-X)]), m)
    assert m.objective is before


def _build(ar, node, xs, memo):
    if id(node) in memo:
        return memo[id(node)]
    if node[0] == "leaf":
        n = ar.leaf(LinearExpr(zip(xs, node[1]), node[2]))
    else:
        kids = [_build(ar, c, xs, memo) for c in node[1]]
        n = ar.and_(kids) if node[0] == "and" else ar.or_(kids)
    memo[id(node)] = n
    return n


def test_big_m_equivalence_small():
    rng = np.random.default_rng(5)
    for _ in range(60):
        nv = int(rng.integers(1, 4))
        tree = random_lcf_tree(rng, nv)
        pool = VarPool()
        xs = [pool.add(f"x{i}", lo=-3, hi=3) for i in range(nv)]
        ar = LcfArena(pool)
        m = eliminate_disjunctions(ar, _build(ar, tree, xs, {}))
        _, _, A, r, _, _, _ = m.to_arrays()
        free = [v for v in range(len(pool)) if v not in xs]
        X = np.array(list(itertools.product(range(-3, 4), repeat=nv)), float)
        np.testing.assert_array_equal(completable(A, r, xs, free, X), eval_tree(tree, X))


# --- LP files ------------------------------------------------------------------------


def small_model():
    pool = VarPool()
    t = pool.add("t_0_1", lo=0, hi=10)
    m = MilpModel(pool, LinearExpr.var(t))
    m.add(LinearExpr.var(t) - 2)
    return m


def test_export_golden():
    text = export_lp(small_model())
    with open(os.path.join(GOLDEN, "min_t.lp")) as fh:
        assert text == fh.read()
    assert "Minimize" in text and "t_0_1 >= 2" in text


def disjunctive_model():
    pool = VarPool()
    x = pool.add("x", lo=-10, hi=10)
    y = pool.add("y", lo=0, hi=5)
    ar = LcfArena(pool)
    X, Y = LinearExpr.var(x), LinearExpr.var(y)
    root = ar.and_([ar.or_([ar.leaf(X - 1), ar.leaf(-X - 1)]), ar.leaf(Y - 0.5 * X)])
    m = MilpModel(pool, X + Y)
    eliminate_disjunctions(ar, root, m)
    return m


def test_export_deterministic_and_sections():
    a, b = export_lp(disjunctive_model()), export_lp(disjunctive_model())
    assert a == b
    heads = [ln for ln in a.splitlines() if ln and not ln.startswith((" ", "\\"))]
    assert heads == ["Minimize", "Subject To", "Bounds", "Binaries", "End"]


def test_full_precision_coefficients():
    pool = VarPool()
    x = pool.add("x", lo=0, hi=1)
    m = MilpModel(pool, LinearExpr.var(x, 1 / 3))
    m.add(LinearExpr.var(x, 0.1) - 1e-20)
    text = export_lp(m)
    assert float(text.split("obj:")[1].split()[0]) == 1 / 3
    rhs = text.split("c0:")[1].splitlines()[0].split(">=")[1]
    assert float(rhs) == 1e-20


def test_round_trip_solution():
    m = disjunctive_model()
    # x = -1 (second disjunct), y = 0: objective -1
    x = np.zeros(m.num_vars)
    x[0], x[1] = -1.0, 0.0
    z = m.binaries
    x[z[1]] = 1.0
    assert m.is_feasible(x)
    text = write_solution(m, x)
    np.testing.assert_array_equal(import_solution(text, m), x)


def test_corrupted_solution_line():
    m = small_model()
    with pytest.raises(SolutionParseError) as info:
        import_solution("# comment\nt_0_1 2\nt_0_0 oops\n", m)
    assert info.value.line == 3
    with pytest.raises(SolutionParseError, match="line 1"):
        parse_solution("t_0_1\n")
    with pytest.raises(SolutionParseError, match="unknown variable"):
        import_solution("t_0_1 3\nq 1\n", m)


def test_infeasible_solution_names_row():
    m = small_model()
    with pytest.raises(InfeasibleSolutionError) as info:
        import_solution("t_0_1 1.5\n", m)
    assert info.value.constraint == "c0"
    assert info.value.violation == pytest.approx(0.5)


def test_external_solver_reads_export(tmp_path):
    highspy = pytest.importorskip("highspy")
    m = disjunctive_model()
    path = tmp_path / "m.lp"
    path.write_text(export_lp(m))
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    assert h.readModel(str(path)) == highspy.HighsStatus.kOk
    h.run()
    # x = -10 takes the second disjunct, y is pinned at its lower bound
    assert h.getInfo().objective_function_value == pytest.approx(-10.0)
    sol = h.getSolution().col_value
    names = [h.getColName(i)[1] for i in range(h.getNumCol())]
    text = "".join(f"{n} {v!r}\n" for n, v in zip(names, sol))
    x = import_solution(text, m, missing="zero")
    assert m.objective_value(x) == pytest.approx(-10.0)


coef = st.integers(-3, 3)


@settings(max_examples=50)
@given(st.lists(st.tuples(coef, coef, coef), min_size=1, max_size=5))
def test_export_import_round_trip(rows):
    pool = VarPool()
    x = pool.add("x", lo=-4, hi=4)
    y = pool.add("y", lo=-4, hi=4)
    m = MilpModel(pool, LinearExpr.var(x) - LinearExpr.var(y))
    for a, b, c in rows:
        m.add(LinearExpr({x: a, y: b}, c))
    pt = np.array([0.25, -1.5])
    text = write_solution(m, pt)
    if m.is_feasible(pt):
        np.testing.assert_array_equal(import_solution(text, m), pt)
    else:
        with pytest.raises(InfeasibleSolutionError):
            import_solution(text, m)
