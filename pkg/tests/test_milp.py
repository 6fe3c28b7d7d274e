import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import LinearConstraint, milp

from cellform.milp import (
    BINARY, CONTINUOUS, INTEGER, GuardExceeded, Model, ModelError, SolverOptions,
    brute_force_model, check_solution, relaxation_bound, solve_bb,
)


def knapsack(values, weights, cap):
    m = Model("knap", "maximize")
    xs = [m.add_var(f"x{i}") for i in range(len(values))]
    m.add_constraint({x: w for x, w in zip(xs, weights)}, "<=", cap)
    m.set_objective({x: v for x, v in zip(xs, values)})
    return m


def knapsack_by_subsets(values, weights, cap):
    best = 0
    for pick in itertools.product((0, 1), repeat=len(values)):
        if sum(w * p for w, p in zip(weights, pick)) <= cap:
            best = max(best, sum(v * p for v, p in zip(values, pick)))
    return best


def test_single_binary_max():
    m = Model(sense="maximize")
    x = m.add_var("x")
    m.set_objective({x: 1})
    for sol in (solve_bb(m), brute_force_model(m)):
        assert sol.status == "optimal"
        assert sol.objective_value == 1 and sol.values[x] == 1


def test_contradiction_is_infeasible():
    m = Model(sense="minimize")
    x = m.add_var("x")
    m.add_constraint({x: 1}, ">=", 1)
    m.add_constraint({x: 1}, "<=", 0)
    assert solve_bb(m).status == "infeasible"
    assert brute_force_model(m).status == "infeasible"


def test_empty_model_returns_constant():
    m = Model(sense="minimize")
    m.set_objective({}, constant=4.5)
    assert solve_bb(m).objective_value == 4.5
    assert brute_force_model(m).objective_value == 4.5


def test_three_item_knapsack():
    values, weights = (3, 4, 5), (2, 3, 4)
    expected = knapsack_by_subsets(values, weights, 5)
    assert expected == 7  # items 1 and 2
    m = knapsack(values, weights, 5)
    assert brute_force_model(m).objective_value == expected
    assert solve_bb(m).objective_value == expected


def test_fractional_relaxation_bound():
    m = Model(sense="maximize")
    x, y = m.add_var("x"), m.add_var("y")
    m.add_constraint({x: 1, y: 1}, "<=", 1.5)
    m.set_objective({x: 1, y: 1})
    assert relaxation_bound(m) == pytest.approx(1.5)
    assert solve_bb(m).objective_value == 1


def test_integral_relaxation_bound_is_tight():
    m = knapsack((1, 1, 1), (1, 1, 1), 2)
    assert relaxation_bound(m) == pytest.approx(solve_bb(m).objective_value) == pytest.approx(2)


def test_random_knapsack_bounds(rng):
    for _ in range(25):
        values = rng.integers(1, 30, 10)
        weights = rng.integers(1, 20, 10)
        cap = int(rng.integers(10, 60))
        m = knapsack(values.tolist(), weights.tolist(), cap)
        best = knapsack_by_subsets(values, weights, cap)
        assert relaxation_bound(m) >= best - 1e-9
        assert solve_bb(m).objective_value == pytest.approx(best)


def test_guard_refuses():
    m = knapsack([1] * 20, [1] * 20, 5)
    with pytest.raises(GuardExceeded):
        brute_force_model(m, guard=10)


def test_malformed_model_names_culprit():
    m = Model()
    m.add_var("x")
    m.add_constraint({3: 1.0}, "<=", 1, name="bad_row")
    with pytest.raises(ModelError, match="bad_row"):
        solve_bb(m)
    m2 = Model()
    m2.add_var("y", INTEGER, 2, 1)
    with pytest.raises(ModelError, match="'y'"):
        solve_bb(m2)
    with pytest.raises(ModelError):
        m2.add_var("y")


def test_node_limit_reports_incumbent_and_bound(rng):
    values = rng.integers(5, 30, 14)
    weights = rng.integers(3, 20, 14)
    m = knapsack(values.tolist(), weights.tolist(), int(weights.sum() // 2))
    full = solve_bb(m)
    sol = solve_bb(m, SolverOptions(node_limit=3))
    assert sol.status == "limit_reached"
    assert sol.best_bound >= full.objective_value - 1e-6
    if sol.objective_value is not None:
        assert sol.objective_value <= full.objective_value + 1e-6


def test_lp_dump_sections():
    m = Model("demo", "maximize")
    x = m.add_var("x")
    n = m.add_var("n", INTEGER, 0, 3)
    v = m.add_var("v", CONTINUOUS, 0, 1)
    m.add_constraint({x: 1, n: 2, v: -1}, "<=", 4, name="cap")
    m.set_objective({x: 1, v: 2})
    text = m.to_lp()
    for head in ("Maximize", "Subject To", "Bounds", "Binary", "General", "End"):
        assert head in text
    assert "cap: 1 x + 2 n - 1 v <= 4" in text


def test_deterministic():
    m = knapsack([5, 4, 3, 7, 1], [4, 3, 2, 5, 1], 8)
    a, b = solve_bb(m), solve_bb(m)
    assert a.nodes == b.nodes and np.array_equal(a.values, b.values)


# --------------------------------------------------------------------------
# random models


@st.composite
def models(draw, max_vars=8, continuous=False):
    n = draw(st.integers(1, max_vars))
    sense = draw(st.sampled_from(["maximize", "minimize"]))
    m = Model("random", sense)
    xs = []
    for j in range(n):
        if draw(st.booleans()):
            xs.append(m.add_var(f"x{j}", BINARY))
        else:
            xs.append(m.add_var(f"x{j}", INTEGER, 0, draw(st.integers(1, 3))))
    coef = st.integers(-4, 4)
    for r in range(draw(st.integers(0, 5))):
        terms = {x: draw(coef) for x in xs if draw(st.booleans())}
        m.add_constraint(terms, draw(st.sampled_from(["<=", ">=", "=="])),
                         draw(st.integers(-3, 8)), name=f"r{r}")
    obj = {x: draw(coef) for x in xs}
    if continuous and sense == "maximize" and n >= 2:
        # products of binaries in the shape the formulations produce
        bins = [x for x in xs if m.variables[x].kind == BINARY]
        for a, b in itertools.combinations(bins[:4], 2):
            v = m.add_var(f"v{a}_{b}", CONTINUOUS, 0, 1)
            m.add_constraint({v: 1, a: -1}, "<=", 0)
            m.add_constraint({v: 1, b: -1}, "<=", 0)
            obj[v] = draw(st.integers(0, 3))
    m.set_objective(obj)
    return m


def _same(a, b):
    assert a.status == b.status
    if a.status == "optimal":
        assert a.objective_value == pytest.approx(b.objective_value, abs=1e-6)


@given(models())
def test_bb_matches_enumeration(m):
    bb = solve_bb(m)
    _same(bb, brute_force_model(m))
    if bb.status == "optimal":
        assert check_solution(m, bb.values) == []
        assert abs(bb.objective_value - bb.best_bound) <= 1e-6 * max(1, abs(bb.objective_value))


@given(models(continuous=True))
def test_bb_matches_enumeration_with_products(m):
    _same(solve_bb(m), brute_force_model(m))


@settings(max_examples=30)
@given(models())
def test_bb_matches_scipy_milp(m):
    n = m.num_vars
    c = np.zeros(n)
    for j, a in m.objective.items():
        c[j] = -a if m.sense == "maximize" else a
    cons = []
    for con in m.constraints:
        row = np.zeros(n)
        for j, a in con.terms:
            row[j] = a
        lo = -np.inf if con.rel == "<=" else con.rhs
        hi = np.inf if con.rel == ">=" else con.rhs
        cons.append(LinearConstraint(row, lo, hi))
    from scipy.optimize import Bounds
    res = milp(c, constraints=cons or None, integrality=np.ones(n),
               bounds=Bounds([v.lb for v in m.variables], [v.ub for v in m.variables]))
    bb = solve_bb(m)
    if res.status == 2:
        assert bb.status == "infeasible"
    else:
        ref = -res.fun if m.sense == "maximize" else res.fun
        assert bb.objective_value == pytest.approx(ref, abs=1e-6)


@given(models(), st.data())
def test_extra_constraint_never_helps(m, data):
    base = solve_bb(m)
    tighter = m.copy()
    xs = list(range(m.num_vars))
    terms = {x: data.draw(st.integers(-3, 3)) for x in xs}
    tighter.add_constraint(terms, data.draw(st.sampled_from(["<=", ">="])),
                           data.draw(st.integers(-2, 6)))
    after = solve_bb(tighter)
    if base.status == "infeasible":
        assert after.status == "infeasible"
    elif after.status == "optimal":
        if m.sense == "maximize":
            assert after.objective_value <= base.objective_value + 1e-6
        else:
            assert after.objective_value >= base.objective_value - 1e-6


@given(models(continuous=True))
def test_pruned_nodes_never_beat_optimum(m):
    sol = solve_bb(m, SolverOptions(record_nodes=True))
    if sol.status != "optimal":
        return
    flip = -1 if m.sense == "maximize" else 1
    internal_opt = flip * (sol.objective_value - m.constant)
    for entry in sol.node_log:
        if entry[2] in ("pruned", "pruned_parent"):
            # a discarded subtree could not have improved by more than the tolerance
            assert entry[1] >= internal_opt - 1e-6 * max(1, abs(internal_opt))
