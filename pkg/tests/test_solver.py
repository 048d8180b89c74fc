import json

import numpy as np
import pytest

from presaise.demand_model import CounterfactualMatrix
from presaise.errors import EmptyPriceRange, TooLarge
from presaise.policy_opt import (
    SolveLimits,
    build_graph,
    clamp_policy,
    default_slack_penalty,
    enumerate_rules,
    policy_assignment,
    solve_brute_force,
    solve_column_generation,
)
from presaise.policy_opt.solver import max_reduced_cost_exact

from conftest import make_observation_set, random_policy_instance


def _three_sample_instance():
    rows = [(("a",), 10.0, 1), (("b",), 10.0, 0), (("a",), 10.0, 1)]
    obs = make_observation_set(("f",), (("a", "b"),), rows, (10.0, 20.0))
    f = np.array([[0.5, 0.2], [0.4, 0.1], [0.8, 0.6]])
    g = np.array([10.0, 20.0])[None, :] * f
    return obs, CounterfactualMatrix(f=f, g=g, price_grid=(10.0, 20.0))


# ---------------------------------------------------------------------------
# brute force oracle
# ---------------------------------------------------------------------------

def test_brute_force_m1_is_argmax():
    obs, cf = _three_sample_instance()
    graph = build_graph(obs.schema, obs.price_grid)
    rules = enumerate_rules(graph, obs, cf)
    pen = default_slack_penalty(cf)
    best = solve_brute_force(rules, 1, pen)
    # hand check: the all-skip rule at price 20 earns 18 with nothing slack
    assert best.objective == pytest.approx(18.0)
    assert len(best.rules) == 1
    assert best.rules[0].conditions == {}
    assert best.rules[0].price == 20.0


def test_brute_force_hand_instance_m2():
    obs, cf = _three_sample_instance()
    graph = build_graph(obs.schema, obs.price_grid)
    rules = enumerate_rules(graph, obs, cf)
    pen = default_slack_penalty(cf)  # (10, 8, 24)
    np.testing.assert_allclose(pen, [10.0, 8.0, 24.0])
    best = solve_brute_force(rules, 2, pen)
    # hand check: f=a @ 20 (r=16) plus f=b @ 10 (r=4) partition all samples
    assert best.objective == pytest.approx(20.0)
    chosen = {(tuple(sorted(r.conditions.items())), r.price)
              for r in best.rules}
    assert chosen == {((("f", "a"),), 20.0), ((("f", "b"),), 10.0)}


def test_brute_force_free_slack():
    obs, cf = _three_sample_instance()
    graph = build_graph(obs.schema, obs.price_grid)
    rules = enumerate_rules(graph, obs, cf)
    best = solve_brute_force(rules, 2, np.zeros(3))
    assert best.objective == pytest.approx(20.0)  # slack free, same max here


def test_brute_force_guard():
    obs, cf = random_policy_instance(0, n=10, level_counts=(4, 4, 4),
                                     n_prices=6)
    graph = build_graph(obs.schema, obs.price_grid)
    rules = enumerate_rules(graph, obs, cf, path_budget=10_000)
    with pytest.raises(TooLarge):
        solve_brute_force(rules, 3, default_slack_penalty(cf))


# ---------------------------------------------------------------------------
# column generation
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(10))
def test_column_generation_matches_oracle(seed):
    obs, cf = random_policy_instance(seed)
    graph = build_graph(obs.schema, obs.price_grid)
    rules = enumerate_rules(graph, obs, cf)
    pen = default_slack_penalty(cf)
    for m in (1, 2, 3):
        bf = solve_brute_force(rules, m, pen)
        cg = solve_column_generation(graph, obs, cf, m, slack_penalty=pen)
        assert cg.objective == pytest.approx(bf.objective, abs=1e-6)
        cg.validate_partition(len(obs))
        assert len(cg.rules) <= m
        assert cg.proven_optimal


def test_m1_equals_best_single_rule():
    obs, cf = random_policy_instance(42)
    graph = build_graph(obs.schema, obs.price_grid)
    rules = enumerate_rules(graph, obs, cf)
    pen = default_slack_penalty(cf)
    total = float(pen.sum())
    best_single = max(
        r.outcome - (total - float(pen[r.covered_samples].sum()))
        for r in rules)
    cg = solve_column_generation(graph, obs, cf, 1, slack_penalty=pen)
    assert cg.objective == pytest.approx(best_single, abs=1e-9)


def test_m_equals_n_gives_per_sample_argmax():
    rng = np.random.default_rng(3)
    levels = (("x", "y", "z"), ("u", "v"))
    combos = [(a, b) for a in levels[0] for b in levels[1]]
    grid = (100.0, 200.0, 300.0)
    rows = [(c, 100.0, 1) for c in combos]
    obs = make_observation_set(("a", "b"), levels, rows, grid)
    f = rng.uniform(0.1, 0.9, (len(rows), 3))
    cf = CounterfactualMatrix(f=f, g=np.asarray(grid)[None, :] * f,
                              price_grid=grid)
    graph = build_graph(obs.schema, grid)
    cg = solve_column_generation(graph, obs, cf, m=len(rows))
    assert cg.objective == pytest.approx(float(cf.g.max(axis=1).sum()),
                                         abs=1e-9)
    assert cg.uncovered == []


def test_objective_monotone_in_m():
    obs, cf = random_policy_instance(7, n=30, level_counts=(3, 2, 2),
                                     n_prices=4)
    graph = build_graph(obs.schema, obs.price_grid)
    pen = default_slack_penalty(cf)
    objs = [solve_column_generation(graph, obs, cf, m,
                                    slack_penalty=pen).objective
            for m in range(1, 7)]
    assert all(b >= a - 1e-9 for a, b in zip(objs, objs[1:]))


def test_no_improving_path_at_termination():
    for seed in range(5):
        obs, cf = random_policy_instance(seed, n=20)
        graph = build_graph(obs.schema, obs.price_grid)
        diag: dict = {}
        solve_column_generation(graph, obs, cf, 2, diagnostics=diag)
        assert diag["exact"]
        rc = max_reduced_cost_exact(diag["space"], diag["duals"], diag["mu"])
        assert rc <= 1e-6


def test_deterministic_output():
    obs, cf = random_policy_instance(11)
    graph = build_graph(obs.schema, obs.price_grid)
    a = solve_column_generation(graph, obs, cf, 2)
    b = solve_column_generation(graph, obs, cf, 2)
    assert json.dumps(a.to_json_dict(), sort_keys=True) == \
        json.dumps(b.to_json_dict(), sort_keys=True)


def test_policy_wire_format():
    obs, cf = random_policy_instance(13)
    graph = build_graph(obs.schema, obs.price_grid, bounds=(150.0, None))
    pol = solve_column_generation(graph, obs, cf, 2, market_id="AAA-BBB")
    doc = pol.to_json_dict()
    assert set(doc) == {"market", "rules", "objective", "m", "bounds"}
    assert doc["market"] == "AAA-BBB"
    assert doc["bounds"] == {"min_price": 150.0, "max_price": None}
    for rule in doc["rules"]:
        assert set(rule) == {"conditions", "price", "covered_count",
                             "expected_revenue"}


def test_beam_mode_is_flagged():
    obs, cf = random_policy_instance(17, n=20, level_counts=(3, 3, 2, 2),
                                     n_prices=5)
    graph = build_graph(obs.schema, obs.price_grid)
    limits = SolveLimits(path_budget=100)  # force the heuristic search
    pol = solve_column_generation(graph, obs, cf, 2, limits=limits)
    assert not pol.proven_optimal
    pol.validate_partition(len(obs))


# ---------------------------------------------------------------------------
# clamping
# ---------------------------------------------------------------------------

def test_clamp_containing_bounds_is_identity():
    obs, cf = random_policy_instance(19)
    graph = build_graph(obs.schema, obs.price_grid)
    pol = solve_column_generation(graph, obs, cf, 2)
    lo, hi = min(cf.price_grid) - 1, max(cf.price_grid) + 1
    clamped, kpi = clamp_policy(pol, (lo, hi), cf)
    assert kpi.uplift_vs_base == 0.0
    assert [r.price for r in clamped.rules] == [r.price for r in pol.rules]


def test_clamp_reprices_to_largest_grid_price_below_cap():
    rows = [(("a",), 445.0, 1), (("b",), 635.0, 1)]
    obs = make_observation_set(("f",), (("a", "b"),), rows,
                               (445.0, 510.0, 635.0))
    f = np.full((2, 3), 0.5)
    cf = CounterfactualMatrix(f=f, g=np.array([445.0, 510.0, 635.0]) * f,
                              price_grid=(445.0, 510.0, 635.0))
    graph = build_graph(obs.schema, obs.price_grid)
    rules = enumerate_rules(graph, obs, cf)
    hi_rule = next(r for r in rules
                   if r.conditions.get("f") == "b" and r.price == 635.0)
    from presaise.policy_opt import PricingPolicy
    pol = PricingPolicy(rules=[hi_rule], uncovered=[0], objective=0.0,
                        market_id="", m=1)
    clamped, _ = clamp_policy(pol, (None, 550.0), cf)
    assert clamped.rules[0].price == 510.0  # largest grid price <= 550


def test_clamp_empty_range():
    obs, cf = random_policy_instance(23)
    graph = build_graph(obs.schema, obs.price_grid)
    pol = solve_column_generation(graph, obs, cf, 1)
    with pytest.raises(EmptyPriceRange):
        clamp_policy(pol, (max(cf.price_grid) + 1, None), cf)
    with pytest.raises(EmptyPriceRange):
        clamp_policy(pol, (None, min(cf.price_grid) - 1), cf)


def test_clamp_keeps_coverage():
    obs, cf = random_policy_instance(29)
    graph = build_graph(obs.schema, obs.price_grid)
    pol = solve_column_generation(graph, obs, cf, 3)
    clamped, _ = clamp_policy(pol, (cf.price_grid[1], cf.price_grid[-2]), cf)
    assert [r.covered_samples for r in clamped.rules] == \
        [r.covered_samples for r in pol.rules]
    assert all(cf.price_grid[1] <= r.price <= cf.price_grid[-2]
               for r in clamped.rules)


def test_policy_assignment_fallback():
    obs, cf = random_policy_instance(31)
    graph = build_graph(obs.schema, obs.price_grid)
    pol = solve_column_generation(graph, obs, cf, 2)
    assign = policy_assignment(pol, len(obs), fallback_index=1)
    for r in pol.rules:
        assert (assign[r.covered_samples] == r.price_index).all()
    for i in pol.uncovered:
        assert assign[i] == 1
