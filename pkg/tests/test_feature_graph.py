import numpy as np
import pytest

from presaise.data import FeatureSchema
from presaise.demand_model import CounterfactualMatrix
from presaise.errors import BudgetExceeded, EmptyPriceRange
from presaise.policy_opt import build_graph, enumerate_rules
from presaise.policy_opt.feature_graph import RuleSpace

from conftest import make_observation_set


def test_path_count_formula():
    schema = FeatureSchema(("a", "b"),
                           (("a1", "a2", "a3"), ("b1", "b2")))
    graph = build_graph(schema, (1.0, 2.0, 3.0, 4.0, 5.0))
    assert graph.path_count() == (3 + 1) * (2 + 1) * 5  # 60


def test_bounds_restrict_action_layer():
    schema = FeatureSchema(("a",), (("x", "y"),))
    graph = build_graph(schema, (200.0, 250.0, 300.0), bounds=(250.0, None))
    assert graph.prices == (250.0, 300.0)
    assert graph.price_indices == (1, 2)


def test_bounds_excluding_everything():
    schema = FeatureSchema(("a",), (("x", "y"),))
    with pytest.raises(EmptyPriceRange):
        build_graph(schema, (200.0, 250.0, 300.0), bounds=(400.0, None))
    with pytest.raises(EmptyPriceRange):
        build_graph(schema, (200.0, 250.0, 300.0), bounds=(None, 100.0))


def _three_sample_instance():
    """One binary feature, samples (a, b, a); two prices; hand-set g."""
    rows = [(("a",), 10.0, 1), (("b",), 10.0, 0), (("a",), 10.0, 1)]
    obs = make_observation_set(("f",), (("a", "b"),), rows, (10.0, 20.0))
    f = np.array([[0.5, 0.2], [0.4, 0.1], [0.8, 0.6]])
    g = np.array([10.0, 20.0])[None, :] * f
    return obs, CounterfactualMatrix(f=f, g=g, price_grid=(10.0, 20.0))


def test_all_skip_rule_covers_everything():
    obs, cf = _three_sample_instance()
    graph = build_graph(obs.schema, obs.price_grid)
    rules = enumerate_rules(graph, obs, cf)
    skips = [r for r in rules if not r.conditions]
    assert len(skips) == 2
    for r in skips:
        assert r.covered_samples == [0, 1, 2]
        assert r.outcome == pytest.approx(float(cf.g[:, r.price_index].sum()))


def test_hand_enumerated_rule_table():
    obs, cf = _three_sample_instance()
    graph = build_graph(obs.schema, obs.price_grid)
    rules = enumerate_rules(graph, obs, cf)
    assert len(rules) == 6  # (1 skip + 2 levels) x 2 prices
    table = {(tuple(sorted(r.conditions.items())), r.price):
             (r.covered_samples, round(r.outcome, 10)) for r in rules}
    # hand-computed: g[:,0] = (5, 4, 8), g[:,1] = (4, 2, 12)
    assert table[((), 10.0)] == ([0, 1, 2], 17.0)
    assert table[((), 20.0)] == ([0, 1, 2], 18.0)
    assert table[((("f", "a"),), 10.0)] == ([0, 2], 13.0)
    assert table[((("f", "a"),), 20.0)] == ([0, 2], 16.0)
    assert table[((("f", "b"),), 10.0)] == ([1], 4.0)
    assert table[((("f", "b"),), 20.0)] == ([1], 2.0)


def test_empty_coverage_rule():
    rows = [(("a",), 10.0, 1)] * 3
    obs = make_observation_set(("f",), (("a", "b"),), rows, (10.0,))
    f = np.full((3, 1), 0.5)
    cf = CounterfactualMatrix(f=f, g=10.0 * f, price_grid=(10.0,))
    graph = build_graph(obs.schema, obs.price_grid)
    rules = enumerate_rules(graph, obs, cf)
    dead = [r for r in rules if r.conditions.get("f") == "b"]
    assert len(dead) == 1
    assert dead[0].covered_samples == []
    assert dead[0].outcome == 0.0


def test_budget_exceeded_reports_count():
    schema = FeatureSchema(("a", "b"), (("1", "2", "3"), ("1", "2")))
    graph = build_graph(schema, tuple(float(p) for p in range(100, 600, 100)))
    obs, cf = _three_sample_instance()
    with pytest.raises(BudgetExceeded) as exc:
        enumerate_rules(graph, obs, cf, path_budget=10)
    assert exc.value.count == 60
    assert exc.value.budget == 10


def test_rule_space_groups_identical_rows():
    obs, cf = _three_sample_instance()
    graph = build_graph(obs.schema, obs.price_grid)
    space = RuleSpace(graph, obs.feature_indices(), cf)
    assert space.n_groups == 2  # samples 0 and 2 share a feature row
    mask = space.conditions_mask({"f": "a"})
    assert space.mask_to_samples(mask) == [0, 2]
