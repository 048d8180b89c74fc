import math

import numpy as np
import pytest

from presaise import datagen
from presaise.demand_model import (
    CounterfactualMatrix,
    DemandFit,
    counterfactuals,
    evaluate_policy,
    fit_demand,
    log_loss_and_grad,
)

from conftest import make_observation_set


def ref_sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def _tiny_obs(outcomes, prices=None, grid=(100.0, 200.0)):
    prices = prices or [grid[0]] * len(outcomes)
    rows = [(("a",), p, y) for p, y in zip(prices, outcomes)]
    return make_observation_set(("f0",), (("a", "b"),), rows, grid)


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def test_degenerate_all_purchased():
    obs = _tiny_obs([1] * 40)
    fit = fit_demand(obs, [0])
    assert fit.degenerate
    p = fit.predict_proba({"f0": "a"}, 150.0)
    assert p > 0.99
    assert 0.0 < p < 1.0
    assert math.isfinite(fit.train_log_loss)


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(0)
    for _ in range(10):
        n, d = 40, 6
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, n).astype(float)
        w = rng.normal(size=d)
        reg = float(rng.uniform(0.0, 0.1))
        _, grad = log_loss_and_grad(w, X, y, reg)
        h = 1e-5
        fd = np.empty(d)
        for k in range(d):
            e = np.zeros(d)
            e[k] = h
            lp, _ = log_loss_and_grad(w + e, X, y, reg)
            lm, _ = log_loss_and_grad(w - e, X, y, reg)
            fd[k] = (lp - lm) / (2 * h)
        rel = np.abs(grad - fd) / np.maximum(np.abs(grad), 1e-8)
        assert rel.max() < 1e-5


def test_fit_converges_to_small_gradient():
    obs, _ = datagen.generate_market(n=500, seed=1)
    fit = fit_demand(obs, [0, 1, 2])
    # rebuild the design and check the stationarity the trainer promises
    from presaise.demand_model import _encode
    X, names, center, scale = _encode(obs, [0, 1, 2])
    w = [fit.intercept]
    for feat, lv in names[1:-1]:
        w.append(fit.level_weights[feat][lv])
    w.append(fit.price_weight)
    _, grad = log_loss_and_grad(np.array(w), X, obs.outcomes(), 1e-3)
    assert np.linalg.norm(grad, ord=np.inf) < 1e-7


def test_fitted_price_slope_is_negative():
    obs, _ = datagen.generate_market(n=800, seed=3)
    fit = fit_demand(obs, [0, 1, 2])
    assert fit.price_weight < 0


def test_fit_is_deterministic():
    obs, _ = datagen.generate_market(n=300, seed=5)
    a = fit_demand(obs, [0, 1, 2])
    b = fit_demand(obs, [0, 1, 2])
    assert a.intercept == b.intercept
    assert a.price_weight == b.price_weight
    assert a.level_weights == b.level_weights


def test_selected_index_validation():
    obs = _tiny_obs([0, 1] * 10)
    with pytest.raises(ValueError):
        fit_demand(obs, [4])


# ---------------------------------------------------------------------------
# counterfactuals
# ---------------------------------------------------------------------------

def _hand_fit(grid):
    # raw score: -0.01 * price, planted via center 0 / scale 100 / weight -1
    return DemandFit(intercept=0.0, level_weights={"f0": {}},
                     price_weight=-1.0, price_center=0.0, price_scale=100.0,
                     train_log_loss=0.0, selected_features=["f0"])


def test_counterfactuals_hand_checked_sigmoids():
    grid = (100.0, 200.0)
    obs = _tiny_obs([1], prices=[100.0], grid=grid)
    cf = counterfactuals(_hand_fit(grid), obs)
    f1, f2 = ref_sigmoid(-1.0), ref_sigmoid(-2.0)
    np.testing.assert_allclose(cf.f[0], [f1, f2], rtol=0, atol=1e-15)
    np.testing.assert_allclose(cf.g[0], [100.0 * f1, 200.0 * f2],
                               rtol=0, atol=1e-13)


def test_zero_price_gives_zero_revenue_column():
    grid = (0.0, 150.0)
    obs = _tiny_obs([1, 0], prices=[150.0, 150.0], grid=grid)
    cf = counterfactuals(_hand_fit(grid), obs)
    np.testing.assert_array_equal(cf.g[:, 0], 0.0)


def test_revenue_identity_exact():
    obs, _ = datagen.generate_market(n=200, seed=7)
    fit = fit_demand(obs, [0, 1, 2])
    cf = counterfactuals(fit, obs)
    np.testing.assert_array_equal(
        cf.g, np.asarray(obs.price_grid)[None, :] * cf.f)


def test_probabilities_strictly_inside_unit_interval():
    obs, _ = datagen.generate_market(n=300, seed=9)
    fit = fit_demand(obs, [0, 1, 2])
    cf = counterfactuals(fit, obs)
    assert cf.f.min() > 0.0
    assert cf.f.max() < 1.0


def test_monotone_demand_when_slope_negative():
    obs, _ = datagen.generate_market(n=300, seed=11)
    fit = fit_demand(obs, [0, 1, 2])
    assert fit.price_weight < 0
    cf = counterfactuals(fit, obs)
    assert (np.diff(cf.f, axis=1) < 0).all()


# ---------------------------------------------------------------------------
# KPI evaluation
# ---------------------------------------------------------------------------

def test_single_sample_arithmetic():
    cf = CounterfactualMatrix(f=np.array([[0.5]]),
                              g=np.array([[0.5 * 510.0]]),
                              price_grid=(510.0,))
    kpi = evaluate_policy(cf, np.array([0]))
    assert kpi.expected_revenue_per_request == pytest.approx(255.0)
    assert kpi.conversion_rate == pytest.approx(0.5)


def test_identical_assignments_have_zero_uplift():
    rng = np.random.default_rng(1)
    f = rng.uniform(0.1, 0.9, (30, 4))
    grid = (100.0, 200.0, 300.0, 400.0)
    cf = CounterfactualMatrix(f=f, g=np.asarray(grid)[None, :] * f,
                              price_grid=grid)
    assign = rng.integers(0, 4, 30)
    kpi = evaluate_policy(cf, assign, assign)
    assert kpi.uplift_vs_base == 0.0


def test_mixture_linearity():
    rng = np.random.default_rng(2)
    n = 60
    grid = (100.0, 250.0, 400.0)
    f = rng.uniform(0.1, 0.9, (n, 3))
    cf = CounterfactualMatrix(f=f, g=np.asarray(grid)[None, :] * f,
                              price_grid=grid)
    assign = rng.integers(0, 3, n)
    part = rng.integers(0, 2, n).astype(bool)
    whole = evaluate_policy(cf, assign)
    va = evaluate_policy(
        CounterfactualMatrix(f=f[part], g=cf.g[part], price_grid=grid),
        assign[part])
    vb = evaluate_policy(
        CounterfactualMatrix(f=f[~part], g=cf.g[~part], price_grid=grid),
        assign[~part])
    wa = part.sum() / n
    mix_rev = wa * va.expected_revenue_per_request \
        + (1 - wa) * vb.expected_revenue_per_request
    mix_conv = wa * va.conversion_rate + (1 - wa) * vb.conversion_rate
    assert whole.expected_revenue_per_request == pytest.approx(mix_rev)
    assert whole.conversion_rate == pytest.approx(mix_conv)


def test_display_format_matches_dashboard_fixture():
    # the published walkthrough numbers, used purely as a formatting check
    from presaise.demand_model import KpiReport
    kpi = KpiReport(expected_revenue_per_request=28.97,
                    conversion_rate=0.061, uplift_vs_base=0.015,
                    request_count=1000, expected_purchases=61.0)
    text = kpi.format_text()
    assert "6.1%" in text
    assert "+1.5%" in text
    doc = kpi.to_json_dict()
    assert doc["uplift_pct"] == pytest.approx(1.5)
    assert set(doc) == {"revenue_per_request", "conversion_rate", "uplift_pct"}
