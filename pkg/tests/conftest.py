import numpy as np
import pytest

from presaise.data import FeatureSchema, ObservationRow, ObservationSet
from presaise.demand_model import CounterfactualMatrix


def make_observation_set(feats, levels, rows, price_grid, market=("AAA", "BBB")):
    """rows: list of (feature level tuple, price, purchased)."""
    schema = FeatureSchema(tuple(feats), tuple(tuple(l) for l in levels))
    obs_rows = [
        ObservationRow(
            features=dict(zip(feats, combo)), price=float(price),
            purchased=int(y))
        for combo, price, y in rows
    ]
    return ObservationSet(market=market, schema=schema, rows=obs_rows,
                          price_grid=tuple(float(p) for p in price_grid))


def random_policy_instance(seed, n=25, level_counts=(3, 2), n_prices=4):
    """Observation set with random features plus a random counterfactual
    table; small enough for the exhaustive solvers."""
    rng = np.random.default_rng(seed)
    feats = tuple(f"f{i}" for i in range(len(level_counts)))
    levels = tuple(tuple(f"l{j}" for j in range(L)) for L in level_counts)
    grid = tuple(sorted(rng.uniform(100.0, 700.0, n_prices).tolist()))
    rows = []
    for _ in range(n):
        combo = tuple(levels[f][rng.integers(0, level_counts[f])]
                      for f in range(len(level_counts)))
        rows.append((combo, grid[0], int(rng.integers(0, 2))))
    obs = make_observation_set(feats, levels, rows, grid)
    f = rng.uniform(0.05, 0.95, (n, n_prices))
    g = np.asarray(grid)[None, :] * f
    cf = CounterfactualMatrix(f=f, g=g, price_grid=grid)
    return obs, cf


@pytest.fixture
def obs_factory():
    return make_observation_set


@pytest.fixture
def policy_instance_factory():
    return random_policy_instance
