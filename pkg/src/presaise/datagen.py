"""Synthetic booking data with a planted causal structure.

Covariates split into three groups: price-only parents (shift the historical
price propensity but not the outcome), confounders (shift both) and outcome
predictors. Purchases follow a known sigmoid demand in the confounders,
predictors and price, so every downstream estimate can be checked against the
planted truth.

Two generators:

* :func:`generate` -- p binary covariates, one design column each; feeds the
  support-recovery checks where exact index sets matter.
* :func:`generate_market` -- the three-dimensional pricing-grid schema
  (advance purchase x discount level x stay restriction) used by the service
  demo and the policy-quality oracle.

All scale parameters are our own; nothing here reproduces proprietary data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import FeatureSchema, ObservationRow, ObservationSet
from .errors import BadPartition

DEFAULT_PRICE_GRID = (415.0, 445.0, 475.0, 510.0, 550.0, 590.0, 635.0)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))


def _scaled_price(price, grid) -> np.ndarray:
    """Map grid prices onto [-1, 1] so slope magnitudes are comparable."""
    lo, hi = float(grid[0]), float(grid[-1])
    mid, span = (hi + lo) / 2.0, (hi - lo) / 2.0
    if span == 0.0:
        return np.zeros_like(np.asarray(price, dtype=float))
    return (np.asarray(price, dtype=float) - mid) / span


@dataclass
class GroundTruth:
    """Everything needed to score estimates against the planted mechanism."""

    true_support: list[int]  # X2 union X3 design-column positions
    demand_params: dict  # intercept, per-column effects, price slope (< 0)
    policy_bias: dict  # design column -> propensity shift (X1 union X2)
    x1_columns: list[int]  # price-only parents, disjoint from the support
    seed: int
    price_grid: tuple[float, ...] = ()

    def __post_init__(self):
        if self.demand_params.get("price_slope", -1.0) >= 0:
            raise ValueError("price slope must be strictly negative")
        if set(self.x1_columns) & set(self.true_support):
            raise ValueError("X1 must not intersect the true support")

    def to_json_dict(self) -> dict:
        return {
            "true_support": list(self.true_support),
            "demand_params": self.demand_params,
            "policy_bias": {str(k): v for k, v in self.policy_bias.items()},
            "x1_columns": list(self.x1_columns),
            "seed": self.seed,
            "price_grid": list(self.price_grid),
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2,
                                         sort_keys=True))


def generate(
    p: int,
    n: int,
    x1: int,
    x2: int,
    x3: int,
    price_grid: tuple[float, ...] = DEFAULT_PRICE_GRID,
    seed: int = 0,
    market: tuple[str, str] = ("AAA", "BBB"),
    effect_scale: float = 4.0,
    confound_scale: float = 0.9,
    price_slope: float = -0.9,
) -> tuple[ObservationSet, GroundTruth]:
    """Draw n samples of p binary covariates with a confounded price.

    Covariate layout: columns [0, x1) shift only the price propensity,
    [x1, x1+x2) shift propensity and outcome, [x1+x2, x1+x2+x3) shift only
    the outcome; the rest is pure noise. Deterministic per seed.
    """
    if x1 < 0 or x2 < 0 or x3 < 0 or x1 + x2 + x3 > p:
        raise BadPartition(f"sizes ({x1},{x2},{x3}) do not fit p={p}")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    grid = tuple(float(v) for v in price_grid)
    K = len(grid)

    Z = rng.integers(0, 2, size=(n, p)).astype(float)
    x1_idx = list(range(0, x1))
    x2_idx = list(range(x1, x1 + x2))
    x3_idx = list(range(x1 + x2, x1 + x2 + x3))

    # price propensity: softmax over the grid, logits tilted by X1 and X2
    ramp = np.linspace(-1.0, 1.0, K)
    bias_cols = x1_idx + x2_idx
    signs = np.array([1.0 if t % 2 == 0 else -1.0 for t in range(len(bias_cols))])
    tilt = np.zeros(n)
    for s, i in zip(signs, bias_cols):
        tilt += s * confound_scale * (Z[:, i] - 0.5)
    logits = tilt[:, None] * ramp[None, :]
    probs = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    cum = probs.cumsum(axis=1)
    u = rng.random(n)
    action = (u[:, None] > cum).sum(axis=1)
    prices = np.array([grid[a] for a in action])

    # outcome: sigmoid-linear in X2, X3 and the scaled price
    support = x2_idx + x3_idx
    betas = {i: effect_scale * (1.0 if t % 2 == 0 else -1.0)
             for t, i in enumerate(support)}
    intercept = -0.5 * sum(betas.values())
    eta = intercept + price_slope * _scaled_price(prices, grid)
    for i, b in betas.items():
        eta += b * Z[:, i]
    y = (rng.random(n) < sigmoid(eta)).astype(int)

    names = tuple(f"x{i:03d}" for i in range(p))
    schema = FeatureSchema(names=names, levels=(("0", "1"),) * p)
    rows = [
        ObservationRow(
            features={names[i]: str(int(Z[r, i])) for i in range(p)},
            price=float(prices[r]),
            purchased=int(y[r]),
        )
        for r in range(n)
    ]
    obs = ObservationSet(market=market, schema=schema, rows=rows,
                         price_grid=grid)
    truth = GroundTruth(
        true_support=sorted(support),
        demand_params={
            "intercept": intercept,
            "effects": {str(i): b for i, b in betas.items()},
            "price_slope": price_slope,
        },
        policy_bias={i: float(s * confound_scale)
                     for s, i in zip(signs, bias_cols)},
        x1_columns=x1_idx,
        seed=seed,
        price_grid=grid,
    )
    return obs, truth


# ---------------------------------------------------------------------------
# the pricing-grid demo market
# ---------------------------------------------------------------------------

MARKET_SCHEMA = FeatureSchema(
    names=("advance_purchase_days", "stay_restriction", "fare_discount_level"),
    levels=(("0-6", "7-20", "21+"), ("none", "weekend_stay"),
            ("full", "mid", "deep")),
)

# willingness-to-pay shifts per level, in logit units
_APW_EFF = (1.3, 0.5, 0.0)      # late bookers tolerate higher prices
_STAY_EFF = (0.6, 0.0)          # unrestricted fares convert better
_DISC_EFF = (0.9, 0.45, 0.0)    # full-fare buyers are least price averse
_MARKET_INTERCEPT = 0.9
_MARKET_SLOPE = -2.1
_MARKET_CONFOUND = 1.1


@dataclass
class MarketGroundTruth:
    """Planted demand surface of a demo market, with closed-form oracles."""

    schema: FeatureSchema
    price_grid: tuple[float, ...]
    intercept: float
    level_effects: tuple[tuple[float, ...], ...]
    price_slope: float
    confound_scale: float
    seed: int

    def cell_logit(self, level_idx: tuple[int, ...]) -> float:
        return self.intercept + sum(
            eff[k] for eff, k in zip(self.level_effects, level_idx))

    def true_demand(self, level_idx: tuple[int, ...], price: float) -> float:
        a = self.cell_logit(level_idx)
        pi = float(_scaled_price(price, self.price_grid))
        return float(sigmoid(a + self.price_slope * pi))

    def oracle_price_index(self, level_idx: tuple[int, ...]) -> int:
        """argmax over the grid of price * true purchase probability."""
        revenues = [p * self.true_demand(level_idx, p) for p in self.price_grid]
        return int(np.argmax(revenues))

    def true_revenue(self, cells: np.ndarray, price_idx: np.ndarray) -> float:
        """Mean ground-truth expected revenue of an assignment."""
        total = 0.0
        for lv, k in zip(cells, price_idx):
            p = self.price_grid[int(k)]
            total += p * self.true_demand(tuple(int(v) for v in lv), p)
        return total / len(price_idx)


def generate_market(
    origin: str = "DTW",
    destination: str = "JFK",
    n: int = 2000,
    seed: int = 0,
    price_grid: tuple[float, ...] = DEFAULT_PRICE_GRID,
) -> tuple[ObservationSet, MarketGroundTruth]:
    """Confounded bookings on the 18-cell pricing grid schema."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    grid = tuple(float(v) for v in price_grid)
    K = len(grid)
    schema = MARKET_SCHEMA
    effects = (_APW_EFF, _STAY_EFF, _DISC_EFF)

    idx = np.column_stack([rng.integers(0, len(lv), size=n)
                           for lv in schema.levels])
    cell_logit = np.full(n, _MARKET_INTERCEPT)
    for f, eff in enumerate(effects):
        cell_logit += np.array(eff)[idx[:, f]]

    # confounding: historically, high-willingness cells were priced higher,
    # around a house preference for the mid-grid full fare
    ramp = np.linspace(-1.0, 1.0, K)
    tilt = _MARKET_CONFOUND * (cell_logit - cell_logit.mean())
    house = -1.5 * ramp ** 2
    logits = tilt[:, None] * ramp[None, :] + house[None, :]
    probs = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    action = (rng.random(n)[:, None] > probs.cumsum(axis=1)).sum(axis=1)
    prices = np.array([grid[a] for a in action])

    eta = cell_logit + _MARKET_SLOPE * _scaled_price(prices, grid)
    y = (rng.random(n) < sigmoid(eta)).astype(int)

    rows = [
        ObservationRow(
            features={name: schema.levels[f][idx[r, f]]
                      for f, name in enumerate(schema.names)},
            price=float(prices[r]),
            purchased=int(y[r]),
        )
        for r in range(n)
    ]
    obs = ObservationSet(market=(origin, destination), schema=schema,
                         rows=rows, price_grid=grid)
    truth = MarketGroundTruth(
        schema=schema, price_grid=grid, intercept=_MARKET_INTERCEPT,
        level_effects=effects, price_slope=_MARKET_SLOPE,
        confound_scale=_MARKET_CONFOUND, seed=seed,
    )
    return obs, truth
