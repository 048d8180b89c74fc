"""Counterfactual demand: purchase-probability model and revenue KPIs.

The demand curve is an L2-regularized logistic regression on one-hot encoded
policy features plus a scaled price term. From it we tabulate, for every
sample and every candidate price, the purchase probability and the expected
revenue price * probability; policies are scored by averaging those entries
under their price assignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import ObservationSet

GRAD_TOL = 1e-7
MAX_ITER = 10_000


@dataclass
class DemandFit:
    """Fitted weights plus the encoding needed to reapply them."""

    intercept: float
    level_weights: dict[str, dict[str, float]]  # feature -> level -> weight
    price_weight: float
    # price enters as (price - center) / scale; an affine normalization keeps
    # the column well conditioned without touching the coefficient's sign
    price_center: float
    price_scale: float
    train_log_loss: float
    selected_features: list[str]
    degenerate: bool = False

    def linear_score(self, features: dict[str, str], price: float) -> float:
        s = self.intercept + self.price_weight * (
            (price - self.price_center) / self.price_scale)
        for name in self.selected_features:
            s += self.level_weights[name].get(features[name], 0.0)
        return s

    def predict_proba(self, features: dict[str, str], price: float) -> float:
        return float(_sigmoid(self.linear_score(features, price)))


@dataclass
class CounterfactualMatrix:
    """Per-sample, per-candidate-price probabilities and expected revenue."""

    f: np.ndarray  # (N, K) purchase probabilities
    g: np.ndarray  # (N, K) expected revenue, price * f
    price_grid: tuple[float, ...]

    def __post_init__(self):
        if self.f.shape != self.g.shape:
            raise ValueError("f and g must share a shape")
        if self.f.shape[1] != len(self.price_grid):
            raise ValueError("grid length must match the column count")

    @property
    def n(self) -> int:
        return self.f.shape[0]


@dataclass
class KpiReport:
    expected_revenue_per_request: float
    conversion_rate: float
    uplift_vs_base: float  # signed fraction, e.g. 0.015 == +1.5%
    request_count: int
    expected_purchases: float

    def to_json_dict(self) -> dict:
        return {
            "revenue_per_request": self.expected_revenue_per_request,
            "conversion_rate": self.conversion_rate,
            "uplift_pct": self.uplift_vs_base * 100.0,
        }

    def format_text(self) -> str:
        """Dashboard-style summary with 1-decimal percentages."""
        return (f"Expected revenue per request: "
                f"${self.expected_revenue_per_request:,.2f}. "
                f"Conversion rate: {self.conversion_rate * 100:.1f}%. "
                f"Revenue uplift vs. base policy: "
                f"{self.uplift_vs_base * 100:+.1f}%.")


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))


def _price_norm(grid: tuple[float, ...]) -> tuple[float, float]:
    lo, hi = float(grid[0]), float(grid[-1])
    center = (lo + hi) / 2.0
    scale = (hi - lo) / 2.0 or 1.0
    return center, scale


def _encode(obs: ObservationSet, selected: list[int]):
    """One-hot design: intercept | selected feature levels | scaled price."""
    idx = obs.feature_indices()
    n = len(obs)
    cols = [np.ones(n)]
    names: list[tuple[str, str]] = [("", "__intercept__")]
    for f in selected:
        name = obs.schema.names[f]
        for k, lv in enumerate(obs.schema.levels[f]):
            cols.append((idx[:, f] == k).astype(float))
            names.append((name, lv))
    center, scale = _price_norm(obs.price_grid)
    cols.append((obs.prices() - center) / scale)
    names.append(("", "__price__"))
    return np.column_stack(cols), names, center, scale


def log_loss_and_grad(w: np.ndarray, X: np.ndarray, y: np.ndarray,
                      reg: float) -> tuple[float, np.ndarray]:
    """Mean cross-entropy with L2 on everything but the intercept.

    Uses logaddexp so the loss stays finite and smooth for any weights;
    the analytic gradient here is what the finite-difference checks target.
    """
    z = X @ w
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    pen_mask = np.ones_like(w)
    pen_mask[0] = 0.0
    loss += 0.5 * reg * float(np.sum((pen_mask * w) ** 2))
    grad = X.T @ (_sigmoid(z) - y) / X.shape[0] + reg * pen_mask * w
    return loss, grad


def fit_demand(obs: ObservationSet, selected: list[int],
               reg: float = 1e-3) -> DemandFit:
    """Newton's method with step halving; deterministic for fixed input."""
    if len(obs) == 0:
        raise ValueError("empty observation set")
    if reg < 0:
        raise ValueError("reg must be >= 0")
    bad = [f for f in selected if not 0 <= f < obs.schema.size]
    if bad:
        raise ValueError(f"selected indices out of range: {bad}")
    selected = sorted(selected)
    y = obs.outcomes()

    if y.min() == y.max():
        # all outcomes identical: intercept-only fit at a clamped logit
        p_hat = min(max(float(y.mean()), 1e-6), 1.0 - 1e-6)
        intercept = math.log(p_hat / (1.0 - p_hat))
        loss = float(np.mean(np.logaddexp(0.0, intercept) - y * intercept))
        center, scale = _price_norm(obs.price_grid)
        return DemandFit(
            intercept=intercept,
            level_weights={obs.schema.names[f]: {} for f in selected},
            price_weight=0.0,
            price_center=center,
            price_scale=scale,
            train_log_loss=loss,
            selected_features=[obs.schema.names[f] for f in selected],
            degenerate=True,
        )

    X, names, price_center, price_scale = _encode(obs, selected)
    n, d = X.shape
    pen_mask = np.ones(d)
    pen_mask[0] = 0.0
    w = np.zeros(d)
    loss, grad = log_loss_and_grad(w, X, y, reg)
    for _ in range(MAX_ITER):
        if np.linalg.norm(grad, ord=np.inf) < GRAD_TOL:
            break
        p = _sigmoid(X @ w)
        W = p * (1.0 - p)
        H = (X.T * W) @ X / n + np.diag(reg * pen_mask + 1e-12)
        step = np.linalg.solve(H, grad)
        # damped Newton: halve until the loss decreases
        t = 1.0
        for _ in range(60):
            new_w = w - t * step
            new_loss, new_grad = log_loss_and_grad(new_w, X, y, reg)
            if new_loss <= loss + 1e-15:
                break
            t /= 2.0
        w, loss, grad = new_w, new_loss, new_grad

    level_weights: dict[str, dict[str, float]] = {}
    for wi, (feat, lv) in zip(w, names):
        if feat:
            level_weights.setdefault(feat, {})[lv] = float(wi)
    return DemandFit(
        intercept=float(w[0]),
        level_weights=level_weights,
        price_weight=float(w[-1]),
        price_center=price_center,
        price_scale=price_scale,
        train_log_loss=float(np.mean(np.logaddexp(0.0, X @ w) - y * (X @ w))),
        selected_features=[obs.schema.names[f] for f in selected],
        degenerate=False,
    )


def counterfactuals(fit: DemandFit, obs: ObservationSet) -> CounterfactualMatrix:
    """Tabulate f and g = price * f for every sample and grid price."""
    grid = obs.price_grid
    n, K = len(obs), len(grid)
    base = np.full(n, fit.intercept)
    for name in fit.selected_features:
        w = fit.level_weights.get(name, {})
        base += np.array([w.get(r.features[name], 0.0) for r in obs.rows])
    prices = np.asarray(grid, dtype=float)
    scores = base[:, None] + fit.price_weight * (
        (prices[None, :] - fit.price_center) / fit.price_scale)
    f = _sigmoid(scores)
    g = prices[None, :] * f
    return CounterfactualMatrix(f=f, g=g, price_grid=tuple(grid))


def evaluate_policy(cf: CounterfactualMatrix, assignment: np.ndarray,
                    base_assignment: np.ndarray | None = None) -> KpiReport:
    """KPIs of a per-sample price-index assignment, uplift against a base."""
    assignment = np.asarray(assignment, dtype=np.int64)
    if assignment.shape[0] != cf.n:
        raise ValueError("assignment length must equal the sample count")
    if assignment.min() < 0 or assignment.max() >= len(cf.price_grid):
        raise ValueError("assignment index out of grid range")
    rows = np.arange(cf.n)
    revenue = float(np.mean(cf.g[rows, assignment]))
    conversion = float(np.mean(cf.f[rows, assignment]))
    uplift = 0.0
    if base_assignment is not None:
        base_assignment = np.asarray(base_assignment, dtype=np.int64)
        base_rev = float(np.mean(cf.g[rows, base_assignment]))
        if base_rev > 0:
            uplift = (revenue - base_rev) / base_rev
    return KpiReport(
        expected_revenue_per_request=revenue,
        conversion_rate=conversion,
        uplift_vs_base=uplift,
        request_count=cf.n,
        expected_purchases=float(np.sum(cf.f[rows, assignment])),
    )
