"""Support recovery from confounded observational data.

Regresses the outcome on all covariates separately per action while tying the
actions together through a row-group sparsity penalty (MCP / SCAD / group-L1)
on the coefficient matrix. Covariates whose coefficient row survives are the
joint predictor/confounder support used by the downstream demand model.

Solved with proximal gradient descent: a gradient step on the per-action
quadratic losses, then an exact group prox on every coefficient row, with an
optional projection onto an l1,2 ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import ObservationSet
from .errors import EmptyBlock, NonFinite

SUPPORT_THRESHOLD = 1e-6


@dataclass
class ActionPartitionedData:
    """Per-action design blocks sharing one covariate axis.

    ``blocks[j] = (X_j, y_j)`` with X_j of shape (n_j, p). ``column_names``
    labels the shared covariate axis; ``constant_columns[j]`` lists columns
    that had zero variance in block j (zeroed by :func:`standardize`).
    """

    blocks: list[tuple[np.ndarray, np.ndarray]]
    column_names: list[str]
    constant_columns: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.blocks:
            raise EmptyBlock("no action blocks")
        p = self.blocks[0][0].shape[1]
        for X, y in self.blocks:
            if X.shape[0] == 0:
                raise EmptyBlock("action block with zero samples")
            if X.shape[1] != p:
                raise ValueError("all blocks must share the covariate count")
            if y.shape[0] != X.shape[0]:
                raise ValueError("X and y row counts differ")
        if len(self.column_names) != p:
            raise ValueError("column_names must have length p")

    @property
    def p(self) -> int:
        return self.blocks[0][0].shape[1]

    @property
    def q(self) -> int:
        return len(self.blocks)

    @property
    def n_total(self) -> int:
        return sum(X.shape[0] for X, _ in self.blocks)


@dataclass(frozen=True)
class PenaltyConfig:
    """Row-norm penalty: kind, strength, concavity and optional l1,2 radius."""

    kind: str  # "MCP" | "SCAD" | "L1"
    lam: float
    gamma: float = 3.0
    radius: float = math.inf

    def __post_init__(self):
        if self.kind not in ("MCP", "SCAD", "L1"):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.lam <= 0:
            raise ValueError("lambda must be > 0")
        if self.kind == "MCP" and self.gamma <= 1:
            raise ValueError("MCP requires gamma > 1")
        if self.kind == "SCAD" and self.gamma <= 2:
            raise ValueError("SCAD requires gamma > 2")
        if self.radius <= 0:
            raise ValueError("radius must be > 0")


@dataclass
class SelectionResult:
    theta: np.ndarray  # (p, q)
    support: list[int]  # ascending covariate indices (0-based)
    row_norms: np.ndarray  # (p,)
    iterations: int
    converged: bool
    column_names: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "support": list(self.support),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
        }


# ---------------------------------------------------------------------------
# penalty values and the exact scalar prox
# ---------------------------------------------------------------------------

def penalty_value(t: np.ndarray | float, pen: PenaltyConfig) -> np.ndarray | float:
    """rho_lambda(t) for t >= 0, elementwise."""
    t = np.asarray(t, dtype=float)
    lam, g = pen.lam, pen.gamma
    if pen.kind == "L1":
        return lam * t
    if pen.kind == "MCP":
        return np.where(t <= g * lam, lam * t - t * t / (2 * g),
                        g * lam * lam / 2)
    # SCAD
    mid = (2 * g * lam * t - t * t - lam * lam) / (2 * (g - 1))
    return np.where(t <= lam, lam * t,
                    np.where(t <= g * lam, mid, lam * lam * (g + 1) / 2))


def _prox_magnitude(r: np.ndarray, step: float, pen: PenaltyConfig) -> np.ndarray:
    """argmin_{s>=0} (s-r)^2/(2*step) + rho(s), vectorized over r >= 0.

    Evaluates every piecewise-stationary point plus the breakpoints, so it is
    exact for all step/gamma combinations including the concave regimes.
    """
    r = np.asarray(r, dtype=float)
    lam, g = pen.lam, pen.gamma
    if pen.kind == "L1":
        return np.maximum(r - step * lam, 0.0)

    cands = [np.zeros_like(r), r]
    if pen.kind == "MCP":
        cands.append(np.full_like(r, g * lam))
        denom = 1.0 - step / g
        if denom > 0:
            cands.append((r - step * lam) / denom)
    else:  # SCAD
        cands.append(np.full_like(r, lam))
        cands.append(np.full_like(r, g * lam))
        cands.append(r - step * lam)
        denom = g - 1.0 - step
        if denom > 0:
            cands.append(((g - 1.0) * r - step * g * lam) / denom)
    C = np.stack(cands, axis=-1)
    C = np.maximum(C, 0.0)
    F = (C - r[..., None]) ** 2 / (2 * step) + penalty_value(C, pen)
    best = F.min(axis=-1, keepdims=True)
    # ties resolved toward the smaller magnitude for determinism
    return np.where(F <= best, C, np.inf).min(axis=-1)


def group_prox(row: np.ndarray, step: float, pen: PenaltyConfig) -> np.ndarray:
    """Prox of rho(||.||_2) at `row`: a nonnegative rescaling of `row`."""
    if step <= 0:
        raise ValueError("step must be > 0")
    row = np.asarray(row, dtype=float)
    r = float(np.linalg.norm(row))
    if r == 0.0:
        return np.zeros_like(row)
    s = float(_prox_magnitude(np.array([r]), step, pen)[0])
    return row * (s / r)


# ---------------------------------------------------------------------------
# standardization, Lipschitz constant, ball projection
# ---------------------------------------------------------------------------

def standardize(raw: ActionPartitionedData) -> ActionPartitionedData:
    """Center/scale every column of every block to mean 0, variance 1.

    Constant columns are zeroed and recorded instead of divided by zero.
    """
    blocks = []
    flagged: list[list[int]] = []
    for X, y in raw.blocks:
        if X.shape[0] == 0:
            raise EmptyBlock("cannot standardize an empty block")
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        const = np.flatnonzero(sd == 0.0)
        safe = np.where(sd == 0.0, 1.0, sd)
        Z = (X - mu) / safe
        if const.size:
            Z[:, const] = 0.0
        blocks.append((Z, np.asarray(y, dtype=float)))
        flagged.append(const.tolist())
    return ActionPartitionedData(blocks=blocks,
                                 column_names=list(raw.column_names),
                                 constant_columns=flagged)


def lipschitz_constant(grams: Sequence[np.ndarray], iters: int = 50,
                       tol: float = 1e-9) -> float:
    """max_j largest eigenvalue of the gram blocks, by power iteration."""
    worst = 0.0
    for G in grams:
        p = G.shape[0]
        v = np.ones(p) + 1e-4 * np.arange(p)  # deterministic, not eigvec-aligned
        v /= np.linalg.norm(v)
        lam_prev = 0.0
        for _ in range(iters):
            w = G @ v
            lam = float(np.linalg.norm(w))
            if lam == 0.0:
                break
            v = w / lam
            if abs(lam - lam_prev) <= tol * max(1.0, lam):
                break
            lam_prev = lam
        worst = max(worst, lam)
    return worst


def project_l12_ball(theta: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto { theta : sum_i ||theta_i:||_2 <= radius }."""
    norms = np.linalg.norm(theta, axis=1)
    total = norms.sum()
    if total <= radius:
        return theta
    # project the norm vector onto the simplex of size `radius`
    u = np.sort(norms)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, norms.size + 1)
    cond = u - (css - radius) / ks > 0
    rho = int(np.max(np.flatnonzero(cond))) + 1
    tau = (css[rho - 1] - radius) / rho
    shrunk = np.maximum(norms - tau, 0.0)
    scale = np.where(norms > 0, shrunk / np.where(norms > 0, norms, 1.0), 0.0)
    return theta * scale[:, None]


# ---------------------------------------------------------------------------
# the solver
# ---------------------------------------------------------------------------

def objective(theta: np.ndarray, grams: Sequence[np.ndarray],
              linears: Sequence[np.ndarray], pen: PenaltyConfig) -> float:
    smooth = 0.0
    for j, (G, h) in enumerate(zip(grams, linears)):
        col = theta[:, j]
        smooth += 0.5 * float(col @ (G @ col)) - float(h @ col)
    return smooth + float(np.sum(penalty_value(np.linalg.norm(theta, axis=1), pen)))


def fit_group_sparse(data: ActionPartitionedData, pen: PenaltyConfig,
                     tol: float = 1e-8, max_iter: int = 5000,
                     objective_trace: list[float] | None = None,
                     ) -> SelectionResult:
    """Proximal gradient descent on the penalized per-action regression.

    The smooth loss divides every block by the total sample count n, so all
    actions share one scale regardless of block imbalance. When given,
    ``objective_trace`` receives the objective value after every iterate.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    n = data.n_total
    p, q = data.p, data.q
    grams = [X.T @ X / n for X, _ in data.blocks]
    linears = [X.T @ y / n for X, y in data.blocks]

    L = lipschitz_constant(grams)
    # step must not exceed 1/L or the surrogate stops majorizing the loss
    step = 1.0 / (L * (1.0 + 1e-9)) if L > 0 else 1.0

    theta = np.zeros((p, q))
    converged = False
    iterations = 0
    for it in range(1, max_iter + 1):
        iterations = it
        grad = np.empty_like(theta)
        for j in range(q):
            grad[:, j] = grams[j] @ theta[:, j] - linears[j]
        z = theta - step * grad
        norms = np.linalg.norm(z, axis=1)
        mags = _prox_magnitude(norms, step, pen)
        scale = np.where(norms > 0, mags / np.where(norms > 0, norms, 1.0), 0.0)
        new_theta = z * scale[:, None]
        if math.isfinite(pen.radius):
            new_theta = project_l12_ball(new_theta, pen.radius)

        obj = objective(new_theta, grams, linears, pen)
        if not math.isfinite(obj):
            raise NonFinite(f"objective became {obj} at iteration {it}")
        if objective_trace is not None:
            objective_trace.append(obj)

        denom = max(1.0, float(np.linalg.norm(theta)))
        rel_change = float(np.linalg.norm(new_theta - theta)) / denom
        theta = new_theta
        if rel_change < tol:
            converged = True
            break

    row_norms = np.linalg.norm(theta, axis=1)
    support = extract_support_from_norms(row_norms, SUPPORT_THRESHOLD)
    return SelectionResult(theta=theta, support=support, row_norms=row_norms,
                           iterations=iterations, converged=converged,
                           column_names=list(data.column_names))


def extract_support_from_norms(row_norms: np.ndarray, threshold: float) -> list[int]:
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return np.flatnonzero(row_norms > threshold).tolist()


def extract_support(result: SelectionResult, threshold: float = SUPPORT_THRESHOLD,
                    ) -> list[int]:
    """Covariate indices whose coefficient row norm strictly exceeds threshold."""
    return extract_support_from_norms(result.row_norms, threshold)


# ---------------------------------------------------------------------------
# bridging from ObservationSet
# ---------------------------------------------------------------------------

def partition_by_action(obs: ObservationSet) -> ActionPartitionedData:
    """Split an ObservationSet into per-price design blocks.

    Binary features contribute one 0/1 column; features with L > 2 levels
    contribute L-1 indicator columns against the first level as reference,
    keeping standardized blocks free of exact collinearity.
    """
    idx = obs.feature_indices()
    cols: list[np.ndarray] = []
    names: list[str] = []
    for f, (name, lv) in enumerate(zip(obs.schema.names, obs.schema.levels)):
        if len(lv) == 1:
            continue  # uninformative, drop
        if len(lv) == 2:
            cols.append((idx[:, f] == 1).astype(float))
            names.append(name)
        else:
            for k in range(1, len(lv)):
                cols.append((idx[:, f] == k).astype(float))
                names.append(f"{name}={lv[k]}")
    X = np.column_stack(cols) if cols else np.zeros((len(obs), 0))
    y = obs.outcomes()
    actions = obs.price_level_indices()
    blocks = []
    for k in range(len(obs.price_grid)):
        mask = actions == k
        if mask.any():
            blocks.append((X[mask], y[mask]))
    return ActionPartitionedData(blocks=blocks, column_names=names)
