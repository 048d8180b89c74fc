"""Market ingestion pipeline and flat-file persistence.

Each ingested market runs the full modeling chain once: covariate selection
on the per-price design, demand fit on the surviving features,
counterfactual tabulation and the historical base policy (the single
all-wildcard rule at the modal observed price). Everything is stored as
canonical JSON under the data directory with atomic write-then-rename.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..causal_select import (
    PenaltyConfig,
    SelectionResult,
    fit_group_sparse,
    partition_by_action,
    standardize,
)
from ..data import (
    FeatureSchema,
    ObservationRow,
    ObservationSet,
    read_markets_csv,
)
from ..demand_model import (
    CounterfactualMatrix,
    DemandFit,
    counterfactuals,
    fit_demand,
)
from ..errors import TooFewRows, UnknownMarket
from ..policy_opt import PricingPolicy
from ..policy_opt.feature_graph import Rule, RuleSpace, build_graph
from .config import MIN_ROWS_PER_MARKET


def market_key(market: tuple[str, str]) -> str:
    return f"{market[0]}-{market[1]}"


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class MarketEntry:
    obs: ObservationSet
    selection: SelectionResult
    demand_fit: DemandFit
    cf: CounterfactualMatrix
    base_policy: PricingPolicy

    def to_json_dict(self) -> dict:
        return {
            "market": list(self.obs.market),
            "schema": {
                "names": list(self.obs.schema.names),
                "levels": [list(lv) for lv in self.obs.schema.levels],
            },
            "price_grid": list(self.obs.price_grid),
            "rows": [
                {"f": [r.features[n] for n in self.obs.schema.names],
                 "price": r.price, "purchased": r.purchased}
                for r in self.obs.rows
            ],
            "selection": {
                **self.selection.to_json_dict(),
                "column_names": list(self.selection.column_names),
            },
            "demand_fit": {
                "intercept": self.demand_fit.intercept,
                "level_weights": self.demand_fit.level_weights,
                "price_weight": self.demand_fit.price_weight,
                "price_center": self.demand_fit.price_center,
                "price_scale": self.demand_fit.price_scale,
                "train_log_loss": self.demand_fit.train_log_loss,
                "selected_features": self.demand_fit.selected_features,
                "degenerate": self.demand_fit.degenerate,
            },
            "cf": {"f": self.cf.f.tolist(), "g": self.cf.g.tolist()},
            "base_policy": self.base_policy.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "MarketEntry":
        schema = FeatureSchema(
            names=tuple(doc["schema"]["names"]),
            levels=tuple(tuple(lv) for lv in doc["schema"]["levels"]),
        )
        grid = tuple(doc["price_grid"])
        obs = ObservationSet(
            market=tuple(doc["market"]),
            schema=schema,
            rows=[
                ObservationRow(
                    features=dict(zip(schema.names, r["f"])),
                    price=r["price"], purchased=r["purchased"])
                for r in doc["rows"]
            ],
            price_grid=grid,
        )
        sel = doc["selection"]
        selection = SelectionResult(
            theta=np.array(sel["theta"]),
            support=list(sel["support"]),
            row_norms=np.linalg.norm(np.array(sel["theta"]), axis=1)
            if np.array(sel["theta"]).size else np.zeros(0),
            iterations=sel["iterations"],
            converged=sel["converged"],
            column_names=list(sel["column_names"]),
        )
        df = doc["demand_fit"]
        fit = DemandFit(
            intercept=df["intercept"],
            level_weights=df["level_weights"],
            price_weight=df["price_weight"],
            price_center=df["price_center"],
            price_scale=df["price_scale"],
            train_log_loss=df["train_log_loss"],
            selected_features=df["selected_features"],
            degenerate=df["degenerate"],
        )
        cf = CounterfactualMatrix(f=np.array(doc["cf"]["f"]),
                                  g=np.array(doc["cf"]["g"]),
                                  price_grid=grid)
        base = policy_from_wire(doc["base_policy"], obs, cf)
        return cls(obs=obs, selection=selection, demand_fit=fit, cf=cf,
                   base_policy=base)


def policy_from_wire(doc: dict, obs: ObservationSet,
                     cf: CounterfactualMatrix) -> PricingPolicy:
    """Rebuild a full policy from its wire JSON by re-evaluating coverage."""
    graph = build_graph(obs.schema, obs.price_grid)
    space = RuleSpace(graph, obs.feature_indices(), cf)
    rules: list[Rule] = []
    covered: set[int] = set()
    for r in doc["rules"]:
        price = float(r["price"])
        k = obs.price_grid.index(price)
        mask = space.conditions_mask(r["conditions"])
        samples = space.mask_to_samples(mask)
        rules.append(Rule(conditions=dict(r["conditions"]), price=price,
                          price_index=k, covered_samples=samples,
                          outcome=float(cf.g[samples, k].sum())))
        covered.update(samples)
    bounds = doc.get("bounds") or {}
    lo, hi = bounds.get("min_price"), bounds.get("max_price")
    return PricingPolicy(
        rules=rules,
        uncovered=sorted(set(range(len(obs))) - covered),
        objective=float(doc["objective"]),
        market_id=doc["market"],
        m=int(doc["m"]),
        bounds_applied=None if lo is None and hi is None else (lo, hi),
        proven_optimal=False,
        status="reloaded",
    )


def make_base_policy(obs: ObservationSet,
                     cf: CounterfactualMatrix) -> PricingPolicy:
    """Single all-wildcard rule at the modal historical price (ties low)."""
    prices = obs.prices()
    values, counts = np.unique(prices, return_counts=True)
    modal = float(values[np.argmax(counts)])
    k = obs.price_grid.index(modal)
    n = len(obs)
    rule = Rule(conditions={}, price=modal, price_index=k,
                covered_samples=list(range(n)),
                outcome=float(cf.g[:, k].sum()))
    return PricingPolicy(rules=[rule], uncovered=[], objective=rule.outcome,
                         market_id=market_key(obs.market), m=1,
                         status="base")


def build_market_entry(obs: ObservationSet) -> MarketEntry:
    """Run selection -> demand -> counterfactuals -> base policy."""
    if len(obs) < MIN_ROWS_PER_MARKET:
        raise TooFewRows(
            f"market {market_key(obs.market)} has {len(obs)} rows, "
            f"needs >= {MIN_ROWS_PER_MARKET}")
    data = standardize(partition_by_action(obs))
    # the CSV schema carries only the three policy dimensions, so the
    # selection threshold leans sensitive rather than sparse here
    lam = 0.1 * math.sqrt(math.log(max(data.p, 2)) / data.n_total)
    selection = fit_group_sparse(data, PenaltyConfig("MCP", lam=lam, gamma=3.0))

    selected_features = sorted({
        obs.schema.names.index(col.split("=")[0])
        for i, col in enumerate(selection.column_names) if i in selection.support
    })
    fit = fit_demand(obs, selected_features)
    cf = counterfactuals(fit, obs)
    base = make_base_policy(obs, cf)
    return MarketEntry(obs=obs, selection=selection, demand_fit=fit, cf=cf,
                       base_policy=base)


class MarketStore:
    """Directory-backed market registry; reads share, writes replace."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.markets_dir = self.data_dir / "markets"
        self.policies_dir = self.data_dir / "policies"
        self._cache: dict[str, MarketEntry] = {}
        self._lock = threading.RLock()

    def put(self, entry: MarketEntry) -> None:
        key = market_key(entry.obs.market)
        with self._lock:
            atomic_write_text(self.markets_dir / f"{key}.json",
                              canonical_json(entry.to_json_dict()))
            atomic_write_text(
                self.policies_dir / f"{key}.base.json",
                canonical_json(entry.base_policy.to_json_dict()))
            self._cache[key] = entry

    def get(self, market: tuple[str, str]) -> MarketEntry:
        key = market_key(market)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
            path = self.markets_dir / f"{key}.json"
            if not path.is_file():
                raise UnknownMarket(f"no ingested market {key}")
            entry = MarketEntry.from_json_dict(json.loads(path.read_text()))
            self._cache[key] = entry
            return entry

    def list_markets(self) -> list[str]:
        with self._lock:
            keys = set(self._cache)
            if self.markets_dir.is_dir():
                keys.update(p.stem for p in self.markets_dir.glob("*.json"))
            return sorted(keys)

    def save_policy(self, key: str, tag: str, policy: PricingPolicy) -> Path:
        path = self.policies_dir / f"{key}.{tag}.json"
        with self._lock:
            atomic_write_text(path, canonical_json(policy.to_json_dict()))
        return path


def ingest_csv(path: str | Path, store: MarketStore,
               level_order=None) -> list[str]:
    """Parse, validate and model every market in the file; returns keys."""
    markets = read_markets_csv(path, level_order=level_order)
    entries = []
    for obs in markets.values():
        entries.append(build_market_entry(obs))  # TooFewRows rejects the file
    keys = []
    for entry in entries:
        store.put(entry)
        keys.append(market_key(entry.obs.market))
    return sorted(keys)
