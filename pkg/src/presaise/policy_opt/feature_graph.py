"""Layered rule graph and exhaustive rule enumeration.

Every policy feature contributes one layer holding its level nodes plus a
wildcard SKIP node; the final layer holds one node per candidate price (no
SKIP there). A source-to-sink path fixes at most one level per feature and
exactly one price: that is a decision rule. Sample coverage is evaluated by
intersecting per-(feature, level) bitsets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import FeatureSchema, ObservationSet
from ..demand_model import CounterfactualMatrix
from ..errors import BudgetExceeded, EmptyPriceRange

SKIP = "__SKIP__"


@dataclass(frozen=True)
class FeatureGraph:
    """Ordered feature layers plus the admissible price nodes."""

    feature_names: tuple[str, ...]
    feature_levels: tuple[tuple[str, ...], ...]
    prices: tuple[float, ...]        # admissible prices, ascending
    price_indices: tuple[int, ...]   # positions of those prices on the grid
    bounds: tuple[float | None, float | None] | None = None

    def path_count(self) -> int:
        count = len(self.prices)
        for lv in self.feature_levels:
            count *= len(lv) + 1  # levels plus SKIP
        return count

    def condition_combos(self) -> int:
        count = 1
        for lv in self.feature_levels:
            count *= len(lv) + 1
        return count


def build_graph(
    schema: FeatureSchema,
    price_grid: tuple[float, ...],
    bounds: tuple[float | None, float | None] | None = None,
) -> FeatureGraph:
    """Assemble the layered graph, restricting prices to optional bounds.

    A None bound end means unbounded on that side.
    """
    if schema.size == 0:
        raise ValueError("schema must have at least one feature")
    if not price_grid:
        raise ValueError("price grid must be nonempty")
    lo, hi = (None, None) if bounds is None else bounds
    kept = [(k, p) for k, p in enumerate(price_grid)
            if (lo is None or p >= lo) and (hi is None or p <= hi)]
    if not kept:
        raise EmptyPriceRange(
            f"bounds ({lo}, {hi}) exclude every grid price {list(price_grid)}")
    return FeatureGraph(
        feature_names=tuple(schema.names),
        feature_levels=tuple(tuple(lv) for lv in schema.levels),
        prices=tuple(p for _, p in kept),
        price_indices=tuple(k for k, _ in kept),
        bounds=None if bounds is None else (lo, hi),
    )


@dataclass
class Rule:
    """One decision rule: conditions (absent feature = SKIP) and a price."""

    conditions: dict[str, str]
    price: float
    price_index: int  # position on the full grid
    covered_samples: list[int]
    outcome: float  # sum of expected revenue over the covered samples

    def conditions_key(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted(self.conditions.items()))

    def to_json_dict(self) -> dict:
        return {
            "conditions": dict(sorted(self.conditions.items())),
            "price": self.price,
            "covered_count": len(self.covered_samples),
            "expected_revenue": self.outcome,
        }


class RuleSpace:
    """Shared coverage machinery for enumeration, pricing and the oracle.

    Samples with identical feature rows are collapsed into groups: every
    rule covers a group entirely or not at all, so masks, revenue sums and
    slack penalties all live at group level and expand back to sample
    indices only when building public rules.
    """

    def __init__(self, graph: FeatureGraph, feats: np.ndarray,
                 cf: CounterfactualMatrix):
        if feats.shape[0] != cf.n:
            raise ValueError("feature rows must match the counterfactuals")
        if feats.shape[1] != len(graph.feature_names):
            raise ValueError("feature columns must match the graph layers")
        self.graph = graph
        self.n_samples = feats.shape[0]
        uniq, inverse = np.unique(feats, axis=0, return_inverse=True)
        self.group_rows = uniq            # (C, F) level indices
        self.sample_group = inverse       # (N,)
        self.n_groups = uniq.shape[0]
        self.group_members: list[np.ndarray] = [
            np.flatnonzero(inverse == c) for c in range(self.n_groups)]
        # summed expected revenue per group and admissible price
        gg_full = np.zeros((self.n_groups, cf.g.shape[1]))
        np.add.at(gg_full, inverse, cf.g)
        self.group_g = gg_full[:, list(graph.price_indices)]  # (C, K_adm)
        self.full_group_g = gg_full
        self._level_masks: dict[tuple[int, int], int] = {}
        for f in range(feats.shape[1]):
            for k in range(len(graph.feature_levels[f])):
                mask = 0
                for c in np.flatnonzero(uniq[:, f] == k):
                    mask |= 1 << int(c)
                self._level_masks[(f, k)] = mask
        self.all_groups_mask = (1 << self.n_groups) - 1

    def level_mask(self, f: int, k: int) -> int:
        return self._level_masks[(f, k)]

    def mask_to_group_ids(self, mask: int) -> list[int]:
        out = []
        c = 0
        while mask:
            if mask & 1:
                out.append(c)
            mask >>= 1
            c += 1
        return out

    def mask_to_samples(self, mask: int) -> list[int]:
        out: list[int] = []
        for c in self.mask_to_group_ids(mask):
            out.extend(int(i) for i in self.group_members[c])
        return sorted(out)

    def conditions_mask(self, conditions: dict[str, str]) -> int:
        mask = self.all_groups_mask
        for name, level in conditions.items():
            f = self.graph.feature_names.index(name)
            k = self.graph.feature_levels[f].index(level)
            mask &= self.level_mask(f, k)
        return mask

    def iter_condition_combos(self):
        """Yield (conditions dict, group mask), SKIP-first per layer."""
        def rec(f: int, conds: dict[str, str], mask: int):
            if f == len(self.graph.feature_names):
                yield dict(conds), mask
                return
            yield from rec(f + 1, conds, mask)  # SKIP this feature
            name = self.graph.feature_names[f]
            for k, level in enumerate(self.graph.feature_levels[f]):
                conds[name] = level
                yield from rec(f + 1, conds, mask & self.level_mask(f, k))
                del conds[name]
        yield from rec(0, {}, self.all_groups_mask)

    def rule_outcome(self, mask: int, adm_price_pos: int) -> float:
        ids = self.mask_to_group_ids(mask)
        return float(self.group_g[ids, adm_price_pos].sum()) if ids else 0.0

    def make_rule(self, conditions: dict[str, str], adm_price_pos: int,
                  mask: int) -> Rule:
        return Rule(
            conditions=dict(conditions),
            price=self.graph.prices[adm_price_pos],
            price_index=self.graph.price_indices[adm_price_pos],
            covered_samples=self.mask_to_samples(mask),
            outcome=self.rule_outcome(mask, adm_price_pos),
        )


def enumerate_rules(
    graph: FeatureGraph,
    obs: ObservationSet,
    cf: CounterfactualMatrix,
    path_budget: int = 100_000,
) -> list[Rule]:
    """Materialize every source-to-sink path as a Rule, within a budget."""
    count = graph.path_count()
    if count > path_budget:
        raise BudgetExceeded(count, path_budget)
    space = RuleSpace(graph, obs.feature_indices(), cf)
    rules: list[Rule] = []
    for conds, mask in space.iter_condition_combos():
        for pos in range(len(graph.prices)):
            rules.append(space.make_rule(conds, pos, mask))
    return rules
