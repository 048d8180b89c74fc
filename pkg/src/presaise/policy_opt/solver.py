"""Set-partitioning solvers over the rule space.

``solve_brute_force`` enumerates every subset of at most m pairwise-disjoint
rules (the verification oracle). ``solve_column_generation`` works on the
LP relaxation of the restricted master, generating positive-reduced-cost
paths on demand; when the pricing search is exact it keeps pricing inside
the branch-and-bound nodes, so the integer answer is optimal over the full
rule space, not just the generated pool.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from ..data import ObservationSet
from ..demand_model import CounterfactualMatrix, KpiReport, evaluate_policy
from ..errors import EmptyPriceRange, TooLarge
from .feature_graph import FeatureGraph, Rule, RuleSpace
from .simplex import solve_lp_max

BRUTE_FORCE_GUARD = 2_000_000
RC_TOL = 1e-7
INT_TOL = 1e-7


@dataclass
class SolveLimits:
    path_budget: int = 100_000
    beam_width: int = 200
    max_rounds: int = 500
    per_round_columns: int = 100
    node_cap: int = 10_000
    time_budget: float | None = None


@dataclass
class PricingPolicy:
    """At most m disjoint rules; samples matched by no chosen rule stay
    uncovered and are charged their slack penalty in the objective."""

    rules: list[Rule]
    uncovered: list[int]
    objective: float
    market_id: str
    m: int
    bounds_applied: tuple[float | None, float | None] | None = None
    proven_optimal: bool = True
    status: str = "optimal"

    def to_json_dict(self) -> dict:
        lo, hi = self.bounds_applied if self.bounds_applied else (None, None)
        return {
            "market": self.market_id,
            "rules": [r.to_json_dict() for r in sorted(
                self.rules, key=lambda r: (r.conditions_key(), r.price))],
            "objective": self.objective,
            "m": self.m,
            "bounds": {"min_price": lo, "max_price": hi},
        }

    def validate_partition(self, n_samples: int) -> None:
        seen: set[int] = set()
        for r in self.rules:
            overlap = seen.intersection(r.covered_samples)
            if overlap:
                raise AssertionError(f"rules overlap on samples {sorted(overlap)[:5]}")
            seen.update(r.covered_samples)
        if seen & set(self.uncovered):
            raise AssertionError("uncovered set intersects a rule")
        if len(seen) + len(self.uncovered) != n_samples:
            raise AssertionError("rules plus uncovered do not partition the samples")
        if len(self.rules) > self.m:
            raise AssertionError("cardinality cap violated")


def default_slack_penalty(cf: CounterfactualMatrix) -> np.ndarray:
    """Per-sample penalty 2 * best achievable revenue: covering a sample is
    always preferred over slacking it whenever any rule applies."""
    return 2.0 * cf.g.max(axis=1)


def policy_assignment(policy: PricingPolicy, n_samples: int,
                      fallback_index: int = 0) -> np.ndarray:
    """Per-sample price-grid index; uncovered samples get the fallback."""
    out = np.full(n_samples, fallback_index, dtype=np.int64)
    for r in policy.rules:
        out[r.covered_samples] = r.price_index
    return out


# ---------------------------------------------------------------------------
# exhaustive oracle
# ---------------------------------------------------------------------------

def solve_brute_force(
    rules: list[Rule],
    m: int,
    slack_penalty: np.ndarray,
    market_id: str = "",
) -> PricingPolicy:
    """Exact optimum by exhaustive search over disjoint rule subsets."""
    if m < 1:
        raise ValueError("m must be >= 1")
    slack_penalty = np.asarray(slack_penalty, dtype=float)
    n = slack_penalty.shape[0]
    M = len(rules)
    subsets = sum(math.comb(M, k) for k in range(0, min(m, M) + 1))
    if subsets > BRUTE_FORCE_GUARD:
        raise TooLarge(f"{subsets} subsets exceed the guard {BRUTE_FORCE_GUARD}")

    order = sorted(range(M), key=lambda j: (rules[j].conditions_key(),
                                            rules[j].price))
    masks = []
    covers = []
    for j in order:
        mask = 0
        for i in rules[j].covered_samples:
            mask |= 1 << int(i)
        masks.append(mask)
        covers.append(float(slack_penalty[rules[j].covered_samples].sum()))
    total_pen = float(slack_penalty.sum())

    best = {"obj": -math.inf, "chosen": (), "len": 0, "key": ()}

    def consider(chosen: tuple[int, ...], r_sum: float, pen_cov: float):
        obj = r_sum - (total_pen - pen_cov)
        key = tuple(rules[order[j]].conditions_key() for j in chosen)
        cand = (obj, -len(chosen))
        incumbent = (best["obj"], -best["len"])
        if cand > incumbent or (cand == incumbent and key < best["key"]):
            best.update(obj=obj, chosen=chosen, len=len(chosen), key=key)

    def rec(start: int, chosen: tuple[int, ...], union: int,
            r_sum: float, pen_cov: float):
        consider(chosen, r_sum, pen_cov)
        if len(chosen) == m:
            return
        for j in range(start, M):
            if masks[j] & union:
                continue  # overlapping coverage is infeasible
            rec(j + 1, chosen + (j,), union | masks[j],
                r_sum + rules[order[j]].outcome, pen_cov + covers[j])

    rec(0, (), 0, 0.0, 0.0)

    chosen_rules = [rules[order[j]] for j in best["chosen"]]
    covered = set()
    for r in chosen_rules:
        covered.update(r.covered_samples)
    policy = PricingPolicy(
        rules=chosen_rules,
        uncovered=sorted(set(range(n)) - covered),
        objective=best["obj"],
        market_id=market_id,
        m=m,
    )
    policy.validate_partition(n)
    return policy


# ---------------------------------------------------------------------------
# column generation with branch-and-bound
# ---------------------------------------------------------------------------

@dataclass
class _Column:
    conds: dict[str, str]
    adm_pos: int           # index into graph.prices
    mask: int              # group bitmask
    r: float               # objective coefficient
    key: tuple             # (mask, global price index) -- dedup identity

    def conds_key(self):
        return tuple(sorted(self.conds.items()))


class _Master:
    """Restricted master over sample groups plus one cardinality row."""

    def __init__(self, space: RuleSpace, m: int, group_penalty: np.ndarray):
        self.space = space
        self.m = m
        self.group_penalty = group_penalty
        self.pool: list[_Column] = []
        self.keys: dict[tuple, int] = {}

    def add(self, col: _Column) -> bool:
        existing = self.keys.get(col.key)
        if existing is not None:
            # keep the lexicographically smallest condition set for ties
            if col.conds_key() < self.pool[existing].conds_key():
                self.pool[existing].conds = col.conds
            return False
        self.keys[col.key] = len(self.pool)
        self.pool.append(col)
        return True

    def solve_lp(self, fixed0: frozenset, fixed1: frozenset):
        """LP relaxation with branching fixes substituted into the RHS.

        Returns (lp, active_indices, base_obj) or None when infeasible.
        """
        C = self.space.n_groups
        b = np.ones(C + 1)
        b[C] = float(self.m)
        base_obj = 0.0
        for key in fixed1:
            col = self.pool[self.keys[key]]
            for cid in self.space.mask_to_group_ids(col.mask):
                b[cid] -= 1.0
            b[C] -= 1.0
            base_obj += col.r
        if np.any(b < -1e-9):
            return None
        b = np.maximum(b, 0.0)

        active = [j for j, col in enumerate(self.pool)
                  if col.key not in fixed0 and col.key not in fixed1]
        nz = len(active)
        nvars = nz + C + 1
        A = np.zeros((C + 1, nvars))
        c = np.zeros(nvars)
        for pos, j in enumerate(active):
            col = self.pool[j]
            ids = self.space.mask_to_group_ids(col.mask)
            A[ids, pos] = 1.0
            A[C, pos] = 1.0
            c[pos] = col.r
        for cid in range(C):
            A[cid, nz + cid] = 1.0
            c[nz + cid] = -float(self.group_penalty[cid])
        A[C, nvars - 1] = 1.0
        basis = list(range(nz, nvars))
        lp = solve_lp_max(A, b, c, basis)
        return lp, active, base_obj


def _price_exact(space: RuleSpace, u: np.ndarray, mu: float,
                 exclude: frozenset, rc_tol: float, top: int):
    """Enumerate every condition combo; return the best improving columns."""
    cands: dict[tuple, tuple] = {}
    for conds, mask in space.iter_condition_combos():
        ids = space.mask_to_group_ids(mask)
        if ids:
            vals = space.group_g[ids].sum(axis=0) - float(u[ids].sum()) - mu
        else:
            vals = np.full(len(space.graph.prices), -mu)
        for pos in range(vals.shape[0]):
            rc = float(vals[pos])
            if rc <= rc_tol:
                continue
            key = (mask, space.graph.price_indices[pos])
            if key in exclude:
                continue
            ck = tuple(sorted(conds.items()))
            prev = cands.get(key)
            if prev is None or ck < prev[1]:
                cands[key] = (rc, ck, dict(conds), pos, mask)
    ordered = sorted(cands.items(),
                     key=lambda kv: (-kv[1][0], len(kv[1][1]), kv[1][1]))
    out = []
    for key, (rc, _ck, conds, pos, mask) in ordered[:top]:
        r = space.rule_outcome(mask, pos)
        out.append((rc, _Column(conds=conds, adm_pos=pos, mask=mask, r=r,
                                key=key)))
    return out


def _price_beam(space: RuleSpace, u: np.ndarray, mu: float,
                exclude: frozenset, rc_tol: float, top: int, beam: int):
    """Width-limited layer sweep; keeps the states with the best optimistic
    bound max_k sum_c max(0, g_ck - u_c). Heuristic, may miss columns."""
    graph = space.graph

    def bound(mask: int) -> float:
        ids = space.mask_to_group_ids(mask)
        if not ids:
            return -mu
        gain = np.maximum(space.group_g[ids] - u[ids, None], 0.0)
        return float(gain.sum(axis=0).max()) - mu

    states: list[tuple[dict, int]] = [({}, space.all_groups_mask)]
    for f, name in enumerate(graph.feature_names):
        nxt: list[tuple[dict, int]] = []
        for conds, mask in states:
            nxt.append((conds, mask))  # SKIP
            for k, level in enumerate(graph.feature_levels[f]):
                nc = dict(conds)
                nc[name] = level
                nxt.append((nc, mask & space.level_mask(f, k)))
        if len(nxt) > beam:
            nxt.sort(key=lambda s: (-bound(s[1]),
                                    tuple(sorted(s[0].items()))))
            nxt = nxt[:beam]
        states = nxt

    cands: dict[tuple, tuple] = {}
    for conds, mask in states:
        ids = space.mask_to_group_ids(mask)
        if ids:
            vals = space.group_g[ids].sum(axis=0) - float(u[ids].sum()) - mu
        else:
            vals = np.full(len(graph.prices), -mu)
        for pos in range(vals.shape[0]):
            rc = float(vals[pos])
            if rc <= rc_tol:
                continue
            key = (mask, graph.price_indices[pos])
            if key in exclude:
                continue
            ck = tuple(sorted(conds.items()))
            prev = cands.get(key)
            if prev is None or ck < prev[1]:
                cands[key] = (rc, ck, dict(conds), pos, mask)
    ordered = sorted(cands.items(),
                     key=lambda kv: (-kv[1][0], len(kv[1][1]), kv[1][1]))
    return [(rc, _Column(conds=conds, adm_pos=pos, mask=mask,
                         r=space.rule_outcome(mask, pos), key=key))
            for key, (rc, _ck, conds, pos, mask) in ordered[:top]]


def max_reduced_cost_exact(space: RuleSpace, u: np.ndarray, mu: float) -> float:
    """Best path reduced cost by full enumeration (termination check)."""
    best = -math.inf
    for _conds, mask in space.iter_condition_combos():
        ids = space.mask_to_group_ids(mask)
        if ids:
            vals = space.group_g[ids].sum(axis=0) - float(u[ids].sum()) - mu
        else:
            vals = np.full(len(space.graph.prices), -mu)
        best = max(best, float(vals.max()))
    return best


def solve_column_generation(
    graph: FeatureGraph,
    obs: ObservationSet,
    cf: CounterfactualMatrix,
    m: int,
    slack_penalty: np.ndarray | None = None,
    limits: SolveLimits | None = None,
    market_id: str = "",
    diagnostics: dict | None = None,
) -> PricingPolicy:
    if m < 1:
        raise ValueError("m must be >= 1")
    limits = limits or SolveLimits()
    space = RuleSpace(graph, obs.feature_indices(), cf)
    n = space.n_samples
    c_sample = (np.asarray(slack_penalty, dtype=float)
                if slack_penalty is not None else default_slack_penalty(cf))
    if c_sample.shape[0] != n:
        raise ValueError("slack penalty length must equal the sample count")
    group_pen = np.array([float(c_sample[members].sum())
                          for members in space.group_members])
    exact = graph.path_count() <= limits.path_budget
    deadline = (time.monotonic() + limits.time_budget
                if limits.time_budget else None)

    master = _Master(space, m, group_pen)
    for pos in range(len(graph.prices)):
        master.add(_Column(conds={}, adm_pos=pos, mask=space.all_groups_mask,
                           r=space.rule_outcome(space.all_groups_mask, pos),
                           key=(space.all_groups_mask,
                                graph.price_indices[pos])))

    def price(u, mu, exclude):
        if exact:
            return _price_exact(space, u, mu, exclude, RC_TOL,
                                limits.per_round_columns)
        return _price_beam(space, u, mu, exclude, RC_TOL,
                           limits.per_round_columns, limits.beam_width)

    status = "optimal"

    def out_of_budget() -> bool:
        return deadline is not None and time.monotonic() > deadline

    # root column generation
    for _ in range(limits.max_rounds):
        lp, _active, _ = master.solve_lp(frozenset(), frozenset())
        u, mu = lp.duals[:-1], float(lp.duals[-1])
        if diagnostics is not None:
            diagnostics.update(space=space, duals=np.array(u), mu=mu,
                               root_objective=lp.objective, exact=exact,
                               columns=len(master.pool))
        cands = price(u, mu, frozenset())
        added = 0
        for _rc, col in cands:
            added += master.add(col)
        if added == 0:
            break
        if out_of_budget():
            status = "iteration_limit"
            break
    else:
        status = "iteration_limit"

    # branch and bound; prices inside nodes when the search is exact
    counter = 0
    incumbent: dict | None = None

    def node_bound(fixed0: frozenset, fixed1: frozenset):
        nonlocal status
        res = master.solve_lp(fixed0, fixed1)
        if res is None:
            return None
        lp, active, base_obj = res
        if exact and not out_of_budget():
            for _ in range(limits.max_rounds):
                u, mu = lp.duals[:-1], float(lp.duals[-1])
                cands = price(u, mu, fixed0 | fixed1)
                added = 0
                for _rc, col in cands:
                    added += master.add(col)
                if added == 0:
                    break
                res = master.solve_lp(fixed0, fixed1)
                lp, active, base_obj = res
            else:
                status = "iteration_limit"
        return lp, active, base_obj

    def consider_incumbent(keys: frozenset, obj: float):
        nonlocal incumbent
        conds_sig = tuple(sorted(
            (master.pool[master.keys[k]].conds_key(), k) for k in keys))
        cand = (obj, -len(keys))
        if (incumbent is None or cand > (incumbent["obj"], -len(incumbent["keys"]))
                or (cand == (incumbent["obj"], -len(incumbent["keys"]))
                    and conds_sig < incumbent["sig"])):
            incumbent = {"obj": obj, "keys": keys, "sig": conds_sig}

    root = node_bound(frozenset(), frozenset())
    if root is None:
        raise AssertionError("root master infeasible; slacks should prevent this")
    heap: list = []

    def push(fixed0, fixed1, res):
        nonlocal counter
        lp, active, base_obj = res
        bound = lp.objective + base_obj
        if incumbent is not None and bound <= incumbent["obj"] + 1e-9:
            return
        counter += 1
        heapq.heappush(heap, (-bound, counter, fixed0, fixed1, lp, active,
                              base_obj))

    push(frozenset(), frozenset(), root)
    nodes = 0
    while heap:
        nodes += 1
        if nodes > limits.node_cap or out_of_budget():
            status = "iteration_limit"
            break
        neg_bound, _cnt, fixed0, fixed1, lp, active, base_obj = heapq.heappop(heap)
        if incumbent is not None and -neg_bound <= incumbent["obj"] + 1e-9:
            continue
        zvals = lp.x[:len(active)]
        frac = np.abs(zvals - np.round(zvals))
        j_frac = int(np.argmax(frac))
        if frac[j_frac] <= INT_TOL:
            chosen = frozenset(
                {master.pool[j].key for j, z in zip(active, zvals)
                 if z > 0.5} | fixed1)
            consider_incumbent(chosen, -neg_bound)
            continue
        branch_key = master.pool[active[j_frac]].key
        for child0, child1 in ((fixed0 | {branch_key}, fixed1),
                               (fixed0, fixed1 | {branch_key})):
            res = node_bound(child0, child1)
            if res is not None:
                push(child0, child1, res)

    if incumbent is None:
        raise AssertionError("no incumbent found")

    chosen_cols = [master.pool[master.keys[k]] for k in incumbent["keys"]]
    chosen_cols.sort(key=lambda col: (col.conds_key(), col.key[1]))
    rules = [space.make_rule(col.conds, col.adm_pos, col.mask)
             for col in chosen_cols]
    covered: set[int] = set()
    for r in rules:
        covered.update(r.covered_samples)
    uncovered = sorted(set(range(n)) - covered)
    objective = sum(r.outcome for r in rules) - float(c_sample[uncovered].sum())
    policy = PricingPolicy(
        rules=rules,
        uncovered=uncovered,
        objective=objective,
        market_id=market_id,
        m=m,
        bounds_applied=graph.bounds,
        proven_optimal=(status == "optimal" and exact),
        status=status,
    )
    policy.validate_partition(n)
    return policy


# ---------------------------------------------------------------------------
# what-if clamping
# ---------------------------------------------------------------------------

def clamp_policy(
    policy: PricingPolicy,
    bounds: tuple[float | None, float | None],
    cf: CounterfactualMatrix,
    fallback_index: int = 0,
) -> tuple[PricingPolicy, KpiReport]:
    """Re-price each rule to the nearest in-bounds grid price, coverage
    unchanged, and report KPIs against the pre-clamp assignment. This is a
    what-if evaluation, not a re-optimization."""
    lo, hi = bounds
    grid = cf.price_grid
    allowed = [(k, p) for k, p in enumerate(grid)
               if (lo is None or p >= lo) and (hi is None or p <= hi)]
    if not allowed:
        raise EmptyPriceRange(
            f"bounds ({lo}, {hi}) exclude every grid price {list(grid)}")

    new_rules = []
    for r in policy.rules:
        k_new, p_new = min(allowed, key=lambda kp: (abs(kp[1] - r.price), kp[1]))
        covered = list(r.covered_samples)
        outcome = float(cf.g[covered, k_new].sum()) if covered else 0.0
        new_rules.append(Rule(conditions=dict(r.conditions), price=p_new,
                              price_index=k_new, covered_samples=covered,
                              outcome=outcome))

    n = cf.n
    base_assign = policy_assignment(policy, n, fallback_index)
    clamped = PricingPolicy(
        rules=new_rules,
        uncovered=list(policy.uncovered),
        objective=sum(r.outcome for r in new_rules)
        - float(default_slack_penalty(cf)[policy.uncovered].sum()),
        market_id=policy.market_id,
        m=policy.m,
        bounds_applied=(lo, hi),
        proven_optimal=False,
        status="clamped",
    )
    new_assign = policy_assignment(clamped, n, fallback_index)
    kpi = evaluate_policy(cf, new_assign, base_assign)
    return clamped, kpi
