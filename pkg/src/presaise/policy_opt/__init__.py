"""Interpretable pricing policies as multiway-split rule sets.

A layered feature graph encodes every candidate decision rule (one level or
a wildcard per feature, then one price). Selecting at most m pairwise
disjoint rules that cover every sample is a set-partitioning problem with a
cardinality cap, solved here by LP-based column generation with
branch-and-bound, plus an exhaustive oracle for verification.
"""

from .feature_graph import FeatureGraph, Rule, RuleSpace, build_graph, enumerate_rules
from .simplex import LpResult, solve_lp_max
from .solver import (
    PricingPolicy,
    SolveLimits,
    clamp_policy,
    default_slack_penalty,
    policy_assignment,
    solve_brute_force,
    solve_column_generation,
)

__all__ = [
    "FeatureGraph",
    "Rule",
    "RuleSpace",
    "build_graph",
    "enumerate_rules",
    "LpResult",
    "solve_lp_max",
    "PricingPolicy",
    "SolveLimits",
    "clamp_policy",
    "default_slack_penalty",
    "policy_assignment",
    "solve_brute_force",
    "solve_column_generation",
]
