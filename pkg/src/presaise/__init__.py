"""Prescriptive pricing toolkit with a conversational front door.

Subpackages:

* ``causal_select`` -- confounder/predictor support recovery via group-row-sparse
  regression with nonconvex penalties.
* ``demand_model``  -- counterfactual demand fitting and policy KPIs.
* ``policy_opt``    -- feature-graph pricing rules, set-partitioning master,
  column generation and exact oracles.
* ``agent_core``    -- intent classification, slot filling, session memory.
* ``service``       -- HTTP/CLI surface tying everything together.
* ``datagen``       -- synthetic booking data with planted causal structure.
"""

__version__ = "0.1.0"
