"""Runtime budgets, overridable through ATLAS_* environment variables."""

import os
from dataclasses import dataclass


@dataclass
class Budgets:
    search_nodes: int = 10**9      # backtracking node cap before InternalSearchBudget
    enum_budget: int = 10**8       # max subspaces a full enumeration may touch
    stabilizer_limit: int = 10**8  # max stabilizer elements counted before LimitExceeded
    group_order: int = 3**8        # largest group swept element-by-element
    mc_samples: int = 10**4        # default Monte-Carlo sample count


def _env_int(name, default):
    raw = os.environ.get(name)
    if raw is None:
        return default
    return int(raw)


def from_env() -> Budgets:
    """Budgets with ATLAS_* environment overrides applied."""
    return Budgets(
        search_nodes=_env_int("ATLAS_SEARCH_NODES", Budgets.search_nodes),
        enum_budget=_env_int("ATLAS_ENUM_BUDGET", Budgets.enum_budget),
        stabilizer_limit=_env_int("ATLAS_STAB_LIMIT", Budgets.stabilizer_limit),
        group_order=_env_int("ATLAS_GROUP_ORDER", Budgets.group_order),
        mc_samples=_env_int("ATLAS_MC_SAMPLES", Budgets.mc_samples),
    )
