"""Search strategies and the name -> class registry used by configs."""

from __future__ import annotations

from .base import (GpSettings, SamplingSettings, SearchContext, Strategy, StrategyDecision,
                   params_from_dict, snapshot_estimates)
from .legs import BaselineStrategy, GradientStrategy
from .nyu_bo import NyuBoStrategy
from .uga_gp import UgaGpStrategy
from .unt_recursive import UntRecursiveStrategy

STRATEGIES: dict[str, type[Strategy]] = {
    "baseline": BaselineStrategy,
    "gradient": GradientStrategy,
    "nyu_bo": NyuBoStrategy,
    "unt_recursive": UntRecursiveStrategy,
    "uga_gp": UgaGpStrategy,
}

# the three finalist teams plus the organizer sample code
COMPETITION_STRATEGIES = ("baseline", "nyu_bo", "unt_recursive", "uga_gp")


def make_strategy(name: str, ctx: SearchContext, params: dict | None = None) -> Strategy:
    """Instantiate a strategy by config name; unknown parameter keys raise KeyError."""
    try:
        cls = STRATEGIES[name]
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}; expected one of {sorted(STRATEGIES)}") from None
    return cls(ctx, params_from_dict(type(cls.default_params()), params))


__all__ = [
    "STRATEGIES", "COMPETITION_STRATEGIES", "make_strategy", "Strategy", "StrategyDecision",
    "SearchContext", "GpSettings", "SamplingSettings", "snapshot_estimates",
]
