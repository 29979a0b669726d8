"""Scenario drivers and their registry.

Each driver takes a :class:`ScenarioConfig`, a master seed and a worker cap,
and returns a :class:`~ctrwlab.harness.ConvergenceReport`.
"""

from __future__ import annotations

from typing import Mapping, Optional

from . import cointegration, finance, insurance, langevin
from .common import Expression, ScenarioConfig
from .cointegration import run_cointegration
from .finance import run_finance
from .insurance import run_insurance
from .langevin import run_langevin

__all__ = [
    "SCENARIOS",
    "Expression",
    "ScenarioConfig",
    "make_config",
    "run_scenario",
    "run_langevin",
    "run_cointegration",
    "run_finance",
    "run_insurance",
]

SCENARIOS = {
    "langevin": (langevin.DEFAULTS, run_langevin),
    "cointegration": (cointegration.DEFAULTS, run_cointegration),
    "finance": (finance.DEFAULTS, run_finance),
    "insurance": (insurance.DEFAULTS, run_insurance),
}


def make_config(name: str, mapping: Optional[Mapping] = None) -> ScenarioConfig:
    """Defaults of scenario ``name`` overridden by ``mapping``."""
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(sorted(SCENARIOS))}")
    if name == "finance":
        return finance.make_config(mapping or {})
    return ScenarioConfig.from_mapping(name, mapping or {}, SCENARIOS[name][0])


def run_scenario(name: str, mapping: Optional[Mapping] = None, seed: int = 0, jobs: int = 1):
    cfg = make_config(name, mapping)
    return SCENARIOS[name][1](cfg, seed, jobs)
