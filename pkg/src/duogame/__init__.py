"""Hybrid duopoly-game simulator and game solving/analysis pipeline."""

__version__ = "0.1.0"

from .config import ExperimentConfig, default_config, load_config
from .game import EmpiricalGame, StrategySpace, symmetric_profile_count
from .gsa import (
    GsaSettings,
    SamplingPolicy,
    StabilityClass,
    run_gsa,
    stability_analysis,
)
from .market import ConsumerMarket, MarketParams
from .network import generate_ba_network
from .runner import (
    CompanySpec,
    CostRates,
    SimulationSettings,
    compute_payoff,
    estimate_payoffs,
    run_replication,
)
from .supply_chain import SDParams, SDState, steady_state

__all__ = [
    "CompanySpec", "ConsumerMarket", "CostRates", "EmpiricalGame",
    "ExperimentConfig", "GsaSettings", "MarketParams", "SamplingPolicy",
    "SDParams", "SDState", "SimulationSettings", "StabilityClass",
    "StrategySpace", "compute_payoff", "default_config", "estimate_payoffs",
    "generate_ba_network", "load_config", "run_gsa", "run_replication",
    "stability_analysis", "steady_state", "symmetric_profile_count",
]
