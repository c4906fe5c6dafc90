"""Experiment configuration: a single JSON key tree, validated and resolved.

The shipped defaults reproduce the soft-drink case study: the full factor
table, the five-iteration refinement schedule, 70 initial samples trimmed by
10 per tail, and a 100-day replication at 200 agents. ``load_config`` fills
every omitted key with its default and rejects unknown keys by name.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, ParameterError
from .factors import FactorPlan, PlanFactor
from .gsa import GsaSettings, SamplingPolicy
from .market import MarketParams
from .runner import CompanySpec, CostRates, SimulationSettings
from .supply_chain import SDParams

SCHEMA_VERSION = 1

# the published iteration schedule: aggregated screening, detailed screening,
# then three four-level refinements of the surviving factors
DEFAULT_SCHEDULE = [
    {"g": 1, "factors": [
        {"name": "manufacturing", "levels": ["L", "H"]},
        {"name": "logistics", "levels": ["L", "H"]},
        {"name": "pricing", "levels": ["L", "H"]},
        {"name": "marketing", "levels": ["L", "H"]}]},
    {"g": 1, "factors": [
        {"name": "rm_inventory_cov", "levels": ["L", "H"]},
        {"name": "safety_stock_cov", "levels": ["L", "H"]},
        {"name": "rm_lead_time", "levels": ["L", "H"]},
        {"name": "inv_fulfillment_time", "levels": ["L", "H"]},
        {"name": "promotion_depth", "levels": ["L", "H"]},
        {"name": "advertising_intensity", "levels": ["L", "H"]}]},
    {"g": 2, "factors": [
        {"name": "rm_inventory_cov", "levels": ["L", "ML", "MH", "H"]},
        {"name": "safety_stock_cov", "levels": ["L", "ML", "MH", "H"]},
        {"name": "rm_lead_time", "levels": ["L", "ML", "MH", "H"]},
        {"name": "inv_fulfillment_time", "levels": ["L", "ML", "MH", "H"]}]},
    {"g": 2, "factors": [
        {"name": "rm_inventory_cov", "levels": ["L", "ML", "MH", "H"]},
        {"name": "safety_stock_cov", "levels": ["L", "ML", "MH", "H"]},
        {"name": "promotion_depth", "levels": ["L", "ML", "MH", "H"]},
        {"name": "inv_fulfillment_time", "levels": ["L", "ML", "MH", "H"]}]},
    {"g": 2, "factors": [
        {"name": "rm_inventory_cov", "levels": ["L", "ML", "MH", "H"]},
        {"name": "safety_stock_cov", "levels": ["L", "ML", "MH", "H"]},
        {"name": "advertising_intensity", "levels": ["L", "ML", "MH", "H"]},
        {"name": "promotion_depth", "levels": ["L", "ML", "MH", "H"]}]},
]


@dataclass
class ExperimentConfig:
    schema_version: int = SCHEMA_VERSION
    master_seed: int = 20240101
    out_dir: str = "out"
    jobs: int = 1
    settings: SimulationSettings = field(default_factory=SimulationSettings)
    sd_defaults: SDParams = field(default_factory=SDParams)
    spec_defaults: CompanySpec = field(default_factory=CompanySpec)
    cost_rates: CostRates = field(default_factory=CostRates)
    sampling: SamplingPolicy = field(default_factory=SamplingPolicy)
    gsa: GsaSettings = field(default_factory=GsaSettings)
    schedule: list | None = None        # list of FactorPlan, or None
    initial_plan: FactorPlan | None = None
    default_profile: dict = field(default_factory=dict)

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        self.settings.validate()
        self.sd_defaults.validate()
        self.spec_defaults.validate()
        self.cost_rates.validate()
        self.sampling.validate()
        if self.settings.run_length_days <= self.settings.warmup_days:
            raise ConfigError("run length must exceed the warm-up")
        if self.schedule is not None and not self.schedule:
            raise ConfigError("schedule must not be empty when given")
        return self

    def first_plan(self) -> FactorPlan:
        if self.schedule:
            return self.schedule[0]
        if self.initial_plan is not None:
            return self.initial_plan
        raise ConfigError("config declares neither a schedule nor an initial plan")

    def canonical_dict(self) -> dict:
        return config_to_dict(self)

    def fingerprint(self) -> str:
        payload = json.dumps(self.canonical_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _plan_from_dict(entry: dict, max_strategies: int = 16) -> FactorPlan:
    if "factors" not in entry:
        raise ConfigError("schedule entries need a 'factors' list")
    factors = []
    for f in entry["factors"]:
        if isinstance(f, str):
            factors.append(PlanFactor(f))
        else:
            _reject_unknown(f, {"name", "levels"}, "schedule factor")
            factors.append(PlanFactor(f["name"], tuple(f.get("levels", ("L", "H")))))
    return FactorPlan(factors, g=int(entry.get("g", 1)),
                      max_strategies=max_strategies)


def _plan_to_dict(plan: FactorPlan) -> dict:
    return {"g": plan.g,
            "factors": [{"name": f.name, "levels": list(f.levels)}
                        for f in plan.factors]}


def _reject_unknown(mapping: dict, allowed, context: str):
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {context}")


def _fill_dataclass(cls, data: dict, context: str, **fixed):
    names = {f.name for f in dataclasses.fields(cls)}
    _reject_unknown(data, names - set(fixed), context)
    kwargs = dict(data)
    kwargs.update(fixed)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad {context}: {exc}") from exc


TOP_LEVEL_KEYS = {
    "schema_version", "master_seed", "out_dir", "jobs",
    "run_length_days", "dt", "agents", "network", "per_capita_demand",
    "marketing_period", "initial_stock_fraction", "deterministic_marketing",
    "fixed_share_split", "sunk_cost_mode", "warmup_days", "truncate_warmup",
    "market", "sd_defaults", "company_defaults", "cost_rates", "sampling",
    "gsa", "schedule", "initial_plan", "default_profile",
}


def config_from_dict(data: dict) -> ExperimentConfig:
    _reject_unknown(data, TOP_LEVEL_KEYS, "config")

    network = dict(data.get("network", {}))
    _reject_unknown(network, {"m0", "m", "population_seed"}, "network")
    market = _fill_dataclass(MarketParams, data.get("market", {}), "market")
    settings_kwargs = dict(
        run_length_days=data.get("run_length_days", 100),
        dt=data.get("dt", 0.25),
        n_agents=data.get("agents", 200),
        network_m0=network.get("m0", 5),
        network_m=network.get("m", 3),
        population_seed=network.get("population_seed", 20_000),
        per_capita_demand=data.get("per_capita_demand", 1.0),
        marketing_period=data.get("marketing_period", 10),
        initial_stock_fraction=data.get("initial_stock_fraction", 0.4),
        deterministic_marketing=data.get("deterministic_marketing", False),
        fixed_share_split=data.get("fixed_share_split"),
        sunk_cost_mode=data.get("sunk_cost_mode", "total"),
        warmup_days=data.get("warmup_days", 50),
        truncate_warmup=data.get("truncate_warmup", False),
        market=market,
    )
    settings = SimulationSettings(**settings_kwargs)

    sd_defaults = _fill_dataclass(SDParams, data.get("sd_defaults", {}),
                                  "sd_defaults")
    company = dict(data.get("company_defaults", {}))
    _reject_unknown(company, {"mb_pct", "ad_range", "pm_range"},
                    "company_defaults")
    spec_defaults = CompanySpec(
        sd=sd_defaults,
        mb_pct=company.get("mb_pct", 0.10),
        ad_range=tuple(company.get("ad_range", (0.25, 0.35))),
        pm_range=tuple(company.get("pm_range", (0.25, 0.35))))

    cost_rates = _fill_dataclass(CostRates, data.get("cost_rates", {}),
                                 "cost_rates")
    sampling = _fill_dataclass(SamplingPolicy, data.get("sampling", {}),
                               "sampling")
    gsa_data = dict(data.get("gsa", {}))
    if "tolerance_grid" in gsa_data:
        gsa_data["tolerance_grid"] = tuple(gsa_data["tolerance_grid"])
    gsa = _fill_dataclass(GsaSettings, gsa_data, "gsa")

    schedule_data = data.get("schedule", "default")
    if schedule_data == "default":
        schedule_data = DEFAULT_SCHEDULE
    schedule = None
    if schedule_data is not None:
        schedule = [_plan_from_dict(e) for e in schedule_data]

    initial_plan = None
    if data.get("initial_plan") is not None:
        initial_plan = _plan_from_dict(data["initial_plan"])

    config = ExperimentConfig(
        schema_version=data.get("schema_version", SCHEMA_VERSION),
        master_seed=data.get("master_seed", 20240101),
        out_dir=data.get("out_dir", "out"),
        jobs=data.get("jobs", 1),
        settings=settings,
        sd_defaults=sd_defaults,
        spec_defaults=spec_defaults,
        cost_rates=cost_rates,
        sampling=sampling,
        gsa=gsa,
        schedule=schedule,
        initial_plan=initial_plan,
        default_profile=dict(data.get("default_profile", {})))
    try:
        return config.validate()
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc


def config_to_dict(config: ExperimentConfig) -> dict:
    s = config.settings
    return {
        "schema_version": config.schema_version,
        "master_seed": config.master_seed,
        "out_dir": config.out_dir,
        "jobs": config.jobs,
        "run_length_days": s.run_length_days,
        "dt": s.dt,
        "agents": s.n_agents,
        "network": {"m0": s.network_m0, "m": s.network_m,
                    "population_seed": s.population_seed},
        "per_capita_demand": s.per_capita_demand,
        "marketing_period": s.marketing_period,
        "initial_stock_fraction": s.initial_stock_fraction,
        "deterministic_marketing": s.deterministic_marketing,
        "fixed_share_split": s.fixed_share_split,
        "sunk_cost_mode": s.sunk_cost_mode,
        "warmup_days": s.warmup_days,
        "truncate_warmup": s.truncate_warmup,
        "market": dataclasses.asdict(s.market),
        "sd_defaults": dataclasses.asdict(config.sd_defaults),
        "company_defaults": {"mb_pct": config.spec_defaults.mb_pct,
                             "ad_range": list(config.spec_defaults.ad_range),
                             "pm_range": list(config.spec_defaults.pm_range)},
        "cost_rates": dataclasses.asdict(config.cost_rates),
        "sampling": dataclasses.asdict(config.sampling),
        "gsa": {**dataclasses.asdict(config.gsa),
                "tolerance_grid": list(config.gsa.tolerance_grid)},
        "schedule": None if config.schedule is None
                    else [_plan_to_dict(p) for p in config.schedule],
        "initial_plan": None if config.initial_plan is None
                        else _plan_to_dict(config.initial_plan),
        "default_profile": dict(config.default_profile),
    }


def default_config() -> ExperimentConfig:
    return config_from_dict({})


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if not text.strip():
        raise ConfigError(f"config file is empty: {path}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return config_from_dict(data)


def save_config(config: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2,
                                     sort_keys=True) + "\n")
