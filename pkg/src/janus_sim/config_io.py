"""Scenario config serialization: JSON files in, validated dataclasses out.

Unknown keys are hard errors (typo protection).  Presets ship as data files
under ``presets/`` so their calibration is reviewable.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources

from .controller import ControllerParams
from .core_state import GovernanceDistribution, PegBand, ReferencePricePolicy
from .market import AssetKind, AssetSpec, CorrelationMatrix, DemandParams
from .protocol import MintPolicy
from .sim_engine import (
    ConfigError,
    FailureDef,
    InitialConditions,
    ScenarioConfig,
    StressKind,
    StressOverlay,
)

PRESET_NAMES = ("janus_baseline", "usdc_like", "dai_like", "ust_like", "flatcoin_like")

_TOP_KEYS = {
    "assets",
    "correlation",
    "collateral_weights",
    "demand",
    "mint_policy",
    "controller",
    "band",
    "ref_policy",
    "governance",
    "horizon",
    "initial",
    "failure",
    "stress",
    "seed",
    "market",
}

_MARKET_KEYS = {
    "depth_alpha",
    "depth_omega",
    "turnover",
    "micro_vol",
    "treasury_split",
    "skim_rate",
    "liq_penalty",
    "liq_enabled",
    "omega_senior",
}


def _check_keys(section: str, data: dict, allowed: set[str]):
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {sorted(unknown)}")


def _section(data: dict, name: str, cls, field_names: set[str], required=True):
    if name not in data:
        if required:
            raise ConfigError(f"missing config section '{name}'")
        return None
    sect = data[name]
    if not isinstance(sect, dict):
        raise ConfigError(f"config section '{name}' must be an object")
    _check_keys(name, sect, field_names)
    try:
        return cls(**sect)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{name}' config: {exc}") from exc


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    _check_keys("config", data, _TOP_KEYS)
    for key in ("assets", "correlation", "collateral_weights", "horizon"):
        if key not in data:
            raise ConfigError(f"missing config section '{key}'")

    try:
        assets = tuple(
            AssetSpec(
                id=a["id"],
                kind=AssetKind(a["kind"]),
                drift=a.get("drift", 0.0),
                vol=a.get("vol", 0.0),
                yield_rate=a.get("yield_rate", 0.0),
            )
            for a in data["assets"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid 'assets' config: {exc}") from exc
    try:
        correlation = CorrelationMatrix(tuple(tuple(r) for r in data["correlation"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid 'correlation' config: {exc}") from exc

    demand = _section(data, "demand", DemandParams, {"base_inflow", "sentiment_gain", "deviation_gain", "noise_vol"})
    policy = _section(data, "mint_policy", MintPolicy, {"min_collateral_ratio", "mint_fee", "redeem_fee", "alpha_omega_split"})
    controller = _section(
        data,
        "controller",
        ControllerParams,
        {
            "fee_gain", "reward_gain", "rate_gain",
            "fee_min", "fee_max", "reward_min", "reward_max", "rate_min", "rate_max",
            "leak", "fee_neutral", "reward_neutral", "rate_neutral",
        },
    )
    band = _section(data, "band", PegBand, {"epsilon"})
    ref_policy = _section(data, "ref_policy", ReferencePricePolicy, {"p0", "growth_rate"})
    try:
        governance = GovernanceDistribution(tuple(data.get("governance", {}).get("weights", (1.0,))))
    except ValueError as exc:
        raise ConfigError(f"invalid 'governance' config: {exc}") from exc
    initial = _section(
        data, "initial", InitialConditions,
        {"alpha_price", "alpha_supply", "omega_price", "omega_supply", "c_total"},
    )
    failure = _section(data, "failure", FailureDef, {"grace", "floor"}, required=False) or FailureDef()

    stress = None
    if data.get("stress") is not None:
        sect = data["stress"]
        _check_keys("stress", sect, {"kind", "onset", "magnitude", "duration"})
        try:
            stress = StressOverlay(
                kind=StressKind(sect["kind"]),
                onset=sect["onset"],
                magnitude=sect["magnitude"],
                duration=sect["duration"],
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"invalid 'stress' config: {exc}") from exc

    market = data.get("market", {})
    _check_keys("market", market, _MARKET_KEYS)

    try:
        return ScenarioConfig(
            assets=assets,
            correlation=correlation,
            collateral_weights=tuple(data["collateral_weights"]),
            demand=demand,
            mint_policy=policy,
            controller=controller,
            band=band,
            ref_policy=ref_policy,
            governance=governance,
            horizon=data["horizon"],
            initial=initial,
            failure=failure,
            stress=stress,
            seed=data.get("seed", 0),
            **market,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config: {exc}") from exc


def config_to_dict(config: ScenarioConfig) -> dict:
    return {
        "assets": [
            {
                "id": a.id,
                "kind": a.kind.value,
                "drift": a.drift,
                "vol": a.vol,
                "yield_rate": a.yield_rate,
            }
            for a in config.assets
        ],
        "correlation": [list(r) for r in config.correlation.entries],
        "collateral_weights": list(config.collateral_weights),
        "demand": {
            "base_inflow": config.demand.base_inflow,
            "sentiment_gain": config.demand.sentiment_gain,
            "deviation_gain": config.demand.deviation_gain,
            "noise_vol": config.demand.noise_vol,
        },
        "mint_policy": {
            "min_collateral_ratio": config.mint_policy.min_collateral_ratio,
            "mint_fee": config.mint_policy.mint_fee,
            "redeem_fee": config.mint_policy.redeem_fee,
            "alpha_omega_split": config.mint_policy.alpha_omega_split,
        },
        "controller": {
            "fee_gain": config.controller.fee_gain,
            "reward_gain": config.controller.reward_gain,
            "rate_gain": config.controller.rate_gain,
            "fee_min": config.controller.fee_min,
            "fee_max": config.controller.fee_max,
            "reward_min": config.controller.reward_min,
            "reward_max": config.controller.reward_max,
            "rate_min": config.controller.rate_min,
            "rate_max": config.controller.rate_max,
            "leak": config.controller.leak,
            "fee_neutral": config.controller.fee_neutral,
            "reward_neutral": config.controller.reward_neutral,
            "rate_neutral": config.controller.rate_neutral,
        },
        "band": {"epsilon": config.band.epsilon},
        "ref_policy": {"p0": config.ref_policy.p0, "growth_rate": config.ref_policy.growth_rate},
        "governance": {"weights": list(config.governance.weights)},
        "horizon": config.horizon,
        "initial": {
            "alpha_price": config.initial.alpha_price,
            "alpha_supply": config.initial.alpha_supply,
            "omega_price": config.initial.omega_price,
            "omega_supply": config.initial.omega_supply,
            "c_total": config.initial.c_total,
        },
        "failure": {"grace": config.failure.grace, "floor": config.failure.floor},
        "stress": None
        if config.stress is None
        else {
            "kind": config.stress.kind.value,
            "onset": config.stress.onset,
            "magnitude": config.stress.magnitude,
            "duration": config.stress.duration,
        },
        "seed": config.seed,
        "market": {
            "depth_alpha": config.depth_alpha,
            "depth_omega": config.depth_omega,
            "turnover": config.turnover,
            "micro_vol": config.micro_vol,
            "treasury_split": config.treasury_split,
            "skim_rate": config.skim_rate,
            "liq_penalty": config.liq_penalty,
            "liq_enabled": config.liq_enabled,
            "omega_senior": config.omega_senior,
        },
    }


def config_hash(config: ScenarioConfig) -> str:
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def load_preset(name: str) -> ScenarioConfig:
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset '{name}'; choose from {PRESET_NAMES}")
    text = resources.files("janus_sim.presets").joinpath(f"{name}.json").read_text()
    return config_from_dict(json.loads(text))
