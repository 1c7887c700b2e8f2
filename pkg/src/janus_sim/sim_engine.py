"""Per-path simulation, Monte Carlo ensembles, stress overlays, and
trilemma frontier sweeps.

One step executes a frozen sub-step order:

    1. draw the step's shock row from the path stream
    2. move collateral asset values (stress overlay applied)
    3. settle matured vault payouts, accrue RWA yield and vault interest
    4. evaluate demand and execute protocol mint/redeem plus holder turnover
    5. update token prices via the exponential price-impact rule
    6. liquidate if undercollateralized, then skim treasury surplus
    7. evaluate the feedback controller and apply saturated deltas
    8. record the step

Demand routing: the structural base inflow enters through genesis minting
(new holders mint at the protocol, no order-book impact), while the
trend/deviation/noise components are market flows that carry price impact
and are arbitraged into protocol mint/redeem.  Holder turnover redeems a
fixed fraction of supply at the protocol each step.  Reward emission
(positive) sells newly minted tokens into the market; negative reward is a
treasury buyback-and-burn.  This split keeps the step map well posed: it
admits interior fixed points with finite supply.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .controller import ControlAction, ControllerParams, apply_action, control_action
from .core_state import (
    CollateralHolding,
    GovernanceDistribution,
    PegBand,
    ProtocolState,
    ReferencePricePolicy,
    StateError,
    TokenState,
    band_bounds,
    reference_price,
)
from .market import (
    AssetKind,
    AssetSpec,
    CorrelationMatrix,
    DemandParams,
    cholesky_factor,
)
from .protocol import (
    MintPolicy,
    VaultBook,
    accrue_vault_interest,
    collateral_ratio,
)
from .rng import shock_block

BURN_IN_STEPS = 30


class ConfigError(ValueError):
    pass


class StressKind(str, Enum):
    CRYPTO_CRASH = "crypto_crash"
    RWA_SHORTFALL = "rwa_shortfall"
    DEMAND_COLLAPSE = "demand_collapse"


@dataclass(frozen=True)
class StressOverlay:
    kind: StressKind
    onset: int
    magnitude: float
    duration: int

    def __post_init__(self):
        if not (0.0 < self.magnitude <= 1.0):
            raise ConfigError("stress magnitude must lie in (0, 1]")
        if self.onset < 0 or self.duration < 0:
            raise ConfigError("stress onset/duration must be non-negative")

    def active(self, t: int) -> bool:
        return self.onset <= t < self.onset + self.duration


@dataclass(frozen=True)
class FailureDef:
    """Operational failure event: a prolonged band break, undercollateralization,
    or outright price collapse."""

    grace: int = 14
    floor: float = 0.5

    def __post_init__(self):
        if self.grace < 0:
            raise ConfigError("failure grace must be non-negative")
        if not (0.0 < self.floor < 1.0):
            raise ConfigError("failure floor must lie in (0, 1)")


@dataclass(frozen=True)
class InitialConditions:
    alpha_price: float = 1.0
    alpha_supply: float = 0.0
    omega_price: float = 1.0
    omega_supply: float = 0.0
    c_total: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed for a deterministic run."""

    assets: tuple[AssetSpec, ...]
    correlation: CorrelationMatrix
    collateral_weights: tuple[float, ...]
    demand: DemandParams
    mint_policy: MintPolicy
    controller: ControllerParams
    band: PegBand
    ref_policy: ReferencePricePolicy
    governance: GovernanceDistribution
    horizon: int
    initial: InitialConditions
    failure: FailureDef = FailureDef()
    stress: StressOverlay | None = None
    seed: int = 0
    # market microstructure and treasury policy knobs
    depth_alpha: float = 10_000.0
    depth_omega: float = 10_000.0
    turnover: float = 0.0
    micro_vol: float = 0.0
    treasury_split: float = 1.0
    skim_rate: float = 0.0
    liq_penalty: float = 0.1
    liq_enabled: bool = True
    omega_senior: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if sorted(s.id for s in self.assets) != list(range(len(self.assets))):
            raise ConfigError("asset ids must be 0..n-1 and unique")
        if len(self.assets) != self.correlation.size:
            raise ConfigError("correlation size must match asset count")
        if len(self.collateral_weights) != len(self.assets):
            raise ConfigError("collateral weights must match asset count")
        if abs(sum(self.collateral_weights) - 1.0) > 1e-9:
            raise ConfigError("collateral weights must sum to 1")
        if any(w < 0 for w in self.collateral_weights):
            raise ConfigError("collateral weights must be non-negative")
        if self.depth_alpha <= 0 or self.depth_omega <= 0:
            raise ConfigError("market depths must be positive")
        if not (0.0 <= self.turnover < 1.0):
            raise ConfigError("turnover must lie in [0, 1)")
        if self.micro_vol < 0:
            raise ConfigError("microstructure volatility must be non-negative")
        if not (0.0 <= self.treasury_split <= 1.0):
            raise ConfigError("treasury split must lie in [0, 1]")
        if not (0.0 <= self.skim_rate <= 1.0):
            raise ConfigError("skim rate must lie in [0, 1]")
        if self.stress is not None and self.stress.onset + self.stress.duration > self.horizon:
            raise ConfigError("stress window must fit inside the horizon")
        cholesky_factor(self.correlation)  # PSD gate at construction

    def __hash__(self):
        # Deep-frozen, so the field hash is memoized; the step loop hashes the
        # config on every table lookup.
        cached = self.__dict__.get("_hash")
        if cached is None:
            cached = hash(tuple(self.__dict__[f] for f in self.__dataclass_fields__))
            object.__setattr__(self, "_hash", cached)
        return cached


TRACE_COLUMNS = (
    "t",
    "p_a",
    "p_omega",
    "p_ref",
    "band_lo",
    "band_hi",
    "supply_a",
    "supply_omega",
    "c_total",
    "v1",
    "v2",
    "net_inflow",
    "fee_rate",
    "reward_rate",
    "var_rate",
    "in_band",
    "failed",
)


@dataclass
class SimTrace:
    """Column-oriented per-step records for one path."""

    columns: dict[str, list] = field(default_factory=lambda: {c: [] for c in TRACE_COLUMNS})

    def append(self, **row):
        for c in TRACE_COLUMNS:
            self.columns[c].append(row[c])

    def __len__(self):
        return len(self.columns["t"])

    def array(self, name: str) -> np.ndarray:
        return np.asarray(self.columns[name], dtype=float)

    def rows(self):
        cols = [self.columns[c] for c in TRACE_COLUMNS]
        return zip(*cols)


def shock_width(config: ScenarioConfig) -> int:
    # asset draws + demand noise + per-token microstructure noise + spare
    return len(config.assets) + 4


def price_impact(price: float, net_flow: float, depth: float) -> float:
    """Exponential impact: positive flow raises price, zero flow is identity."""
    if depth <= 0:
        raise ConfigError("market depth must be positive")
    return price * math.exp(net_flow / depth)


def apply_stress(
    specs: tuple[AssetSpec, ...],
    demand: DemandParams,
    overlay: StressOverlay | None,
    t: int,
) -> tuple[tuple[AssetSpec, ...], DemandParams, float]:
    """Stress-adjusted parameters for step t plus a one-time crash drop factor."""
    if overlay is None or not overlay.active(t):
        return specs, demand, 1.0
    if overlay.kind is StressKind.CRYPTO_CRASH:
        drop = 1.0 - overlay.magnitude if t == overlay.onset else 1.0
        specs = tuple(
            replace(s, vol=s.vol * 2.0) if s.kind is AssetKind.CRYPTO else s for s in specs
        )
        return specs, demand, drop
    if overlay.kind is StressKind.RWA_SHORTFALL:
        specs = tuple(
            replace(s, yield_rate=s.yield_rate * (1.0 - overlay.magnitude))
            if s.kind is AssetKind.RWA
            else s
            for s in specs
        )
        return specs, demand, 1.0
    # demand collapse
    demand = replace(demand, base_inflow=demand.base_inflow * (1.0 - overlay.magnitude))
    return specs, demand, 1.0


def initial_state(config: ScenarioConfig) -> ProtocolState:
    c_total = config.initial.c_total
    holdings = tuple(
        CollateralHolding(asset_id=s.id, units=w * c_total, weight=w)
        for s, w in zip(config.assets, config.collateral_weights)
    )
    crypto = c_total * sum(
        w for s, w in zip(config.assets, config.collateral_weights) if s.kind is AssetKind.CRYPTO
    )
    return ProtocolState(
        time_step=0,
        alpha=TokenState(config.initial.alpha_price, config.initial.alpha_supply),
        omega=TokenState(config.initial.omega_price, config.initial.omega_supply),
        collateral=holdings,
        crypto_value=crypto,
        rwa_value=c_total - crypto,
        c_total=c_total,
        fee_rate=config.controller.fee_neutral,
        reward_rate=config.controller.reward_neutral,
        var_rate=config.controller.rate_neutral,
        vault_book=VaultBook(),
        governance=config.governance,
    )


@functools.lru_cache(maxsize=64)
def _config_tables(config: ScenarioConfig):
    """Per-config constants for the inner step loop.

    ScenarioConfig is deeply frozen, so these are computed once per scenario
    rather than once per step.
    """
    L = tuple(tuple(row) for row in cholesky_factor(config.correlation))
    drift = tuple(s.drift for s in config.assets)
    sigma = tuple(s.vol for s in config.assets)
    crypto_mask = tuple(s.kind is AssetKind.CRYPTO for s in config.assets)
    w = config.collateral_weights
    wc = sum(wi for wi, c in zip(w, crypto_mask) if c)
    wr = 1.0 - wc
    yld = sum(wi * s.yield_rate for wi, s in zip(w, config.assets) if s.kind is AssetKind.RWA)
    rwa_rate = yld / wr if wr > 0 else 0.0
    return L, drift, sigma, crypto_mask, wc, wr, rwa_rate


def step_once(
    state: ProtocolState,
    config: ScenarioConfig,
    shocks: np.ndarray,
    trend: float,
    t: int,
    frozen_time: bool = False,
) -> tuple[ProtocolState, dict]:
    """One full transition; pure given (state, config, shocks, trend, t).

    With ``frozen_time`` the reference price and stress clock stay at step
    zero, making the map autonomous for the equilibrium solver.
    """
    n = len(config.assets)
    eta = float(shocks[n])
    zeta_a = float(shocks[n + 1])
    zeta_o = float(shocks[n + 2])

    t_clock = 0 if frozen_time else t
    t_next = state.time_step if frozen_time else state.time_step + 1
    p_ref = reference_price(config.ref_policy, 0 if frozen_time else t_next)

    L, drift, sigma, crypto_mask, wc, wr, rwa_rate = _config_tables(config)
    base = config.demand.base_inflow
    overlay = config.stress
    crash_drop = 1.0
    if overlay is not None and overlay.active(t_clock):
        if overlay.kind is StressKind.CRYPTO_CRASH:
            if t_clock == overlay.onset:
                crash_drop = 1.0 - overlay.magnitude
            sigma = tuple(
                s * 2.0 if c else s for s, c in zip(sigma, crypto_mask)
            )
        elif overlay.kind is StressKind.RWA_SHORTFALL:
            rwa_rate *= 1.0 - overlay.magnitude
        else:  # demand collapse
            base *= 1.0 - overlay.magnitude

    # Working scalars; the successor state is assembled once at the end.
    p_a = state.alpha.price
    s_a = state.alpha.supply
    p_o = state.omega.price
    s_o = state.omega.supply
    cv = state.crypto_value
    rv = state.rwa_value
    pending = state.pending_payout

    # -- 2: collateral market move -------------------------------------------
    z = [float(shocks[j]) for j in range(n)]
    fcs = fcw = frs = frw = 0.0
    for i in range(n):
        corr_z = 0.0
        row = L[i]
        for j in range(i + 1):
            corr_z += row[j] * z[j]
        f = math.exp(drift[i] - 0.5 * sigma[i] * sigma[i] + sigma[i] * corr_z)
        w = config.collateral_weights[i]
        if crypto_mask[i]:
            fcs += w * f
            fcw += w
        else:
            frs += w * f
            frw += w
    cv *= (fcs / fcw if fcw > 0 else 1.0) * crash_drop
    rv *= frs / frw if frw > 0 else 1.0

    # -- 3: settlements and accruals -----------------------------------------
    if pending > 0:
        total = cv + rv
        pay = min(pending, total)
        scale = 1.0 - (pay / total if total > 0 else 0.0)
        cv *= scale
        rv *= scale
        pending = 0.0
    gross_yield = rv * rwa_rate
    retained = gross_yield * config.treasury_split
    rv += retained
    omega_yield_flow = gross_yield - retained
    book = state.vault_book
    if book.positions:
        book, redemptions = accrue_vault_interest(book, max(state.var_rate, 0.0), t_next)
        pending += sum(r.amount for r in redemptions)

    # -- 4: demand and protocol flows ----------------------------------------
    policy = config.mint_policy
    w_a = policy.alpha_omega_split
    w_o = 1.0 - w_a
    dmd = config.demand

    def token_flows(price, weight):
        if price <= 0:
            return 0.0, 0.0
        dev = (price - p_ref) / p_ref
        scaled_base = base * weight
        total = (
            scaled_base
            + dmd.sentiment_gain * trend * scaled_base
            + dmd.deviation_gain * dev * scaled_base
            + dmd.noise_vol * weight * eta
        )
        return total, total - scaled_base  # (full flow, market-facing part)

    flow_a, resp_a = token_flows(p_a, w_a)
    flow_o, resp_o = token_flows(p_o, w_o)
    net_inflow = flow_a + flow_o

    if net_inflow > 0:
        notional = net_inflow / policy.min_collateral_ratio * (1.0 - policy.mint_fee)
        if p_a > 0:
            s_a += notional * w_a / p_a
        if p_o > 0:
            s_o += notional * w_o / p_o
        cv += net_inflow * wc
        rv += net_inflow * (1.0 - wc)
    elif net_inflow < 0:
        value = -net_inflow
        a_red = min(value * w_a / p_a if p_a > 0 else 0.0, s_a)
        o_red = min(value * w_o / p_o if p_o > 0 else 0.0, s_o)
        s_a, s_o, cv, rv = _scalar_redeem(policy, a_red, o_red, p_a, p_o, s_a, s_o, cv, rv)

    if config.turnover > 0:
        s_a, s_o, cv, rv = _scalar_redeem(
            policy, config.turnover * s_a, config.turnover * s_o, p_a, p_o, s_a, s_o, cv, rv
        )

    # -- 5: price impact ------------------------------------------------------
    fee = min(max(state.fee_rate, 0.0), 1.0)
    reward = state.reward_rate
    sv_a = p_a * s_a
    sv_o = p_o * s_o
    emission_cost = reward * (sv_a + sv_o)
    if emission_cost < 0 and -emission_cost > cv + rv:
        # buyback budget is capped by available collateral
        reward *= (cv + rv) / -emission_cost
        emission_cost = reward * (sv_a + sv_o)

    mkt_a = resp_a * (1.0 - fee) - reward * sv_a
    mkt_o = resp_o * (1.0 - fee) - reward * sv_o + omega_yield_flow
    p_a *= math.exp(mkt_a / config.depth_alpha)
    p_o *= math.exp(mkt_o / config.depth_omega)
    if config.micro_vol > 0:
        p_a *= math.exp(config.micro_vol * zeta_a)
        p_o *= math.exp(config.micro_vol * zeta_o)

    # emission proceeds accrue to (or buybacks spend from) the treasury
    old_total = cv + rv
    c_total = max(old_total + emission_cost, 0.0)
    if old_total > 0:
        scale = c_total / old_total
        cv *= scale
        rv *= scale
    else:
        cv, rv = 0.0, c_total
    s_a *= 1.0 + reward
    s_o *= 1.0 + reward

    # -- 6: liquidation and treasury skim ------------------------------------
    supply_value = (s_a + s_o) * p_ref
    target_ratio = policy.min_collateral_ratio
    if config.liq_enabled and supply_value > 0:
        ratio = (cv + rv) / supply_value
        if ratio < target_ratio:
            recovery = (1.0 - config.liq_penalty) * min(ratio, 1.0)
            x = (target_ratio * supply_value - (cv + rv)) / (target_ratio - recovery)
            burned_value = min(x, supply_value)
            released = recovery * burned_value
            if config.omega_senior:
                burn_tokens = burned_value / p_ref
                a_burn = min(burn_tokens, s_a)
                o_burn = min(burn_tokens - a_burn, s_o)
            else:
                frac = burned_value / supply_value
                a_burn = frac * s_a
                o_burn = frac * s_o
            s_a = max(s_a - a_burn, 0.0)
            s_o = max(s_o - o_burn, 0.0)
            total = cv + rv
            take = min(released, total)
            if total > 0:
                cv -= take * (cv / total)
                rv -= take * (rv / total)
    if config.skim_rate > 0:
        target = target_ratio * (s_a + s_o) * p_ref
        total = cv + rv
        if total > target:
            f = 1.0 - config.skim_rate * (total - target) / total
            cv *= f
            rv *= f

    # -- 7: controller --------------------------------------------------------
    mid = 0.5 * (p_a + p_o)
    current = (state.fee_rate, state.reward_rate, state.var_rate)
    if mid > 0:
        action = control_action(mid, p_ref, config.band, config.controller, current)
    else:
        action = ControlAction()
    fee_r, reward_r, var_r = apply_action(config.controller, current, action)

    # Holdings are bookkeeping derived from the class values; resync so the
    # units coordinates never act as free integrators in the step map.
    holdings = state.collateral
    if holdings:
        holdings = tuple(
            CollateralHolding(
                asset_id=h.asset_id,
                units=(cv * h.weight / wc if wc > 0 else 0.0)
                if crypto_mask[h.asset_id]
                else (rv * h.weight / wr if wr > 0 else 0.0),
                weight=h.weight,
            )
            for h in holdings
        )

    state = replace(
        state,
        time_step=t_next,
        alpha=TokenState(p_a, max(s_a, 0.0)),
        omega=TokenState(p_o, max(s_o, 0.0)),
        collateral=holdings,
        crypto_value=max(cv, 0.0),
        rwa_value=max(rv, 0.0),
        c_total=max(cv, 0.0) + max(rv, 0.0),
        fee_rate=fee_r,
        reward_rate=reward_r,
        var_rate=var_r,
        vault_book=book,
        pending_payout=pending,
    )

    lo, hi = band_bounds(p_ref, config.band)
    record = {
        "p_ref": p_ref,
        "band_lo": lo,
        "band_hi": hi,
        "net_inflow": net_inflow,
        "in_band": (lo <= p_a <= hi) and (lo <= p_o <= hi),
        "action": action,
    }
    return state, record


def _scalar_redeem(policy, a_red, o_red, p_a, p_o, s_a, s_o, cv, rv):
    """Scalar mirror of :func:`janus_sim.protocol.redeem` for the hot loop."""
    value = a_red * p_a + o_red * p_o
    if value <= 0:
        return s_a, s_o, cv, rv
    gross = value * (1.0 - policy.redeem_fee)
    total = cv + rv
    payout = min(gross, total)
    fill = payout / gross if gross > 0 else 0.0
    s_a = max(s_a - a_red * fill, 0.0)
    s_o = max(s_o - o_red * fill, 0.0)
    if total > 0:
        take = min(payout, total)
        cv -= take * (cv / total)
        rv -= take * (rv / total)
    return s_a, s_o, cv, rv


def simulate_path(config: ScenarioConfig, path_index: int) -> SimTrace:
    """Run one deterministic path; identical inputs give identical traces."""
    state = initial_state(config)
    shocks = shock_block(config.seed, path_index, config.horizon, shock_width(config))
    trace = SimTrace()
    trend = 0.0
    prev_mid = 0.5 * (state.alpha.price + state.omega.price)
    out_streak = 0
    failed = False
    for t in range(config.horizon):
        try:
            state, rec = step_once(state, config, shocks[t], trend, t)
        except (StateError, OverflowError):
            failed = True
            break
        mid = 0.5 * (state.alpha.price + state.omega.price)
        finite = math.isfinite(mid) and math.isfinite(state.c_total)
        if not finite:
            failed = True
        else:
            trend = (mid - prev_mid) / prev_mid if prev_mid > 0 else 0.0
            prev_mid = mid
            out_streak = 0 if rec["in_band"] else out_streak + 1
            p_ref = rec["p_ref"]
            if out_streak >= config.failure.grace and config.failure.grace > 0:
                failed = True
            if config.failure.grace == 0 and not rec["in_band"]:
                failed = True
            if collateral_ratio(state, p_ref) < 1.0:
                failed = True
            if min(state.alpha.price, state.omega.price) <= config.failure.floor * p_ref:
                failed = True
        trace.append(
            t=state.time_step,
            p_a=state.alpha.price,
            p_omega=state.omega.price,
            p_ref=rec["p_ref"],
            band_lo=rec["band_lo"],
            band_hi=rec["band_hi"],
            supply_a=state.alpha.supply,
            supply_omega=state.omega.supply,
            c_total=state.c_total,
            v1=state.crypto_value,
            v2=state.rwa_value,
            net_inflow=rec["net_inflow"],
            fee_rate=state.fee_rate,
            reward_rate=state.reward_rate,
            var_rate=state.var_rate,
            in_band=int(rec["in_band"]),
            failed=int(failed),
        )
        if not finite:
            break
    if failed and len(trace) == 0:
        # path died on the very first step; emit a flagged terminal record
        p_ref = reference_price(config.ref_policy, 1)
        lo, hi = band_bounds(p_ref, config.band)
        trace.append(
            t=1, p_a=0.0, p_omega=0.0, p_ref=p_ref, band_lo=lo, band_hi=hi,
            supply_a=0.0, supply_omega=0.0, c_total=0.0, v1=0.0, v2=0.0,
            net_inflow=0.0, fee_rate=0.0, reward_rate=0.0, var_rate=0.0,
            in_band=0, failed=1,
        )
    return trace


@dataclass(frozen=True)
class PathSummary:
    path_index: int
    failed: bool
    in_band_fraction: float
    mean_efficiency: float
    terminal_p_a: float
    terminal_p_omega: float
    terminal_p_ref: float
    terminal_supply_value: float
    peak_supply_value: float
    terminal_crypto: float
    terminal_rwa: float
    inflow_r2: float


def path_summary(trace: SimTrace, config: ScenarioConfig, path_index: int) -> PathSummary:
    failed = bool(trace.columns["failed"][-1])
    burn = min(BURN_IN_STEPS, max(len(trace) - 1, 0))
    in_band = trace.array("in_band")[burn:]
    p_ref = trace.array("p_ref")
    supply_value = (
        trace.array("supply_a") * p_ref + trace.array("supply_omega") * p_ref
    )
    c_total = trace.array("c_total")
    with np.errstate(divide="ignore", invalid="ignore"):
        eff = np.where(c_total > 0, supply_value / c_total, 0.0)
    mid = 0.5 * (trace.array("p_a") + trace.array("p_omega"))
    r2 = _inflow_r2(mid, trace.array("net_inflow"))
    return PathSummary(
        path_index=path_index,
        failed=failed,
        in_band_fraction=float(np.mean(in_band)) if len(in_band) else 0.0,
        mean_efficiency=float(np.mean(eff)),
        terminal_p_a=float(trace.columns["p_a"][-1]),
        terminal_p_omega=float(trace.columns["p_omega"][-1]),
        terminal_p_ref=float(trace.columns["p_ref"][-1]),
        terminal_supply_value=float(supply_value[-1]),
        peak_supply_value=float(np.max(supply_value)),
        terminal_crypto=float(trace.columns["v1"][-1]),
        terminal_rwa=float(trace.columns["v2"][-1]),
        inflow_r2=r2,
    )


def _inflow_r2(mid_prices: np.ndarray, inflow: np.ndarray) -> float:
    """R-squared of mid-price log-returns on the step's net inflow.

    Relative changes keep collapsed-price steps comparable to healthy ones;
    the series is truncated at the first non-positive price.
    """
    positive = mid_prices > 0
    if not positive.all():
        cut = int(np.argmin(positive))
        mid_prices = mid_prices[:cut]
        inflow = inflow[:cut]
    if len(mid_prices) < 3:
        return float("nan")
    dp = np.diff(np.log(mid_prices))
    x = inflow[1:]
    if np.std(dp) == 0 or np.std(x) == 0:
        return float("nan")
    r = np.corrcoef(x, dp)[0, 1]
    return float(min(max(r * r, 0.0), 1.0))


@dataclass(frozen=True)
class EnsembleSummary:
    n_paths: int
    failures: int
    p_fail: float
    p_fail_ci: tuple[float, float]
    mean_in_band: float
    mean_efficiency: float
    mean_terminal_p_a: float
    mean_terminal_p_omega: float
    median_terminal_p_a: float
    median_terminal_p_omega: float
    terminal_p_ref: float
    minted_notional: float
    crypto_anchor: float
    rwa_anchor: float
    mean_inflow_r2: float
    in_band_fractions: tuple[float, ...]
    failed_flags: tuple[bool, ...]


def _wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def _summarize_one(args) -> PathSummary:
    config, idx = args
    return path_summary(simulate_path(config, idx), config, idx)


def monte_carlo(config: ScenarioConfig, n_paths: int, workers: int = 1) -> EnsembleSummary:
    """Aggregate independent paths 0..n-1 in deterministic index order.

    Results are bitwise identical for any worker count: each path derives
    its own counter-based stream and the reduction runs in index order.
    """
    if n_paths < 1:
        raise ConfigError("need at least one path")
    jobs = [(config, i) for i in range(n_paths)]
    if workers > 1 and n_paths > 1:
        import multiprocessing as mp

        with mp.get_context("spawn").Pool(processes=workers) as pool:
            summaries = pool.map(_summarize_one, jobs, chunksize=max(n_paths // (4 * workers), 1))
    else:
        summaries = [_summarize_one(j) for j in jobs]
    summaries.sort(key=lambda s: s.path_index)

    failures = sum(1 for s in summaries if s.failed)
    p_fail = failures / n_paths
    r2s = [s.inflow_r2 for s in summaries if not math.isnan(s.inflow_r2)]
    return EnsembleSummary(
        n_paths=n_paths,
        failures=failures,
        p_fail=p_fail,
        p_fail_ci=_wilson_interval(failures, n_paths),
        mean_in_band=float(np.mean([s.in_band_fraction for s in summaries])),
        mean_efficiency=float(np.mean([s.mean_efficiency for s in summaries])),
        mean_terminal_p_a=float(np.mean([s.terminal_p_a for s in summaries])),
        mean_terminal_p_omega=float(np.mean([s.terminal_p_omega for s in summaries])),
        median_terminal_p_a=float(np.median([s.terminal_p_a for s in summaries])),
        median_terminal_p_omega=float(np.median([s.terminal_p_omega for s in summaries])),
        terminal_p_ref=summaries[0].terminal_p_ref,
        minted_notional=float(np.mean([s.peak_supply_value for s in summaries])),
        crypto_anchor=float(np.mean([s.terminal_crypto for s in summaries])),
        rwa_anchor=float(np.mean([s.terminal_rwa for s in summaries])),
        mean_inflow_r2=float(np.mean(r2s)) if r2s else float("nan"),
        in_band_fractions=tuple(s.in_band_fraction for s in summaries),
        failed_flags=tuple(s.failed for s in summaries),
    )


# ---------------------------------------------------------------------------
# frontier sweep


@dataclass(frozen=True)
class FrontierPoint:
    overrides: dict
    d: float
    e: float
    s: float
    pareto: bool = False


def _apply_overrides(config: ScenarioConfig, overrides: dict) -> ScenarioConfig:
    cfg = config
    for key, value in overrides.items():
        if key == "min_collateral_ratio":
            cfg = replace(cfg, mint_policy=replace(cfg.mint_policy, min_collateral_ratio=value))
        elif key == "epsilon":
            cfg = replace(cfg, band=PegBand(value))
        elif key in ("fee_gain", "reward_gain", "rate_gain"):
            cfg = replace(cfg, controller=replace(cfg.controller, **{key: value}))
        elif key == "theta":
            cfg = replace(cfg, collateral_weights=tuple(value))
        else:
            raise ConfigError(f"unknown sweep parameter '{key}'")
    return cfg


def pareto_front(points: list[tuple[float, float, float]]) -> list[bool]:
    """Non-domination flags, maximizing every coordinate."""
    flags = []
    for i, p in enumerate(points):
        dominated = any(
            all(qc >= pc for qc, pc in zip(q, p)) and any(qc > pc for qc, pc in zip(q, p))
            for j, q in enumerate(points)
            if j != i
        )
        flags.append(not dominated)
    return flags


def frontier_sweep(
    base: ScenarioConfig, grid: dict[str, list], n_paths: int, workers: int = 1
) -> list[FrontierPoint]:
    """Evaluate a parameter grid and mark the Pareto-optimal points."""
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ConfigError("sweep grid must be non-empty")
    keys = list(grid.keys())
    cells = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    results = []
    for overrides in cells:
        cfg = _apply_overrides(base, overrides)
        summary = monte_carlo(cfg, n_paths, workers)
        d = 1.0 - sum(w * w for w in cfg.governance.weights)
        results.append((overrides, d, summary.mean_efficiency, 1.0 - summary.p_fail))
    flags = pareto_front([(d, e, s) for _, d, e, s in results])
    return [
        FrontierPoint(overrides=o, d=d, e=e, s=s, pareto=f)
        for (o, d, e, s), f in zip(results, flags)
    ]
