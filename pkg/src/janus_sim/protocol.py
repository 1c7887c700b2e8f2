"""Deterministic protocol mechanics: mint/redeem, vault accounting, RWA yield
accrual, and liquidation.

The simulator models one aggregated user; these transitions operate on
aggregate flows.  All functions return successor states and never mutate
inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .core_state import ProtocolState, StateError, TokenState
from .market import AssetKind, AssetSpec

VAULT_LOCKED_REL_TOL = 1e-6


class ProtocolError(ValueError):
    """Raised when a protocol transition precondition is violated."""


class VaultKind(str, Enum):
    GENESIS = "genesis"
    BORROW_LEND = "borrow_lend"
    FIXED_RATE = "fixed_rate"
    VARIABLE_RATE = "variable_rate"
    FIXED_HORIZON = "fixed_horizon"
    INFINITE = "infinite"


#: kinds whose accrual uses the protocol-wide variable rate each step
VARIABLE_KINDS = frozenset({VaultKind.VARIABLE_RATE, VaultKind.BORROW_LEND})


@dataclass(frozen=True)
class VaultPosition:
    kind: VaultKind
    principal: float
    rate: float = 0.0
    maturity: int | None = None
    accrued: float = 0.0

    def __post_init__(self):
        if self.principal < 0 or self.accrued < 0:
            raise ProtocolError("vault principal/accrued must be non-negative")
        has_maturity = self.maturity is not None
        if has_maturity != (self.kind is VaultKind.FIXED_HORIZON):
            raise ProtocolError("maturity is required for fixed-horizon vaults only")


@dataclass(frozen=True)
class VaultBook:
    positions: tuple[VaultPosition, ...] = ()

    @property
    def total_locked(self) -> float:
        return sum(p.principal for p in self.positions)

    @property
    def total_accrued(self) -> float:
        return sum(p.accrued for p in self.positions)

    def rescaled(self, new_locked: float, new_accrued: float) -> "VaultBook":
        """Scale positions pro rata to match aggregate targets.

        Used by the state/vector mapping; an empty book ignores the targets
        (there is no position to attribute them to).
        """
        if not self.positions:
            return self
        locked, accrued = self.total_locked, self.total_accrued
        fl = new_locked / locked if locked > 0 else 0.0
        fa = new_accrued / accrued if accrued > 0 else 0.0
        return VaultBook(
            tuple(
                replace(p, principal=p.principal * fl, accrued=p.accrued * fa)
                for p in self.positions
            )
        )


@dataclass(frozen=True)
class VaultRedemption:
    """Matured fixed-horizon position awaiting payout from collateral."""

    amount: float
    maturity: int


@dataclass(frozen=True)
class MintPolicy:
    min_collateral_ratio: float
    mint_fee: float = 0.0
    redeem_fee: float = 0.0
    alpha_omega_split: float = 0.5

    def __post_init__(self):
        if self.min_collateral_ratio < 1.0:
            raise ProtocolError("minimum collateral ratio must be >= 1")
        for fee in (self.mint_fee, self.redeem_fee):
            if not (0.0 <= fee <= 0.2):
                raise ProtocolError("fees must lie in [0, 0.2]")
        if not (0.0 <= self.alpha_omega_split <= 1.0):
            raise ProtocolError("alpha/omega split must lie in [0, 1]")


def _crypto_share(state: ProtocolState, specs: list[AssetSpec]) -> float:
    """Fraction of configured collateral weight assigned to crypto assets."""
    if not state.collateral:
        return 1.0
    by_id = {s.id: s for s in specs}
    share = sum(
        h.weight for h in state.collateral if by_id[h.asset_id].kind is AssetKind.CRYPTO
    )
    return share


def _adjust_collateral(
    state: ProtocolState, delta: float, specs: list[AssetSpec]
) -> tuple[float, float]:
    """Split a collateral value change between crypto and RWA books.

    Inflows follow the configured weights; outflows are pro rata on current
    values so neither book goes negative.
    """
    if delta >= 0:
        share = _crypto_share(state, specs)
        return state.crypto_value + delta * share, state.rwa_value + delta * (1 - share)
    total = state.c_total
    if total <= 0:
        return state.crypto_value, state.rwa_value
    take = min(-delta, total)
    fc = state.crypto_value / total
    return state.crypto_value - take * fc, state.rwa_value - take * (1 - fc)


def mint(
    state: ProtocolState,
    policy: MintPolicy,
    collateral_value: float,
    specs: list[AssetSpec] | None = None,
) -> tuple[ProtocolState, float, float]:
    """Deposit collateral, mint Alpha/Omega at current prices.

    Minted notional = collateral / min_ratio * (1 - mint_fee), split between
    the tokens by policy.
    """
    if collateral_value <= 0:
        raise ProtocolError("collateral value must be positive to mint")
    specs = specs or []
    notional = collateral_value / policy.min_collateral_ratio * (1.0 - policy.mint_fee)
    alpha_value = notional * policy.alpha_omega_split
    omega_value = notional - alpha_value
    alpha_minted = alpha_value / state.alpha.price if state.alpha.price > 0 else 0.0
    omega_minted = omega_value / state.omega.price if state.omega.price > 0 else 0.0
    crypto, rwa = _adjust_collateral(state, collateral_value, specs)
    new = replace(
        state,
        alpha=replace(state.alpha, supply=state.alpha.supply + alpha_minted),
        omega=replace(state.omega, supply=state.omega.supply + omega_minted),
        crypto_value=crypto,
        rwa_value=rwa,
        c_total=crypto + rwa,
    )
    return new, alpha_minted, omega_minted


def redeem(
    state: ProtocolState,
    policy: MintPolicy,
    alpha: float,
    omega: float,
    specs: list[AssetSpec] | None = None,
) -> tuple[ProtocolState, float]:
    """Burn tokens, release collateral at current prices less the redeem fee.

    The payout is capped at available collateral; c_total never goes
    negative.
    """
    if alpha < 0 or omega < 0:
        raise ProtocolError("redemption amounts must be non-negative")
    if alpha > state.alpha.supply * (1 + 1e-12):
        raise ProtocolError(
            f"alpha redemption {alpha} exceeds supply {state.alpha.supply}"
        )
    if omega > state.omega.supply * (1 + 1e-12):
        raise ProtocolError(
            f"omega redemption {omega} exceeds supply {state.omega.supply}"
        )
    if alpha == 0 and omega == 0:
        return state, 0.0
    specs = specs or []
    value = alpha * state.alpha.price + omega * state.omega.price
    gross = value * (1.0 - policy.redeem_fee)
    payout = min(gross, state.c_total)
    # When collateral cannot cover the request, only the covered fraction of
    # tokens is burned (nobody redeems for nothing).
    fill = payout / gross if gross > 0 else 0.0
    alpha *= fill
    omega *= fill
    crypto, rwa = _adjust_collateral(state, -payout, specs)
    new = replace(
        state,
        alpha=replace(state.alpha, supply=max(state.alpha.supply - alpha, 0.0)),
        omega=replace(state.omega, supply=max(state.omega.supply - omega, 0.0)),
        crypto_value=crypto,
        rwa_value=rwa,
        c_total=crypto + rwa,
    )
    return new, payout


def rwa_yield_rate(state: ProtocolState, specs: list[AssetSpec]) -> float:
    """Weight-averaged per-step yield over the RWA holdings."""
    by_id = {s.id: s for s in specs}
    rwa_weight = 0.0
    acc = 0.0
    for h in state.collateral:
        spec = by_id[h.asset_id]
        if spec.kind is AssetKind.RWA:
            rwa_weight += h.weight
            acc += h.weight * spec.yield_rate
    return acc / rwa_weight if rwa_weight > 0 else 0.0


def accrue_rwa_yield(
    state: ProtocolState,
    specs: list[AssetSpec],
    treasury_split: float,
) -> tuple[ProtocolState, float]:
    """Accrue one step of external RWA yield.

    ``treasury_split`` of the yield compounds into the RWA collateral book;
    the remainder is returned for distribution to Omega holders (the caller
    records it and applies the market support flow).
    """
    if not (0.0 <= treasury_split <= 1.0):
        raise ProtocolError("treasury split must lie in [0, 1]")
    rate = rwa_yield_rate(state, specs)
    gross = state.rwa_value * rate
    if gross == 0.0:
        return state, 0.0
    retained = gross * treasury_split
    new = replace(
        state,
        rwa_value=state.rwa_value + retained,
        c_total=state.c_total + retained,
    )
    return new, gross - retained


def accrue_vault_interest(
    book: VaultBook, variable_rate: float, t: int
) -> tuple[VaultBook, list[VaultRedemption]]:
    """Accrue one step of interest; pop matured fixed-horizon positions.

    Fixed-rate and fixed-horizon positions use their stored rate; variable
    and borrow/lend positions use the current protocol variable rate.
    """
    if variable_rate < 0:
        raise ProtocolError("variable rate must be non-negative")
    kept: list[VaultPosition] = []
    redemptions: list[VaultRedemption] = []
    for p in book.positions:
        rate = variable_rate if p.kind in VARIABLE_KINDS else p.rate
        accrued = p.accrued + p.principal * rate
        if p.kind is VaultKind.FIXED_HORIZON and t >= p.maturity:
            redemptions.append(VaultRedemption(amount=p.principal + accrued, maturity=p.maturity))
            continue
        kept.append(replace(p, accrued=accrued))
    return VaultBook(tuple(kept)), redemptions


def collateral_ratio(state: ProtocolState, p_ref: float) -> float:
    """C_total / (total token supply * p_ref); inf when supply is zero."""
    if p_ref <= 0:
        raise ProtocolError("reference price must be positive")
    denom = state.total_supply * p_ref
    if denom <= 0:
        return math.inf
    return state.c_total / denom


def liquidate(
    state: ProtocolState,
    policy: MintPolicy,
    penalty: float,
    p_ref: float,
    omega_senior: bool = False,
) -> tuple[ProtocolState, float]:
    """Restore the minimum collateral ratio by burning supply.

    Burned holders recover collateral at a haircut below the prevailing
    backing ratio (less the penalty, which is destroyed), so each unit of
    burned supply raises the ratio.  A no-op when already above the minimum;
    idempotent.
    """
    if not (0.0 <= penalty < 1.0):
        raise ProtocolError("penalty must lie in [0, 1)")
    ratio = collateral_ratio(state, p_ref)
    target = policy.min_collateral_ratio
    if ratio >= target:
        return state, 0.0
    supply_value = state.total_supply * p_ref
    recovery = (1.0 - penalty) * min(ratio, 1.0)
    # Solve (C - recovery * x) / (V - x) = target for burned value x.
    x = (target * supply_value - state.c_total) / (target - recovery)
    burned_value = min(x, supply_value)
    released = recovery * burned_value

    frac = burned_value / supply_value
    a_sup, o_sup = state.alpha.supply, state.omega.supply
    if omega_senior:
        # Burn alpha first; spill into omega only if alpha is exhausted.
        burn_tokens = burned_value / p_ref
        a_burn = min(burn_tokens, a_sup)
        o_burn = min(burn_tokens - a_burn, o_sup)
    else:
        a_burn = frac * a_sup
        o_burn = frac * o_sup
    crypto, rwa = _adjust_collateral(state, -released, [])
    new = replace(
        state,
        alpha=replace(state.alpha, supply=a_sup - a_burn),
        omega=replace(state.omega, supply=o_sup - o_burn),
        crypto_value=crypto,
        rwa_value=rwa,
        c_total=crypto + rwa,
    )
    return new, burned_value
