"""Protocol state containers and the state <-> vector mapping used by the
equilibrium solver.

The vector layout is frozen here and nowhere else.  Order (for k collateral
holdings):

    0            alpha price
    1            alpha supply
    2            omega price
    3            omega supply
    4            crypto collateral value
    5            RWA collateral value
    6            fee rate
    7            reward rate
    8            variable vault rate
    9 .. 9+k-1   collateral holding units, in holding order
    9+k          vault book total principal
    9+k+1        vault book total accrued

``c_total`` is derived (crypto + RWA value) and is not a vector coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

GOV_WEIGHT_TOL = 1e-9
C_TOTAL_REL_TOL = 1e-6

HEADER_DIM = 9  # entries before the per-holding units block


class StateError(ValueError):
    """Raised when a state container violates its invariants."""


@dataclass(frozen=True)
class GovernanceDistribution:
    """Governance weights, one fraction per participant, summing to 1."""

    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if not w:
            raise StateError("governance distribution needs at least one weight")
        for x in w:
            if not (0.0 <= x <= 1.0):
                raise StateError(f"governance weight {x} outside [0, 1]")
        if abs(sum(w) - 1.0) > GOV_WEIGHT_TOL:
            raise StateError(f"governance weights sum to {sum(w)}, expected 1")


@dataclass(frozen=True)
class ReferencePricePolicy:
    """Deterministic geometric target-price path."""

    p0: float
    growth_rate: float = 0.0

    def __post_init__(self):
        if self.p0 <= 0:
            raise StateError("reference price p0 must be positive")
        if self.growth_rate < 0:
            raise StateError("reference growth rate must be non-negative")


@dataclass(frozen=True)
class PegBand:
    """Symmetric tolerance band half-width around the reference price."""

    epsilon: float

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise StateError(f"band half-width {self.epsilon} outside (0, 1)")


@dataclass(frozen=True)
class TokenState:
    price: float
    supply: float

    def __post_init__(self):
        if self.price < 0 or self.supply < 0:
            raise StateError("token price/supply must be non-negative")

    @property
    def value(self) -> float:
        return self.price * self.supply


@dataclass(frozen=True)
class CollateralHolding:
    """One collateral position: asset index, units held, portfolio weight."""

    asset_id: int
    units: float
    weight: float

    def __post_init__(self):
        if self.units < 0:
            raise StateError("collateral units must be non-negative")
        if not (0.0 <= self.weight <= 1.0):
            raise StateError("collateral weight must lie in [0, 1]")


@dataclass(frozen=True)
class ProtocolState:
    """Full system state for one simulation step.

    Immutable; transitions construct successor states.  ``clamped`` flags
    that ``from_vector`` had to clip negative entries (the solver may probe
    negative space) and is not part of the numeric sub-state.
    """

    time_step: int
    alpha: TokenState
    omega: TokenState
    collateral: tuple[CollateralHolding, ...]
    crypto_value: float
    rwa_value: float
    c_total: float
    fee_rate: float
    reward_rate: float
    var_rate: float
    vault_book: "VaultBook"  # noqa: F821 - defined in protocol module
    governance: GovernanceDistribution
    pending_payout: float = 0.0
    clamped: bool = field(default=False, compare=False)

    def __post_init__(self):
        for name in ("crypto_value", "rwa_value", "c_total", "pending_payout"):
            if getattr(self, name) < 0:
                raise StateError(f"{name} must be non-negative")
        expected = self.crypto_value + self.rwa_value
        if expected > 0 and abs(self.c_total - expected) > C_TOTAL_REL_TOL * expected:
            raise StateError(
                f"c_total {self.c_total} != crypto + rwa = {expected}"
            )
        if self.collateral:
            wsum = sum(h.weight for h in self.collateral)
            if self.c_total > 0 and abs(wsum - 1.0) > GOV_WEIGHT_TOL:
                raise StateError(f"collateral weights sum to {wsum}, expected 1")

    @property
    def supply_value(self) -> float:
        return self.alpha.value + self.omega.value

    @property
    def total_supply(self) -> float:
        return self.alpha.supply + self.omega.supply


def reference_price(policy: ReferencePricePolicy, t: int) -> float:
    """Target price at step t: p0 * (1 + g)^t."""
    if t < 0:
        raise StateError("step index must be non-negative")
    return policy.p0 * (1.0 + policy.growth_rate) ** t


def band_bounds(p_ref: float, band: PegBand) -> tuple[float, float]:
    """Lower/upper tolerance bounds around the reference price.

    Computed from a single half-width product so (hi - p_ref) == (p_ref - lo)
    exactly.
    """
    if p_ref <= 0:
        raise StateError("reference price must be positive")
    half = p_ref * band.epsilon
    return p_ref - half, p_ref + half


def vector_dim(state: ProtocolState) -> int:
    return HEADER_DIM + len(state.collateral) + 2


def to_vector(state: ProtocolState) -> np.ndarray:
    """Flatten the numeric sub-state in the documented order."""
    head = [
        state.alpha.price,
        state.alpha.supply,
        state.omega.price,
        state.omega.supply,
        state.crypto_value,
        state.rwa_value,
        state.fee_rate,
        state.reward_rate,
        state.var_rate,
    ]
    units = [h.units for h in state.collateral]
    book = state.vault_book
    return np.array(head + units + [book.total_locked, book.total_accrued])


def from_vector(v: np.ndarray, template: ProtocolState) -> ProtocolState:
    """Rebuild a state from a vector, taking non-numeric fields from template.

    Negative entries are clamped to zero and flagged; the vault aggregates
    rescale the template's positions pro rata (an empty book stays empty).
    """
    v = np.asarray(v, dtype=float)
    dim = vector_dim(template)
    if v.shape != (dim,):
        raise StateError(f"state vector has length {v.shape}, expected ({dim},)")
    # Rates (indices 6..8) may legitimately go negative (buyback-side reward);
    # only monetary quantities are clamped.
    monetary = np.ones(dim, dtype=bool)
    monetary[6:9] = False
    clamped = bool(np.any(v[monetary] < 0.0))
    v = np.where(monetary, np.maximum(v, 0.0), v)
    k = len(template.collateral)
    holdings = tuple(
        replace(h, units=float(v[HEADER_DIM + i]))
        for i, h in enumerate(template.collateral)
    )
    book = template.vault_book.rescaled(float(v[HEADER_DIM + k]), float(v[HEADER_DIM + k + 1]))
    crypto, rwa = float(v[4]), float(v[5])
    return replace(
        template,
        alpha=TokenState(price=float(v[0]), supply=float(v[1])),
        omega=TokenState(price=float(v[2]), supply=float(v[3])),
        collateral=holdings,
        crypto_value=crypto,
        rwa_value=rwa,
        c_total=crypto + rwa,
        fee_rate=float(v[6]),
        reward_rate=float(v[7]),
        var_rate=float(v[8]),
        vault_book=book,
        clamped=clamped,
    )


def herfindahl(weights) -> float:
    return float(sum(w * w for w in weights))


def is_finite_state(state: ProtocolState) -> bool:
    return bool(np.all(np.isfinite(to_vector(state))))
