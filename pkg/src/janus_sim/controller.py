"""Negative-feedback stabilization loop and equilibrium analysis.

The stabilizer is a proportional, deadbanded, saturated feedback law on the
relative price deviation.  Outside the tolerance band it leans against the
deviation by adjusting the reward emission (supply pressure), transaction
fee, and variable vault rate; inside the band it does nothing.

The same module hosts the damped fixed-point solver, finite-difference
Jacobian, and spectral radius used to classify local stability of the
one-step map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core_state import PegBand


class ControlError(ValueError):
    pass


class SolverError(RuntimeError):
    """Raised on non-finite iterates or non-converging eigenvalue estimates."""


@dataclass(frozen=True)
class ControllerParams:
    """Gains, actuation bounds, and relaxation for the feedback law.

    ``leak`` pulls each actuated parameter back toward its neutral value a
    little every step, so one-off interventions decay instead of persisting
    forever.  Zero gains disable the controller (the leak still anchors the
    parameters at neutral).
    """

    fee_gain: float = 0.0
    reward_gain: float = 0.0
    rate_gain: float = 0.0
    fee_min: float = 0.0
    fee_max: float = 0.2
    reward_min: float = -0.05
    reward_max: float = 0.05
    rate_min: float = 0.0
    rate_max: float = 0.01
    leak: float = 0.1
    fee_neutral: float = 0.0
    reward_neutral: float = 0.0
    rate_neutral: float = 0.0

    def __post_init__(self):
        for g in (self.fee_gain, self.reward_gain, self.rate_gain):
            if g < 0:
                raise ControlError("controller gains must be non-negative")
        for lo, hi in (
            (self.fee_min, self.fee_max),
            (self.reward_min, self.reward_max),
            (self.rate_min, self.rate_max),
        ):
            if lo > hi:
                raise ControlError("actuation bounds must be ordered min <= max")
        if not (0.0 <= self.leak <= 1.0):
            raise ControlError("leak must lie in [0, 1]")


@dataclass(frozen=True)
class ControlAction:
    fee_delta: float = 0.0
    reward_delta: float = 0.0
    rate_delta: float = 0.0

    @property
    def is_zero(self) -> bool:
        return self.fee_delta == 0.0 and self.reward_delta == 0.0 and self.rate_delta == 0.0


class Stability(str, Enum):
    STABLE = "stable"
    MARGINAL = "marginal"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class EquilibriumReport:
    x_star: np.ndarray
    residual: float
    iterations: int
    converged: bool
    jacobian: np.ndarray | None = None
    spectral_radius: float | None = None
    stability: Stability | None = None


def _clamp_delta(current: float, delta: float, lo: float, hi: float) -> float:
    """Restrict a delta so the post-application parameter stays in bounds."""
    return min(max(current + delta, lo), hi) - current


def control_action(
    price: float,
    p_ref: float,
    band: PegBand,
    params: ControllerParams,
    current: tuple[float, float, float],
) -> ControlAction:
    """One controller evaluation against the reference price.

    Above the band: raise reward emission (supply expansion, sell pressure)
    and lower fee/vault rate.  Below the band: the mirror image.  Inside the
    band: exactly zero.  Deltas are pre-saturated against the bounds.
    """
    if price <= 0 or p_ref <= 0:
        raise ControlError("prices must be positive")
    fee, reward, rate = current
    d = (price - p_ref) / p_ref
    eps = band.epsilon
    if abs(d) <= eps:
        return ControlAction()
    excess = abs(d) - eps
    sign = 1.0 if d > 0 else -1.0
    return ControlAction(
        fee_delta=_clamp_delta(fee, -sign * params.fee_gain * excess, params.fee_min, params.fee_max),
        reward_delta=_clamp_delta(
            reward, sign * params.reward_gain * excess, params.reward_min, params.reward_max
        ),
        rate_delta=_clamp_delta(
            rate, -sign * params.rate_gain * excess, params.rate_min, params.rate_max
        ),
    )


def apply_action(
    params: ControllerParams, current: tuple[float, float, float], action: ControlAction
) -> tuple[float, float, float]:
    """Apply saturated deltas, then relax each parameter toward neutral."""
    fee, reward, rate = current
    fee = min(max(fee + action.fee_delta, params.fee_min), params.fee_max)
    reward = min(max(reward + action.reward_delta, params.reward_min), params.reward_max)
    rate = min(max(rate + action.rate_delta, params.rate_min), params.rate_max)
    leak = params.leak
    fee += leak * (params.fee_neutral - fee)
    reward += leak * (params.reward_neutral - reward)
    rate += leak * (params.rate_neutral - rate)
    return fee, reward, rate


def step_map(state, config, shocks=None):
    """One deterministic transition of the full system (the solver's map).

    Shocks default to zero (the deterministic skeleton); the reference price
    and trend are frozen so the map is autonomous.  Imported lazily to keep
    the engine dependency one-directional.
    """
    from . import sim_engine

    return sim_engine.step_once(
        state,
        config,
        shocks if shocks is not None else np.zeros(sim_engine.shock_width(config)),
        trend=0.0,
        t=0,
        frozen_time=True,
    )[0]


def find_fixed_point(
    F,
    x0: np.ndarray,
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 10000,
) -> EquilibriumReport:
    """Damped iteration x <- (1 - damping) x + damping F(x).

    Converged when the max-norm residual ||F(x) - x|| drops below tol.
    Raises on non-finite iterates; otherwise reports the last iterate.
    """
    if not (0.0 < damping <= 1.0):
        raise ControlError("damping must lie in (0, 1]")
    if tol <= 0:
        raise ControlError("tolerance must be positive")
    x = np.asarray(x0, dtype=float).copy()
    residual = math.inf
    for i in range(1, max_iter + 1):
        fx = np.asarray(F(x), dtype=float)
        if not np.all(np.isfinite(fx)):
            raise SolverError(f"non-finite iterate at iteration {i}")
        residual = float(np.max(np.abs(fx - x)))
        if residual <= tol:
            return EquilibriumReport(x_star=fx, residual=residual, iterations=i, converged=True)
        x = (1.0 - damping) * x + damping * fx
    return EquilibriumReport(x_star=x, residual=residual, iterations=max_iter, converged=False)


def jacobian_fd(F, x_star: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian with per-coordinate relative steps.

    Column i uses step h * max(|x_i|, 1), so coordinates near zero still get
    a sensible absolute perturbation.
    """
    if h <= 0:
        raise ControlError("finite-difference step must be positive")
    x = np.asarray(x_star, dtype=float)
    n = len(x)
    J = np.empty((n, n))
    for i in range(n):
        step = h * max(abs(x[i]), 1.0)
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        col = (np.asarray(F(xp), dtype=float) - np.asarray(F(xm), dtype=float)) / (2.0 * step)
        if not np.all(np.isfinite(col)):
            raise SolverError(f"non-finite Jacobian entries in column {i}")
        J[:, i] = col
    return J


def spectral_radius(J: np.ndarray, squarings: int = 60) -> float:
    """Largest eigenvalue magnitude via Gelfand's formula.

    Repeated squaring with norm renormalization evaluates
    ``||J^m||^(1/m)`` at ``m = 2**squarings``; the polynomial slack in
    ``rho^m <= ||J^m|| <= C m^(d-1) rho^m`` vanishes as ``log(m)/m``, so at
    m ~ 1e18 the estimate is exact to machine precision.  Unlike plain power
    iteration this handles complex-conjugate dominant pairs and clustered
    eigenvalue magnitudes without convergence tuning.
    """
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ControlError("matrix must be square")
    if not np.all(np.isfinite(J)):
        raise ControlError("matrix must be finite")
    if J.shape[0] == 0:
        return 0.0
    norm = float(np.linalg.norm(J, 2))
    if norm == 0.0:
        return 0.0
    A = J / norm
    log_norm = math.log(norm)  # log ||J^(2^i)|| = 2^i * log_norm + log ||A||
    for i in range(squarings):
        A = A @ A
        n = float(np.linalg.norm(A, 2))
        if n == 0.0 or not math.isfinite(n):
            # numerically nilpotent: the spectral radius underflowed
            return 0.0
        A /= n
        log_norm += math.log(n) / float(2 ** (i + 1))
    return math.exp(log_norm)


def classify_stability(rho: float, margin: float = 0.05) -> Stability:
    if rho < 0 or margin <= 0:
        raise ControlError("need rho >= 0 and margin > 0")
    if rho < 1.0 - margin:
        return Stability.STABLE
    if rho > 1.0 + margin:
        return Stability.UNSTABLE
    return Stability.MARGINAL
