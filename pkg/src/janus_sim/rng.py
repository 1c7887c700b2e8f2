"""Reproducible shock streams for Monte Carlo paths.

Each path draws from a counter-based Philox generator keyed by
(base_seed, path_index), so any path can be generated independently of
worker layout or execution order.  Per step the engine consumes one
fixed-width row of standard normals; purposes are indexed by column, so
adding a new draw site means widening the block, never perturbing existing
columns.

Normals come from the inverse CDF applied to uniforms, which consumes
exactly one 64-bit draw per value (rejection samplers would make the
counter consumption data-dependent).
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1


def path_generator(base_seed: int, path_index: int) -> np.random.Generator:
    key = ((base_seed & _MASK64) << 64) | (path_index & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def shock_block(base_seed: int, path_index: int, horizon: int, width: int) -> np.ndarray:
    """(horizon, width) standard-normal shocks for one path."""
    g = path_generator(base_seed, path_index)
    u = g.random((horizon, width))
    # Map [0, 1) into (0, 1) so the inverse CDF stays finite.
    u = u * (1.0 - 2e-16) + 1e-16
    return ndtri(u)
