"""Single-user best response: clipped water-filling over a fixed floor.

The allocation on channel ``k`` is ``clip(sigma - floor[k], 0, mask[k])`` where
the water level ``sigma`` makes the allocation spend ``min(budget, sum(mask))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import NormalizedView, interference

UNBOUNDED = np.inf
_BISECTION_TOL = 1e-12
_MAX_BISECTIONS = 200


class DegenerateInputError(ValueError):
    """Positive budget with nowhere to put it (all masks zero)."""


@dataclass(frozen=True)
class Floor:
    level: np.ndarray

    def __post_init__(self):
        level = np.asarray(self.level, dtype=float)
        if level.ndim != 1 or not np.all(level > 0):
            raise ValueError("floor levels must be a 1-D array of positive reals")
        object.__setattr__(self, "level", level)


@dataclass(frozen=True)
class WaterfillResult:
    allocation: np.ndarray
    water_level: float
    budget_active: bool


def _as_inputs(floor, budget, mask):
    level = floor.level if isinstance(floor, Floor) else np.asarray(floor, dtype=float)
    if mask is None:
        mask = np.full(level.shape, UNBOUNDED)
    mask = np.broadcast_to(np.asarray(mask, dtype=float), level.shape)
    if np.any(level <= 0):
        raise ValueError("floor levels must be positive")
    if np.any(mask < 0) or budget < 0:
        raise ValueError("mask entries and budget must be nonnegative")
    if budget > 0 and not np.sum(mask) > 0:
        raise DegenerateInputError("positive budget but every mask entry is zero")
    return level, mask, float(budget)


def filled(sigma: float, level: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.clip(sigma - level, 0.0, mask)


def solve_water_level(floor, budget: float, mask=None) -> float:
    """Smallest ``sigma`` at which the clipped fill spends ``min(budget, sum(mask))``."""
    level, mask, budget = _as_inputs(floor, budget, mask)
    if budget == 0:
        return 0.0
    if budget >= np.sum(mask):
        # masks saturate before the budget does; infimum of the solution set
        live = mask > 0
        return float(np.max(level[live] + mask[live]))

    # plain floats: K is small and numpy call overhead dominates here
    pairs = list(zip(level.tolist(), mask.tolist()))
    lo = min(f for f, _ in pairs)
    hi = max(f for f, _ in pairs) + budget
    width = _BISECTION_TOL / len(pairs)
    # invariant: fill(lo) < budget <= fill(hi); fill has slope <= K
    for _ in range(_MAX_BISECTIONS):
        if hi - lo <= width * max(1.0, abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        total = 0.0
        for f, m in pairs:
            if mid > f:
                total += min(mid - f, m)
        if total < budget:
            lo = mid
        else:
            hi = mid
    return hi


def best_response(floor, budget: float, mask=None) -> WaterfillResult:
    level, mask, budget = _as_inputs(floor, budget, mask)
    sigma = solve_water_level(level, budget, mask)
    if budget == 0:
        return WaterfillResult(np.zeros_like(level), 0.0, False)
    return WaterfillResult(filled(sigma, level, mask), sigma, bool(budget < np.sum(mask)))


def compose_floor(view: NormalizedView, p: np.ndarray, i: int) -> Floor:
    """Normalized noise plus normalized interference seen by user ``i``."""
    return Floor(view.nnoise[i] + interference(view.xgain, np.asarray(p, dtype=float), i))
