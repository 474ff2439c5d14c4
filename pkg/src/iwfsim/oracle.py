"""Brute-force ground truth by exhaustive enumeration of a power grid.

Each user's grid has step ``budget / (points_per_channel - 1)``, so the
budget itself and every integer composition of it lie exactly on the grid.
Only desk-scale problems are supported.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .model import NormalizedView, Scenario, interference, normalize

ENUMERATION_LIMIT = 10**7


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    points_per_channel: int = 101

    def __post_init__(self):
        if self.points_per_channel < 2:
            raise ValueError("points_per_channel must be >= 2")


def num_compositions(units: int, k: int) -> int:
    """Count of k-tuples of nonnegative integers summing to at most ``units``."""
    return comb(units + k, k)


def grid_step(budget: float, grid: GridSpec) -> float:
    return budget / (grid.points_per_channel - 1)


def grid_maximize(level, budget: float, mask, grid: GridSpec) -> np.ndarray:
    """Grid point maximizing ``sum log(1 + p / level)`` under budget and mask.

    Every composition is scored; ties go to the lexicographically smallest
    point because enumeration runs in lexicographic order and only strict
    improvements replace the incumbent.
    """
    level = np.asarray(level, dtype=float)
    k = level.size
    mask = np.broadcast_to(np.asarray(mask, dtype=float), (k,))
    units = grid.points_per_channel - 1
    if budget == 0:
        return np.zeros(k)
    if num_compositions(units, k) > ENUMERATION_LIMIT:
        raise EnumerationTooLarge(
            f"{num_compositions(units, k)} grid points exceed the limit {ENUMERATION_LIMIT}")
    step = grid_step(budget, grid)
    counts = np.arange(units + 1)
    # largest admissible multiple per channel; guard against round-off at the mask
    cap = np.minimum(units, np.floor(mask / step * (1 + 1e-12))).astype(int)
    table = [np.log1p(counts[: cap[c] + 1] * step / level[c]) for c in range(k)]

    if k == 1:
        return np.array([min(cap[0], units)], dtype=float) * step

    best_val, best = -np.inf, None
    a_idx = np.arange(cap[-2] + 1)[:, None]
    b_idx = np.arange(cap[-1] + 1)[None, :]
    pair = table[-2][:, None] + table[-1][None, :]
    # enumerate the first k-2 coordinates; score the last two as a matrix
    for head in _prefixes(cap[:-2], units):
        left = units - sum(head)
        base = sum(table[c][n] for c, n in enumerate(head))
        scores = np.where(a_idx + b_idx <= left, pair, -np.inf)
        flat = int(np.argmax(scores))  # row-major: lexicographic first maximum
        val = base + scores.flat[flat]
        if val > best_val:
            a, b = divmod(flat, scores.shape[1])
            best_val, best = val, head + (a, b)
    return np.array(best, dtype=float) * step


def _prefixes(caps, units, prefix=()):
    if len(prefix) == len(caps):
        yield prefix
        return
    left = units - sum(prefix)
    for n in range(min(caps[len(prefix)], left) + 1):
        yield from _prefixes(caps, units, prefix + (n,))


def _level(view: NormalizedView, p, i):
    return view.nnoise[i] + interference(view.xgain, p, i)


def grid_best_response(s: Scenario, view: NormalizedView, p, i: int,
                       grid: GridSpec) -> np.ndarray:
    return grid_maximize(_level(view, np.asarray(p, dtype=float), i),
                         s.power_budget[i], s.mask[i], grid)


def _user_rate(view, p, i):
    return float(np.sum(np.log1p(p[i] / _level(view, p, i))))


def deviation_gain(s: Scenario, view: NormalizedView, p, i: int, grid: GridSpec) -> float:
    """Rate user ``i`` gains by its best unilateral grid deviation from ``p``."""
    p = np.asarray(p, dtype=float)
    q = np.array(p)
    q[i] = grid_best_response(s, view, p, i, grid)
    return _user_rate(view, q, i) - _user_rate(view, p, i)


def lipschitz_slack(s: Scenario, grid: GridSpec) -> np.ndarray:
    """Per-user bound on the rate change from moving one grid step per channel.

    ``d rate_i / d p_i(k) <= 1 / nnoise_i(k)``.
    """
    view = normalize(s)
    steps = s.power_budget / (grid.points_per_channel - 1)
    return steps * np.sum(1.0 / view.nnoise, axis=1)


@dataclass
class BruteForceNE:
    profile: np.ndarray
    residual: float
    rounds: int


def find_ne_bruteforce(s: Scenario, grid: GridSpec = GridSpec(),
                       max_rounds: int = 10**4) -> BruteForceNE:
    """Round-robin discrete best responses from all-zeros until nobody moves.

    A round without any change is an exact equilibrium of the discretised
    game (residual 0). Otherwise the residual after ``max_rounds`` reports the
    largest unilateral gain still available.
    """
    if s.num_users > 3:
        raise EnumerationTooLarge("brute-force search supports at most 3 users")
    view = normalize(s)
    p = np.zeros((s.num_users, s.num_channels))
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        moved = False
        for i in range(s.num_users):
            br = grid_best_response(s, view, p, i, grid)
            if not np.array_equal(br, p[i]):
                p[i] = br
                moved = True
        if not moved:
            break
    residual = max(deviation_gain(s, view, p, i, grid) for i in range(s.num_users))
    return BruteForceNE(p, max(residual, 0.0), rounds)
