"""Seeded random scenarios and starting profiles for experiments and tests."""

from __future__ import annotations

import numpy as np

from .analysis import build_hmax, spectral_radius
from .model import Scenario, project_feasible


def scale_to_radius(s: Scenario, target: float, iters: int = 80) -> Scenario:
    """Rescale all cross gains by one factor so that rho(H^max) == target.

    The radius is nondecreasing in the scale factor, so bisection on the
    factor suffices. Scenarios without cross coupling are returned unchanged.
    """
    rho = spectral_radius(build_hmax(s))
    if rho == 0.0:
        return s
    lo, hi = 0.0, 1.0
    while spectral_radius(build_hmax(s.with_cross_gain_scale(hi))) < target:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError(f"radius {target} is out of reach for this scenario")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if spectral_radius(build_hmax(s.with_cross_gain_scale(mid))) < target:
            lo = mid
        else:
            hi = mid
    return s.with_cross_gain_scale(lo)


def random_scenario(rng: np.random.Generator, num_users: int, num_channels: int,
                    rho_max: float = 0.9, masked: bool = False) -> Scenario:
    """Random desk-scale game with rho(H^max) drawn uniformly below ``rho_max``.

    Direct gains, noise and budgets are O(1) to O(10) so water-filling keeps
    several channels active; masks (when requested) are loose enough to bind
    only occasionally.
    """
    n, k = num_users, num_channels
    gain = rng.uniform(0.1, 1.0, size=(n, n, k))
    for i in range(n):
        gain[i, i] = rng.uniform(0.5, 2.0, size=k)
    noise = rng.uniform(0.5, 2.0, size=(n, k))
    budget = rng.uniform(2.0, 10.0, size=n)
    mask = None
    if masked:
        mask = rng.uniform(0.5, 1.0, size=(n, k)) * budget[:, None]
    s = Scenario(gain, noise, budget, mask)
    return scale_to_radius(s, rng.uniform(0.05, rho_max))


def random_profile(rng: np.random.Generator, s: Scenario) -> np.ndarray:
    """Random feasible profile: Dirichlet split of a random fraction of each budget."""
    n, k = s.num_users, s.num_channels
    shares = rng.dirichlet(np.ones(k), size=n)
    frac = rng.uniform(0.0, 1.0, size=(n, 1))
    return project_feasible(s, shares * frac * s.power_budget[:, None])
