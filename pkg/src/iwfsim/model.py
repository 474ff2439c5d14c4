"""Static game description, feasibility helpers and SINR / rate evaluators.

Array conventions used throughout the package:

* ``gain[j, i, k]`` is the squared channel magnitude from transmitter ``j`` to
  receiver ``i`` on channel ``k``;
* ``noise[i, k]``, ``mask[i, k]`` and power profiles ``p[i, k]`` are indexed by
  user then channel;
* ``power_budget[i]`` is the total power available to user ``i``.

Rates are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEASIBILITY_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Scenario:
    """Full static description of the power control game.

    ``mask`` may be omitted (unbounded), given as a scalar, a length-K vector
    shared by all users, or an N x K matrix. Unbounded entries are ``np.inf``.
    Invariant violations are not raised here; see :func:`validate_scenario`.
    """

    gain: np.ndarray
    noise: np.ndarray
    power_budget: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        gain = _frozen(self.gain)
        if gain.ndim != 3 or gain.shape[0] != gain.shape[1]:
            raise ValueError(f"gain must have shape (N, N, K), got {gain.shape}")
        n, _, k = gain.shape
        if n < 1 or k < 1:
            raise ValueError("need at least one user and one channel")
        noise = np.broadcast_to(np.asarray(self.noise, dtype=float), (n, k))
        budget = np.broadcast_to(np.asarray(self.power_budget, dtype=float), (n,))
        mask = np.inf if self.mask is None else self.mask
        mask = np.broadcast_to(np.asarray(mask, dtype=float), (n, k))
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "noise", _frozen(noise))
        object.__setattr__(self, "power_budget", _frozen(budget))
        object.__setattr__(self, "mask", _frozen(mask))

    @property
    def num_users(self) -> int:
        return self.gain.shape[0]

    @property
    def num_channels(self) -> int:
        return self.gain.shape[2]

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("gain", "noise", "power_budget", "mask")
        )

    def with_cross_gain_scale(self, c: float) -> "Scenario":
        """Copy with every cross gain (j != i) multiplied by ``c``."""
        g = np.array(self.gain)
        off = ~np.eye(self.num_users, dtype=bool)
        g[off] *= c
        return Scenario(g, self.noise, self.power_budget, self.mask)


def symmetric_two_user(h: float, budget=10.0, num_channels=2, noise=1.0) -> Scenario:
    """The two-user example family: unit direct gains, cross gains ``h``."""
    g = np.full((2, 2, num_channels), float(h))
    g[0, 0] = g[1, 1] = 1.0
    return Scenario(g, noise, budget)


@dataclass(frozen=True, eq=False)
class NormalizedView:
    """Gains and noise divided by the direct gain of the receiving user."""

    xgain: np.ndarray  # [j, i, k]
    nnoise: np.ndarray  # [i, k]


def validate_scenario(s: Scenario) -> list[str]:
    """Return every violated scenario invariant, with indices. Empty = valid."""
    out = []
    n, k = s.num_users, s.num_channels
    for name, arr in (("gain", s.gain), ("noise", s.noise),
                      ("power_budget", s.power_budget)):
        for idx in zip(*np.nonzero(~np.isfinite(arr))):
            out.append(f"{name}{list(map(int, idx))} is not finite")
    for idx in zip(*np.nonzero(s.gain < 0)):
        out.append(f"gain{list(map(int, idx))} = {s.gain[idx]} is negative")
    for i in range(n):
        for c in range(k):
            if not s.gain[i, i, c] > 0:
                out.append(f"direct gain gain[{i}][{i}][{c}] = {s.gain[i, i, c]} must be > 0")
            if not s.noise[i, c] > 0:
                out.append(f"noise[{i}][{c}] = {s.noise[i, c]} must be > 0")
            if np.isnan(s.mask[i, c]) or s.mask[i, c] < 0:
                out.append(f"mask[{i}][{c}] = {s.mask[i, c]} must be >= 0")
        if s.power_budget[i] < 0:
            out.append(f"power_budget[{i}] = {s.power_budget[i]} is negative")
        elif s.power_budget[i] > 0 and not np.sum(s.mask[i]) > 0:
            out.append(f"user {i} has a positive budget but all-zero masks")
    return out


class InvalidScenarioError(ValueError):
    pass


def require_valid(s: Scenario) -> None:
    problems = validate_scenario(s)
    if problems:
        raise InvalidScenarioError("; ".join(problems))


def normalize(s: Scenario) -> NormalizedView:
    require_valid(s)
    direct = np.einsum("iik->ik", s.gain)
    # xgain[j, i, k] = gain[j, i, k] / gain[i, i, k]
    xgain = s.gain / direct[np.newaxis, :, :]
    idx = np.arange(s.num_users)
    xgain[idx, idx, :] = 1.0
    return NormalizedView(_frozen(xgain), _frozen(s.noise / direct))


def _check_index(s: Scenario, i: int, k: int | None = None) -> None:
    if not 0 <= i < s.num_users:
        raise IndexError(f"user index {i} out of range for {s.num_users} users")
    if k is not None and not 0 <= k < s.num_channels:
        raise IndexError(f"channel index {k} out of range for {s.num_channels} channels")


def interference(gain: np.ndarray, p: np.ndarray, i: int) -> np.ndarray:
    """Per-channel received power at receiver ``i`` from every other user."""
    g = gain[:, i, :]
    total = np.zeros(g.shape[1])
    for j in range(g.shape[0]):
        if j != i:
            total = total + g[j] * p[j]
    return total


def sinr(s: Scenario, p: np.ndarray, i: int, k: int) -> float:
    _check_index(s, i, k)
    p = np.asarray(p, dtype=float)
    denom = s.noise[i, k] + interference(s.gain, p, i)[k]
    return float(s.gain[i, i, k] * p[i, k] / denom)


def rate(s: Scenario, p: np.ndarray, i: int) -> float:
    """Sum over channels of ``log(1 + SINR)`` for user ``i``."""
    _check_index(s, i)
    p = np.asarray(p, dtype=float)
    denom = s.noise[i] + interference(s.gain, p, i)
    return float(np.sum(np.log1p(s.gain[i, i] * p[i] / denom)))


def rates(s: Scenario, p: np.ndarray) -> np.ndarray:
    return np.array([rate(s, p, i) for i in range(s.num_users)])


def is_feasible(s: Scenario, p: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
    p = np.asarray(p, dtype=float)
    if p.shape != (s.num_users, s.num_channels):
        return False
    return bool(
        np.all(p >= 0)
        and np.all(p <= s.mask + tol)
        and np.all(p.sum(axis=1) <= s.power_budget + tol)
    )


def project_feasible(s: Scenario, p: np.ndarray) -> np.ndarray:
    """Clamp entrywise to ``[0, mask]``, then scale each row onto its budget."""
    p = np.clip(np.array(p, dtype=float), 0.0, s.mask)
    totals = p.sum(axis=1)
    for i in range(s.num_users):
        if totals[i] > s.power_budget[i]:
            p[i] *= s.power_budget[i] / totals[i]
    return p


def zero_profile(s: Scenario) -> np.ndarray:
    return np.zeros((s.num_users, s.num_channels))


def uniform_profile(s: Scenario) -> np.ndarray:
    """Budget split evenly across channels, then made feasible."""
    even = np.repeat(s.power_budget[:, None] / s.num_channels, s.num_channels, axis=1)
    return project_feasible(s, even)
