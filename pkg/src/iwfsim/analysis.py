"""Convergence diagnostics for the water-filling map."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import RunTrace, plain_map
from .model import Scenario, interference, normalize, require_valid
from .waterfill import solve_water_level


def build_hmax(s: Scenario) -> np.ndarray:
    """Worst-case cross-interference couplings between users.

    Per channel ``k``: ``m[i, j] = gain[j, i, k] P_j / (noise[i, k] +
    sum_{m != i} gain[m, i, k] P_m)`` with a zero diagonal. Multi-carrier
    scenarios take the entrywise maximum over channels.
    """
    require_valid(s)
    n = s.num_users
    off = ~np.eye(n, dtype=bool)
    # cross[j, i, k] = gain[j, i, k] * P_j, zero on the diagonal
    cross = s.gain * s.power_budget[:, None, None] * off[:, :, None]
    denom = s.noise + cross.sum(axis=0)  # [i, k]
    per_channel = cross / denom[None, :, :]  # [j, i, k]
    return np.max(per_channel, axis=2).T.copy()  # [i, j]


def _components(m: np.ndarray) -> list:
    """Strongly connected components of the support graph of ``m``."""
    n = m.shape[0]
    reach = (m > 0) | np.eye(n, dtype=bool)
    for _ in range(max(1, int(np.ceil(np.log2(n))))):
        reach = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
    mutual = reach & reach.T
    seen, comps = np.zeros(n, dtype=bool), []
    for i in range(n):
        if not seen[i]:
            idx = np.flatnonzero(mutual[i])
            seen[idx] = True
            comps.append(idx)
    return comps


def _perron_root(b: np.ndarray, tol: float, max_iter: int) -> float:
    # b = block + I is primitive, so the Collatz-Wielandt bounds pinch geometrically
    x = np.ones(b.shape[0])
    lo, hi = 0.0, np.inf
    for _ in range(max_iter):
        y = b @ x
        ratios = y / x
        lo, hi = ratios.min(), ratios.max()
        if hi - lo < tol:
            break
        x = y / np.max(y)
    return float(0.5 * (lo + hi)) - 1.0


def spectral_radius(m, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest eigenvalue modulus of a square nonnegative matrix.

    The radius is the largest over the irreducible diagonal blocks, so the
    matrix is first split into strongly connected components. Each block is
    handled by power iteration on ``block + I`` from the all-ones vector; the
    shift makes the Perron root strictly dominant, so periodic matrices such
    as ``[[0, a], [a, 0]]`` do not stall. Iteration stops once the
    Collatz-Wielandt bounds pinch to ``tol``.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"spectral radius needs a square matrix, got shape {m.shape}")
    if np.any(m < 0):
        raise ValueError("matrix must be entrywise nonnegative; pass abs(m) for a bound")
    if m.shape[0] == 0 or not np.any(m):
        return 0.0
    best = 0.0
    for idx in _components(m):
        if idx.size == 1:
            best = max(best, float(m[idx[0], idx[0]]))
            continue
        block = m[np.ix_(idx, idx)]
        best = max(best, _perron_root(block + np.eye(idx.size), tol, max_iter))
    return max(best, 0.0)


def diagonal_dominance(m) -> np.ndarray:
    """Per-row flag: off-diagonal row sum strictly below one."""
    m = np.asarray(m, dtype=float)
    return m.sum(axis=1) < 1.0


@dataclass
class JacobianResult:
    """``matrix`` is None when the profile sits too close to a clipping kink."""

    matrix: Optional[np.ndarray]
    radius: Optional[float]

    @property
    def smooth(self) -> bool:
        return self.matrix is not None


def _near_kink(s, view, p, margin) -> bool:
    if np.any(p < margin) or np.any(p > s.mask - margin):
        return True
    for i in range(s.num_users):
        level = view.nnoise[i] + interference(view.xgain, p, i)
        if s.power_budget[i] == 0:
            continue
        sigma = solve_water_level(level, s.power_budget[i], s.mask[i])
        raw = sigma - level
        if np.any(np.abs(raw) < margin) or np.any(np.abs(raw - s.mask[i]) < margin):
            return True
    return False


def numerical_jacobian(s: Scenario, p, h: float = 1e-6) -> JacobianResult:
    """Central-difference Jacobian of the plain map, rows/cols ordered (user, channel).

    Perturbed coordinates are clamped to their box ``[0, mask]``; budgets are
    not re-imposed on perturbed points because the map is defined for any
    nonnegative profile and rescaling would leak into other coordinates.
    """
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    view = normalize(s)
    p = np.asarray(p, dtype=float)
    if _near_kink(s, view, p, 10 * h):
        return JacobianResult(None, None)
    n, k = p.shape
    jac = np.zeros((n * k, n * k))
    for col in range(n * k):
        j, l = divmod(col, k)
        up, dn = np.array(p), np.array(p)
        up[j, l] = min(p[j, l] + h, s.mask[j, l])
        dn[j, l] = max(p[j, l] - h, 0.0)
        diff = plain_map(s, view, up) - plain_map(s, view, dn)
        jac[:, col] = diff.ravel() / (up[j, l] - dn[j, l])
    return JacobianResult(jac, spectral_radius(np.abs(jac)))


def relaxed_jacobian(jac: np.ndarray, alpha: float) -> np.ndarray:
    return (1.0 - alpha) * np.eye(jac.shape[0]) + alpha * jac


def empirical_beta(trace: RunTrace, tol: float | None = None) -> float:
    """Largest successive step ratio over the tail half of a trace.

    Ratios whose denominator is below ``100 * tol`` are numerical noise and are
    skipped; 0.0 is returned when nothing remains.
    """
    tol = trace.tol if tol is None else tol
    d = np.asarray(trace.sup_deltas, dtype=float)
    if d.size < 2:
        return 0.0
    start = d.size // 2
    best = 0.0
    for t in range(start, d.size - 1):
        if d[t] >= 1e2 * tol:
            best = max(best, d[t + 1] / d[t])
    return float(best)


@dataclass
class AnalysisReport:
    hmax: np.ndarray
    spectral_radius: float
    contraction_certified: bool
    diag_dominance_rows: np.ndarray
    empirical_beta: Optional[float] = None
    jacobian_radius: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "hmax": self.hmax.tolist(),
            "spectral_radius": self.spectral_radius,
            "contraction_certified": self.contraction_certified,
            "diag_dominance_rows": [bool(b) for b in self.diag_dominance_rows],
            "empirical_beta": self.empirical_beta,
            "jacobian_radius": self.jacobian_radius,
        }


def analyze(s: Scenario, trace: RunTrace | None = None, profile=None,
            h: float = 1e-6) -> AnalysisReport:
    m = build_hmax(s)
    rho = spectral_radius(m)
    report = AnalysisReport(m, rho, rho < 1.0, diagonal_dominance(m))
    if trace is not None:
        report.empirical_beta = empirical_beta(trace)
    if profile is not None:
        report.jacobian_radius = numerical_jacobian(s, profile, h).radius
    return report
