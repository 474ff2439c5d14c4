"""Measurement noise and feedback delay injected into the interference view."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import RunTrace, ScheduleSpec, StopSpec, run
from .model import Scenario
from .waterfill import Floor


@dataclass(frozen=True)
class PerturbSpec:
    noise_magnitude: float = 0.0
    extra_delay: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.noise_magnitude < 1:
            raise ValueError("noise_magnitude must lie in [0, 1)")
        if self.extra_delay < 0:
            raise ValueError("extra_delay must be >= 0")


def perturb_interference(interference: np.ndarray, spec: PerturbSpec,
                         rng: np.random.Generator) -> np.ndarray:
    eps = spec.noise_magnitude
    if not 0 <= eps < 1:
        raise ValueError("noise_magnitude must lie in [0, 1)")
    return interference * rng.uniform(1.0 - eps, 1.0 + eps, size=interference.shape)


def perturb_floor(floor: Floor, nnoise: np.ndarray, spec: PerturbSpec,
                  rng: np.random.Generator) -> Floor:
    """Multiplicative error on the interference part of ``floor``; noise untouched."""
    if spec.noise_magnitude == 0:
        return floor
    nnoise = np.asarray(nnoise, dtype=float)
    return Floor(nnoise + perturb_interference(floor.level - nnoise, spec, rng))


@dataclass
class NeighborhoodReport:
    reference: np.ndarray
    tail_distances: np.ndarray
    max_distance: float


@dataclass
class PerturbedRun:
    trace: RunTrace
    neighborhood: NeighborhoodReport


def run_perturbed(s: Scenario, p0, schedule: ScheduleSpec, stop: StopSpec,
                  pspec: PerturbSpec) -> PerturbedRun:
    """Run with noisy, delayed interference reads and measure the tail's drift.

    The reference is the unperturbed limit from the same start. Distances are
    sup-norm over the last quarter of the perturbed trace.
    """
    reference = run(s, p0, schedule, stop).final_profile
    rng = np.random.default_rng(pspec.rng_seed)

    def hook(_user, interference):
        return perturb_interference(interference, pspec, rng)

    trace = run(s, p0, schedule, stop, hook=hook, extra_delay=pspec.extra_delay)
    tail = trace.iterates[-max(1, len(trace.iterates) // 4):]
    dist = np.array([np.max(np.abs(p - reference)) for p in tail])
    return PerturbedRun(trace, NeighborhoodReport(reference, dist, float(dist.max())))
