"""Fixed-point iteration of the water-filling map under three update schedules.

A global iteration is one full round (sequential), one parallel update
(simultaneous) or one simulator step (asynchronous). Asynchrony is simulated:
every run is single-threaded and fully determined by its seed.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .model import Scenario, NormalizedView, normalize, project_feasible, rates
from .model import interference as _interference
from .waterfill import best_response

# hook(user, interference_row) -> perturbed interference_row
InterferenceHook = Callable[[int, np.ndarray], np.ndarray]


class ScheduleKind(str, enum.Enum):
    SEQUENTIAL = "sequential"
    SIMULTANEOUS = "simultaneous"
    ASYNCHRONOUS = "asynchronous"


class Verdict(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS_EXCEEDED = "max_iters_exceeded"
    CYCLE_DETECTED = "cycle_detected"


@dataclass(frozen=True)
class ScheduleSpec:
    kind: ScheduleKind = ScheduleKind.SIMULTANEOUS
    order: Optional[tuple] = None
    alpha: float = 1.0
    delay_bound: int = 0
    activation_probability: float = 1.0
    starvation_bound: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if not 0 < self.alpha <= 2:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if self.delay_bound < 0:
            raise ValueError("delay_bound must be >= 0")
        if self.starvation_bound < 1:
            raise ValueError("starvation_bound must be >= 1")
        if not 0 < self.activation_probability <= 1:
            raise ValueError("activation_probability must lie in (0, 1]")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")
        if self.order is not None:
            order = tuple(int(u) for u in self.order)
            if sorted(order) != list(range(len(order))):
                raise ValueError(f"order {order} is not a permutation")
            object.__setattr__(self, "order", order)

    def user_order(self, num_users: int) -> tuple:
        if self.order is None:
            return tuple(range(num_users))
        if len(self.order) != num_users:
            raise ValueError(f"order has {len(self.order)} entries for {num_users} users")
        return self.order


@dataclass(frozen=True)
class StopSpec:
    tol: float = 1e-9
    max_iters: int = 1000
    cycle_window: int = 8

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.cycle_window < 0:
            raise ValueError("cycle_window must be >= 0")


@dataclass
class RunTrace:
    iterates: list
    sup_deltas: list
    per_user_rates: list
    verdict: Verdict
    iterations_used: int
    final_profile: np.ndarray
    tol: float


def _relaxed(old_row, new_row, alpha):
    return (1.0 - alpha) * old_row + alpha * new_row


def _respond(s, view, i, others, hook):
    interf = _interference(view.xgain, others, i)
    if hook is not None:
        interf = hook(i, interf)
    return best_response(view.nnoise[i] + interf, s.power_budget[i], s.mask[i]).allocation


def plain_map(s: Scenario, view: NormalizedView, p: np.ndarray) -> np.ndarray:
    """The unrelaxed simultaneous best-response map."""
    return np.array([_respond(s, view, i, p, None) for i in range(s.num_users)])


def step_sequential(s, view, p, spec, *, lagged=None, hook=None):
    """One round of in-place updates in ``spec.order``.

    ``lagged`` replaces the partially updated profile as the source of the
    other users' powers (used for injected feedback delay).
    """
    p = np.array(p, dtype=float)
    for i in spec.user_order(s.num_users):
        others = p if lagged is None else lagged
        p[i] = _relaxed(p[i], _respond(s, view, i, others, hook), spec.alpha)
    return p


def step_simultaneous(s, view, p, spec, *, lagged=None, hook=None):
    p = np.asarray(p, dtype=float)
    others = p if lagged is None else lagged
    new = np.empty_like(p)
    for i in range(s.num_users):
        new[i] = _relaxed(p[i], _respond(s, view, i, others, hook), spec.alpha)
    return new


@dataclass
class AsyncState:
    """Ring buffer of recent profiles (newest first) plus per-user idle counters."""

    history: deque
    idle: np.ndarray
    rng: np.random.Generator
    age: int = 0
    last_active: np.ndarray = field(default=None)

    @property
    def profile(self) -> np.ndarray:
        return self.history[0]


def init_async_state(p0: np.ndarray, spec: ScheduleSpec, extra_delay: int = 0) -> AsyncState:
    p0 = np.array(p0, dtype=float)
    return AsyncState(
        history=deque([p0], maxlen=spec.delay_bound + extra_delay + 1),
        idle=np.zeros(p0.shape[0], dtype=int),
        rng=np.random.default_rng(spec.rng_seed),
    )


def step_asynchronous(s, view, state: AsyncState, spec, *, extra_delay=0, hook=None):
    """Advance the simulated asynchronous system by one step (mutates ``state``).

    Each user wakes with probability ``activation_probability`` or when it has
    been idle for ``starvation_bound - 1`` steps. A waking user reads every
    other user's power at an independently drawn staleness in
    ``[0, min(delay_bound, age)]``, plus ``extra_delay``.
    """
    n = s.num_users
    rng = state.rng
    p = state.history[0]
    wake = rng.random(n) < spec.activation_probability
    wake |= state.idle >= spec.starvation_bound - 1
    max_lag = min(spec.delay_bound, state.age)
    new = np.array(p)
    for i in np.flatnonzero(wake):
        lags = rng.integers(0, max_lag + 1, size=n)
        lags = np.minimum(lags + extra_delay, len(state.history) - 1)
        others = np.array([state.history[lags[j]][j] for j in range(n)])
        new[i] = _relaxed(p[i], _respond(s, view, i, others, hook), spec.alpha)
    state.idle = np.where(wake, 0, state.idle + 1)
    state.last_active = wake
    state.history.appendleft(new)
    state.age += 1
    return state


def _sup(a, b) -> float:
    return float(np.max(np.abs(a - b))) if a.size else 0.0


_CYCLE_AMPLITUDE = 1e3


def _cycle_found(iterates, window, tol) -> bool:
    """A profile repeats at some lag m in [2, window] over two full periods.

    The excursion inside the period must dwarf ``tol``; a damped oscillation
    that is merely about to converge closes within ``tol`` too, but only once
    its amplitude has shrunk to a few multiples of it. The excursion must also
    not shrink from one period to the next: under stale views a single user
    can bounce out and back to the same point with a decaying amplitude.
    """
    t = len(iterates) - 1
    cur = iterates[t]
    for m in range(2, window + 1):
        if t - 2 * m < 0:
            break
        if _sup(cur, iterates[t - m]) >= tol or _sup(iterates[t - m], iterates[t - 2 * m]) >= tol:
            continue
        now = max(_sup(cur, iterates[s]) for s in range(t - m + 1, t))
        before = max(_sup(iterates[t - m], iterates[s]) for s in range(t - 2 * m + 1, t - m))
        if now >= _CYCLE_AMPLITUDE * tol and now >= (1 - 1e-3) * before - 2 * tol:
            return True
    return False


def run(s: Scenario, p0, schedule: ScheduleSpec = ScheduleSpec(),
        stop: StopSpec = StopSpec(), *, hook: InterferenceHook | None = None,
        extra_delay: int = 0) -> RunTrace:
    """Iterate from ``p0`` (projected onto the feasible set) until a stop fires.

    Convergence requires every sup-norm step in a trailing window to be below
    ``tol``. The window is one step for synchronous schedules, grows with any
    injected delay, and spans ``starvation_bound + delay_bound`` for the
    asynchronous schedule so that an idle user cannot fake convergence.
    """
    view = normalize(s)
    p = project_feasible(s, p0)
    kind = schedule.kind
    if kind is ScheduleKind.ASYNCHRONOUS:
        window = schedule.starvation_bound + schedule.delay_bound + extra_delay
        state = init_async_state(p, schedule, extra_delay)
    else:
        window = 1 + extra_delay
        lag_buffer = deque([p], maxlen=extra_delay + 1)

    iterates = [p]
    deltas = []
    user_rates = [rates(s, p)]
    verdict = Verdict.MAX_ITERS_EXCEEDED
    for _ in range(stop.max_iters):
        if kind is ScheduleKind.ASYNCHRONOUS:
            new = step_asynchronous(s, view, state, schedule,
                                    extra_delay=extra_delay, hook=hook).profile
        else:
            lagged = lag_buffer[-1] if extra_delay else None
            step = step_sequential if kind is ScheduleKind.SEQUENTIAL else step_simultaneous
            new = step(s, view, p, schedule, lagged=lagged, hook=hook)
            lag_buffer.appendleft(new)
        if schedule.alpha > 1:
            # over-relaxation can leave the feasible set
            new = project_feasible(s, new)
            if kind is ScheduleKind.ASYNCHRONOUS:
                state.history[0] = new
        deltas.append(_sup(new, p))
        iterates.append(new)
        user_rates.append(rates(s, new))
        p = new
        if len(deltas) >= window and max(deltas[-window:]) < stop.tol:
            verdict = Verdict.CONVERGED
            break
        if stop.cycle_window and _cycle_found(iterates, stop.cycle_window, stop.tol):
            verdict = Verdict.CYCLE_DETECTED
            break
    return RunTrace(iterates, deltas, user_rates, verdict, len(deltas), p, stop.tol)
