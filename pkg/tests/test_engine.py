import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iwfsim.engine import (_cycle_found, ScheduleSpec, StopSpec, Verdict, init_async_state, plain_map,
                           run, step_asynchronous, step_sequential, step_simultaneous)
from iwfsim.generators import random_profile, random_scenario
from iwfsim.model import Scenario, is_feasible, normalize, symmetric_two_user
from iwfsim.scenario_io import load_scenario
from iwfsim.waterfill import best_response

SEQ, SIM = ScheduleSpec("sequential"), ScheduleSpec("simultaneous")
ASYNC = ScheduleSpec("asynchronous", delay_bound=2, activation_probability=0.5,
                     starvation_bound=5, rng_seed=7)


def test_spec_validation():
    with pytest.raises(ValueError):
        ScheduleSpec(alpha=0.0)
    with pytest.raises(ValueError):
        ScheduleSpec(alpha=2.5)
    with pytest.raises(ValueError):
        ScheduleSpec(order=(0, 0))
    with pytest.raises(ValueError):
        ScheduleSpec(starvation_bound=0)
    with pytest.raises(ValueError):
        StopSpec(tol=0.0)


def test_single_user_step_is_one_best_response():
    s = Scenario(np.ones((1, 1, 3)), [[1.0, 2.0, 4.0]], 3.0)
    view = normalize(s)
    expect = best_response([1.0, 2.0, 4.0], 3.0).allocation
    np.testing.assert_array_equal(step_sequential(s, view, np.zeros((1, 3)), SEQ)[0], expect)
    np.testing.assert_array_equal(step_simultaneous(s, view, np.zeros((1, 3)), SIM)[0], expect)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 1.7])
def test_fixed_point_is_stationary(two_user, alpha):
    view = normalize(two_user)
    p = np.full((2, 2), 5.0)
    for step in (step_sequential, step_simultaneous):
        out = step(two_user, view, p, ScheduleSpec(alpha=alpha))
        np.testing.assert_allclose(out, p, atol=1e-12)


def test_sequential_round_from_zero(two_user):
    view = normalize(two_user)
    out = step_sequential(two_user, view, np.zeros((2, 2)), SEQ)
    # user 0 sees flat noise; user 1 then responds to floor (1.5, 1.5)
    np.testing.assert_allclose(out, [[5.0, 5.0], [5.0, 5.0]], atol=1e-10)


def test_sequential_uses_partial_updates():
    g = np.ones((2, 2, 2))
    g[1, 0] = [0.5, 0.0]
    g[0, 1] = [0.5, 0.0]
    s = Scenario(g, 1.0, 2.0)
    view = normalize(s)
    out = step_sequential(s, view, np.zeros((2, 2)), SEQ)
    # user 0 fills evenly (1, 1); user 1 then sees floor (1.5, 1) -> (0.75, 1.25)
    np.testing.assert_allclose(out, [[1.0, 1.0], [0.75, 1.25]], atol=1e-10)
    rev = step_sequential(s, view, np.zeros((2, 2)), ScheduleSpec("sequential", order=(1, 0)))
    np.testing.assert_allclose(rev, [[0.75, 1.25], [1.0, 1.0]], atol=1e-10)


def test_simultaneous_jump_from_zero(two_user):
    out = step_simultaneous(two_user, normalize(two_user), np.zeros((2, 2)), SIM)
    np.testing.assert_allclose(out, 5.0, atol=1e-10)


def test_simultaneous_preserves_symmetry():
    g = np.full((2, 2, 3), 0.4)
    g[0, 0] = g[1, 1] = 1.0
    s = Scenario(g, [1.0, 2.0, 0.5], 6.0)
    p = np.array([[1.0, 2.0, 0.5], [1.0, 2.0, 0.5]])
    out = step_simultaneous(s, normalize(s), p, SIM)
    np.testing.assert_array_equal(out[0], out[1])


def test_async_without_delay_or_sleep_is_simultaneous():
    s = random_scenario(np.random.default_rng(3), 3, 3)
    spec = ScheduleSpec("asynchronous", alpha=0.7, delay_bound=0, activation_probability=1.0)
    a = run(s, np.zeros((3, 3)), spec, StopSpec())
    b = run(s, np.zeros((3, 3)), ScheduleSpec("simultaneous", alpha=0.7), StopSpec())
    assert a.iterations_used == b.iterations_used
    for x, y in zip(a.iterates, b.iterates):
        np.testing.assert_array_equal(x, y)


def test_starvation_guard(two_user):
    spec = ScheduleSpec("asynchronous", delay_bound=1, activation_probability=0.01,
                        starvation_bound=3, rng_seed=1)
    state = init_async_state(np.zeros((2, 2)), spec)
    view = normalize(two_user)
    active = []
    for _ in range(60):
        step_asynchronous(two_user, view, state, spec)
        active.append(state.last_active.copy())
    active = np.array(active)
    for t in range(len(active) - 2):
        assert np.all(active[t:t + 3].any(axis=0))


def test_async_staleness_never_exceeds_history(two_user):
    spec = ScheduleSpec("asynchronous", delay_bound=3, rng_seed=2)
    state = init_async_state(np.zeros((2, 2)), spec)
    for _ in range(10):
        step_asynchronous(two_user, normalize(two_user), state, spec)
        assert len(state.history) <= 4


def test_async_with_delay_reaches_synchronous_point(two_user):
    ref = run(two_user, np.zeros((2, 2)), SIM, StopSpec()).final_profile
    spec = ScheduleSpec("asynchronous", delay_bound=2, activation_probability=0.5,
                        starvation_bound=4, rng_seed=11)
    tr = run(two_user, np.zeros((2, 2)), spec, StopSpec())
    assert tr.verdict is Verdict.CONVERGED
    assert np.max(np.abs(tr.final_profile - ref)) < 1e-6


@pytest.mark.parametrize("spec", [SEQ, SIM, ASYNC], ids=["seq", "sim", "async"])
def test_example_converges_to_even_split(two_user, spec):
    tr = run(two_user, np.zeros((2, 2)), spec, StopSpec())
    assert tr.verdict is Verdict.CONVERGED
    np.testing.assert_allclose(tr.final_profile, 5.0, atol=1e-6)


def test_huge_tolerance_stops_after_one_step(two_user):
    tr = run(two_user, np.zeros((2, 2)), SIM, StopSpec(tol=1e3))
    assert tr.verdict is Verdict.CONVERGED and tr.iterations_used == 1


def test_max_iters_verdict(two_user):
    tr = run(two_user, np.zeros((2, 2)), SIM, StopSpec(tol=1e-12, max_iters=1))
    assert tr.verdict is Verdict.MAX_ITERS_EXCEEDED and tr.iterations_used == 1


def test_relaxation_rescues_cycling_instance(scenario_dir):
    s = load_scenario(scenario_dir / "relaxation_rescue.json")
    p0 = np.zeros((s.num_users, s.num_channels))
    assert run(s, p0, SIM, StopSpec()).verdict is Verdict.CYCLE_DETECTED
    assert run(s, p0, ScheduleSpec(alpha=0.5), StopSpec()).verdict is Verdict.CONVERGED


def test_slowly_damped_oscillation_is_not_a_cycle():
    # slope -0.9 contraction alternates for a long time before settling
    g = np.full((2, 2, 2), 0.9)
    g[0, 0] = g[1, 1] = 1.0
    s = Scenario(g, [1.0, 2.0], 10.0)
    assert run(s, np.zeros((2, 2)), SIM, StopSpec()).verdict is Verdict.CONVERGED


def _path(amplitudes, period=3):
    base = np.zeros((1, 2))
    out = [base]
    for a in amplitudes:
        out += [base + [[a, 0.0]]] + [base] * (period - 1)
    return out


def test_decaying_bounce_is_not_a_cycle():
    # one coordinate leaves and returns to the same point, amplitude halving
    assert not _cycle_found(_path([4e-6, 2e-6, 1e-6]), 8, 1e-10)
    assert _cycle_found(_path([1e-6, 1e-6, 1e-6]), 8, 1e-10)


def test_cycle_detection_can_be_disabled(scenario_dir):
    s = load_scenario(scenario_dir / "relaxation_rescue.json")
    tr = run(s, np.zeros((3, 2)), SIM, StopSpec(max_iters=40, cycle_window=0))
    assert tr.verdict is Verdict.MAX_ITERS_EXCEEDED


def test_infeasible_start_is_projected(two_user):
    tr = run(two_user, np.full((2, 2), 50.0), SIM, StopSpec())
    np.testing.assert_allclose(tr.iterates[0], 5.0)


def test_trace_bookkeeping(two_user):
    tr = run(two_user, np.zeros((2, 2)), ASYNC, StopSpec())
    assert len(tr.iterates) == len(tr.sup_deltas) + 1 == len(tr.per_user_rates)
    for t, d in enumerate(tr.sup_deltas):
        assert d == np.max(np.abs(tr.iterates[t + 1] - tr.iterates[t]))
    assert tr.iterations_used == len(tr.sup_deltas)


def test_determinism():
    s = random_scenario(np.random.default_rng(8), 3, 2)
    p0 = random_profile(np.random.default_rng(9), s)
    a, b = run(s, p0, ASYNC, StopSpec()), run(s, p0, ASYNC, StopSpec())
    assert a.verdict == b.verdict and a.iterations_used == b.iterations_used
    for x, y in zip(a.iterates, b.iterates):
        assert x.tobytes() == y.tobytes()


def test_different_seeds_change_async_path(two_user):
    p0 = np.array([[10.0, 0.0], [0.0, 10.0]])
    a = run(two_user, p0, ASYNC, StopSpec())
    b = run(two_user, p0, ScheduleSpec(**{**ASYNC.__dict__, "rng_seed": 8}), StopSpec())
    assert [x.tobytes() for x in a.iterates] != [x.tobytes() for x in b.iterates]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([SEQ, SIM, ASYNC]),
       st.sampled_from([0.5, 1.0]), st.booleans())
def test_every_iterate_feasible_and_limit_is_fixed_point(seed, spec, alpha, masked):
    rng = np.random.default_rng(seed)
    s = random_scenario(rng, int(rng.integers(2, 4)), int(rng.integers(1, 4)), masked=masked)
    spec = ScheduleSpec(**{**spec.__dict__, "alpha": alpha})
    stop = StopSpec(tol=1e-9)
    tr = run(s, random_profile(rng, s), spec, stop)
    assert all(is_feasible(s, p) for p in tr.iterates)
    if tr.verdict is Verdict.CONVERGED:
        residual = np.max(np.abs(plain_map(s, normalize(s), tr.final_profile) - tr.final_profile))
        assert residual < 10 * stop.tol / min(alpha, 1.0)


def test_certificate_does_not_imply_uniqueness():
    # rho(H^max) = 20/21 < 1, yet the segregated split is a second equilibrium
    from iwfsim.analysis import build_hmax, spectral_radius
    s = symmetric_two_user(2.0)
    assert spectral_radius(build_hmax(s)) < 1
    view = normalize(s)
    for p in (np.full((2, 2), 5.0), np.array([[10.0, 0.0], [0.0, 10.0]])):
        assert np.max(np.abs(plain_map(s, view, p) - p)) < 1e-9


def test_certified_random_scenario_with_two_limits():
    from iwfsim.analysis import build_hmax, spectral_radius
    rng = np.random.default_rng(83941035)
    s = random_scenario(rng, int(rng.integers(2, 4)), int(rng.integers(1, 4)))
    p0 = random_profile(rng, s)
    assert spectral_radius(build_hmax(s)) < 0.9
    a = run(s, p0, SEQ, StopSpec(tol=1e-10))
    b = run(s, p0, SIM, StopSpec(tol=1e-10))
    assert a.verdict is Verdict.CONVERGED and b.verdict is Verdict.CYCLE_DETECTED


def test_certified_family_soundness():
    """Desk-scale family: certified scenarios converge under every schedule from 10 starts."""
    from iwfsim.analysis import build_hmax, spectral_radius
    rng = np.random.default_rng(4242)
    failures = []
    for n in range(40):
        s = random_scenario(rng, int(rng.integers(2, 5)), int(rng.integers(1, 5)),
                            rho_max=0.99, masked=bool(n % 2))
        assert spectral_radius(build_hmax(s)) < 1
        for j in range(10):
            p0 = random_profile(rng, s)
            for spec in (SEQ, SIM, ScheduleSpec(**{**ASYNC.__dict__, "rng_seed": j})):
                if run(s, p0, spec, StopSpec(max_iters=2000)).verdict is not Verdict.CONVERGED:
                    failures.append((n, j, spec.kind.value))
    bad = sorted({f[0] for f in failures})
    assert not failures, f"{len(failures)} of 1200 runs fail to converge, scenarios {bad}"
