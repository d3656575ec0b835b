import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaitcpg.cpg import InterLimbWeights
from gaitcpg.neurons import SimClock
from gaitcpg.physics import Observation
from gaitcpg.plasticity import (
    PlasticityParams,
    RewardCoefficients,
    RewardWindow,
    StdpState,
    apply_weight_update,
    effective_reward,
    reward,
    update_traces_and_stdp,
    weight_constraint,
)


@pytest.fixture
def clock():
    return SimClock()


def obs_with(vel_x=0.0, roll=0.0, pitch=0.0, yaw=0.0):
    obs = Observation.zeros()
    obs.torso_vel[0] = vel_x
    obs.torso_omega[:] = (roll, pitch, yaw)
    return obs


# -------------------------------------------------------------- reward
def test_reward_zero_at_rest():
    assert reward(obs_with(), RewardCoefficients()) == 0.0


def test_reward_forward_speed_only():
    assert reward(obs_with(vel_x=1.17), RewardCoefficients()) \
        == pytest.approx(1.17)


def test_reward_angular_velocity_is_a_penalty():
    got = reward(obs_with(vel_x=1.0, roll=2.0), RewardCoefficients())
    assert got == pytest.approx(0.8)
    # Sign of the rate never changes the penalty direction.
    got_neg = reward(obs_with(vel_x=1.0, roll=-2.0), RewardCoefficients())
    assert got_neg == pytest.approx(0.8)


# -------------------------------------------------------------- window
def test_effective_reward_empty_window_passthrough():
    window = RewardWindow(100)
    assert effective_reward(1.0, window) == pytest.approx(1.0)


def test_effective_reward_steady_state():
    window = RewardWindow(100)
    r_eff = None
    for _ in range(300):
        r_eff = effective_reward(1.0, window)
    assert r_eff == pytest.approx(0.5)


def test_effective_reward_full_subtraction():
    window = RewardWindow(100)
    for _ in range(150):
        effective_reward(2.5, window, c_average=1.0)
    assert effective_reward(2.5, window, c_average=1.0) == pytest.approx(0.0)


def test_window_mean_excludes_current_sample():
    window = RewardWindow(100)
    window.push(4.0)
    # The pushed sample participates only in later means.
    assert effective_reward(0.0, window) == pytest.approx(-2.0)


# -------------------------------------------------------------- traces
def test_no_spikes_keeps_everything_zero(clock):
    state = StdpState()
    for _ in range(100):
        update_traces_and_stdp(state, np.zeros(8), PlasticityParams(), clock)
    assert np.all(state.u == 0.0)
    assert np.all(state.stdp == 0.0)


def test_two_spike_timing_hand_computed(clock):
    # Pool 0 spikes at step 0, pool 1 at step 5; independent arithmetic below.
    params = PlasticityParams()
    state = StdpState()
    counts = np.zeros(8)
    counts[0] = 1
    update_traces_and_stdp(state, counts, params, clock)
    for _ in range(4):
        update_traces_and_stdp(state, np.zeros(8), params, clock)
    counts = np.zeros(8)
    counts[1] = 1
    update_traces_and_stdp(state, counts, params, clock)

    trace_decay = math.exp(-clock.dt / params.tau_trace)
    stdp_decay = math.exp(-clock.dt / params.tau_stdp)
    # The source trace was set to 1 at step 0 and decayed by the four
    # updates of steps 1-4; step 5 reads it before its own decay/increment.
    u0_at_step5 = trace_decay ** 4
    assert state.stdp[0, 1] == pytest.approx(u0_at_step5, rel=1e-12)
    assert state.stdp[1, 0] == pytest.approx(-0.3 * u0_at_step5, rel=1e-12)
    assert state.u[0] == pytest.approx(trace_decay ** 5, rel=1e-12)
    assert state.u[1] == pytest.approx(1.0)
    # Decay bookkeeping of the potentiation entry after the event:
    update_traces_and_stdp(state, np.zeros(8), params, clock)
    assert state.stdp[0, 1] == pytest.approx(u0_at_step5 * stdp_decay, rel=1e-12)


def test_simultaneous_spikes_use_prior_traces_only(clock):
    params = PlasticityParams()
    state = StdpState()
    counts = np.zeros(8)
    counts[[0, 1]] = 1
    update_traces_and_stdp(state, counts, params, clock)
    # No prior history: simultaneous firing contributes nothing.
    assert state.stdp[0, 1] == 0.0
    assert state.stdp[1, 0] == 0.0


def test_stdp_decays_to_nothing_over_ten_tau(clock):
    params = PlasticityParams()
    state = StdpState()
    state.stdp[...] = 123.0
    steps = int(10 * params.tau_stdp / clock.dt)
    for _ in range(steps):
        update_traces_and_stdp(state, np.zeros(8), params, clock)
    assert np.all(np.abs(state.stdp) < 1e-2 * 123.0)


# -------------------------------------------------------------- constraint
def test_weight_constraint_boundaries_exact():
    assert weight_constraint(0.05) == 0.0
    assert weight_constraint(-0.05) == 0.0
    assert weight_constraint(0.0) == 0.25


@given(st.floats(min_value=-0.05, max_value=0.05))
def test_weight_constraint_range(w):
    z = weight_constraint(w)
    assert 0.0 <= z <= 0.25


# -------------------------------------------------------------- updates
def make_state(stdp_fill=1000.0):
    weights = InterLimbWeights.zeros()
    state = StdpState()
    state.stdp[...] = stdp_fill
    return weights, state


def test_zero_progress_freezes_weights():
    weights, state = make_state()
    before = weights.w.copy()
    apply_weight_update(weights, state, r_eff=5.0, progress=0.0,
                        ado_levels=np.full(8, 0.1), params=PlasticityParams())
    assert np.array_equal(weights.w, before)


def test_adenosine_only_pushes_down():
    weights, state = make_state(stdp_fill=0.0)
    weights.w[0, 2] = 0.01
    weights.w[2, 0] = -0.01
    apply_weight_update(weights, state, r_eff=0.0, progress=1.0,
                        ado_levels=np.full(8, 0.5), params=PlasticityParams())
    assert weights.w[0, 2] < 0.01
    assert weights.w[2, 0] < -0.01


def test_same_limb_entries_never_move():
    weights, state = make_state(stdp_fill=1e6)
    for _ in range(50):
        apply_weight_update(weights, state, r_eff=2.0, progress=1.0,
                            ado_levels=np.full(8, 2.0),
                            params=PlasticityParams())
    assert np.all(weights.w[InterLimbWeights.same_limb_mask()] == 0.0)


def test_weights_clipped_to_bounds():
    params = PlasticityParams(eta=1e-3)   # absurdly fast learning
    weights, state = make_state(stdp_fill=1e4)
    for _ in range(100):
        apply_weight_update(weights, state, r_eff=10.0, progress=1.0,
                            ado_levels=np.zeros(8), params=params)
    assert weights.w.max() <= params.w_max
    assert weights.w.min() >= params.w_min


def test_learning_rate_linearity():
    base = PlasticityParams()
    double = PlasticityParams(eta=2 * base.eta)
    w1, state = make_state()
    apply_weight_update(w1, state, r_eff=1.0, progress=1.0,
                        ado_levels=np.zeros(8), params=base)
    w2, state2 = make_state()
    apply_weight_update(w2, state2, r_eff=1.0, progress=1.0,
                        ado_levels=np.zeros(8), params=double)
    assert np.allclose(w2.w, 2.0 * w1.w, rtol=1e-12)


def test_ado_targets_incoming_column():
    # Adenosine at pool y depresses w[x, y] for every source x.
    weights, state = make_state(stdp_fill=0.0)
    ado = np.zeros(8)
    ado[5] = 1.0
    apply_weight_update(weights, state, r_eff=0.0, progress=1.0,
                        ado_levels=ado, params=PlasticityParams())
    moved = weights.w != 0.0
    assert moved[:, 5].sum() == 6      # all non-same-limb sources
    assert moved.sum() == 6


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_boundedness_under_random_updates(seed):
    rng = np.random.default_rng(seed)
    params = PlasticityParams(eta=1e-6, eta_ado=1e-2)
    weights = InterLimbWeights.zeros()
    state = StdpState()
    clock = SimClock()
    for _ in range(60):
        update_traces_and_stdp(state, rng.integers(0, 6, size=8), params, clock)
        apply_weight_update(weights, state, r_eff=rng.normal(0, 2),
                            progress=rng.random(),
                            ado_levels=rng.random(8) * 0.05, params=params)
    assert weights.w.max() <= params.w_max + 1e-15
    assert weights.w.min() >= params.w_min - 1e-15
    assert np.all(weights.w[InterLimbWeights.same_limb_mask()] == 0.0)
