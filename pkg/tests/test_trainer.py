import math

import numpy as np
import pytest

from gaitcpg.config import default_config
from gaitcpg.physics import (Observation, PhysicsBackend, PhysicsDivergence,
                             ScriptedBackend, constant_velocity_script)
from gaitcpg.trainer import (Simulation, TrainingHistory, build_simulation,
                             learning_start, run_session, train,
                             training_progress)


def stub_config(**session):
    cfg = default_config()
    cfg.run.backend = "stub"
    for k, v in session.items():
        setattr(cfg.session, k, v)
    return cfg


def history_of(lengths):
    h = TrainingHistory(prior_lengths=list(lengths))
    return h


# --------------------------------------------------------- schedules
def test_progress_full_rate_before_any_session():
    assert training_progress(TrainingHistory()) == 1.0


def test_progress_at_nine_seconds_half():
    assert training_progress(history_of([9.0] * 10)) == pytest.approx(0.5)


def test_progress_at_cap_nearly_zero():
    expected = 1.0 / (1.0 + math.exp(5.0))
    got = training_progress(history_of([10.0] * 10))
    assert got == pytest.approx(expected, rel=1e-9)
    assert got == pytest.approx(0.00669, abs=5e-6)


def test_progress_early_training_full():
    assert training_progress(history_of([2.0] * 10)) == pytest.approx(1.0, abs=1e-9)


def test_progress_uses_available_sessions_before_ten():
    assert training_progress(history_of([9.0] * 3)) == pytest.approx(0.5)


def test_learning_start_clip_table():
    assert learning_start(TrainingHistory()) == 0.0
    assert learning_start(history_of([0.5] * 10)) == 0.0
    assert learning_start(history_of([2.5] * 10)) == pytest.approx(1.5)
    assert learning_start(history_of([10.0] * 10)) == 2.0


# --------------------------------------------------------- sessions
def test_session_runs_to_cap_on_stable_stub():
    sim = build_simulation(stub_config())
    rec = run_session(sim, 0, progress=1.0, learning_start_s=0.0)
    assert rec.length_steps == 10000
    assert rec.length_s == 10.0
    assert rec.mean_reward == pytest.approx(1.0)
    assert rec.final_x == pytest.approx(10.0)
    assert not rec.diverged


def test_session_terminates_half_second_after_topple():
    sim = build_simulation(stub_config(stub_topple_at_s=3.0))
    rec = run_session(sim, 0, progress=1.0, learning_start_s=0.0)
    assert rec.length_s == pytest.approx(3.5)
    assert rec.length_steps == 3500


def test_non_alive_counter_does_not_reset_on_recovery():
    # Alternating alive/non-alive: the accumulator still reaches threshold.
    dt = 0.001

    def script(step):
        obs = Observation.zeros()
        if step % 2 == 0:
            obs.torso_z_axis_world = np.array([1.0, 0.0, 0.0])
        return obs

    cfg = stub_config()
    sim = build_simulation(cfg, backend=ScriptedBackend(script))
    rec = run_session(sim, 0, 1.0, 0.0)
    # 500 non-alive steps accumulate over ~1000 steps despite recoveries.
    assert 999 <= rec.length_steps <= 1001


def test_astrocyte_state_survives_session_reset():
    sim = build_simulation(stub_config(l_max=1.0))
    run_session(sim, 0, 1.0, 0.0)
    snap = {k: getattr(sim.astro, k).copy()
            for k in ("ag", "ip3", "ca_cyt", "gate_h", "ado",
                      "time_since_release")}
    sim.reset_for_session()
    for key, value in snap.items():
        assert np.array_equal(getattr(sim.astro, key), value), key
    # While the network and plasticity state did reset:
    assert np.all(sim.network.pools.v == 0.0)
    assert np.all(sim.stdp.u == 0.0)
    assert sim.window.mean() == 0.0
    assert np.all(sim.network.torque_trace.values == 0.0)
    assert np.all(sim.network.hip_pi.integral == 0.0)


def test_disabled_learning_keeps_weights_zero():
    cfg = stub_config(l_max=2.0)
    cfg.plasticity.eta = 0.0
    cfg.plasticity.eta_ado = 0.0
    sim = build_simulation(cfg)
    history = train(sim, 3)
    assert np.all(sim.weights.w == 0.0)
    assert all(np.all(r.weights == 0.0) for r in history.records)


def test_learning_gate_opens_at_learning_start():
    cfg = stub_config(l_max=1.0)
    sim = build_simulation(cfg)
    before = sim.weights.w.copy()
    run_session(sim, 0, progress=1.0, learning_start_s=2.0)  # gate never opens
    assert np.array_equal(sim.weights.w, before)
    run_session(sim, 0, progress=1.0, learning_start_s=0.0)
    assert not np.array_equal(sim.weights.w, before)


def test_divergent_backend_records_elapsed_session():
    class Exploding(PhysicsBackend):
        def __init__(self):
            self.count = 0

        def reset(self):
            self.count = 0
            return Observation.zeros()

        def step(self, torques):
            self.count += 1
            if self.count >= 250:
                raise PhysicsDivergence("test blow-up")
            return Observation.zeros()

    sim = build_simulation(stub_config(), backend=Exploding())
    rec = run_session(sim, 0, 1.0, 0.0)
    assert rec.diverged
    assert rec.length_steps == 249
    assert rec.length_s == pytest.approx(0.249)


def test_train_schedules_are_computed_before_each_session():
    cfg = stub_config(stub_topple_at_s=2.0, l_max=4.0)
    sim = build_simulation(cfg)
    history = train(sim, 12)
    # Every session ends at 2.5 s, so after 10 sessions the recorded
    # learning start must equal clip(2.5 - 1, 0, 2) = 1.5.
    assert history.records[0].learning_start_s == 0.0
    assert history.records[0].progress == 1.0
    assert history.records[-1].learning_start_s == pytest.approx(1.5)
    assert all(r.length_s == pytest.approx(2.5) for r in history.records)
    expected_progress = training_progress(history_of([2.5] * 10), l_max=4.0)
    assert history.records[-1].progress == pytest.approx(expected_progress)


def test_history_avg_recent():
    h = history_of([1.0, 2.0, 3.0])
    assert h.avg_recent_length(10) == pytest.approx(2.0)
    assert h.avg_recent_length(2) == pytest.approx(2.5)
    assert TrainingHistory().avg_recent_length() is None
