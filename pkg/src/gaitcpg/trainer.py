"""Session lifecycle and multi-session training.

A session runs the loop {CPG step -> physics step -> reward -> conditional
weight update} until the 10 s cap or until the non-alive accumulator (number
of steps spent with the torso past the tilt threshold, never decremented)
reaches its threshold. Between sessions everything resets except the three
things that carry learning: the inter-limb weight table, the astrocyte bank,
and the training history. The learning-rate anneal (progress) and the
learning-start delay are frozen per session, computed from the previous ten
session lengths before the session begins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .astrocyte import (AstrocyteParams, AstrocyteState, release_adenosine,
                        step_li_rinzel, update_ag)
from .cpg import CpgNetwork, ImpulseAudit, InterLimbWeights, step_cpg
from .config import RunConfig, SessionConfig
from .energy import FiringTally
from .physics import (PhysicsBackend, PhysicsDivergence, ScriptedBackend,
                      alive_indicator, constant_velocity_script)
from .plasticity import (PlasticityParams, RewardWindow, StdpState,
                         apply_weight_update, effective_reward, reward,
                         update_traces_and_stdp)
from .quadruped import SimplifiedQuadruped
from .neurons import SimClock
from .rng import RngStreams
from .telemetry import trot_index


@dataclass
class SessionRecord:
    index: int
    length_steps: int
    length_s: float
    mean_reward: float
    final_x: float
    progress: float
    learning_start_s: float
    tally: FiringTally
    trot_index: float
    diverged: bool
    weights: np.ndarray   # post-session snapshot


@dataclass
class TrainingHistory:
    """Append-only session records, plus lengths restored from a checkpoint."""

    records: list[SessionRecord] = field(default_factory=list)
    prior_lengths: list[float] = field(default_factory=list)

    def append(self, record: SessionRecord) -> None:
        self.records.append(record)

    def lengths(self) -> list[float]:
        return self.prior_lengths + [r.length_s for r in self.records]

    @property
    def next_index(self) -> int:
        return len(self.prior_lengths) + len(self.records)

    def avg_recent_length(self, k: int = 10) -> float | None:
        all_lengths = self.lengths()
        if not all_lengths:
            return None
        recent = all_lengths[-k:]
        return sum(recent) / len(recent)


def training_progress(history: TrainingHistory, l_max: float = 10.0) -> float:
    """Anneal factor in [0, 1]; full rate early, near zero once sessions
    average ~90% of the cap. The first session trains at full rate."""
    avg = history.avg_recent_length(10)
    if avg is None:
        return 1.0
    return float(expit(-((avg / l_max) - 0.9) / 0.02))


def learning_start(history: TrainingHistory) -> float:
    """Seconds to wait before updating weights, Clip(avg10 - 1, 0, 2)."""
    avg = history.avg_recent_length(10)
    if avg is None:
        return 0.0
    return float(np.clip(avg - 1.0, 0.0, 2.0))


def _length_s(steps: int, dt: float) -> float:
    freq = 1.0 / dt
    if abs(freq - round(freq)) < 1e-9:
        return steps / round(freq)
    return steps * dt


class Simulation:
    """Everything one training run owns, wired together."""

    def __init__(self, network: CpgNetwork, weights: InterLimbWeights,
                 astro: AstrocyteState, astro_params: AstrocyteParams,
                 stdp: StdpState, plasticity_params: PlasticityParams,
                 backend: PhysicsBackend, session: SessionConfig,
                 rngs: RngStreams):
        self.network = network
        self.weights = weights
        self.astro = astro
        self.astro_params = astro_params
        self.stdp = stdp
        self.plasticity_params = plasticity_params
        self.backend = backend
        self.session = session
        self.rngs = rngs
        self.window = RewardWindow(
            size=int(round(plasticity_params.window_s / session.dt)))
        self.clock = SimClock(dt=session.dt)

    def reset_for_session(self):
        """Reset neurons, traces, reward window, hip PI and physics.

        Astrocyte state, the weight table and the RNG streams deliberately
        persist across session boundaries.
        """
        self.network.reset_dynamic()
        self.stdp.reset()
        self.window.reset()
        self.clock.step_index = 0
        return self.backend.reset()


def build_simulation(config: RunConfig, backend: PhysicsBackend | None = None,
                     master_seed: int | None = None) -> Simulation:
    """Assemble a Simulation from a validated RunConfig."""
    seed = config.run.master_seed if master_seed is None else master_seed
    rngs = RngStreams(seed)
    network = CpgNetwork.build(
        pool_size=config.snn.pool_size,
        w0_dist=config.snn.w0_dist,
        c_dist=config.snn.c_dist,
        motor_params=config.snn.motor,
        slif_params=config.snn.interneuron,
        params=config.cpg,
        limits=config.limits,
        rngs=rngs,
    )
    weights = InterLimbWeights.zeros(config.plasticity.w_min,
                                     config.plasticity.w_max)
    astro = AstrocyteState.resting(config.astrocyte, k=8)
    if backend is None:
        if config.run.backend == "simplified":
            backend = SimplifiedQuadruped(config.physics, config.limits,
                                          dt=config.session.dt,
                                          hip_reset=config.cpg.hip_target)
        else:
            topple = config.session.stub_topple_at_s
            backend = ScriptedBackend(constant_velocity_script(
                config.session.stub_vel_x,
                None if topple < 0 else topple,
                dt=config.session.dt))
    return Simulation(
        network=network,
        weights=weights,
        astro=astro,
        astro_params=config.astrocyte,
        stdp=StdpState(),
        plasticity_params=config.plasticity,
        backend=backend,
        session=config.session,
        rngs=rngs,
    )


def run_session(sim: Simulation, index: int, progress: float,
                learning_start_s: float, learning: bool = True,
                audit: ImpulseAudit | None = None,
                step_callback=None) -> SessionRecord:
    """Run one session to termination and summarize it.

    `step_callback(t, obs, activity, sim)` fires after each completed step;
    rollout commands use it to stream rasters and trajectories.
    """
    ses = sim.session
    pp = sim.plasticity_params
    ap = sim.astro_params
    dt = ses.dt
    max_steps = ses.max_steps
    learn_step = int(round(learning_start_s / dt))

    obs = sim.reset_for_session()
    tally = FiringTally()
    ext_series = np.zeros((max_steps, 4), dtype=np.int16)
    non_alive = 0
    reward_sum = 0.0
    steps_done = 0
    final_x = float(obs.torso_pos[0])
    diverged = False

    for t in range(max_steps):
        torques, activity = step_cpg(sim.network, sim.weights, obs,
                                     sim.clock, audit=audit)
        sim.clock.advance()
        tally.add_step(activity, dt)
        ext_series[t] = activity.thigh_extensor_counts

        try:
            obs = sim.backend.step(torques)
        except PhysicsDivergence:
            diverged = True
            break

        if step_callback is not None:
            step_callback(t, obs, activity, sim)

        r = reward(obs, pp.reward)
        r_eff = effective_reward(r, sim.window, pp.c_average)
        reward_sum += r
        final_x = float(obs.torso_pos[0])

        thigh_counts = activity.thigh_counts
        update_ag(sim.astro, thigh_counts, ap, sim.clock)
        step_li_rinzel(sim.astro, ap, sim.clock)
        ado = release_adenosine(sim.astro, ap, sim.clock)
        update_traces_and_stdp(sim.stdp, thigh_counts, pp, sim.clock)
        if learning and t >= learn_step:
            apply_weight_update(sim.weights, sim.stdp, r_eff, progress,
                                ado, pp)

        steps_done = t + 1
        if not alive_indicator(obs, ses.alive_z_threshold):
            non_alive += 1
            if non_alive >= ses.non_alive_steps:
                break

    ti = trot_index(ext_series[:steps_done]) if steps_done >= 500 else 0.0
    return SessionRecord(
        index=index,
        length_steps=steps_done,
        length_s=_length_s(steps_done, dt),
        mean_reward=reward_sum / steps_done if steps_done else 0.0,
        final_x=final_x,
        progress=progress,
        learning_start_s=learning_start_s,
        tally=tally,
        trot_index=ti,
        diverged=diverged,
        weights=sim.weights.w.copy(),
    )


def train(sim: Simulation, n_sessions: int,
          history: TrainingHistory | None = None,
          session_callback=None) -> TrainingHistory:
    """Run sessions sequentially; weights, astrocytes and history persist.

    `session_callback(record, history)` fires after every session, which is
    where the CLI hangs checkpointing.
    """
    history = history if history is not None else TrainingHistory()
    l_max = sim.session.l_max
    for _ in range(n_sessions):
        index = history.next_index
        progress = training_progress(history, l_max)
        start_s = learning_start(history)
        record = run_session(sim, index, progress, start_s)
        history.append(record)
        if session_callback is not None:
            session_callback(record, history)
    return history
