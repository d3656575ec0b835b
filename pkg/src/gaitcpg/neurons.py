"""Spiking neuron models and the 1 kHz state update.

Two neuron types drive the controller:

* Pacemaker stochastic LIF motor neurons: leaky membranes with probabilistic
  threshold crossing, cytoplasmic calcium that accumulates with each spike,
  and a calcium-gated potassium term that terminates bursts.
* Stochastic LIF interneurons: the same membrane and firing machinery without
  the calcium/potassium pacemaker and without background drive.

Discretization: per-step decay is applied with the exact factor exp(-dt/tau)
and forcing terms are added explicitly (exponential Euler). Rate inputs are
scaled by dt; synaptic events arrive as instantaneous mV impulses. Pure-decay
trajectories therefore match the closed-form exponential at any dt.

State containers hold arrays whose trailing axis is the neuron index; a
leading axis may batch several pools so a whole network steps in a few
vectorized calls. When state is batched, per-pool random streams are passed
as a sequence, one per leading row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

# Slack when comparing refractory timers accumulated in float seconds.
_TIMER_EPS = 1e-9


@dataclass
class SimClock:
    """Fixed-step simulation clock (default 1 kHz)."""

    dt: float = 0.001
    step_index: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    def advance(self) -> None:
        self.step_index += 1

    @property
    def time_s(self) -> float:
        return self.step_index * self.dt


@dataclass
class PslifParams:
    """Motor-neuron (pacemaker stochastic LIF) parameters.

    Potentials in mV, times in seconds, rates in mV/s.
    """

    v_rest: float = 0.0
    v_th: float = 10.0
    tau_motor: float = 0.009
    refractory: float = 0.005
    s_spike: float = 0.2
    r_ca: float = 1.0
    tau_ca: float = 0.25
    thres_ca: float = 10.0
    s_k_chan: float = 10.0
    c_k_chan: float = 8000.0
    i_background_0: float = 1380.0
    k_background_v: float = 40.0
    a_random: float = 0.5

    def __post_init__(self):
        for name in ("tau_motor", "tau_ca"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.s_spike <= 0:
            raise ValueError("s_spike must be positive")
        if self.refractory < 0:
            raise ValueError("refractory must be non-negative")


@dataclass
class SlifParams:
    """Interneuron (stochastic LIF) parameters; shared by V1/V2b and IIN."""

    v_rest: float = 0.0
    v_th: float = 10.0
    tau: float = 0.009
    refractory: float = 0.003
    s_spike: float = 0.2

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.s_spike <= 0:
            raise ValueError("s_spike must be positive")
        if self.refractory < 0:
            raise ValueError("refractory must be non-negative")


@dataclass
class PoolState:
    """State of one motor pool, or a batch of pools (leading axis).

    `intra_weights[..., j, i]` is the impulse (mV) neuron i receives when
    pool-mate j spikes; the diagonal is exactly zero.
    """

    positions: np.ndarray        # (..., n, 3) in the unit cube
    intra_weights: np.ndarray    # (..., n, n) mV per spike
    v: np.ndarray                # (..., n) mV
    ca: np.ndarray               # (..., n) concentration
    refractory_remaining: np.ndarray  # (..., n) seconds
    spiked_last_step: np.ndarray      # (..., n) bool

    @property
    def n(self) -> int:
        return self.v.shape[-1]

    @classmethod
    def new(cls, positions: np.ndarray, intra_weights: np.ndarray,
            v_rest: float = 0.0) -> "PoolState":
        shape = positions.shape[:-1]
        return cls(
            positions=positions,
            intra_weights=intra_weights,
            v=np.full(shape, v_rest, dtype=float),
            ca=np.zeros(shape, dtype=float),
            refractory_remaining=np.zeros(shape, dtype=float),
            spiked_last_step=np.zeros(shape, dtype=bool),
        )

    @classmethod
    def stack(cls, pools: "list[PoolState]") -> "PoolState":
        return cls(
            positions=np.stack([p.positions for p in pools]),
            intra_weights=np.stack([p.intra_weights for p in pools]),
            v=np.stack([p.v for p in pools]),
            ca=np.stack([p.ca for p in pools]),
            refractory_remaining=np.stack([p.refractory_remaining for p in pools]),
            spiked_last_step=np.stack([p.spiked_last_step for p in pools]),
        )

    def reset_dynamic(self, v_rest: float = 0.0) -> None:
        """Zero every run-time variable; spatial wiring is kept."""
        self.v[...] = v_rest
        self.ca[...] = 0.0
        self.refractory_remaining[...] = 0.0
        self.spiked_last_step[...] = False


@dataclass
class SlifState:
    """State of a bank of stochastic LIF interneurons."""

    v: np.ndarray
    refractory_remaining: np.ndarray
    spiked_last_step: np.ndarray

    @classmethod
    def new(cls, k: int, v_rest: float = 0.0) -> "SlifState":
        return cls(
            v=np.full(k, v_rest, dtype=float),
            refractory_remaining=np.zeros(k, dtype=float),
            spiked_last_step=np.zeros(k, dtype=bool),
        )

    def reset_dynamic(self, v_rest: float = 0.0) -> None:
        self.v[...] = v_rest
        self.refractory_remaining[...] = 0.0
        self.spiked_last_step[...] = False


def spike_probability(v, v_th: float, s_spike: float):
    """Probability of firing at membrane potential v; exactly 0.5 at v_th."""
    return expit((v - v_th) / (s_spike / 2.0))


def build_pool_wiring(n: int, w0: float, c_dist: float,
                      rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Place n neurons uniformly in the unit cube and wire them all-to-all.

    The synapse from j to i has strength w0 * exp(-c_dist * dist(j, i));
    self-connections are zero.
    """
    if n < 1:
        raise ValueError("pool must contain at least one neuron")
    positions = rng.uniform(0.0, 1.0, size=(n, 3))
    delta = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((delta ** 2).sum(axis=-1))
    weights = w0 * np.exp(-c_dist * dist)
    np.fill_diagonal(weights, 0.0)
    return positions, weights


def update_calcium(ca, spiked, params: PslifParams, clock: SimClock):
    """Decay cytoplasmic calcium and add r_ca per spike."""
    decay = math.exp(-clock.dt / params.tau_ca)
    return ca * decay + params.r_ca * np.asarray(spiked, dtype=float)


def k_channel_drop(ca, params: PslifParams):
    """Potassium-channel potential drop rate (mV/s), in [0, c_k_chan]."""
    return params.c_k_chan * expit(params.s_k_chan * (ca - params.thres_ca))


def background_current(v_torso: float, params: PslifParams,
                       rng, n: int, u=None) -> np.ndarray:
    """Noisy background drive (mV/s); one fresh Uniform[-1,1] per neuron.

    `u` may carry pre-drawn Uniform[-1,1] values (the network step draws all
    of a pool's randomness in one call); otherwise they come from `rng`.
    """
    base = params.i_background_0 + params.k_background_v * v_torso
    if u is None:
        u = rng.uniform(-1.0, 1.0, size=n)
    return base * (1.0 + params.a_random * u)


def _draw_uniform(rng, shape) -> np.ndarray:
    """Uniform[0,1) draws: pre-drawn array, one stream, or one per row."""
    if isinstance(rng, np.ndarray):
        return rng
    if hasattr(rng, "random"):
        return rng.random(shape)
    return np.stack([g.random(shape[1:]) for g in rng])


def step_pslif(pool: PoolState, rate, impulse, params: PslifParams,
               clock: SimClock, rng) -> np.ndarray:
    """Advance motor-pool membranes one step; returns the fresh spike flags.

    `rate` (mV/s) aggregates background drive, the potassium drop and any
    limit-position inhibition; `impulse` (mV) carries all synaptic events.
    Refractory neurons are clamped at rest and ignore both. Firing is
    stochastic; a spike resets the membrane, starts the refractory timer and
    increments calcium. Calcium decays on every neuron every step.
    """
    dt = clock.dt
    rr = np.maximum(pool.refractory_remaining - dt, 0.0)
    refractory = rr > _TIMER_EPS

    decay = math.exp(-dt / params.tau_motor)
    v = params.v_rest + (pool.v - params.v_rest) * decay + dt * np.asarray(rate) \
        + np.asarray(impulse)
    v[refractory] = params.v_rest

    p = spike_probability(v, params.v_th, params.s_spike)
    fired = (_draw_uniform(rng, v.shape) < p) & ~refractory

    v[fired] = params.v_rest
    rr[fired] = params.refractory

    pool.v[...] = v
    pool.ca[...] = update_calcium(pool.ca, fired, params, clock)
    pool.refractory_remaining[...] = rr
    pool.spiked_last_step[...] = fired
    return fired


def step_slif(state: SlifState, impulse, params: SlifParams,
              clock: SimClock, rng) -> np.ndarray:
    """Advance interneurons one step; like step_pslif minus the pacemaker."""
    dt = clock.dt
    rr = np.maximum(state.refractory_remaining - dt, 0.0)
    refractory = rr > _TIMER_EPS

    decay = math.exp(-dt / params.tau)
    v = params.v_rest + (state.v - params.v_rest) * decay + np.asarray(impulse)
    v[refractory] = params.v_rest

    p = spike_probability(v, params.v_th, params.s_spike)
    fired = (_draw_uniform(rng, v.shape) < p) & ~refractory

    v[fired] = params.v_rest
    rr[fired] = params.refractory

    state.v[...] = v
    state.refractory_remaining[...] = rr
    state.spiked_last_step[...] = fired
    return fired
