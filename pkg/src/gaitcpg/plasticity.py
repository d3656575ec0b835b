"""Reward-modulated learning of the inter-limb weight table.

A scalar reward (forward speed minus attitude-rate penalties) is centered by
a short sliding average, gated by the training-progress factor, and used to
modulate a pairwise STDP signal between the eight thigh pools. Astrocyte
adenosine adds a purely depressive term on each pool's incoming column. Both
terms are scaled by a weight-constraint factor that vanishes at the bounds,
with a hard clip as backstop; same-limb entries are never touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cpg import InterLimbWeights
from .neurons import SimClock


@dataclass
class RewardCoefficients:
    """Reward weights; the angular-velocity coefficients act as penalties."""

    alpha_vel_x: float = 1.0
    alpha_roll: float = -0.1
    alpha_pitch: float = -0.1
    alpha_yaw: float = -0.1


@dataclass
class PlasticityParams:
    reward: RewardCoefficients = field(default_factory=RewardCoefficients)
    c_average: float = 0.5
    window_s: float = 0.1         # sliding reward-average horizon
    tau_trace: float = 0.01      # s, per-pool spike trace
    tau_stdp: float = 2.0        # s, pairwise signal
    eta_negative_relative: float = 0.3
    eta: float = 5e-10
    eta_ado: float = 1.8e-5
    w_min: float = -0.05
    w_max: float = 0.05


def reward(obs, coeffs: RewardCoefficients) -> float:
    """Forward-speed reward with magnitude penalties on roll/pitch/yaw rates."""
    wr, wp, wy = np.abs(obs.torso_omega)
    return (coeffs.alpha_vel_x * obs.torso_vel[0]
            + coeffs.alpha_roll * wr
            + coeffs.alpha_pitch * wp
            + coeffs.alpha_yaw * wy)


class RewardWindow:
    """Ring buffer of recent rewards; the mean excludes the current sample."""

    def __init__(self, size: int = 100):
        self.size = size
        self._buf = np.zeros(size)
        self._head = 0
        self._count = 0

    def mean(self) -> float:
        if self._count == 0:
            return 0.0
        return float(self._buf[: self._count].mean()) if self._count < self.size \
            else float(self._buf.mean())

    def push(self, r: float) -> None:
        self._buf[self._head] = r
        self._head = (self._head + 1) % self.size
        self._count = min(self._count + 1, self.size)

    def reset(self) -> None:
        self._buf[...] = 0.0
        self._head = 0
        self._count = 0


def effective_reward(r: float, window: RewardWindow,
                     c_average: float = 0.5) -> float:
    """Center the reward on the recent average, then record it."""
    r_eff = r - c_average * window.mean()
    window.push(r)
    return r_eff


@dataclass
class StdpState:
    """Spike traces of the eight thigh pools and their 8x8 pairwise signal."""

    u: np.ndarray = field(default_factory=lambda: np.zeros(8))
    stdp: np.ndarray = field(default_factory=lambda: np.zeros((8, 8)))

    def reset(self) -> None:
        self.u[...] = 0.0
        self.stdp[...] = 0.0


def update_traces_and_stdp(state: StdpState, pool_spike_counts,
                           params: PlasticityParams, clock: SimClock) -> None:
    """Advance traces and the pairwise signal one step.

    stdp[x, y] is potentiated by target spikes arriving while the source
    trace is high and depressed (scaled by eta_negative_relative) by the
    reverse order. Trace values on the right-hand side are the pre-increment
    ones, so simultaneous spikes contribute only through prior history.
    """
    counts = np.asarray(pool_spike_counts, dtype=float)
    u_prev = state.u
    decay_stdp = math.exp(-clock.dt / params.tau_stdp)
    state.stdp = state.stdp * decay_stdp \
        + np.outer(u_prev, counts) \
        - params.eta_negative_relative * np.outer(counts, u_prev)
    decay_u = math.exp(-clock.dt / params.tau_trace)
    state.u = u_prev * decay_u + counts


def weight_constraint(w, w_min: float = -0.05, w_max: float = 0.05):
    """Soft bound factor in [0, 0.25]: zero at the bounds, 1/4 at midpoint."""
    return (w_max - w) * (w - w_min) / (w_max - w_min) ** 2


def apply_weight_update(weights: InterLimbWeights, stdp_state: StdpState,
                        r_eff: float, progress: float, ado_levels,
                        params: PlasticityParams) -> None:
    """One combined reward + adenosine update of the trainable entries.

    dw[x, y] = eta * progress * r_eff * stdp[x, y] * zeta(w[x, y])
             - eta_ado * progress * ado[y] * zeta(w[x, y])

    applied per step with a hard clip to [w_min, w_max]; the adenosine term
    is never positive. Same-limb entries stay exactly zero.
    """
    z = weight_constraint(weights.w, params.w_min, params.w_max)
    ado = np.asarray(ado_levels, dtype=float)
    dw = progress * z * (params.eta * r_eff * stdp_state.stdp
                         - params.eta_ado * ado[None, :])
    w = np.clip(weights.w + dw, params.w_min, params.w_max)
    w[InterLimbWeights.same_limb_mask()] = 0.0
    weights.w = w
