"""Four-limb locomotion network: pools, interneurons, torque output.

Each limb carries four 20-neuron motor pools (thigh/calf x flexor/extensor),
four V1/V2b interneurons closing the reciprocal-inhibition loops, and two
IINs carrying the diagonal thigh->antagonist-calf inhibition. The eight
thigh pools are additionally coupled across limbs through a trainable 8x8
weight table whose same-limb blocks are structurally zero.

Indexing conventions (fixed and relied on by every consumer):

* limbs: FR=0, FL=1, RR=2, RL=3
* motor pools: pool = 4*limb + muscle, muscle in
  (thigh_flexor=0, thigh_extensor=1, calf_flexor=2, calf_extensor=3)
* thigh muscles (rows/cols of the 8x8 table): m = 2*limb + role,
  role in (flexor=0, extensor=1)
* interneurons: 6 per limb, see _SLIF_SRC/_SLIF_TGT
* joint vectors (12): 3*limb + (hip=0, thigh=1, calf=2)
* torque traces (8): 2*limb + (thigh=0, calf=1)

All spikes take effect on the next simulation step except motor->interneuron,
which is delivered within the step that produced it; interneuron spikes then
reach their target pools on the following step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .neurons import (
    PoolState,
    PslifParams,
    SimClock,
    SlifParams,
    SlifState,
    background_current,
    build_pool_wiring,
    k_channel_drop,
    step_pslif,
    step_slif,
)
from .rng import RngStreams

LIMBS = ("FR", "FL", "RR", "RL")
MUSCLES = ("thigh_flexor", "thigh_extensor", "calf_flexor", "calf_extensor")
N_LIMBS = 4
N_POOLS = 16
N_SLIF_PER_LIMB = 6
N_SLIF = N_LIMBS * N_SLIF_PER_LIMB

# Pool-bank rows of the thigh muscles in 8x8-table order, and of the calves.
THIGH_POOL_ROWS = np.array([4 * l + m for l in range(N_LIMBS) for m in (0, 1)])
CALF_POOL_ROWS = np.array([4 * l + m for l in range(N_LIMBS) for m in (2, 3)])
THIGH_EXTENSOR_ROWS = np.array([4 * l + 1 for l in range(N_LIMBS)])

# Per-limb interneuron wiring: source and target muscle of each of the six
# SLIF units. 0..3 are the V1/V2b of the four pools, 4..5 the two IINs.
_SLIF_SRC = (0, 1, 2, 3, 1, 0)   # thigh_fl, thigh_ex, calf_fl, calf_ex, thigh_ex, thigh_fl
_SLIF_TGT = (1, 0, 3, 2, 2, 3)   # antagonist of same joint; IINs hit the opposite calf
_SLIF_KIND = ("v1", "v1", "v1", "v1", "iin", "iin")
SLIF_NAMES = tuple(
    f"{LIMBS[l]}.{_SLIF_KIND[k]}.{MUSCLES[_SLIF_SRC[k]]}_to_{MUSCLES[_SLIF_TGT[k]]}"
    for l in range(N_LIMBS) for k in range(N_SLIF_PER_LIMB)
)
POOL_NAMES = tuple(f"{LIMBS[l]}.{MUSCLES[m]}" for l in range(N_LIMBS) for m in range(4))
THIGH_MUSCLE_NAMES = tuple(
    f"{LIMBS[l]}.{role}" for l in range(N_LIMBS) for role in ("flexor", "extensor")
)


@dataclass(frozen=True)
class MuscleId:
    """One of the sixteen muscles."""

    limb: str   # FR | FL | RR | RL
    joint: str  # thigh | calf
    role: str   # flexor | extensor

    def __post_init__(self):
        if self.limb not in LIMBS:
            raise ValueError(f"unknown limb {self.limb!r}")
        if self.joint not in ("thigh", "calf"):
            raise ValueError(f"unknown joint {self.joint!r}")
        if self.role not in ("flexor", "extensor"):
            raise ValueError(f"unknown role {self.role!r}")

    @property
    def pool_index(self) -> int:
        muscle = 2 * (self.joint == "calf") + (self.role == "extensor")
        return 4 * LIMBS.index(self.limb) + muscle

    @property
    def thigh_table_index(self) -> int:
        if self.joint != "thigh":
            raise ValueError("only thigh muscles enter the inter-limb table")
        return 2 * LIMBS.index(self.limb) + (self.role == "extensor")


@dataclass
class CpgParams:
    """Fixed connection strengths and output-stage constants."""

    w_motor_to_v1: float = 2.0
    w_v1_to_motor: float = -50.0
    c_limit_position: float = 400.0  # mV/s drop while a thigh sits in the band
    tau_h: float = 0.1
    i_thigh: float = 0.7             # N*m per thigh spike
    i_calf: float = 1.1              # N*m per calf spike
    hip_kp: float = 30.0
    hip_ki: float = 10.0
    hip_target: float = 0.1          # rad, lateral-outward positive
    hip_integral_limit: float = 1.0  # rad*s anti-windup clamp


@dataclass
class JointLimits:
    """Angular ranges (rad) and the width of the limit-inhibition band."""

    front_thigh_lo: float = 0.6
    front_thigh_hi: float = 1.4
    rear_thigh_lo: float = 0.7
    rear_thigh_hi: float = 1.5
    calf_lo: float = -1.6
    calf_hi: float = -1.0
    hip_lo: float = -0.8
    hip_hi: float = 0.8
    band: float = 0.05

    def __post_init__(self):
        for lo, hi in ((self.front_thigh_lo, self.front_thigh_hi),
                       (self.rear_thigh_lo, self.rear_thigh_hi),
                       (self.calf_lo, self.calf_hi),
                       (self.hip_lo, self.hip_hi)):
            if lo >= hi:
                raise ValueError("joint limit lower bound must be below upper")
        if not 0 < self.band < min(self.front_thigh_hi - self.front_thigh_lo,
                                   self.rear_thigh_hi - self.rear_thigh_lo) / 2:
            raise ValueError("band must be positive and below half the range")

    def thigh_limits(self, limb: int) -> tuple[float, float]:
        if limb < 2:
            return self.front_thigh_lo, self.front_thigh_hi
        return self.rear_thigh_lo, self.rear_thigh_hi


@dataclass
class InterLimbWeights:
    """Trainable 8x8 thigh-to-thigh table; same-limb 2x2 blocks stay zero."""

    w: np.ndarray
    w_min: float = -0.05
    w_max: float = 0.05

    @staticmethod
    def same_limb_mask() -> np.ndarray:
        limb = np.arange(8) // 2
        return limb[:, None] == limb[None, :]

    @classmethod
    def zeros(cls, w_min: float = -0.05, w_max: float = 0.05) -> "InterLimbWeights":
        return cls(w=np.zeros((8, 8)), w_min=w_min, w_max=w_max)

    def validate(self) -> None:
        if self.w.shape != (8, 8):
            raise ValueError("weight table must be 8x8")
        if np.any(self.w[self.same_limb_mask()] != 0.0):
            raise ValueError("same-limb entries must be exactly zero")
        if np.any(self.w < self.w_min) or np.any(self.w > self.w_max):
            raise ValueError("weights out of bounds")


@dataclass
class TorqueTrace:
    """Leaky per-joint torque accumulators (8: thigh+calf per limb)."""

    values: np.ndarray = field(default_factory=lambda: np.zeros(8))

    def reset(self) -> None:
        self.values[...] = 0.0


@dataclass
class HipPiState:
    """PI hold of the four hip joints at a fixed lateral angle."""

    integral: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def reset(self) -> None:
        self.integral[...] = 0.0


@dataclass
class StepActivity:
    """Per-step spike bookkeeping handed to learning and energy accounting."""

    motor_counts: np.ndarray      # (16,) spikes per pool this step
    slif_spiked: np.ndarray       # (24,) bool
    limit_flags: np.ndarray       # (8,) thigh pools inhibited this step (m8 order)

    @property
    def thigh_counts(self) -> np.ndarray:
        return self.motor_counts[THIGH_POOL_ROWS]

    @property
    def calf_count(self) -> int:
        return int(self.motor_counts[CALF_POOL_ROWS].sum())

    @property
    def thigh_count(self) -> int:
        return int(self.motor_counts[THIGH_POOL_ROWS].sum())

    @property
    def inhibitory_count(self) -> int:
        return int(self.slif_spiked.sum())

    @property
    def thigh_extensor_counts(self) -> np.ndarray:
        return self.motor_counts[THIGH_EXTENSOR_ROWS]


@dataclass
class ImpulseAudit:
    """Delivered-impulse counters, accumulated while stepping.

    Inter-limb deliveries are counted per source axon: each thigh motor
    neuron reaches the 20 neurons of each other limb once (60 per spike),
    matching the event count the energy model charges.
    """

    intra: int = 0
    v1: int = 0
    iin: int = 0
    inter_limb: int = 0
    limit: int = 0


def limit_position_inhibition(joint_angle, lo: float, hi: float, band: float):
    """Flags (inhibit_flexor, inhibit_extensor) for a thigh joint angle.

    The flexor is suppressed in [lo, lo+band], the extensor in [hi-band, hi],
    which reverses the swing before the joint jams against its stop.
    """
    a = np.asarray(joint_angle)
    inhibit_flexor = (a >= lo) & (a <= lo + band)
    inhibit_extensor = (a >= hi - band) & (a <= hi)
    return inhibit_flexor, inhibit_extensor


def inter_limb_impulses(weights: InterLimbWeights, source_counts) -> np.ndarray:
    """Per-neuron impulse (mV) each target thigh pool receives this step."""
    return np.asarray(source_counts, dtype=float) @ weights.w


def update_torque_trace(h, extensor_spikes, flexor_spikes, increment,
                        tau_h: float, clock: SimClock):
    """Decay the torque trace and add one increment per spike (extensor +)."""
    decay = math.exp(-clock.dt / tau_h)
    return h * decay + increment * (np.asarray(extensor_spikes, dtype=float)
                                    - np.asarray(flexor_spikes, dtype=float))


def hip_pi_torque(state: HipPiState, hip_angle, params: CpgParams,
                  clock: SimClock) -> np.ndarray:
    """PI torque holding the hips at the target angle; integral is clamped."""
    err = params.hip_target - np.asarray(hip_angle, dtype=float)
    state.integral += err * clock.dt
    np.clip(state.integral, -params.hip_integral_limit,
            params.hip_integral_limit, out=state.integral)
    return params.hip_kp * err + params.hip_ki * state.integral


class CpgNetwork:
    """State and wiring of the full four-limb pattern generator."""

    def __init__(self, pools: PoolState, slif: SlifState,
                 motor_params: PslifParams, slif_params: SlifParams,
                 params: CpgParams, limits: JointLimits,
                 pool_streams: list, slif_stream):
        self.pools = pools
        self.slif = slif
        self.motor_params = motor_params
        self.slif_params = slif_params
        self.params = params
        self.limits = limits
        self.pool_streams = pool_streams
        self.slif_stream = slif_stream
        self.torque_trace = TorqueTrace()
        self.hip_pi = HipPiState()

        src = np.array([_SLIF_SRC[k] for _ in range(N_LIMBS) for k in range(N_SLIF_PER_LIMB)])
        limb = np.repeat(np.arange(N_LIMBS), N_SLIF_PER_LIMB)
        self.slif_src_pool = 4 * limb + src
        tgt_pool = 4 * limb + np.array(
            [_SLIF_TGT[k] for _ in range(N_LIMBS) for k in range(N_SLIF_PER_LIMB)])
        self.slif_to_pool = np.zeros((N_POOLS, N_SLIF))
        self.slif_to_pool[tgt_pool, np.arange(N_SLIF)] = params.w_v1_to_motor
        self._iin_mask = np.array([_SLIF_KIND[k] == "iin"
                                   for _ in range(N_LIMBS)
                                   for k in range(N_SLIF_PER_LIMB)])
        # Structural fan-out, used by the impulse audit.
        self._intra_targets = (self.pools.intra_weights != 0).sum(axis=-1)
        self._v1_per_pool = np.bincount(self.slif_src_pool[~self._iin_mask],
                                        minlength=N_POOLS)
        self._iin_per_pool = np.bincount(self.slif_src_pool[self._iin_mask],
                                         minlength=N_POOLS)
        self._inter_targets_per_spike = self.pools.n * (N_LIMBS - 1)
        self._thigh_lo = np.array([limits.thigh_limits(l)[0] for l in range(N_LIMBS)])
        self._thigh_hi = np.array([limits.thigh_limits(l)[1] for l in range(N_LIMBS)])
        self._trace_increments = np.tile([params.i_thigh, params.i_calf], N_LIMBS)

    @classmethod
    def build(cls, pool_size: int, w0_dist: float, c_dist: float,
              motor_params: PslifParams, slif_params: SlifParams,
              params: CpgParams, limits: JointLimits,
              rngs: RngStreams) -> "CpgNetwork":
        pools = []
        for name in POOL_NAMES:
            positions, weights = build_pool_wiring(
                pool_size, w0_dist, c_dist, rngs.get(f"wiring/{name}"))
            pools.append(PoolState.new(positions, weights, motor_params.v_rest))
        bank = PoolState.stack(pools)
        slif = SlifState.new(N_SLIF, slif_params.v_rest)
        pool_streams = [rngs.get(f"pool/{name}") for name in POOL_NAMES]
        return cls(bank, slif, motor_params, slif_params, params, limits,
                   pool_streams, rngs.get("slif"))

    def reset_dynamic(self) -> None:
        """Zero neurons, traces and the hip integral (wiring survives)."""
        self.pools.reset_dynamic(self.motor_params.v_rest)
        self.slif.reset_dynamic(self.slif_params.v_rest)
        self.torque_trace.reset()
        self.hip_pi.reset()

    def pool_view(self, limb: str, muscle: str) -> PoolState:
        """A live view of one pool's state (shares memory with the bank)."""
        i = 4 * LIMBS.index(limb) + MUSCLES.index(muscle)
        return PoolState(
            positions=self.pools.positions[i],
            intra_weights=self.pools.intra_weights[i],
            v=self.pools.v[i],
            ca=self.pools.ca[i],
            refractory_remaining=self.pools.refractory_remaining[i],
            spiked_last_step=self.pools.spiked_last_step[i],
        )


def step_cpg(net: CpgNetwork, weights: InterLimbWeights, obs, clock: SimClock,
             audit: ImpulseAudit | None = None) -> tuple[np.ndarray, StepActivity]:
    """Advance the whole network one step and emit the 12 joint torques.

    Order: assemble background drive and limit inhibition from the previous
    observation, deliver last step's synaptic impulses, step the motor pools,
    step the interneurons on the fresh motor spikes, update torque traces,
    and compute the hip PI torques.
    """
    P, S, C = net.motor_params, net.slif_params, net.params
    n = net.pools.n

    # One randomness take per pool per step: first half background noise,
    # second half the firing draws.
    draws = np.empty((N_POOLS, 2 * n))
    for i, stream in enumerate(net.pool_streams):
        draws[i] = stream.take(2 * n)
    noise_u = 2.0 * draws[:, :n] - 1.0
    spike_u = draws[:, n:]

    # Rate terms (mV/s): noisy background, K+ drop, limit inhibition.
    tv = obs.torso_vel
    v_torso = math.sqrt(tv[0] ** 2 + tv[1] ** 2 + tv[2] ** 2)
    rate = background_current(v_torso, P, None, n, u=noise_u) \
        - k_channel_drop(net.pools.ca, P)

    thigh_angles = obs.joint_pos[1::3]
    inh_flex, inh_ext = limit_position_inhibition(
        thigh_angles, net._thigh_lo, net._thigh_hi, net.limits.band)
    limit_flags = np.empty(8, dtype=bool)
    limit_flags[0::2] = inh_flex
    limit_flags[1::2] = inh_ext
    rate[THIGH_POOL_ROWS] -= (C.c_limit_position * limit_flags)[:, None]

    # Impulses (mV) from last step's spikes.
    prev = net.pools.spiked_last_step.astype(float)
    intra = (prev[:, None, :] @ net.pools.intra_weights)[:, 0, :]
    slif_prev = net.slif.spiked_last_step.astype(float)
    from_slif = net.slif_to_pool @ slif_prev
    prev_thigh_counts = prev[THIGH_POOL_ROWS].sum(axis=1)
    from_inter = np.zeros(N_POOLS)
    from_inter[THIGH_POOL_ROWS] = inter_limb_impulses(weights, prev_thigh_counts)
    impulse = intra + (from_slif + from_inter)[:, None]

    fired = step_pslif(net.pools, rate, impulse, P, clock, spike_u)
    counts = fired.sum(axis=1)

    # Interneurons see this step's motor spikes immediately.
    slif_input = C.w_motor_to_v1 * counts[net.slif_src_pool]
    slif_fired = step_slif(net.slif, slif_input, S, clock, net.slif_stream)

    if audit is not None:
        audit.intra += int((prev * net._intra_targets).sum())
        audit.v1 += int((counts * net._v1_per_pool).sum())
        audit.iin += int((counts * net._iin_per_pool).sum())
        audit.inter_limb += int(prev_thigh_counts.sum()) * net._inter_targets_per_spike
        audit.limit += int(limit_flags.sum()) * n

    # Torque traces, extensor-positive; values index: 2*limb + (thigh=0, calf=1).
    # counts is muscle-ordered per limb, so odd entries are the extensors and
    # even the flexors, already in trace order.
    net.torque_trace.values = update_torque_trace(
        net.torque_trace.values, counts[1::2], counts[0::2],
        net._trace_increments, C.tau_h, clock)

    hip_torque = hip_pi_torque(net.hip_pi, obs.joint_pos[0::3], C, clock)

    torques = np.empty(12)
    torques[0::3] = hip_torque
    torques[1::3] = net.torque_trace.values[0::2]
    torques[2::3] = net.torque_trace.values[1::2]

    activity = StepActivity(motor_counts=counts, slif_spiked=slif_fired.copy(),
                            limit_flags=limit_flags)
    return torques, activity


class HalfCenterPair:
    """Free-running flexor/extensor pool pair with reciprocal inhibition.

    The no-feedback rig behind the burst-alternation experiments: two motor
    pools, two V1/V2b interneurons, constant-velocity background drive, no
    limit inhibition and no inter-limb input.
    """

    def __init__(self, pool_size: int, w0_dist: float, c_dist: float,
                 motor_params: PslifParams, slif_params: SlifParams,
                 params: CpgParams, rngs: RngStreams, v_torso: float = 0.0):
        self.motor_params = motor_params
        self.slif_params = slif_params
        self.params = params
        self.v_torso = v_torso
        pools = []
        for name in ("pair.flexor", "pair.extensor"):
            positions, weights = build_pool_wiring(
                pool_size, w0_dist, c_dist, rngs.get(f"wiring/{name}"))
            pools.append(PoolState.new(positions, weights, motor_params.v_rest))
        self.pools = PoolState.stack(pools)
        self.slif = SlifState.new(2, slif_params.v_rest)
        self.pool_streams = [rngs.get("pool/pair.flexor"),
                             rngs.get("pool/pair.extensor")]
        self.slif_stream = rngs.get("slif/pair")

    def step(self, clock: SimClock) -> np.ndarray:
        """One network step; returns the two pools' spike counts."""
        P, S, C = self.motor_params, self.slif_params, self.params
        n = self.pools.n
        bg = np.stack([background_current(self.v_torso, P, g, n)
                       for g in self.pool_streams])
        rate = bg - k_channel_drop(self.pools.ca, P)

        prev = self.pools.spiked_last_step.astype(float)
        intra = (prev[:, None, :] @ self.pools.intra_weights)[:, 0, :]
        # slif 0 is fed by pool 0 and inhibits pool 1, and vice versa.
        slif_prev = self.slif.spiked_last_step.astype(float)
        inhibition = C.w_v1_to_motor * slif_prev[::-1]
        impulse = intra + inhibition[:, None]

        fired = step_pslif(self.pools, rate, impulse, P, clock, self.pool_streams)
        counts = fired.sum(axis=1)
        step_slif(self.slif, C.w_motor_to_v1 * counts, S, clock, self.slif_stream)
        return counts
