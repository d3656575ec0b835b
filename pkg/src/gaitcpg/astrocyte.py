"""Per-pool astrocyte homeostat.

Each of the eight thigh motor pools is watched by one astrocyte. Motor spikes
release 2-AG, which drives IP3 production; IP3 gates calcium exchange between
the endoplasmic reticulum and the cytosol (reduced two-variable Li-Rinzel
model); and sustained over-activity lifts cytosolic calcium past a threshold,
triggering refractory-limited adenosine release. Downstream, adenosine only
ever depresses the synapses feeding the watched pool.

State is held as arrays so the eight astrocytes advance together. Astrocyte
state deliberately survives session resets: calcium integrates minutes of
activity and must not restart with the robot pose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .neurons import SimClock

try:
    from numba import njit as _njit

    def _jit(fn):
        return _njit(cache=True)(fn)
except ImportError:                            # pragma: no cover
    def _jit(fn):
        return fn

_TIMER_EPS = 1e-9


@dataclass
class AstrocyteParams:
    """Messenger rates plus the calcium-model coefficient set.

    The 2-AG/adenosine constants follow the parameter tables; the Li-Rinzel
    coefficients and the 2-AG -> IP3 gain k_ag are implementation defaults,
    calibrated so that tonic near-maximal pool firing lifts calcium past the
    release threshold within ~10 s while a healthy alternating-burst regime
    stays mostly below it.
    """

    r_ag: float = 1e-3            # 2-AG per motor spike
    tau_ag: float = 1.0           # s
    thres_ca_ado: float = 0.3     # calcium threshold for adenosine release
    r_ado: float = 0.01           # adenosine per release event
    tau_ado: float = 1.0          # s
    refractory_ado: float = 0.3   # s between release events
    # IP3 production
    ip3_star: float = 0.16        # uM baseline
    tau_ip3: float = 7.0          # s
    k_ag: float = 0.08            # uM/s per unit 2-AG (calibrated)
    # Reduced Li-Rinzel coefficients
    a2: float = 0.2               # 1/(uM*s) inactivation on-rate
    c0: float = 2.0               # uM total free calcium
    c1: float = 0.185             # ER/cytosol volume ratio
    v1: float = 6.0               # 1/s max channel permeability
    v2: float = 0.11              # 1/s leak permeability
    v3: float = 0.9               # uM/s max pump rate
    k3: float = 0.1               # uM pump dissociation
    d1: float = 0.13              # uM
    d2: float = 1.049             # uM
    d3: float = 0.9434            # uM
    d5: float = 0.08234           # uM

    def __post_init__(self):
        if self.refractory_ado <= 0:
            raise ValueError("refractory_ado must be positive")
        if self.thres_ca_ado <= 0:
            raise ValueError("thres_ca_ado must be positive")


@dataclass
class AstrocyteState:
    """State of a bank of astrocytes (arrays share one leading axis)."""

    ag: np.ndarray                 # 2-AG concentration
    ip3: np.ndarray                # uM
    ca_cyt: np.ndarray             # uM cytosolic calcium
    gate_h: np.ndarray             # ER-channel inactivation, in [0, 1]
    ado: np.ndarray                # adenosine concentration
    time_since_release: np.ndarray  # s

    @classmethod
    def resting(cls, params: AstrocyteParams, k: int = 8) -> "AstrocyteState":
        """Bank initialized at the zero-input fixed point of the calcium model."""
        ca, h = resting_point(params)
        return cls(
            ag=np.zeros(k),
            ip3=np.full(k, params.ip3_star),
            ca_cyt=np.full(k, ca),
            gate_h=np.full(k, h),
            ado=np.zeros(k),
            time_since_release=np.full(k, params.refractory_ado),
        )


def _q2(ip3, p: AstrocyteParams):
    return p.d2 * (ip3 + p.d1) / (ip3 + p.d3)


def _ca_rate(ca, h, ip3, p: AstrocyteParams):
    """d[Ca]/dt = J_chan + J_leak - J_pump at the given state."""
    ca_er = (p.c0 - ca) / p.c1
    m_inf = ip3 / (ip3 + p.d1)
    n_inf = ca / (ca + p.d5)
    j_chan = p.c1 * p.v1 * (m_inf * n_inf) ** 3 * h ** 3 * (ca_er - ca)
    j_leak = p.c1 * p.v2 * (ca_er - ca)
    j_pump = p.v3 * ca ** 2 / (p.k3 ** 2 + ca ** 2)
    return j_chan + j_leak - j_pump


def resting_point(params: AstrocyteParams,
                  ip3: float | None = None) -> tuple[float, float]:
    """Fixed point (ca, gate_h) of the calcium model at constant IP3."""
    if ip3 is None:
        ip3 = params.ip3_star
    q2 = _q2(ip3, params)

    def residual(ca):
        h = q2 / (q2 + ca)   # h nullcline
        return _ca_rate(ca, h, ip3, params)

    ca = brentq(residual, 1e-6, params.c0 / (1 + params.c1) - 1e-9)
    return ca, q2 / (q2 + ca)


def update_ag(state: AstrocyteState, pool_spike_counts,
              params: AstrocyteParams, clock: SimClock) -> None:
    """Decay 2-AG and add r_ag per motor spike of the watched pool."""
    decay = math.exp(-clock.dt / params.tau_ag)
    state.ag[...] = state.ag * decay \
        + params.r_ag * np.asarray(pool_spike_counts, dtype=float)


@_jit
def _li_rinzel_kernel(ca, h, ip3, ag, dt, ip3_star, tau_ip3, k_ag, a2, c0,
                      c1, v1, v2, v3, k3, d1, d2, d3, d5):
    for i in range(ca.shape[0]):
        ca_i, h_i, ip3_i = ca[i], h[i], ip3[i]
        ca_er = (c0 - ca_i) / c1
        m_inf = ip3_i / (ip3_i + d1)
        n_inf = ca_i / (ca_i + d5)
        j_chan = c1 * v1 * (m_inf * n_inf) ** 3 * h_i ** 3 * (ca_er - ca_i)
        j_leak = c1 * v2 * (ca_er - ca_i)
        j_pump = v3 * ca_i ** 2 / (k3 ** 2 + ca_i ** 2)
        dca = j_chan + j_leak - j_pump

        q2 = d2 * (ip3_i + d1) / (ip3_i + d3)
        h_inf = q2 / (q2 + ca_i)
        dh = (h_inf - h_i) * (a2 * (q2 + ca_i))
        dip3 = (ip3_star - ip3_i) / tau_ip3 + k_ag * ag[i]

        ca_new = ca_i + dt * dca
        ca[i] = ca_new if ca_new > 0.0 else 0.0
        h_new = h_i + dt * dh
        h[i] = 0.0 if h_new < 0.0 else (1.0 if h_new > 1.0 else h_new)
        ip3[i] = ip3_i + dt * dip3


def step_li_rinzel(state: AstrocyteState, params: AstrocyteParams,
                   clock: SimClock) -> None:
    """One Euler step of the IP3/calcium/gate dynamics.

    IP3 relaxes to its baseline and is produced in proportion to 2-AG; the
    gate follows its standard relaxation law (tau_h = 1/(a2*(Q2+[Ca]))).
    Calcium is clamped non-negative and the gate to [0, 1] as numeric guards.
    """
    p = params
    _li_rinzel_kernel(state.ca_cyt, state.gate_h, state.ip3, state.ag,
                      clock.dt, p.ip3_star, p.tau_ip3, p.k_ag, p.a2, p.c0,
                      p.c1, p.v1, p.v2, p.v3, p.k3, p.d1, p.d2, p.d3, p.d5)


def release_adenosine(state: AstrocyteState, params: AstrocyteParams,
                      clock: SimClock) -> np.ndarray:
    """Decay adenosine, release a fixed amount on threshold crossing.

    A release requires cytosolic calcium above the threshold and at least the
    refractory interval since the previous release. Returns post-update
    adenosine levels.
    """
    dt = clock.dt
    state.time_since_release += dt
    state.ado *= math.exp(-dt / params.tau_ado)
    release = (state.ca_cyt > params.thres_ca_ado) \
        & (state.time_since_release >= params.refractory_ado - _TIMER_EPS)
    state.ado[release] += params.r_ado
    state.time_since_release[release] = 0.0
    return state.ado
