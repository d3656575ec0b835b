"""Simplified quadruped rigid-body backend.

A deliberate, documented departure from a full articulated simulator: the
torso is a 6-DOF rigid body, the twelve joints are independent 1-DOF systems
with reflected inertia and dry friction, legs are massless 2-link chains, and
ground contact is a spring-damper normal force with regularized Coulomb
tangential friction. Contact forces reach the torso as a wrench at the foot
point and reach the joints through the leg Jacobian transpose. Everything is
deterministic and integrated semi-implicitly at the simulation step.

Joint conventions (per limb): the hip rotates the leg plane about the torso
x-axis with positive = lateral outward (the right/left mirror is internal);
thigh and calf angles rotate about the leg-plane pitch axis, with larger
thigh angle sweeping the foot backward and larger (less negative) calf angle
extending the foot downward.

The inner loop is one scalar-math kernel, jitted when numba is available and
run as plain Python otherwise (identical arithmetic either way; no fastmath).
Forward kinematics lives in a single kernel used by both the contact solver
and the analysis helpers.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit as _njit

    def _jit(fn):
        return _njit(cache=True)(fn)
except ImportError:                            # pragma: no cover
    def _jit(fn):
        return fn

from .cpg import JointLimits
from .physics import Observation, PhysicsBackend, PhysicsConfig, PhysicsDivergence

# Mirror sign per limb (FR, FL, RR, RL): +1 on the left side.
_MIRROR = np.array([-1.0, 1.0, -1.0, 1.0])
_HIP_SIGN_X = np.array([1.0, 1.0, -1.0, -1.0])
_HIP_SIGN_Y = np.array([-1.0, 1.0, -1.0, 1.0])

_DIVERGE_NONFINITE = 1
_DIVERGE_VELOCITY = 2
_DIVERGE_ALTITUDE = 3


def _quat_to_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


@_jit
def _fk_kernel(q, hip_base, mirror, l_thigh, l_calf, mount, foot, jac):
    """Foot positions (torso frame) and Jacobians, written into foot/jac.

    `mount` rotates the whole leg plane about the thigh pivot, placing the
    foot sweep under the hip; joint angles keep their own reference frame.
    """
    for l in range(4):
        qt = q[3 * l + 1] + mount
        qc = q[3 * l + 2]
        phi = mirror[l] * q[3 * l]
        a = qt + qc
        sin_t, cos_t = math.sin(qt), math.cos(qt)
        sin_a, cos_a = math.sin(a), math.cos(a)
        plan_x = -(l_thigh * sin_t + l_calf * sin_a)
        plan_z = -(l_thigh * cos_t + l_calf * cos_a)
        dx_t = -(l_thigh * cos_t + l_calf * cos_a)
        dz_t = l_thigh * sin_t + l_calf * sin_a
        dx_c = -l_calf * cos_a
        dz_c = l_calf * sin_a
        c, s = math.cos(phi), math.sin(phi)

        rel1 = -s * plan_z
        rel2 = c * plan_z
        foot[l, 0] = hip_base[l, 0] + plan_x
        foot[l, 1] = hip_base[l, 1] + rel1
        foot[l, 2] = hip_base[l, 2] + rel2
        jac[l, 0, 0] = 0.0
        jac[l, 1, 0] = -mirror[l] * rel2
        jac[l, 2, 0] = mirror[l] * rel1
        jac[l, 0, 1] = dx_t
        jac[l, 1, 1] = -s * dz_t
        jac[l, 2, 1] = c * dz_t
        jac[l, 0, 2] = dx_c
        jac[l, 1, 2] = -s * dz_c
        jac[l, 2, 2] = c * dz_c


@_jit
def _step_kernel(q, qd, pos, vel, quat, omega, rot, contact, foot, jac,
                 torques, hip_base, mirror, q_lo, q_hi, joint_inertia,
                 frictionloss, torso_inertia, l_thigh, l_calf, mount, dt,
                 mass, gravity, k_n, c_n, mu, v_slip, f_max, ang_damp):
    """Advance the full state one step in place; returns a divergence code."""
    _fk_kernel(q, hip_base, mirror, l_thigh, l_calf, mount, foot, jac)

    fx_sum = 0.0
    fy_sum = 0.0
    fz_sum = 0.0
    tb0 = 0.0
    tb1 = 0.0
    tb2 = 0.0
    for l in range(4):
        f0, f1, f2 = foot[l, 0], foot[l, 1], foot[l, 2]
        foot_z_world = pos[2] + rot[2, 0] * f0 + rot[2, 1] * f1 + rot[2, 2] * f2

        # Foot velocity: joint sweep + torso spin (torso frame), then world.
        j = 3 * l
        s0 = jac[l, 0, 0] * qd[j] + jac[l, 0, 1] * qd[j + 1] + jac[l, 0, 2] * qd[j + 2]
        s1 = jac[l, 1, 0] * qd[j] + jac[l, 1, 1] * qd[j + 1] + jac[l, 1, 2] * qd[j + 2]
        s2 = jac[l, 2, 0] * qd[j] + jac[l, 2, 1] * qd[j + 1] + jac[l, 2, 2] * qd[j + 2]
        s0 += omega[1] * f2 - omega[2] * f1
        s1 += omega[2] * f0 - omega[0] * f2
        s2 += omega[0] * f1 - omega[1] * f0
        vfx = vel[0] + rot[0, 0] * s0 + rot[0, 1] * s1 + rot[0, 2] * s2
        vfy = vel[1] + rot[1, 0] * s0 + rot[1, 1] * s1 + rot[1, 2] * s2
        vfz = vel[2] + rot[2, 0] * s0 + rot[2, 1] * s1 + rot[2, 2] * s2

        pen = -foot_z_world
        if pen > 0.0:
            f_n = k_n * pen - c_n * vfz
            if f_n < 0.0:
                f_n = 0.0
            elif f_n > f_max:
                f_n = f_max
            contact[l] = True
        else:
            f_n = 0.0
            contact[l] = False
        speed_t = math.sqrt(vfx * vfx + vfy * vfy)
        denom = speed_t if speed_t > v_slip else v_slip
        scale = mu * f_n / denom
        fwx = -scale * vfx
        fwy = -scale * vfy
        fwz = f_n

        # World -> torso frame, joint reaction via Jacobian transpose.
        fl0 = rot[0, 0] * fwx + rot[1, 0] * fwy + rot[2, 0] * fwz
        fl1 = rot[0, 1] * fwx + rot[1, 1] * fwy + rot[2, 1] * fwz
        fl2 = rot[0, 2] * fwx + rot[1, 2] * fwy + rot[2, 2] * fwz
        for k in range(3):
            tau = (jac[l, 0, k] * fl0 + jac[l, 1, k] * fl1 + jac[l, 2, k] * fl2
                   + torques[j + k])
            qdj = qd[j + k] + tau / joint_inertia[j + k] * dt
            fric = frictionloss[j + k] * dt / joint_inertia[j + k]
            if qdj > fric:
                qdj -= fric
            elif qdj < -fric:
                qdj += fric
            else:
                qdj = 0.0
            qj = q[j + k] + qdj * dt
            if qj < q_lo[j + k]:
                qj = q_lo[j + k]
                qdj = 0.0
            elif qj > q_hi[j + k]:
                qj = q_hi[j + k]
                qdj = 0.0
            q[j + k] = qj
            qd[j + k] = qdj

        fx_sum += fwx
        fy_sum += fwy
        fz_sum += fwz
        tb0 += f1 * fl2 - f2 * fl1
        tb1 += f2 * fl0 - f0 * fl2
        tb2 += f0 * fl1 - f1 * fl0

    # Torso, semi-implicit.
    vel[0] += fx_sum / mass * dt
    vel[1] += fy_sum / mass * dt
    vel[2] += (fz_sum / mass - gravity) * dt
    pos[0] += vel[0] * dt
    pos[1] += vel[1] * dt
    pos[2] += vel[2] * dt

    w0, w1, w2 = omega[0], omega[1], omega[2]
    g0 = w1 * torso_inertia[2] * w2 - w2 * torso_inertia[1] * w1
    g1 = w2 * torso_inertia[0] * w0 - w0 * torso_inertia[2] * w2
    g2 = w0 * torso_inertia[1] * w1 - w1 * torso_inertia[0] * w0
    omega[0] = w0 + (tb0 - g0 - ang_damp * w0) / torso_inertia[0] * dt
    omega[1] = w1 + (tb1 - g1 - ang_damp * w1) / torso_inertia[1] * dt
    omega[2] = w2 + (tb2 - g2 - ang_damp * w2) / torso_inertia[2] * dt

    # quat <- quat * exp(omega * dt)
    p0 = omega[0] * dt
    p1 = omega[1] * dt
    p2 = omega[2] * dt
    angle = math.sqrt(p0 * p0 + p1 * p1 + p2 * p2)
    if angle < 1e-12:
        rw, rx, ry, rz = 1.0, 0.5 * p0, 0.5 * p1, 0.5 * p2
    else:
        half = 0.5 * angle
        k = math.sin(half) / angle
        rw, rx, ry, rz = math.cos(half), k * p0, k * p1, k * p2
    qw, qx, qy, qz = quat[0], quat[1], quat[2], quat[3]
    nw = qw * rw - qx * rx - qy * ry - qz * rz
    nx = qw * rx + qx * rw + qy * rz - qz * ry
    ny = qw * ry - qx * rz + qy * rw + qz * rx
    nz = qw * rz + qx * ry - qy * rx + qz * rw
    norm = math.sqrt(nw * nw + nx * nx + ny * ny + nz * nz)
    quat[0] = nw / norm
    quat[1] = nx / norm
    quat[2] = ny / norm
    quat[3] = nz / norm

    w, x, y, z = quat[0], quat[1], quat[2], quat[3]
    rot[0, 0] = 1 - 2 * (y * y + z * z)
    rot[0, 1] = 2 * (x * y - w * z)
    rot[0, 2] = 2 * (x * z + w * y)
    rot[1, 0] = 2 * (x * y + w * z)
    rot[1, 1] = 1 - 2 * (x * x + z * z)
    rot[1, 2] = 2 * (y * z - w * x)
    rot[2, 0] = 2 * (x * z - w * y)
    rot[2, 1] = 2 * (y * z + w * x)
    rot[2, 2] = 1 - 2 * (x * x + y * y)

    total = 0.0
    for i in range(12):
        total += q[i] + qd[i]
    v2 = vel[0] ** 2 + vel[1] ** 2 + vel[2] ** 2
    w2_ = omega[0] ** 2 + omega[1] ** 2 + omega[2] ** 2
    total += pos[0] + pos[1] + pos[2] + v2 + w2_
    if not math.isfinite(total):
        return _DIVERGE_NONFINITE
    if v2 > 2500.0 or w2_ > 250000.0:
        return _DIVERGE_VELOCITY
    if pos[2] < -1.0 or pos[2] > 5.0:
        return _DIVERGE_ALTITUDE
    return 0


class SimplifiedQuadruped(PhysicsBackend):
    """Flat-ground quadruped with massless legs and point-foot contact."""

    def __init__(self, config: PhysicsConfig, limits: JointLimits,
                 dt: float = 0.001, hip_reset: float = 0.1):
        self.cfg = config
        self.limits = limits
        self.dt = dt
        self.hip_reset = hip_reset

        self._hip_base = np.stack([
            _HIP_SIGN_X * config.hip_offset_x,
            _HIP_SIGN_Y * config.hip_offset_y,
            np.zeros(4),
        ], axis=1)                                     # (4, 3)
        self._torso_inertia = np.array([
            config.torso_inertia_x, config.torso_inertia_y, config.torso_inertia_z])
        self._joint_inertia = np.full(12, config.joint_inertia)
        self._frictionloss = np.tile([config.frictionloss_hip,
                                      config.frictionloss_thigh,
                                      config.frictionloss_calf], 4)
        self._torque_limit = np.tile([config.torque_limit_hip,
                                      config.torque_limit_thigh,
                                      config.torque_limit_calf], 4)
        lo = np.empty(12)
        hi = np.empty(12)
        for l in range(4):
            t_lo, t_hi = limits.thigh_limits(l)
            lo[3 * l:3 * l + 3] = (limits.hip_lo, t_lo, limits.calf_lo)
            hi[3 * l:3 * l + 3] = (limits.hip_hi, t_hi, limits.calf_hi)
        self._q_lo, self._q_hi = lo, hi
        self._foot_scratch = np.empty((4, 3))
        self._jac_scratch = np.empty((4, 3, 3))
        self.reset()

    # ------------------------------------------------------------------
    def reset(self) -> Observation:
        cfg = self.cfg
        wl = cfg.reset_lower_weight
        q = np.empty(12)
        for l in range(4):
            t_lo, t_hi = self.limits.thigh_limits(l)
            q[3 * l + 0] = self.hip_reset
            q[3 * l + 1] = wl * t_lo + (1 - wl) * t_hi
            q[3 * l + 2] = wl * self.limits.calf_lo + (1 - wl) * self.limits.calf_hi
        self.q = q
        self.qd = np.zeros(12)
        self.pos = np.array([0.0, 0.0, cfg.init_altitude])
        self.vel = np.zeros(3)
        self.quat = np.array([1.0, 0.0, 0.0, 0.0])
        self.omega = np.zeros(3)   # body frame
        self._rot = _quat_to_matrix(self.quat)
        self._contact = np.zeros(4, dtype=bool)
        return self._observe()

    # ------------------------------------------------------------------
    def _leg_geometry(self):
        """Foot positions (torso frame) and Jacobians for all four legs."""
        foot = np.empty((4, 3))
        jac = np.empty((4, 3, 3))
        _fk_kernel(self.q, self._hip_base, _MIRROR,
                   self.cfg.l_thigh, self.cfg.l_calf,
                   self.cfg.thigh_mount_angle, foot, jac)
        return foot, jac

    # ------------------------------------------------------------------
    def step(self, torques: np.ndarray) -> Observation:
        torques = np.asarray(torques, dtype=float)
        if torques.shape != (12,) or not math.isfinite(float(torques.sum())):
            raise ValueError("torques must be 12 finite values")
        # Actuator saturation, as on the physical robot's joint motors.
        torques = np.clip(torques, -self._torque_limit, self._torque_limit)
        cfg = self.cfg
        code = _step_kernel(
            self.q, self.qd, self.pos, self.vel, self.quat, self.omega,
            self._rot, self._contact, self._foot_scratch, self._jac_scratch,
            torques, self._hip_base, _MIRROR, self._q_lo, self._q_hi,
            self._joint_inertia, self._frictionloss, self._torso_inertia,
            cfg.l_thigh, cfg.l_calf, cfg.thigh_mount_angle, self.dt,
            cfg.torso_mass, cfg.gravity,
            cfg.contact_stiffness, cfg.contact_damping, cfg.friction_mu,
            cfg.slip_velocity, cfg.max_normal_force, cfg.torso_angular_damping)
        if code == _DIVERGE_NONFINITE:
            raise PhysicsDivergence("non-finite state")
        if code == _DIVERGE_VELOCITY:
            raise PhysicsDivergence("velocity blow-up")
        if code == _DIVERGE_ALTITUDE:
            raise PhysicsDivergence("torso altitude out of range")
        return self._observe()

    # ------------------------------------------------------------------
    def _observe(self) -> Observation:
        return Observation(
            joint_pos=self.q.copy(),
            joint_vel=self.qd.copy(),
            torso_vel=self.vel.copy(),
            torso_omega=self.omega.copy(),
            torso_z_axis_world=self._rot[:, 2].copy(),
            torso_pos=self.pos.copy(),
            foot_contact=self._contact.copy(),
        )

    # ------------------------------------------------------------------
    def mechanical_energy(self) -> float:
        """Kinetic + gravitational + contact-spring energy (for sanity tests)."""
        cfg = self.cfg
        foot_local, _ = self._leg_geometry()
        pen = np.maximum(-(self.pos[2] + foot_local @ self._rot[2]), 0.0)
        return float(
            0.5 * cfg.torso_mass * self.vel @ self.vel
            + 0.5 * self.omega @ (self._torso_inertia * self.omega)
            + cfg.torso_mass * cfg.gravity * self.pos[2]
            + 0.5 * cfg.contact_stiffness * (pen ** 2).sum()
            + 0.5 * (self._joint_inertia * self.qd ** 2).sum()
        )
