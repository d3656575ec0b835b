"""Physics-backend contract, observation container, and the scripted stub.

A backend exposes reset() and step(torques) at the simulation rate and must
be deterministic for a given torque sequence. Two implementations ship:
the scripted stub below (replays configured observations, for exercising
the trainer and learning paths against known reward sequences) and the
simplified rigid-body model in `quadruped`.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass
class Observation:
    """Sensor snapshot returned by a backend after each step.

    Joint vectors use the 3*limb + (hip, thigh, calf) layout; torso_omega is
    (roll, pitch, yaw) rates; torso_z_axis_world is the torso's local Z
    expressed in world coordinates (unit length).
    """

    joint_pos: np.ndarray          # (12,) rad
    joint_vel: np.ndarray          # (12,) rad/s
    torso_vel: np.ndarray          # (3,) m/s world
    torso_omega: np.ndarray        # (3,) rad/s
    torso_z_axis_world: np.ndarray  # (3,) unit vector
    torso_pos: np.ndarray          # (3,) m
    foot_contact: np.ndarray       # (4,) bool

    @classmethod
    def zeros(cls) -> "Observation":
        return cls(
            joint_pos=np.zeros(12),
            joint_vel=np.zeros(12),
            torso_vel=np.zeros(3),
            torso_omega=np.zeros(3),
            torso_z_axis_world=np.array([0.0, 0.0, 1.0]),
            torso_pos=np.zeros(3),
            foot_contact=np.zeros(4, dtype=bool),
        )


@dataclass
class PhysicsConfig:
    """Parameters of the simplified quadruped model.

    Contact and inertia values are implementation estimates in the class of
    the target robot, tuned so the reset pose settles without falling; all
    are exposed here for adjustment.
    """

    gravity: float = 9.81
    torso_mass: float = 12.0           # whole robot; the legs are massless
    torso_inertia_x: float = 0.2
    torso_inertia_y: float = 0.35
    torso_inertia_z: float = 0.4
    joint_inertia: float = 0.08       # reflected inertia per actuated joint
    frictionloss_thigh: float = 25.0  # dry-friction torque magnitudes (N*m)
    frictionloss_calf: float = 10.0
    frictionloss_hip: float = 10.0
    torque_limit_hip: float = 33.5    # actuator saturation (N*m)
    torque_limit_thigh: float = 33.5
    torque_limit_calf: float = 20.0
    contact_stiffness: float = 2000.0  # N/m
    contact_damping: float = 100.0     # N*s/m
    friction_mu: float = 0.9
    slip_velocity: float = 0.1         # m/s, tangential regularization
    max_normal_force: float = 400.0    # N per foot, impact clamp
    torso_angular_damping: float = 4.0  # N*m*s/rad, stands in for leg inertia
    init_altitude: float = 0.35        # m
    reset_lower_weight: float = 0.7    # joint reset = wl*lower + (1-wl)*upper
    hip_offset_x: float = 0.18         # m, hip pivots in the torso frame
    hip_offset_y: float = 0.16
    l_thigh: float = 0.2               # m
    l_calf: float = 0.2
    thigh_mount_angle: float = -0.35   # rad, centers the foot sweep under the hip

    def __post_init__(self):
        for name in ("torso_mass", "joint_inertia", "contact_stiffness",
                     "contact_damping", "l_thigh", "l_calf"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class PhysicsDivergence(RuntimeError):
    """Raised when the state turns non-finite or blows past sanity bounds."""


class PhysicsBackend(abc.ABC):
    """Deterministic 1 kHz physics interface."""

    @abc.abstractmethod
    def reset(self) -> Observation:
        ...

    @abc.abstractmethod
    def step(self, torques: np.ndarray) -> Observation:
        ...


def alive_indicator(obs: Observation, thres: float = 0.5) -> bool:
    """True while the torso's local Z keeps at least `thres` of vertical."""
    return bool(obs.torso_z_axis_world @ np.array([0.0, 0.0, 1.0]) >= thres)


class ScriptedBackend(PhysicsBackend):
    """Replays observations from a function of the step index.

    Torque input is recorded but otherwise ignored, which makes reward and
    session-control behavior fully predictable in tests.
    """

    def __init__(self, script):
        self._script = script
        self._step_index = 0
        self.torque_log: list[np.ndarray] = []

    def reset(self) -> Observation:
        self._step_index = 0
        self.torque_log.clear()
        return self._script(0)

    def step(self, torques: np.ndarray) -> Observation:
        self.torque_log.append(np.asarray(torques, dtype=float).copy())
        self._step_index += 1
        return self._script(self._step_index)


def constant_velocity_script(vel_x: float, topple_at_s: float | None = None,
                             dt: float = 0.001):
    """Observation script moving at fixed +x speed, optionally toppling.

    The torso stays upright through `topple_at_s` inclusive; every later
    observation shows it flipped horizontal, so the alive indicator is false
    from the first step after the topple time.
    """
    topple_step = None if topple_at_s is None else int(round(topple_at_s / dt))

    def script(step_index: int) -> Observation:
        obs = Observation.zeros()
        obs.torso_vel = np.array([vel_x, 0.0, 0.0])
        obs.torso_pos = np.array([vel_x * step_index * dt, 0.0, 0.35])
        if topple_step is not None and step_index > topple_step:
            obs.torso_z_axis_world = np.array([1.0, 0.0, 0.0])
        return obs

    return script
