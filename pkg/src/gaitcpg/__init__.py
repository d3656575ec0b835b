"""Astrocyte-regulated spiking CPG simulator for quadruped gait learning."""

from .astrocyte import AstrocyteParams, AstrocyteState
from .config import RunConfig, default_config, resolve
from .cpg import CpgNetwork, InterLimbWeights, JointLimits, MuscleId, step_cpg
from .energy import FiringTally, OpCosts, p_policy, p_snn_cpg
from .neurons import PoolState, PslifParams, SimClock, SlifParams
from .physics import Observation, PhysicsConfig, ScriptedBackend, alive_indicator
from .plasticity import PlasticityParams, RewardWindow, StdpState
from .quadruped import SimplifiedQuadruped
from .trainer import (Simulation, TrainingHistory, build_simulation,
                      learning_start, run_session, train, training_progress)

__version__ = "0.1.0"
