"""Run configuration: defaults, file parsing, overrides, echo.

The on-disk format is flat, diffable text: one `dotted.key = value` per line,
`#` comments, keys named by their path through the nested parameter
dataclasses (e.g. `snn.motor.tau_motor = 0.009`). Unknown keys are rejected;
missing keys keep their defaults. The fully resolved configuration is echoed
verbatim into every run directory.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .astrocyte import AstrocyteParams
from .cpg import CpgParams, JointLimits
from .neurons import PslifParams, SlifParams
from .physics import PhysicsConfig
from .plasticity import PlasticityParams


class ConfigError(ValueError):
    """Bad key, bad value, or failed cross-validation."""


BACKENDS = ("stub", "simplified")


@dataclass
class RunMeta:
    master_seed: int = 0
    backend: str = "simplified"
    sessions: int = 300
    checkpoint_cadence: int = 10


@dataclass
class SnnConfig:
    pool_size: int = 20
    w0_dist: float = 4.0
    c_dist: float = 0.3
    motor: PslifParams = field(default_factory=PslifParams)
    interneuron: SlifParams = field(default_factory=SlifParams)


@dataclass
class SessionConfig:
    dt: float = 0.001
    l_max: float = 10.0
    non_alive_threshold: float = 0.5   # s of accumulated non-alive steps
    alive_z_threshold: float = 0.5
    stub_vel_x: float = 1.0            # scripted-stub forward speed
    stub_topple_at_s: float = -1.0     # < 0 disables toppling

    @property
    def max_steps(self) -> int:
        return int(round(self.l_max / self.dt))

    @property
    def non_alive_steps(self) -> int:
        return int(round(self.non_alive_threshold / self.dt))


@dataclass
class RunConfig:
    run: RunMeta = field(default_factory=RunMeta)
    snn: SnnConfig = field(default_factory=SnnConfig)
    cpg: CpgParams = field(default_factory=CpgParams)
    limits: JointLimits = field(default_factory=JointLimits)
    plasticity: PlasticityParams = field(default_factory=PlasticityParams)
    astrocyte: AstrocyteParams = field(default_factory=AstrocyteParams)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    session: SessionConfig = field(default_factory=SessionConfig)

    def validate(self) -> None:
        if self.session.dt <= 0:
            raise ConfigError("session.dt must be positive")
        if self.session.dt >= self.snn.motor.tau_ca:
            raise ConfigError("session.dt must be below snn.motor.tau_ca")
        if self.session.dt >= self.cpg.tau_h:
            raise ConfigError("session.dt must be below cpg.tau_h")
        if self.run.backend not in BACKENDS:
            raise ConfigError(f"run.backend must be one of {BACKENDS}")
        if self.run.sessions < 1:
            raise ConfigError("run.sessions must be at least 1")
        if self.plasticity.w_min >= self.plasticity.w_max:
            raise ConfigError("plasticity.w_min must be below w_max")
        # Re-run the dataclass-level checks after field overrides.
        for section in (self.snn.motor, self.snn.interneuron, self.limits,
                        self.physics, self.astrocyte):
            section.__post_init__()


def _walk(obj, prefix: str = ""):
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        path = f"{prefix}{f.name}"
        if dataclasses.is_dataclass(value):
            yield from _walk(value, path + ".")
        else:
            yield path, obj, f

def flatten(config: RunConfig) -> dict[str, object]:
    return {path: getattr(owner, f.name) for path, owner, f in _walk(config)}


def _coerce(raw: str, current) -> object:
    if isinstance(current, bool):
        low = raw.strip().lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ConfigError(f"expected boolean, got {raw!r}")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw.strip()


def set_key(config: RunConfig, key: str, raw_value: str) -> None:
    for path, owner, f in _walk(config):
        if path == key:
            try:
                value = _coerce(raw_value, getattr(owner, f.name))
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from exc
            setattr(owner, f.name, value)
            return
    raise ConfigError(f"unknown config key: {key}")


def parse_assignments(config: RunConfig, assignments: list[str]) -> None:
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        key, raw = item.split("=", 1)
        set_key(config, key.strip(), raw)


def load_file(config: RunConfig, path: str | Path) -> None:
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, raw = stripped.split("=", 1)
        set_key(config, key.strip(), raw)


def to_text(config: RunConfig) -> str:
    lines = [f"{path} = {getattr(owner, f.name)}"
             for path, owner, f in _walk(config)]
    return "\n".join(lines) + "\n"


def default_config() -> RunConfig:
    return RunConfig()


def resolve(config_path: str | Path | None = None,
            assignments: list[str] | None = None) -> RunConfig:
    """Defaults, then file, then command-line overrides; validated."""
    config = default_config()
    if config_path is not None:
        load_file(config, config_path)
    if assignments:
        parse_assignments(config, assignments)
    config.validate()
    return config
