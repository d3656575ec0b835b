"""Versioned training checkpoints.

A checkpoint captures exactly the state that crosses session boundaries:
the inter-limb weight table, the astrocyte bank, the session-length history
feeding the learning schedules, and every RNG stream. Restoring one at a
session boundary therefore continues training bit-identically. Serialized as
JSON; floats round-trip exactly via repr.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .astrocyte import AstrocyteState
from .cpg import InterLimbWeights
from .rng import RngStreams
from .trainer import TrainingHistory

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Unreadable or incompatible checkpoint."""


@dataclass
class Checkpoint:
    session_index: int
    weights: np.ndarray
    astro: dict[str, np.ndarray]
    history_lengths: list[float]
    rng_state: dict

    @classmethod
    def capture(cls, session_index: int, weights: InterLimbWeights,
                astro: AstrocyteState, history: TrainingHistory,
                rngs: RngStreams) -> "Checkpoint":
        return cls(
            session_index=session_index,
            weights=weights.w.copy(),
            astro={
                "ag": astro.ag.copy(),
                "ip3": astro.ip3.copy(),
                "ca_cyt": astro.ca_cyt.copy(),
                "gate_h": astro.gate_h.copy(),
                "ado": astro.ado.copy(),
                "time_since_release": astro.time_since_release.copy(),
            },
            history_lengths=list(history.lengths()),
            rng_state=rngs.state(),
        )

    def restore(self, weights: InterLimbWeights, astro: AstrocyteState,
                rngs: RngStreams) -> None:
        weights.w = self.weights.copy()
        for name, values in self.astro.items():
            getattr(astro, name)[...] = values
        rngs.set_state(self.rng_state)

    def save(self, path: str | Path) -> None:
        payload = {
            "format_version": FORMAT_VERSION,
            "session_index": self.session_index,
            "weights": self.weights.tolist(),
            "astro": {k: v.tolist() for k, v in self.astro.items()},
            "history_lengths": self.history_lengths,
            "rng_state": self.rng_state,
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        try:
            payload = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
        version = payload.get("format_version")
        if version != FORMAT_VERSION:
            raise CheckpointError(
                f"checkpoint {path} has format version {version}; "
                f"this build reads version {FORMAT_VERSION}")
        return cls(
            session_index=payload["session_index"],
            weights=np.array(payload["weights"], dtype=float),
            astro={k: np.array(v, dtype=float)
                   for k, v in payload["astro"].items()},
            history_lengths=[float(v) for v in payload["history_lengths"]],
            rng_state=payload["rng_state"],
        )
