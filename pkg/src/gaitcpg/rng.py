"""Named, seedable random streams.

Every stochastic component (each motor pool, the interneuron bank, wiring
generation) draws from its own stream, derived from the master seed and a
stable string name. Adding or removing components therefore never shifts the
draws seen by existing ones, and a fixed master seed reproduces every run
bit-for-bit.

Streams hand out uniform doubles from an internal chunk buffer. NumPy
generators consume the underlying bitstream sequentially, so the value
sequence is independent of the chunking; the buffer exists purely to
amortize per-call overhead in the 1 kHz loop. Stream state (for checkpoints)
is the generator state at the current chunk start plus the offset within it.
"""

from __future__ import annotations

import hashlib

import numpy as np

_CHUNK = 16384


def _name_key(name: str) -> int:
    # Stable across processes (unlike hash()).
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class Stream:
    """Buffered source of uniform doubles with exact state capture."""

    def __init__(self, master_seed: int, name: str):
        self.name = name
        seq = np.random.SeedSequence(
            entropy=int(master_seed) & 0xFFFFFFFFFFFFFFFF,
            spawn_key=(_name_key(name),),
        )
        self._gen = np.random.Generator(np.random.PCG64(seq))
        self._buf = np.empty(0)
        self._pos = 0
        self._chunk_state = self._gen.bit_generator.state

    def take(self, n: int) -> np.ndarray:
        """The next n uniform [0, 1) doubles.

        Returns a read-only view into the chunk buffer when the request fits;
        callers must not write into it.
        """
        pos = self._pos
        if pos + n <= self._buf.shape[0]:
            self._pos = pos + n
            return self._buf[pos:self._pos]
        out = np.empty(n)
        filled = 0
        while filled < n:
            if self._pos == self._buf.shape[0]:
                self._chunk_state = self._gen.bit_generator.state
                self._buf = self._gen.random(_CHUNK)
                self._pos = 0
            k = min(n - filled, self._buf.shape[0] - self._pos)
            out[filled:filled + k] = self._buf[self._pos:self._pos + k]
            self._pos += k
            filled += k
        return out

    def random(self, size=None):
        if size is None:
            return float(self.take(1)[0])
        shape = (size,) if isinstance(size, int) else tuple(size)
        return self.take(int(np.prod(shape))).reshape(shape)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return low + (high - low) * self.random(size)

    def state(self) -> dict:
        return {"chunk_state": self._chunk_state,
                "buffer_len": int(self._buf.shape[0]),
                "offset": int(self._pos)}

    def set_state(self, state: dict) -> None:
        self._gen.bit_generator.state = state["chunk_state"]
        self._chunk_state = self._gen.bit_generator.state
        n = int(state["buffer_len"])
        self._buf = self._gen.random(n) if n else np.empty(0)
        self._pos = int(state["offset"])


class RngStreams:
    """Registry of named streams sharing one master seed."""

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)
        self._streams: dict[str, Stream] = {}

    def get(self, name: str) -> Stream:
        stream = self._streams.get(name)
        if stream is None:
            stream = Stream(self.master_seed, name)
            self._streams[name] = stream
        return stream

    def state(self) -> dict:
        """Snapshot of every instantiated stream (for checkpoints)."""
        return {name: s.state() for name, s in self._streams.items()}

    def set_state(self, state: dict) -> None:
        for name, s_state in state.items():
            self.get(name).set_state(s_state)
