"""CSV outputs and run analysis metrics.

Every file written here is a deterministic function of (config, seed): floats
are serialized with repr (shortest round-trip form), rows are ordered by
construction, and no timestamps appear anywhere.
"""

from __future__ import annotations

import csv
import gzip
from pathlib import Path

import numpy as np

from .cpg import THIGH_MUSCLE_NAMES

SESSIONS_CSV_HEADER = ("session", "length_s", "mean_reward", "final_x_m",
                       "progress", "learning_start_s")
TALLIES_CSV_HEADER = ("session", "elapsed_s", "inhi_spikes", "calf_spikes",
                      "thigh_spikes", "limit_events")


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_sessions_csv(path: str | Path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SESSIONS_CSV_HEADER)
        for rec in records:
            writer.writerow([rec.index, _fmt(rec.length_s), _fmt(rec.mean_reward),
                             _fmt(rec.final_x), _fmt(rec.progress),
                             _fmt(rec.learning_start_s)])


def read_sessions_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if tuple(header) != SESSIONS_CSV_HEADER:
        raise ValueError(f"unexpected sessions.csv header: {header}")
    cols = np.array(body, dtype=float).T if body else np.zeros((6, 0))
    return dict(zip(SESSIONS_CSV_HEADER, cols))


def write_tallies_csv(path: str | Path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TALLIES_CSV_HEADER)
        for rec in records:
            t = rec.tally
            writer.writerow([rec.index, _fmt(t.elapsed_s), t.inhi, t.calf,
                             t.thigh, t.limit_events])


def read_tallies_csv(path: str | Path):
    from .energy import FiringTally

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != TALLIES_CSV_HEADER:
        raise ValueError(f"unexpected tallies.csv header: {rows[0]}")
    tallies = []
    for row in rows[1:]:
        tallies.append(FiringTally(
            inhi=int(row[2]), calf=int(row[3]), thigh=int(row[4]),
            limit_events=int(row[5]), elapsed_s=float(row[1])))
    return tallies


def write_weight_table_csv(path: str | Path, w: np.ndarray) -> None:
    """8x8 inter-limb table with muscle-id header row and column."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("source\\target",) + THIGH_MUSCLE_NAMES)
        for name, row in zip(THIGH_MUSCLE_NAMES, w):
            writer.writerow([name] + [_fmt(v) for v in row])


def read_weight_table_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(v) for v in row[1:]] for row in rows[1:]])


class SpikeRasterWriter:
    """Streams (step, population, neuron) spike rows into a CSV file.

    Gzip compression is selected by a `.gz` filename suffix.
    """

    def __init__(self, path: str | Path):
        path = Path(path)
        if path.suffix == ".gz":
            self._fh = gzip.open(path, "wt", newline="")
        else:
            self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(("step", "population", "neuron"))
        self.rows = 0

    def record(self, step: int, population: str, fired_mask) -> None:
        for neuron in np.flatnonzero(fired_mask):
            self._writer.writerow((step, population, int(neuron)))
            self.rows += 1

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *_exc):
        self.close()


def sliding_average(values, window: int = 5) -> np.ndarray:
    """Trailing mean over up to `window` samples (shorter at the start)."""
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    csum = np.concatenate(([0.0], np.cumsum(values)))
    for i in range(len(values)):
        j = max(0, i - window + 1)
        out[i] = (csum[i + 1] - csum[j]) / (i + 1 - j)
    return out


def smooth_counts(counts, window_steps: int = 50) -> np.ndarray:
    """Centered moving average of a per-step spike-count series."""
    counts = np.asarray(counts, dtype=float)
    kernel = np.ones(window_steps) / window_steps
    return np.convolve(counts, kernel, mode="same")


def _corr(a: np.ndarray, b: np.ndarray) -> float:
    sa, sb = a.std(), b.std()
    if sa == 0.0 or sb == 0.0:
        return 0.0
    return float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))


def trot_index(extensor_counts: np.ndarray, window_steps: int = 50) -> float:
    """Diagonal-synchronization score of the four thigh-extensor pools.

    Columns are (FR, FL, RR, RL) per-step spike counts. Each series is
    smoothed with a 50 ms moving average; the score is
    (corr(FR,RL) + corr(FL,RR) - corr(FR,FL) - corr(FR,RR) - corr(RL,FL)
    - corr(RL,RR)) / 2. Positive means diagonal pairs move together.
    """
    x = np.stack([smooth_counts(extensor_counts[:, i], window_steps)
                  for i in range(4)], axis=1)
    fr, fl, rr, rl = x.T
    return (_corr(fr, rl) + _corr(fl, rr) - _corr(fr, fl) - _corr(fr, rr)
            - _corr(rl, fl) - _corr(rl, rr)) / 2.0


def coactivation_fraction(counts_a, counts_b) -> float:
    """Share of steps with both pools spiking among steps with either."""
    a = np.asarray(counts_a) > 0
    b = np.asarray(counts_b) > 0
    either = int((a | b).sum())
    if either == 0:
        return 0.0
    return float((a & b).sum() / either)


def alternation_cycles(counts_a, counts_b, window_steps: int = 50,
                       floor: float = 0.05) -> int:
    """Complete A->B->A dominance alternations in a pool pair's activity.

    Both series are smoothed; steps where neither smoothed rate clears the
    floor are ignored; a cycle is two consecutive dominance switches.
    """
    a = smooth_counts(counts_a, window_steps)
    b = smooth_counts(counts_b, window_steps)
    active = (a > floor) | (b > floor)
    dominant = np.sign(a - b)[active]
    dominant = dominant[dominant != 0]
    if dominant.size == 0:
        return 0
    switches = int((np.diff(dominant) != 0).sum())
    return switches // 2
