import csv
import gzip

import numpy as np
import pytest

from gaitcpg.energy import FiringTally
from gaitcpg.telemetry import (SpikeRasterWriter, alternation_cycles,
                               coactivation_fraction, read_sessions_csv,
                               read_tallies_csv, read_weight_table_csv,
                               sliding_average, smooth_counts, trot_index,
                               write_sessions_csv, write_tallies_csv,
                               write_weight_table_csv)
from gaitcpg.trainer import SessionRecord


def record(i, length=1.0):
    return SessionRecord(
        index=i, length_steps=int(length * 1000), length_s=length,
        mean_reward=0.5 * i, final_x=0.1 * i, progress=1.0,
        learning_start_s=0.0,
        tally=FiringTally(inhi=i, calf=2 * i, thigh=3 * i, limit_events=i,
                          elapsed_s=length),
        trot_index=0.0, diverged=False, weights=np.zeros((8, 8)))


def test_sessions_csv_roundtrip(tmp_path):
    path = tmp_path / "sessions.csv"
    write_sessions_csv(path, [record(i) for i in range(5)])
    data = read_sessions_csv(path)
    assert list(data["session"]) == [0, 1, 2, 3, 4]
    assert data["mean_reward"][3] == pytest.approx(1.5)


def test_tallies_csv_roundtrip(tmp_path):
    path = tmp_path / "tallies.csv"
    write_tallies_csv(path, [record(i) for i in range(1, 4)])
    tallies = read_tallies_csv(path)
    assert tallies[0].inhi == 1
    assert tallies[2].thigh == 9
    assert tallies[1].elapsed_s == 1.0


def test_weight_table_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    w = rng.uniform(-0.05, 0.05, size=(8, 8))
    path = tmp_path / "w.csv"
    write_weight_table_csv(path, w)
    back = read_weight_table_csv(path)
    assert np.array_equal(back, w)    # repr round-trips floats exactly
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    assert len(header) == 9
    assert header[1] == "FR.flexor"


def test_raster_counts_rows(tmp_path):
    path = tmp_path / "raster.csv"
    with SpikeRasterWriter(path) as writer:
        writer.record(0, "FR.thigh_flexor", np.array([True, False, True]))
        writer.record(1, "FR.thigh_flexor", np.array([False, False, False]))
        writer.record(2, "slif", np.array([True]))
    assert writer.rows == 3
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "population", "neuron"]
    assert rows[1] == ["0", "FR.thigh_flexor", "0"]
    assert rows[2] == ["0", "FR.thigh_flexor", "2"]
    assert len(rows) == 4


def test_raster_gzip(tmp_path):
    path = tmp_path / "raster.csv.gz"
    with SpikeRasterWriter(path) as writer:
        writer.record(0, "p", np.array([True]))
    with gzip.open(path, "rt") as fh:
        assert fh.readline().startswith("step")


def test_sliding_average_constant_series():
    assert np.allclose(sliding_average([2.0] * 10, 5), 2.0)


def test_sliding_average_partial_windows():
    got = sliding_average([1.0, 2.0, 3.0, 4.0], window=3)
    assert got == pytest.approx([1.0, 1.5, 2.0, 3.0])


def test_smooth_counts_preserves_mean():
    rng = np.random.default_rng(1)
    x = rng.integers(0, 5, size=2000).astype(float)
    assert smooth_counts(x).mean() == pytest.approx(x.mean(), rel=1e-2)


def _square_wave(period, phase, n, high=4):
    t = np.arange(n)
    return np.where(((t + phase) // (period // 2)) % 2 == 0, high, 0)


def test_trot_index_maximal_for_synthetic_trot():
    n, period = 4000, 500
    fr = _square_wave(period, 0, n)
    fl = _square_wave(period, period // 2, n)
    rr = _square_wave(period, period // 2, n)
    rl = _square_wave(period, 0, n)
    counts = np.stack([fr, fl, rr, rl], axis=1)
    ti = trot_index(counts)
    assert ti > 2.5      # near the +3 ceiling


def test_trot_index_negative_for_pace():
    n, period = 4000, 500
    fr = _square_wave(period, 0, n)
    fl = _square_wave(period, period // 2, n)
    rr = _square_wave(period, 0, n)
    rl = _square_wave(period, period // 2, n)
    counts = np.stack([fr, fl, rr, rl], axis=1)
    assert trot_index(counts) < 0


def test_trot_index_zero_on_silence():
    assert trot_index(np.zeros((1000, 4))) == 0.0


def test_coactivation_and_cycles():
    a = _square_wave(400, 0, 2000)
    b = _square_wave(400, 200, 2000)
    assert coactivation_fraction(a, b) == pytest.approx(0.0)
    assert alternation_cycles(a, b) == pytest.approx(4, abs=1)
    assert coactivation_fraction(a, a) == 1.0
    assert alternation_cycles(np.zeros(100), np.zeros(100)) == 0
