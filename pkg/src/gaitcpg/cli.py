"""Command-line entry points.

    gaitcpg train   --out DIR [--config F] [--set k=v ...] [--seed N | --seeds a,b,c]
                    [--sessions N] [--backend stub|simplified]
    gaitcpg run     --checkpoint F --out DIR [--duration S] [--config F] [--set ...]
    gaitcpg energy  --run-dir DIR
    gaitcpg analyze --run-dir DIR

Exit codes: 0 success, 1 usage/config error, 2 runtime physics divergence.
All outputs are deterministic functions of (config, seed).
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import telemetry
from .checkpoint import Checkpoint, CheckpointError
from .config import ConfigError, RunConfig, resolve, to_text
from .cpg import POOL_NAMES, SLIF_NAMES, THIGH_EXTENSOR_ROWS
from .energy import energy_report
from .trainer import (Simulation, TrainingHistory, build_simulation,
                      run_session, train)

GAIT_METRICS_HEADER = ("session", "trot_index", "diverged")


def _write_gait_metrics(path: Path, records) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(GAIT_METRICS_HEADER) + "\n")
        for rec in records:
            fh.write(f"{rec.index},{rec.trot_index!r},{int(rec.diverged)}\n")


def _write_energy_csv(path: Path, report) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("quantity,value\n")
        for line in report.lines():
            fh.write(line + "\n")


def _train_one(config: RunConfig, seed: int, out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    config.run.master_seed = seed
    (out_dir / "config.txt").write_text(to_text(config))

    sim = build_simulation(config)
    cadence = config.run.checkpoint_cadence
    history = TrainingHistory()

    def checkpoint_cb(record, hist):
        done = record.index + 1
        if cadence > 0 and done % cadence == 0:
            ck = Checkpoint.capture(done, sim.weights, sim.astro, hist, sim.rngs)
            ck.save(out_dir / f"checkpoint_s{done:04d}.json")
            telemetry.write_weight_table_csv(
                out_dir / f"weights_s{done:04d}.csv", sim.weights.w)

    train(sim, config.run.sessions, history, checkpoint_cb)

    done = history.next_index
    Checkpoint.capture(done, sim.weights, sim.astro, history, sim.rngs) \
        .save(out_dir / "checkpoint_final.json")
    telemetry.write_weight_table_csv(out_dir / "weights_final.csv", sim.weights.w)
    telemetry.write_sessions_csv(out_dir / "sessions.csv", history.records)
    telemetry.write_tallies_csv(out_dir / "tallies.csv", history.records)
    _write_gait_metrics(out_dir / "gait_metrics.csv", history.records)

    report = energy_report([r.tally for r in history.records[-10:]])
    _write_energy_csv(out_dir / "energy.csv", report)

    lengths = [r.length_s for r in history.records]
    return {
        "seed": seed,
        "out": str(out_dir),
        "sessions": len(lengths),
        "mean_length_last10": float(np.mean(lengths[-10:])),
        "final_trot_index": history.records[-1].trot_index,
    }


def _train_worker(payload):
    config, seed, out_dir = payload
    return _train_one(config, seed, Path(out_dir))


def cmd_train(args) -> int:
    config = resolve(args.config, args.set)
    if args.sessions is not None:
        config.run.sessions = args.sessions
    if args.backend is not None:
        config.run.backend = args.backend
    config.validate()

    out = Path(args.out)
    if args.seeds is not None:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
        jobs = [(config, s, out / f"seed_{s}") for s in seeds]
        if len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=min(len(jobs), 8)) as pool:
                results = list(pool.map(_train_worker, jobs))
        else:
            results = [_train_worker(jobs[0])]
    else:
        seed = config.run.master_seed if args.seed is None else args.seed
        results = [_train_one(config, seed, out)]

    for res in results:
        print(f"seed {res['seed']}: {res['sessions']} sessions, "
              f"last-10 mean length {res['mean_length_last10']:.3f} s, "
              f"final trot index {res['final_trot_index']:+.3f} -> {res['out']}")
    return 0


def cmd_run(args) -> int:
    ck_path = Path(args.checkpoint)
    config_path = args.config or ck_path.parent / "config.txt"
    config = resolve(config_path, args.set)
    if args.backend is not None:
        config.run.backend = args.backend
    if args.duration is not None:
        config.session.l_max = args.duration
    config.validate()

    sim = build_simulation(config)
    ck = Checkpoint.load(ck_path)
    ck.restore(sim.weights, sim.astro, sim.rngs)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    raster = telemetry.SpikeRasterWriter(out / "raster.csv")
    traj = open(out / "trajectory.csv", "w", newline="")
    traj.write("step,x,y,z,zaxis_x,zaxis_y,zaxis_z,"
               + ",".join(f"q{i}" for i in range(12)) + "\n")

    def on_step(t, obs, activity, sim_):
        for p, name in enumerate(POOL_NAMES):
            raster.record(t, name, sim_.network.pools.spiked_last_step[p])
        slif = sim_.network.slif.spiked_last_step
        for k, name in enumerate(SLIF_NAMES):
            if slif[k]:
                raster.record(t, name, np.array([True]))
        row = [str(t)] + [repr(float(v)) for v in
                          (*obs.torso_pos, *obs.torso_z_axis_world, *obs.joint_pos)]
        traj.write(",".join(row) + "\n")

    record = run_session(sim, index=ck.session_index, progress=0.0,
                         learning_start_s=0.0, learning=False,
                         step_callback=on_step)
    raster.close()
    traj.close()

    print(f"rollout: {record.length_s:.3f} s, mean reward "
          f"{record.mean_reward:.3f}, final x {record.final_x:.3f} m, "
          f"trot index {record.trot_index:+.3f}, "
          f"{raster.rows} spike events -> {out}")
    return 2 if record.diverged else 0


def cmd_energy(args) -> int:
    run_dir = Path(args.run_dir)
    tallies = telemetry.read_tallies_csv(run_dir / "tallies.csv")
    report = energy_report(tallies[-10:])
    _write_energy_csv(run_dir / "energy.csv", report)
    for key, value in report.freqs.items():
        print(f"f_{key} = {value:.4g} Hz")
    print(f"P_snn    = {report.p_snn:.4g} W")
    print(f"P_policy = {report.p_policy:.4g} W")
    print(f"ratio    = {report.ratio:.3f}x")
    return 0


def cmd_analyze(args) -> int:
    run_dir = Path(args.run_dir)
    data = telemetry.read_sessions_csv(run_dir / "sessions.csv")
    reward_avg = telemetry.sliding_average(data["mean_reward"], 5)
    x_avg = telemetry.sliding_average(data["final_x_m"], 5)
    with open(run_dir / "analysis.csv", "w", newline="") as fh:
        fh.write("session,length_s,mean_reward_avg5,final_x_m_avg5\n")
        for i in range(len(reward_avg)):
            fh.write(f"{int(data['session'][i])},{data['length_s'][i]!r},"
                     f"{reward_avg[i]!r},{x_avg[i]!r}\n")

    ck_path = run_dir / "checkpoint_final.json"
    if ck_path.exists():
        ck = Checkpoint.load(ck_path)
        telemetry.write_weight_table_csv(run_dir / "weights_table.csv", ck.weights)

    n = len(reward_avg)
    if n:
        print(f"{n} sessions; final avg5 reward {reward_avg[-1]:.3f}, "
              f"final avg5 x {x_avg[-1]:.3f} m")

    raster_path = run_dir / "raster.csv"
    if raster_path.exists():
        import csv as _csv
        steps, pops = [], []
        with open(raster_path, newline="") as fh:
            reader = _csv.reader(fh)
            next(reader)
            for row in reader:
                steps.append(int(row[0]))
                pops.append(row[1])
        if steps:
            t_max = max(steps) + 1
            ext_names = [POOL_NAMES[i] for i in THIGH_EXTENSOR_ROWS]
            counts = np.zeros((t_max, 4), dtype=int)
            name_to_col = {n_: i for i, n_ in enumerate(ext_names)}
            for s, p in zip(steps, pops):
                col = name_to_col.get(p)
                if col is not None:
                    counts[s, col] += 1
            print(f"raster trot index {telemetry.trot_index(counts):+.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaitcpg")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="config file path")
        p.add_argument("--set", action="append", default=[],
                       metavar="KEY=VALUE", help="config override (repeatable)")
        p.add_argument("--backend", choices=("stub", "simplified"), default=None)

    p_train = sub.add_parser("train", help="run training sessions")
    common(p_train)
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--seeds", default=None,
                         help="comma list; one output dir per seed, run in parallel")
    p_train.add_argument("--sessions", type=int, default=None)
    p_train.add_argument("--out", required=True)
    p_train.set_defaults(func=cmd_train)

    p_run = sub.add_parser("run", help="frozen-weight rollout from a checkpoint")
    common(p_run)
    p_run.add_argument("--checkpoint", required=True)
    p_run.add_argument("--duration", type=float, default=None, help="seconds")
    p_run.add_argument("--out", required=True)
    p_run.set_defaults(func=cmd_run)

    p_energy = sub.add_parser("energy", help="recompute the energy report")
    p_energy.add_argument("--run-dir", required=True)
    p_energy.set_defaults(func=cmd_energy)

    p_analyze = sub.add_parser("analyze", help="session metrics and weight table")
    p_analyze.add_argument("--run-dir", required=True)
    p_analyze.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CheckpointError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
