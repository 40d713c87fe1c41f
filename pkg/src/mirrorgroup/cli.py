"""Command-line entry point.

Subcommands::

    simulate --config F --out DIR            VP-only group runs
    train    --config F --out DIR [--trials N]
    validate --checkpoint C --topology T --trials N --out DIR
    sweep    --checkpoint C --out DIR        all four topologies
    analyze  --in DIR --out DIR              metrics of saved runs

``--seed`` overrides the config seed and may be given before or after the
subcommand.  All artifacts are deterministic for a given config and seed.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import analysis
from .artifacts import (aggregate, metrics_document, read_json, read_timeseries_csv, write_json,
                        write_rows_csv, write_timeseries_csv, write_training_log_csv)
from .config import ExperimentConfig, config_json, load_config
from .ensemble import TOPOLOGY_KINDS
from .harness import run_topology_sweep, simulate_vp_group, train_cp, validate_cp
from .neural_net import DEFAULT_SIZES, load_checkpoint, save_checkpoint

log = logging.getLogger("mirrorgroup")

CONFIG_SNAPSHOT = "config.json"


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _snapshot(cfg: ExperimentConfig, out: Path):
    (out / CONFIG_SNAPSHOT).write_text(config_json(cfg))


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = _out_dir(args.out)
    _snapshot(cfg, out)
    duration = args.duration if args.duration is not None else cfg.eval_length * cfg.dt
    for trial in range(args.trials):
        run = simulate_vp_group(cfg, duration, trial)
        write_timeseries_csv(out / f"timeseries_{trial:03d}.csv", run.t, run.x, run.v)
    log.info("wrote %d run(s) to %s", args.trials, out)
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    out = _out_dir(args.out)
    _snapshot(cfg, out)

    def progress(row):
        if row.trial % 10 == 0:
            log.info("trial %d  loss %.4g  eps %.3f  rms_cp %.4f  rms_tp %.4f",
                     row.trial, row.loss, row.epsilon, row.rms_cp, row.rms_tp)

    res = train_cp(cfg, trials=args.trials, progress=progress)
    save_checkpoint(res.net, out / "checkpoint.json")
    write_training_log_csv(out / "training_log.csv", res.log)
    gaps = res.gaps()
    w = min(cfg.learner.term_window, len(gaps))
    write_json(out / "training.json", {
        "trials_run": len(res.log),
        "terminated_at": res.terminated_at,
        "first_window_gap": float(gaps[:w].mean()),
        "last_window_gap": float(gaps[-w:].mean()),
        "reseats": int(sum(r.reseats for r in res.log)),
    })
    log.info("trained %d trials; checkpoint in %s", len(res.log), out)
    return 0


def cmd_validate(args) -> int:
    cfg = _config(args)
    net = load_checkpoint(args.checkpoint, DEFAULT_SIZES)
    out = _out_dir(args.out)
    _snapshot(cfg, out)
    res = validate_cp(net, cfg, args.topology, args.trials, keep_runs=args.save_runs)
    write_json(out / "metrics.json", {
        "topology": res.topology, "trials": args.trials,
        "cp": metrics_document(res.cp), "vp": metrics_document(res.vp),
    })
    rows = [{"condition": cond, "trial": i, **m.summary()}
            for cond, ms in (("cp", res.cp), ("vp", res.vp)) for i, m in enumerate(ms)]
    write_rows_csv(out / "metrics.csv", rows)
    if args.save_runs:
        for cond, runs in (("cp", res.cp_runs), ("vp", res.vp_runs)):
            for i, run in enumerate(runs):
                write_timeseries_csv(out / f"timeseries_{cond}_{i:03d}.csv", run.t, run.x, run.v)
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    net = load_checkpoint(args.checkpoint, DEFAULT_SIZES)
    out = _out_dir(args.out)
    _snapshot(cfg, out)
    rows = run_topology_sweep(net, cfg, args.trials)
    write_json(out / "sweep.json", {"rows": rows})
    write_rows_csv(out / "sweep.csv", rows)
    return 0


def cmd_analyze(args) -> int:
    src = Path(args.inp)
    snapshot = src / CONFIG_SNAPSHOT
    if not snapshot.exists():
        raise SystemExit(f"{src} has no {CONFIG_SNAPSHOT}; analyze needs the run's config")
    cfg = ExperimentConfig.from_dict(read_json(snapshot))
    topo = cfg.build_topology()
    files = sorted(src.glob("timeseries*.csv"))
    if not files:
        raise SystemExit(f"no time-series files in {src}")
    out = _out_dir(args.out)
    skip = int(round(cfg.transient / cfg.dt))
    op = topo.mean_operator
    per_file = []
    for path in files:
        t, x, v = read_timeseries_csv(path)
        dt = float(t[1] - t[0]) if len(t) > 1 else cfg.dt
        xbar, xbar_dot = x @ op.T, v @ op.T
        players = [analysis.trial_metrics(x[skip:], v[skip:], k, xbar[skip:, k], xbar_dot[skip:, k],
                                          dt, cfg.max_lag).summary()
                   for k in range(x.shape[1])]
        per_file.append({"file": path.name, "players": players})
    target = [f["players"][cfg.target_player] for f in per_file]
    write_json(out / "metrics.json", {"target_player": cfg.target_player + 1,
                                      "per_file": per_file, "aggregate": aggregate(target)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=argparse.SUPPRESS,
                        help="override the config seed (unsigned 64-bit)")
    parser = argparse.ArgumentParser(prog="mirrorgroup", description=__doc__.splitlines()[0],
                                     parents=[common])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate the VP-only group")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--duration", type=float, help="seconds per run (default: eval_length * dt)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", parents=[common], help="shadow-train the cyber player")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("validate", parents=[common], help="substitute the cyber player")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--topology", choices=TOPOLOGY_KINDS, default="complete")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--save-runs", action="store_true", help="also write every trial's time series")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", parents=[common], help="validate on every topology")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--config")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", parents=[common], help="metrics of saved time series")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not hasattr(args, "seed"):
        args.seed = None
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, FloatingPointError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
