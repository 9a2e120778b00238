"""Command line entry point.

    quditrc simulate   --config run.yaml --out outdir
    quditrc task signal --config run.yaml --out outdir
    quditrc task stmc   --config run.yaml --out outdir
    quditrc sweep      --config sweep.yaml --out outdir --workers 4
    quditrc export     --results outdir/results.json --kind heatmap --out plots

Exit codes: 0 ok, 2 configuration, 3 solver, 4 ridge, 5 I/O.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

from . import backend
from .config import SimulateConfig, parse_config, with_seed
from .dynamics import ClassicalParams, sample_classical_output, sample_quantum_output
from .errors import ConfigError, QuditRCError
from .export import (
    PLOT_KINDS,
    dumps,
    export_plot_data,
    export_results,
    export_task_result,
    load_results,
    reproducibility_block,
    write_manifest,
)
from .operators import ground_state
from .sweep import SweepSpec, run_sweep
from .tasks import SignalTaskConfig, StmcTaskConfig, run_signal_task, run_stmc_task

log = logging.getLogger("quditrc")


def _common(p: argparse.ArgumentParser, config_required=True):
    p.add_argument("--config", required=config_required, help="YAML run configuration")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--workers", type=int, default=None, help="worker processes (sweep only)")
    p.add_argument("--stdout", action="store_true", help="also print the main result to stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quditrc", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("simulate", help="evolve one trajectory and write its samples"))
    task = sub.add_parser("task", help="run one benchmark task")
    task_sub = task.add_subparsers(dest="task", required=True)
    _common(task_sub.add_parser("signal", help="amplitude and phase estimation"))
    _common(task_sub.add_parser("stmc", help="short-term memory capacity"))
    _common(sub.add_parser("sweep", help="run a realization sweep"))
    exp = sub.add_parser("export", help="write plot data from a results file")
    _common(exp, config_required=False)
    exp.add_argument("--results", required=True, help="results.json or result.json")
    exp.add_argument("--kind", required=True, choices=PLOT_KINDS)
    return parser


def _load(args, expected):
    cfg = parse_config(args.config)
    if not isinstance(cfg, expected):
        raise ConfigError(f"{args.config}: expected a {expected.__name__.replace('Config', '')} "
                          f"configuration, got {type(cfg).__name__}")
    if args.seed is not None:
        cfg = with_seed(cfg, args.seed)
    return cfg


def _block(cfg, seed):
    return reproducibility_block(cfg.to_dict(), seed, asdict(cfg.base.integrator if isinstance(cfg, SweepSpec)
                                                             else cfg.integrator))


def cmd_simulate(args) -> int:
    cfg = _load(args, SimulateConfig)
    out = Path(args.out)
    start = time.perf_counter()
    if isinstance(cfg.reservoir, ClassicalParams):
        traj = sample_classical_output(cfg.reservoir, cfg.drive, 0j, cfg.window, cfg.T, cfg.integrator)
        files = [export_plot_data(traj, "trajectory", out / "trajectory.csv")]
    else:
        traj = sample_quantum_output(cfg.reservoir, cfg.drive, ground_state(cfg.reservoir.d),
                                     cfg.window, cfg.T, cfg.integrator, keep_states=True)
        files = [export_plot_data(traj, "trajectory", out / "trajectory.csv"),
                 export_plot_data(traj, "fock_populations", out / "fock_populations.csv")]
    write_manifest(out, _block(cfg, cfg.seed), files,
                   {"wall_time": time.perf_counter() - start, "backend": backend.NAME})
    if args.stdout:
        sys.stdout.write(files[0].read_text())
    return 0


def cmd_task(args) -> int:
    expected = SignalTaskConfig if args.task == "signal" else StmcTaskConfig
    cfg = _load(args, expected)
    out = Path(args.out)
    result = (run_signal_task if args.task == "signal" else run_stmc_task)(cfg)
    block = _block(cfg, cfg.seed)
    files = [export_task_result(result, out / "result.json", block)]
    if args.task == "stmc":
        files.append(export_plot_data(result, "r2_curve", out / "r2_curve.csv"))
    write_manifest(out, block, files, {"wall_time": result.wall_time, "backend": backend.NAME})
    for name, value in result.metrics.items():
        log.info("%s = %.6g", name, value)
    if args.stdout:
        sys.stdout.write(dumps(result.to_dict()))
    return 0


def cmd_sweep(args) -> int:
    spec = _load(args, SweepSpec)
    if args.workers is not None:
        spec = replace(spec, workers=args.workers)
    out = Path(args.out)
    start = time.perf_counter()

    def progress(res, total):
        if res.ok:
            log.info("realization %d/%d done", res.id + 1, total)
        else:
            log.warning("realization %d/%d failed: %s", res.id + 1, total, res.error)

    summary = run_sweep(spec, progress)
    block = _block(spec, spec.base.seed)
    files = [export_results(summary, "csv", out / "results.csv"),
             export_results(summary, "json", out / "results.json", block)]
    write_manifest(out, block, files, {"wall_time": time.perf_counter() - start,
                                       "backend": backend.NAME, "workers": spec.workers})
    for rec in summary.best:
        log.info("best %s %s = %.6g (realization %d)", rec["group"], rec["metric"], rec["value"],
                 rec["realization_id"])
    if args.stdout:
        sys.stdout.write(files[0].read_text())
    return 0


def cmd_export(args) -> int:
    result, _ = load_results(args.results)
    path = export_plot_data(result, args.kind, Path(args.out) / f"{args.kind}.csv")
    if args.stdout:
        sys.stdout.write(path.read_text())
    return 0


COMMANDS = {"simulate": cmd_simulate, "task": cmd_task, "sweep": cmd_sweep, "export": cmd_export}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except QuditRCError as exc:
        log.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
