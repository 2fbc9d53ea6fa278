"""Command line interface.

::

    heat run|ensemble|bench|steady [--config FILE] [--set key=value]... [--out DIR]

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical
divergence (NaN or Inf) detected.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import core
from .analysis import convergence_check, ensemble_run, terminal_spread
from .asyncsim import async_run
from .config import ConfigError, RunConfig, parse_config
from .core import DomainError, NumericalDivergence, l2_norm
from .executor import (BARRIER_FREE, BARRIERED, ExecConfig, ExecError, exec_run,
                       measure)
from .output import (emit_bench_csv, emit_ensemble_csv, emit_svg_lines,
                     emit_trajectory_csv, ensemble_series, ensure_dir, fmt,
                     profile_series)
from .sync import Trajectory, sync_run

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DIVERGED = 0, 2, 3, 4

log = logging.getLogger("asyncheat")

_EXEC_MODES = {"exec-barriered": BARRIERED, "exec-free": BARRIER_FREE}


def _trajectory(cfg: RunConfig) -> Trajectory:
    u0, params, bc = cfg.initial(), cfg.params(), cfg.boundary()
    if cfg.mode == "sync":
        return sync_run(u0, params, bc, cfg.k_end, cfg.record, cfg.precision)
    if cfg.mode == "async-sim":
        return async_run(u0, params, bc, cfg.partition(), cfg.delay_model(), cfg.k_end,
                         cfg.record, cfg.precision)
    part = cfg.partition()
    if cfg.k_end < 1:
        raise ConfigError("k_end", "executor modes need k_end >= 1")
    ecfg = ExecConfig(part.P, cfg.k_end, _EXEC_MODES[cfg.mode], yield_every=cfg.yield_every)
    res = exec_run(u0, params, bc, part, ecfg)
    print(f"wall time: {res.duration_ns / 1e6:.3f} ms, step counters: "
          f"min {res.counters.min()} max {res.counters.max()}")
    u0 = core.impose(u0, bc)
    return Trajectory(np.array([0, cfg.k_end]), np.stack([u0.values, res.field.values]),
                      params, bc)


def cmd_run(cfg: RunConfig, out) -> int:
    traj = _trajectory(cfg)
    emit_trajectory_csv(traj, out / "trajectory.csv")
    emit_svg_lines(profile_series(traj), out / "trajectory.svg",
                   title=f"temperature profiles ({cfg.mode}, {cfg.bc})",
                   xlabel="grid point i", ylabel="u")
    steady = cfg.steady_state()
    final = traj.snapshots[-1]
    print(f"mode={cfg.mode} bc={cfg.bc} N={cfg.N} n={cfg.n} r={fmt(cfg.params().r)} "
          f"k_end={cfg.k_end}")
    print(f"final 2-norm: {fmt(l2_norm(core.TemperatureField(final)))}")
    print(f"max |u - steady|: {fmt(np.max(np.abs(final - steady.values)))}")
    hit = convergence_check(traj, steady, 1e-6)
    print(f"first recorded step within 1e-6 of steady state: {hit}")
    print(f"wrote {out / 'trajectory.csv'} and {out / 'trajectory.svg'}")
    return EXIT_OK


def cmd_ensemble(cfg: RunConfig, out) -> int:
    res = ensemble_run(cfg.initial(), cfg.params(), cfg.boundary(), cfg.partition(),
                       cfg.delay_model(), cfg.k_end, cfg.M, record=cfg.record)
    stats = emit_ensemble_csv(res, out / "ensemble.csv")
    emit_svg_lines(ensemble_series(res), out / "ensemble.svg",
                   title=f"{res.M} asynchronous runs ({cfg.bc}, q={cfg.q})",
                   xlabel="step k", ylabel="||u(k)||_2")
    print(f"M={res.M} seeds {res.seeds[0]}..{res.seeds[-1]} bc={cfg.bc} q={cfg.q} "
          f"k_end={cfg.k_end}")
    print(f"terminal mean 2-norm: {fmt(res.mean[-1])}")
    if res.M >= 2:
        spread = terminal_spread(res)
        print(f"terminal spread: mean temperature {fmt(spread.mean_temperature)}, "
              f"2-norm {fmt(spread.norm2)}")
    print(f"wrote {out / 'ensemble.csv'}, {stats} and {out / 'ensemble.svg'}")
    return EXIT_OK


def cmd_bench(cfg: RunConfig, out) -> int:
    modes = [_EXEC_MODES[m] for m in cfg.bench_modes]
    table = measure(cfg.bench_sizes, modes, cfg.reps, cfg.bench_k_end, cfg.workers,
                    cfg.params(), cfg.boundary())
    emit_bench_csv(table, out / "bench.csv")
    print(table.format())
    print(f"wrote {out / 'bench.csv'}")
    return EXIT_OK


def cmd_steady(cfg: RunConfig, out) -> int:
    for v in cfg.steady_state().values:
        print(fmt(v))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "ensemble": cmd_ensemble, "bench": cmd_bench,
            "steady": cmd_steady}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heat",
        description="Synchronous and asynchronous explicit solvers for the 1D heat equation.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", metavar="FILE", help="JSON configuration file")
    parser.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        dest="sets", help="override one configuration key (repeatable)")
    parser.add_argument("--out", metavar="DIR", default="out",
                        help="output directory (default: ./out)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config, args.sets)
    except ConfigError as exc:
        print(f"heat: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    previous = core.CHECK_FINITE
    core.CHECK_FINITE = True
    try:
        out = ensure_dir(args.out) if args.command != "steady" else None
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"heat: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalDivergence as exc:
        print(f"heat: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DomainError, ExecError) as exc:
        print(f"heat: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, DomainError) else 1
    except OSError as exc:
        print(f"heat: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        core.CHECK_FINITE = previous


if __name__ == "__main__":
    sys.exit(main())
