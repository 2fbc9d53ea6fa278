"""Seeded Monte Carlo ensembles of asynchronous runs and their statistics."""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .asyncsim import DelayModel, async_run
from .core import (BoundaryCondition, DomainError, PartitionSpec, SolverParams,
                   TemperatureField)
from .executor import available_cores
from .sync import Trajectory


def l2_norms(snapshots: np.ndarray) -> np.ndarray:
    """Row-wise 2-norms of a (T, N) stack of fields, each equal to :func:`l2_norm`."""
    v = np.abs(np.asarray(snapshots, dtype=np.float64))
    m = v.max(axis=1)
    scale = np.where(m > 0, m, 1.0)
    sq = (v / scale[:, None]) ** 2
    return np.array([mj * math.sqrt(math.fsum(row)) for mj, row in zip(m, sq)])


def _canonical_mean_std(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # sorting each column first makes the sums, and therefore the results,
    # independent of run order down to the last bit
    M = x.shape[0]
    mean = np.sort(x, axis=0).sum(axis=0) / M
    var = np.sort((x - mean) ** 2, axis=0).sum(axis=0) / M
    return mean, np.sqrt(var)


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    """M runs that differ only in their seed.

    ``norms[m, t]`` is the 2-norm of run m at ``steps[t]``; ``mean`` and
    ``std`` are taken across runs at each step (population std, so a
    singleton ensemble has zero spread).
    """

    steps: np.ndarray
    norms: np.ndarray
    terminal: np.ndarray
    seeds: tuple[int, ...]
    mean: np.ndarray
    std: np.ndarray

    @property
    def M(self) -> int:
        return self.norms.shape[0]

    @classmethod
    def from_runs(cls, steps, norms, terminal, seeds) -> "EnsembleResult":
        norms = np.asarray(norms, dtype=np.float64)
        if norms.ndim != 2 or norms.shape[0] < 1:
            raise DomainError("an ensemble needs at least one run")
        if norms.shape[1] != len(steps):
            raise DomainError("norm series length does not match the recorded steps")
        mean, std = _canonical_mean_std(norms)
        return cls(np.asarray(steps), norms, np.asarray(terminal), tuple(seeds), mean, std)

    def terminal_field(self, m: int) -> TemperatureField:
        return TemperatureField(self.terminal[m])


def ensemble_run(u0: TemperatureField, params: SolverParams, bc: BoundaryCondition,
                 part: PartitionSpec, model: DelayModel, k_end: int, M: int,
                 base_seed: int | None = None, record: int | None = None,
                 max_workers: int | None = None) -> EnsembleResult:
    """Run ``M`` asynchronous simulations with seeds base, base+1, ..., base+M-1.

    ``base_seed`` defaults to ``model.seed``. Runs go through a thread pool;
    the compiled loops release the GIL so they overlap on multi-core hosts.
    """
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    base = model.seed if base_seed is None else base_seed
    seeds = [base + j for j in range(M)]

    def one(seed: int) -> Trajectory:
        return async_run(u0, params, bc, part, dataclasses.replace(model, seed=seed),
                         k_end, record)

    workers = max_workers or min(M, available_cores())
    if workers == 1:
        trajs = [one(s) for s in seeds]
    else:
        with ThreadPoolExecutor(workers) as pool:
            trajs = list(pool.map(one, seeds))
    norms = np.stack([l2_norms(t.snapshots) for t in trajs])
    terminal = np.stack([t.snapshots[-1].astype(np.float64) for t in trajs])
    return EnsembleResult.from_runs(trajs[0].steps, norms, terminal, seeds)


def convergence_check(traj: Trajectory, reference: TemperatureField,
                      tol: float) -> int | None:
    """First recorded step whose max-abs distance to ``reference`` is within ``tol``."""
    if not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    ref = reference.values.astype(np.float64)
    with np.errstate(invalid="ignore", over="ignore"):
        err = np.max(np.abs(traj.snapshots.astype(np.float64) - ref), axis=1)
    hits = np.flatnonzero(err <= tol)
    return int(traj.steps[hits[0]]) if hits.size else None


class Spread(NamedTuple):
    """Across-run standard deviations of two terminal diagnostics."""

    mean_temperature: float
    norm2: float


def terminal_spread(res: EnsembleResult) -> Spread:
    """Spread of the terminal mean temperature and of the terminal 2-norm.

    Mean temperature is the sharper diagnostic under periodic ends, where
    asynchrony shifts the conserved total heat from run to run.
    """
    if res.M < 2:
        raise DomainError(f"terminal spread needs M >= 2 runs, got {res.M}")
    mean_temp = np.sort(res.terminal, axis=1).sum(axis=1) / res.terminal.shape[1]
    _, s_temp = _canonical_mean_std(mean_temp[:, None])
    _, s_norm = _canonical_mean_std(res.norms[:, -1:])
    return Spread(float(s_temp[0]), float(s_norm[0]))
