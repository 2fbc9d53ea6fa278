"""Synchronous explicit stepper and the trajectory-recording runner."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import core
from ._kernels import recorded_steps, sync_advance, sync_loop
from .core import (BoundaryCondition, Dirichlet, DomainError, Periodic,
                   SolverParams, TemperatureField)

PRECISIONS = {"double": np.float64, "single": np.float32}


def default_stride(N: int) -> int:
    return 1 if N <= 1000 else 100


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded snapshots of a run.

    ``snapshots[j]`` is the field after ``steps[j]`` steps. Step 0 and the
    final step are always present.
    """

    steps: np.ndarray
    snapshots: np.ndarray
    params: SolverParams
    bc: BoundaryCondition

    def __len__(self):
        return len(self.steps)

    @property
    def k_end(self) -> int:
        return int(self.steps[-1])

    def field(self, j: int) -> TemperatureField:
        return TemperatureField(self.snapshots[j])

    @property
    def initial(self) -> TemperatureField:
        return self.field(0)

    @property
    def final(self) -> TemperatureField:
        return self.field(-1)

    def fields(self):
        for j in range(len(self.steps)):
            yield self.field(j)


def bc_args(bc: BoundaryCondition, dtype):
    """(periodic flag, c1, c2) in the form the kernels take."""
    if isinstance(bc, Dirichlet):
        return False, dtype(bc.c1), dtype(bc.c2)
    if isinstance(bc, Periodic):
        return True, dtype(0), dtype(0)
    raise TypeError(f"unknown boundary condition {bc!r}")


def _dtype(precision: str):
    try:
        return PRECISIONS[precision]
    except KeyError:
        raise DomainError(f"precision must be one of {sorted(PRECISIONS)}") from None


def sync_step(u: TemperatureField, params: SolverParams,
              bc: BoundaryCondition) -> TemperatureField:
    """One explicit step. Every new value is computed from step-k values only."""
    core.check_ends(u, bc)
    cur = u.values
    dtype = cur.dtype.type
    out = np.empty_like(cur)
    periodic, c1, c2 = bc_args(bc, dtype)
    sync_advance(cur, out, dtype(params.r), periodic, c1, c2)
    if core.CHECK_FINITE:
        core.ensure_finite(out, "sync step")
    return TemperatureField(out)


def _stride(N: int, record: int | None) -> int:
    stride = default_stride(N) if record is None else int(record)
    if stride < 1:
        raise DomainError(f"record stride must be >= 1, got {stride}")
    return stride


def sync_run(u0: TemperatureField, params: SolverParams, bc: BoundaryCondition,
             k_end: int, record: int | None = None,
             precision: str = "double") -> Trajectory:
    """Apply :func:`sync_step` ``k_end`` times, recording every ``record``-th step.

    Dirichlet end values are written into ``u0`` before the first step.
    """
    if k_end < 0:
        raise DomainError(f"k_end must be >= 0, got {k_end}")
    dtype = _dtype(precision)
    u0 = core.impose(u0, bc)
    stride = _stride(u0.N, record)
    steps = recorded_steps(k_end, stride)
    snaps = np.empty((len(steps), u0.N), dtype=dtype)
    periodic, c1, c2 = bc_args(bc, dtype)
    sync_loop(u0.values.astype(dtype), dtype(params.r), periodic, c1, c2,
              k_end, stride, snaps)
    if core.CHECK_FINITE:
        core.ensure_finite(snaps, "sync run")
    return Trajectory(steps, snaps, params, bc)
