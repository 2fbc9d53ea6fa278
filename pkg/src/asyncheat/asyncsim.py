"""Seeded simulation of the asynchronous scheme.

A neighbour read that crosses a processing-element boundary sees the value
from ``k - d`` steps ago, with ``d`` drawn fresh for every read from a
:class:`DelayModel`. Reads inside a PE and the self term always use step k.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import core, rng
from ._kernels import async_advance, async_loop, recorded_steps
from .core import (BoundaryCondition, ContractError, DomainError, PartitionSpec,
                   SolverParams, TemperatureField)
from .sync import Trajectory, _dtype, _stride, bc_args


@dataclass(frozen=True)
class Uniform:
    code = rng.UNIFORM


@dataclass(frozen=True)
class Fixed:
    d: int
    code = rng.FIXED


@dataclass(frozen=True)
class Geometric:
    """Truncated geometric law: P(d) proportional to (1-p)**d on {0, ..., q-1}."""

    p: float
    code = rng.GEOMETRIC

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise DomainError(f"geometric p must lie in (0, 1], got {self.p}")


DelayLaw = Union[Uniform, Fixed, Geometric]


@dataclass(frozen=True)
class DelayModel:
    """Buffer length ``q``, delay law and seed."""

    q: int
    distribution: DelayLaw = field(default_factory=Uniform)
    seed: int = 0

    def __post_init__(self):
        if self.q < 1:
            raise DomainError(f"q must be >= 1, got {self.q}")
        if isinstance(self.distribution, Fixed) and not 0 <= self.distribution.d < self.q:
            raise DomainError(f"fixed delay {self.distribution.d} must lie in [0, q={self.q})")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    def kernel_args(self):
        dist = self.distribution
        fixed_d = dist.d if isinstance(dist, Fixed) else 0
        p = dist.p if isinstance(dist, Geometric) else 1.0
        return self.q, dist.code, fixed_d, p

    def rng(self) -> rng.SplitMix64:
        return rng.SplitMix64(self.seed)


def sample_delay(state: rng.SplitMix64, model: DelayModel, k: int) -> int:
    """Draw one delay in {0, ..., min(q-1, k)} and advance ``state``."""
    q, law, fixed_d, p = model.kernel_args()
    return int(rng.sample_delay(state.state, law, q, fixed_d, p, k))


class HistoryRing:
    """The last ``q`` snapshots, addressable by delay."""

    def __init__(self, u0: TemperatureField, q: int):
        if q < 1:
            raise DomainError(f"q must be >= 1, got {q}")
        self.q = q
        self.k = 0
        # one spare slot lets a step be written without clobbering live history
        self.buf = np.empty((q + 1, u0.N), dtype=u0.values.dtype)
        self.buf[0] = u0.values

    @property
    def N(self) -> int:
        return self.buf.shape[1]

    def read(self, i: int, d: int) -> float:
        """u_i(k - d)."""
        if not 0 <= d < self.q or d > self.k:
            raise ContractError(f"delay {d} not available (q={self.q}, k={self.k})")
        return self.buf[(self.k - d) % (self.q + 1), i]

    def snapshot(self, d: int = 0) -> TemperatureField:
        if not 0 <= d < self.q or d > self.k:
            raise ContractError(f"delay {d} not available (q={self.q}, k={self.k})")
        return TemperatureField(self.buf[(self.k - d) % (self.q + 1)])

    def push(self, u: TemperatureField) -> None:
        if u.N != self.N:
            raise ContractError(f"field of length {u.N} pushed into ring of width {self.N}")
        self.k += 1
        self.buf[self.k % (self.q + 1)] = u.values


def _check_part(part: PartitionSpec, N: int) -> None:
    if part.N != N:
        raise ContractError(f"partition covers N={part.N} points, field has {N}")


def async_step(hist: HistoryRing, params: SolverParams, bc: BoundaryCondition,
               part: PartitionSpec, model: DelayModel,
               state: rng.SplitMix64) -> TemperatureField:
    """Step k+1 from the ring's history. The ring itself is left untouched."""
    if hist.q != model.q:
        raise ContractError(f"ring depth {hist.q} != model q {model.q}")
    _check_part(part, hist.N)
    core.check_ends(hist.snapshot(0), bc)
    dtype = hist.buf.dtype.type
    periodic, c1, c2 = bc_args(bc, dtype)
    q, law, fixed_d, p = model.kernel_args()
    out = np.empty(hist.N, dtype=hist.buf.dtype)
    async_advance(hist.buf, hist.k, out, dtype(params.r), periodic, c1, c2,
                  part.n, q, law, fixed_d, p, state.state)
    if core.CHECK_FINITE:
        core.ensure_finite(out, "async step")
    return TemperatureField(out)


def async_run(u0: TemperatureField, params: SolverParams, bc: BoundaryCondition,
              part: PartitionSpec, model: DelayModel, k_end: int,
              record: int | None = None, precision: str = "double") -> Trajectory:
    """Iterate :func:`async_step` from a fresh generator seeded with ``model.seed``."""
    if k_end < 0:
        raise DomainError(f"k_end must be >= 0, got {k_end}")
    _check_part(part, u0.N)
    dtype = _dtype(precision)
    u0 = core.impose(u0, bc)
    stride = _stride(u0.N, record)
    steps = recorded_steps(k_end, stride)
    snaps = np.empty((len(steps), u0.N), dtype=dtype)
    periodic, c1, c2 = bc_args(bc, dtype)
    q, law, fixed_d, p = model.kernel_args()
    async_loop(u0.values.astype(dtype), dtype(params.r), periodic, c1, c2,
               part.n, q, law, fixed_d, p, model.rng().state, k_end, stride, snaps)
    if core.CHECK_FINITE:
        core.ensure_finite(snaps, "async run")
    return Trajectory(steps, snaps, params, bc)
