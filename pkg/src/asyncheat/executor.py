"""Threaded executors: a barriered one and a barrier-free one.

Each processing element (PE) runs in its own OS thread, executing a compiled
loop with the GIL released. PEs share nothing except their mailboxes: two
scalar slots per PE holding its current left and right edge values, read and
written atomically.

* Barriered: a two-phase barrier per step. Every PE finishes reading step-k
  edges before anyone publishes step k+1, and every PE publishes before
  anyone reads again. The result matches :func:`asyncheat.sync.sync_run`
  bit for bit.
* Barrier-free: each PE runs its steps flat out and uses whatever its
  neighbours last published.

With ``trace=True`` the barrier-free loop also tags every published value
with a generation counter and logs each read, so tests can check that no
read returned a value that was never written, and can measure how stale
the reads were.
"""

from __future__ import annotations

import logging
import os
import statistics
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import core
from ._atomics import atomic_load, atomic_store, sched_yield
from ._kernels import stencil
from .core import (BoundaryCondition, ContractError, Dirichlet, DomainError,
                   PartitionSpec, SolverParams, TemperatureField)
from .sync import bc_args

log = logging.getLogger(__name__)

BARRIERED = "barriered"
BARRIER_FREE = "barrier-free"
MODES = (BARRIERED, BARRIER_FREE)

# Without it, time-sliced threads on a shared core run thousands of steps
# against frozen neighbour values between context switches.
YIELD_OVERSUBSCRIBED = 32


class ExecError(RuntimeError):
    """A worker failed; the run was aborted."""


def available_cores() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


@dataclass(frozen=True)
class ExecConfig:
    workers: int
    k_end: int
    mode: str = BARRIER_FREE
    affinity: tuple[int, ...] | None = None
    #: barrier-free workers call sched_yield every this many steps; None picks
    #: YIELD_OVERSUBSCRIBED when workers outnumber cores and 0 (never) otherwise
    yield_every: int | None = None

    def __post_init__(self):
        if self.workers < 1:
            raise DomainError(f"workers must be >= 1, got {self.workers}")
        if self.k_end < 1:
            raise DomainError(f"k_end must be >= 1, got {self.k_end}")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def oversubscribed(self) -> bool:
        return self.workers > available_cores()

    def yield_interval(self) -> int:
        if self.yield_every is not None:
            return self.yield_every
        return YIELD_OVERSUBSCRIBED if self.oversubscribed else 0


@njit(nogil=True)
def _wait_all(arrive, target, abort):
    for j in range(arrive.shape[0]):
        while atomic_load(arrive, j) < target:
            if atomic_load(abort, 0) != 0:
                return False
            sched_yield()
    return True


@njit(nogil=True)
def _read_slot(mail, slot, gen, src, k, trace, log_k, log_g1, log_g2, log_v, log_src, nlog):
    if not trace:
        return atomic_load(mail, slot)
    g1 = atomic_load(gen, src)
    v = atomic_load(mail, slot)
    g2 = atomic_load(gen, src)
    log_k[nlog] = k
    log_g1[nlog] = g1
    log_g2[nlog] = g2
    log_v[nlog] = v
    log_src[nlog] = slot
    return v


@njit(nogil=True)
def _worker(p, P, n, u0, r, periodic, c1, c2, k_end, barriered, yield_every,
            mail, gen, arrive, abort, counters, out,
            trace, hist, log_k, log_g1, log_g2, log_v, log_src):
    N = P * n
    base = p * n
    a = np.empty(n + 2, dtype=u0.dtype)
    b = np.empty(n + 2, dtype=u0.dtype)
    for j in range(n):
        a[j + 1] = u0[base + j]
    a[0] = a[n + 1] = b[0] = b[n + 1] = 0.0
    # pinned Dirichlet ends never change: write them into both buffers once
    # and keep them out of the update loop
    lo, hi = 1, n
    if not periodic and p == 0:
        a[1] = b[1] = c1
        lo = 2
    if not periodic and p == P - 1:
        a[n] = b[n] = c2
        hi = n - 1
    # neighbour slots; -1 means the ghost is never needed or is local
    lslot = -1
    rslot = -1
    if p > 0:
        lslot = 2 * (p - 1) + 1
    elif periodic and P > 1:
        lslot = 2 * (P - 1) + 1
    if p < P - 1:
        rslot = 2 * (p + 1)
    elif periodic and P > 1:
        rslot = 0
    if trace:
        hist[0, 0] = a[1]
        hist[0, 1] = a[n]
    nlog = 0
    for k in range(k_end):
        if lslot >= 0:
            a[0] = _read_slot(mail, lslot, gen, lslot // 2, k, trace,
                              log_k, log_g1, log_g2, log_v, log_src, nlog)
            nlog += trace
        elif periodic:
            a[0] = a[n]
        if rslot >= 0:
            a[n + 1] = _read_slot(mail, rslot, gen, rslot // 2, k, trace,
                                  log_k, log_g1, log_g2, log_v, log_src, nlog)
            nlog += trace
        elif periodic:
            a[n + 1] = a[1]
        for j in range(lo, hi + 1):
            b[j] = stencil(a[j - 1], a[j], a[j + 1], r)
        if barriered:
            atomic_store(arrive, p, 2 * k + 1)
            if not _wait_all(arrive, 2 * k + 1, abort):
                return
        a, b = b, a
        if trace:
            hist[k + 1, 0] = a[1]
            hist[k + 1, 1] = a[n]
        atomic_store(mail, 2 * p, a[1])
        atomic_store(mail, 2 * p + 1, a[n])
        if trace:
            atomic_store(gen, p, k + 1)
        if barriered:
            atomic_store(arrive, p, 2 * k + 2)
            if not _wait_all(arrive, 2 * k + 2, abort):
                return
        else:
            if (k & 1023) == 0 and atomic_load(abort, 0) != 0:
                return
            if yield_every > 0 and (k + 1) % yield_every == 0:
                sched_yield()
        counters[p] = k + 1
    for j in range(n):
        out[base + j] = a[j + 1]


@dataclass
class ReadTrace:
    """Per-read log of one barrier-free traced run, plus every writer's edge history.

    ``offset`` is the reader's step minus the writer generation it saw
    (positive: the value was stale; negative: the writer was ahead).
    ``lag`` is how many generations the writer advanced while the read was
    in flight.
    """

    reader: np.ndarray
    step: np.ndarray
    slot: np.ndarray
    gen_before: np.ndarray
    gen_after: np.ndarray
    value: np.ndarray
    history: np.ndarray  # (P, k_end + 1, 2)

    @property
    def lag(self) -> np.ndarray:
        return self.gen_after - self.gen_before

    @property
    def offset(self) -> np.ndarray:
        return self.step - self.gen_before

    def torn_reads(self) -> int:
        """Reads whose value matches no edge value the writer published in
        generations [gen_before, gen_after + 1]."""
        bad = 0
        k_end = self.history.shape[1] - 1
        for s, g1, g2, v in zip(self.slot, self.gen_before, self.gen_after, self.value):
            src, side = divmod(int(s), 2)
            window = self.history[src, g1:min(g2 + 1, k_end) + 1, side]
            if not np.any(window == v):
                bad += 1
        return bad


@dataclass
class ExecResult:
    field: TemperatureField
    counters: np.ndarray
    duration_ns: int
    trace: ReadTrace | None = None


_warm = False


def _warm_up():
    global _warm
    if _warm:
        return
    u = np.zeros(3)
    for barriered in (False, True):
        for trace in (False, True):
            _worker(0, 1, 3, u, 0.5, False, 0.0, 0.0, 1, barriered, 0,
                    np.zeros(2), np.zeros(1, np.int64), np.zeros(1, np.int64),
                    np.zeros(1, np.int64), np.zeros(1, np.int64), np.zeros(3),
                    trace, np.zeros((2, 2)), np.zeros(2, np.int64),
                    np.zeros(2, np.int64), np.zeros(2, np.int64), np.zeros(2),
                    np.zeros(2, np.int64))
    _warm = True


def exec_run(u0: TemperatureField, params: SolverParams, bc: BoundaryCondition,
             part: PartitionSpec, cfg: ExecConfig, trace: bool = False) -> ExecResult:
    """Run ``cfg.workers`` threads, one per PE, for ``cfg.k_end`` steps each."""
    if part.P != cfg.workers:
        raise ContractError(f"partition has P={part.P} PEs but {cfg.workers} workers")
    if part.N != u0.N:
        raise ContractError(f"partition covers N={part.N} points, field has {u0.N}")
    if trace and cfg.mode != BARRIER_FREE:
        raise DomainError("tracing is only available in barrier-free mode")
    if cfg.oversubscribed:
        log.warning("%d workers on %d cores: oversubscribed", cfg.workers, available_cores())
    _warm_up()

    P, n, k_end = part.P, part.n, cfg.k_end
    u0 = core.impose(u0, bc)
    u = u0.values.astype(np.float64)
    periodic, c1, c2 = bc_args(bc, np.float64)
    r = params.r
    barriered = cfg.mode == BARRIERED
    yield_every = cfg.yield_interval()

    mail = np.empty(2 * P)
    mail[0::2] = u[0::n]
    mail[1::2] = u[n - 1::n]
    gen = np.zeros(P, dtype=np.int64)
    arrive = np.zeros(P, dtype=np.int64)
    abort = np.zeros(1, dtype=np.int64)
    counters = np.zeros(P, dtype=np.int64)
    out = np.empty_like(u)

    nlog = 2 * k_end if trace else 1
    hist = np.zeros((P, k_end + 1 if trace else 1, 2))
    logs = [(np.zeros(nlog, np.int64), np.zeros(nlog, np.int64), np.zeros(nlog, np.int64),
             np.zeros(nlog), np.full(nlog, -1, np.int64)) for _ in range(P)]

    errors: list[BaseException] = []

    def body(p):
        try:
            if cfg.affinity:
                os.sched_setaffinity(0, {cfg.affinity[p % len(cfg.affinity)]})
            _worker(p, P, n, u, r, periodic, c1, c2, k_end, barriered, yield_every,
                    mail, gen, arrive, abort, counters, out,
                    trace, hist[p], *logs[p])
        except BaseException as exc:  # noqa: BLE001 - reported after join
            abort[0] = 1
            errors.append(exc)

    threads = [threading.Thread(target=body, args=(p,), name=f"pe-{p}") for p in range(P)]
    t0 = time.perf_counter_ns()
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    duration = time.perf_counter_ns() - t0

    if errors:
        raise ExecError(f"{len(errors)} worker(s) failed: {errors[0]!r}") from errors[0]
    if np.any(counters != k_end):
        raise ExecError(f"workers stopped early: step counters {counters.tolist()}")
    if core.CHECK_FINITE:
        core.ensure_finite(out, "executor result")

    rt = None
    if trace:
        keep = [lg[4] >= 0 for lg in logs]
        rt = ReadTrace(
            reader=np.concatenate([np.full(k.sum(), p) for p, k in enumerate(keep)]),
            step=np.concatenate([lg[0][k] for lg, k in zip(logs, keep)]),
            gen_before=np.concatenate([lg[1][k] for lg, k in zip(logs, keep)]),
            gen_after=np.concatenate([lg[2][k] for lg, k in zip(logs, keep)]),
            value=np.concatenate([lg[3][k] for lg, k in zip(logs, keep)]),
            slot=np.concatenate([lg[4][k] for lg, k in zip(logs, keep)]),
            history=hist,
        )
    return ExecResult(TemperatureField(out), counters, duration, rt)


@dataclass
class BenchRow:
    N: int
    mode: str
    reps: int
    median_ns: int
    min_ns: int


@dataclass
class BenchTable:
    rows: list[BenchRow]
    workers: int
    k_end: int
    oversubscribed: bool = False
    notes: list[str] = field(default_factory=list)

    def median(self, N: int, mode: str) -> int:
        for row in self.rows:
            if row.N == N and row.mode == mode:
                return row.median_ns
        raise KeyError((N, mode))

    def speedups(self) -> dict[int, float]:
        """Barriered median time over barrier-free median time, per N."""
        out = {}
        for N in sorted({row.N for row in self.rows}):
            try:
                out[N] = self.median(N, BARRIERED) / self.median(N, BARRIER_FREE)
            except KeyError:
                pass
        return out

    def format(self) -> str:
        lines = [f"{'N':>8} {'mode':>13} {'reps':>5} {'median_ms':>11} {'min_ms':>11}"]
        for row in self.rows:
            lines.append(f"{row.N:>8} {row.mode:>13} {row.reps:>5} "
                         f"{row.median_ns / 1e6:>11.3f} {row.min_ns / 1e6:>11.3f}")
        for N, s in self.speedups().items():
            lines.append(f"speedup N={N}: {s:.3f}x (barriered / barrier-free)")
        lines.append(f"workers={self.workers} k_end={self.k_end}"
                     + (" [OVERSUBSCRIBED]" if self.oversubscribed else ""))
        lines.extend(self.notes)
        return "\n".join(lines)


def measure(sizes, modes=MODES, reps: int = 5, k_end: int = 10_000,
            workers: int | None = None, params: SolverParams | None = None,
            bc: BoundaryCondition | None = None) -> BenchTable:
    """Median and minimum wall time of :func:`exec_run` for each (N, mode).

    Runs the cosine initial condition with P = ``workers`` PEs of N / P
    points each. ``workers`` defaults to the number of usable cores.
    """
    if reps < 3:
        raise DomainError(f"reps must be >= 3, got {reps}")
    P = workers or available_cores()
    params = params or SolverParams(0.5, 0.01, 0.1)
    bc = bc or Dirichlet(1.0, 0.0)
    rows = []
    for N in sizes:
        if N % P:
            raise DomainError(f"{P} workers do not divide N = {N}")
        part = PartitionSpec(N, N // P)
        u0 = core.cosine_init(N)
        cfgs = [ExecConfig(P, k_end, mode) for mode in modes]
        times: dict[str, list[int]] = {cfg.mode: [] for cfg in cfgs}
        # modes interleaved per repetition so slow drift hits both equally
        for _ in range(reps):
            for cfg in cfgs:
                times[cfg.mode].append(exec_run(u0, params, bc, part, cfg).duration_ns)
        for mode in modes:
            t = times[mode]
            rows.append(BenchRow(N, mode, reps, int(statistics.median(t)), min(t)))
    table = BenchTable(rows, P, k_end, P > available_cores())
    if table.oversubscribed:
        table.notes.append(f"note: {P} workers exceed {available_cores()} usable cores")
    return table
