"""Compiled inner loops.

Every solver path funnels through :func:`stencil` so that the synchronous,
simulated-asynchronous and threaded executors perform the exact same
floating-point operations in the same order. Bit-for-bit agreement between
them depends on it.
"""

import numpy as np
from numba import njit

from .rng import sample_delay


@njit(nogil=True, cache=True, inline="always")
def stencil(left, c, right, r):
    # (c + c) instead of 2*c keeps float32 arithmetic in float32
    return r * ((right - (c + c)) + left) + c


@njit(nogil=True, cache=True)
def sync_advance(cur, out, r, periodic, c1, c2):
    N = cur.shape[0]
    for i in range(1, N - 1):
        out[i] = stencil(cur[i - 1], cur[i], cur[i + 1], r)
    if periodic:
        out[0] = stencil(cur[N - 1], cur[0], cur[1], r)
        out[N - 1] = stencil(cur[N - 2], cur[N - 1], cur[0], r)
    else:
        out[0] = c1
        out[N - 1] = c2


@njit(nogil=True, cache=True)
def sync_loop(u0, r, periodic, c1, c2, k_end, stride, snaps):
    a = u0.copy()
    b = np.empty_like(a)
    snaps[0] = a
    j = 1
    for k in range(1, k_end + 1):
        sync_advance(a, b, r, periodic, c1, c2)
        a, b = b, a
        if k % stride == 0 or k == k_end:
            snaps[j] = a
            j += 1
    return a


@njit(nogil=True, cache=True)
def async_advance(ring, k, out, r, periodic, c1, c2, n, q, law, fixed_d, p, state):
    """Compute step k+1 into ``out`` from the history ``ring``.

    ``ring`` has q+1 slots; step s lives in slot s % (q+1). Neighbour reads
    that cross a PE boundary draw a fresh delay, left neighbour first.
    """
    S = ring.shape[0]
    N = out.shape[0]
    cur = ring[k % S]
    for i in range(N):
        if not periodic and (i == 0 or i == N - 1):
            out[i] = c1 if i == 0 else c2
            continue
        jl = i - 1 if i > 0 else N - 1
        jr = i + 1 if i < N - 1 else 0
        pe = i // n
        if jl // n != pe:
            d = sample_delay(state, law, q, fixed_d, p, k)
            left = ring[(k - d) % S, jl]
        else:
            left = cur[jl]
        if jr // n != pe:
            d = sample_delay(state, law, q, fixed_d, p, k)
            right = ring[(k - d) % S, jr]
        else:
            right = cur[jr]
        out[i] = stencil(left, cur[i], right, r)


@njit(nogil=True, cache=True)
def async_loop(u0, r, periodic, c1, c2, n, q, law, fixed_d, p, state,
               k_end, stride, snaps):
    S = q + 1
    ring = np.empty((S, u0.shape[0]), dtype=u0.dtype)
    ring[0] = u0
    snaps[0] = u0
    j = 1
    for k in range(k_end):
        out = ring[(k + 1) % S]
        async_advance(ring, k, out, r, periodic, c1, c2, n, q, law, fixed_d, p, state)
        if (k + 1) % stride == 0 or k + 1 == k_end:
            snaps[j] = out
            j += 1
    return ring[k_end % S].copy()


def recorded_steps(k_end: int, stride: int) -> np.ndarray:
    """Step indices a run with this stride records: 0, s, 2s, ..., and always k_end."""
    steps = np.arange(0, k_end + 1, stride, dtype=np.int64)
    if steps[-1] != k_end:
        steps = np.append(steps, k_end)
    return steps
