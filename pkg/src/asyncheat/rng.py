"""SplitMix64 generator and the delay laws built on it.

SplitMix64 (Steele, Lea & Flood 2014) keeps a 64-bit counter ``s`` and, per
draw, does::

    s = s + 0x9E3779B97F4A7C15          (mod 2**64)
    z = s
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)

The seed is the initial counter value. Integer-only, so every platform
produces the same stream.

Delay laws over {0, ..., q-1}, each sample clamped to ``min(d, k)``:

* uniform:   ``d = ((x >> 32) * q) >> 32``, one draw per sample
* fixed:     ``d`` constant, still consumes one draw so streams stay aligned
* geometric: Bernoulli trials with ``u = (x >> 11) * 2**-53``; ``d`` counts
  failures (``u >= p``) until the first success or until ``d = q-1``
"""

import numpy as np
from numba import njit

UNIFORM = 0
FIXED = 1
GEOMETRIC = 2

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(nogil=True, cache=True)
def next_u64(state):
    s = state[0] + _GAMMA
    state[0] = s
    z = (s ^ (s >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(nogil=True, cache=True)
def next_unit(state):
    return np.float64(next_u64(state) >> _S11) * _INV53


@njit(nogil=True, cache=True)
def sample_delay(state, law, q, fixed_d, p, k):
    if law == GEOMETRIC:
        d = 0
        while d < q - 1 and next_unit(state) >= p:
            d += 1
    else:
        x = next_u64(state)
        if law == FIXED:
            d = fixed_d
        else:
            d = np.int64(((x >> _S32) * np.uint64(q)) >> _S32)
    return min(d, k)


class SplitMix64:
    """Seeded generator state, shared with the compiled kernels in place."""

    def __init__(self, seed: int):
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = seed
        self.state = np.array([seed], dtype=np.uint64)

    def next_u64(self) -> int:
        return int(next_u64(self.state))

    def next_unit(self) -> float:
        return float(next_unit(self.state))
