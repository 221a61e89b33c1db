"""Counter-based splitmix64 streams, one per path.

Path ``i`` starts from ``mix(seed) + i * STREAM_STRIDE``; consecutive
paths are therefore 2**32 draws apart on the same Weyl sequence, so no two
paths share output unless one of them draws more than 2**32 numbers.
The numba and pure-Python versions produce identical bits.
"""
import math

import numpy as np
from numba import njit

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
M1 = 0xBF58476D1CE4E5B9
M2 = 0x94D049BB133111EB
STREAM_STRIDE = (GOLDEN << 32) & MASK
TWO_M53 = 2.0**-53

_G = np.uint64(GOLDEN)
_M1 = np.uint64(M1)
_M2 = np.uint64(M2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


def mix_py(z):
    z &= MASK
    z = ((z ^ (z >> 30)) * M1) & MASK
    z = ((z ^ (z >> 27)) * M2) & MASK
    return z ^ (z >> 31)


def stream_start(seed: int, path: int) -> int:
    return (mix_py(seed & MASK) + path * STREAM_STRIDE) & MASK


class PyStream:
    """Pure-Python twin of the kernel generator (for audit-level path tracing)."""

    def __init__(self, seed: int, path: int = 0):
        self.state = stream_start(seed, path)

    def uniform(self) -> float:
        self.state = (self.state + GOLDEN) & MASK
        return (mix_py(self.state) >> 11) * TWO_M53

    def exponential(self, rate: float) -> float:
        if rate <= 0:
            return math.inf
        return -math.log(1.0 - self.uniform()) / rate

    def normal(self) -> float:
        u1, u2 = self.uniform(), self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def hyperexp(self, cum_w, rates) -> float:
        u = self.uniform()
        k = 0
        while k < len(cum_w) - 1 and u >= cum_w[k]:
            k += 1
        return self.exponential(rates[k])


@njit(cache=True)
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def next_uniform(state):
    """Advance ``state`` (a length-1 uint64 array) and return a double in [0, 1)."""
    state[0] += _G
    return float(_mix(state[0]) >> _S11) * TWO_M53


@njit(cache=True)
def next_exponential(state, rate):
    if rate <= 0.0:
        return np.inf
    return -math.log(1.0 - next_uniform(state)) / rate


@njit(cache=True)
def next_normal(state):
    u1 = next_uniform(state)
    u2 = next_uniform(state)
    return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True)
def next_hyperexp(state, cum_w, rates):
    u = next_uniform(state)
    k = 0
    while k < cum_w.shape[0] - 1 and u >= cum_w[k]:
        k += 1
    return next_exponential(state, rates[k])
