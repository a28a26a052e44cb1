"""Counter-mode keyed hash behind the random environment.

Two bit-identical implementations live here: plain Python integers (used by
the reference code paths and fixtures) and numba-compiled versions (used by
the batch kernels).  ``tests/test_env.py`` pins them against each other.
"""

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
SEED_SALT = 0xD1B54A32D192ED03
STREAM_SALT = 0x8CB92BA72F3D8DD7

INV_2_53 = 1.0 / 9007199254740992.0
TINY = 5e-324  # smallest positive double; stands in for an all-zero mantissa


def mix64_py(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def key_py(seed: int) -> int:
    return mix64_py((seed & MASK64) ^ SEED_SALT)


def hash_coords_py(key: int, coords) -> int:
    h = key
    for c in coords:
        h = mix64_py(h ^ (((c & MASK64) * GOLDEN) & MASK64))
    return h


def to_unit_py(h: int) -> float:
    m = h >> 11
    return m * INV_2_53 if m else TINY


def uniform_py(key: int, coords) -> float:
    return to_unit_py(hash_coords_py(key, coords))


def replicate_seed_py(seed: int, index: int) -> int:
    """Seed of replicate ``index``: ``seed XOR hash(index)``."""
    return (seed & MASK64) ^ mix64_py((index & MASK64) ^ STREAM_SALT)


# -- numba twins ---------------------------------------------------------------

_G = np.uint64(GOLDEN)
_M1 = np.uint64(MIX1)
_M2 = np.uint64(MIX2)
_SEED_SALT = np.uint64(SEED_SALT)
_STREAM_SALT = np.uint64(STREAM_SALT)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def key_of(seed):
    return mix64(np.uint64(seed) ^ _SEED_SALT)


@njit(cache=True)
def replicate_seed(seed, index):
    return np.uint64(seed) ^ mix64(np.uint64(index) ^ _STREAM_SALT)


@njit(cache=True, inline="always")
def to_unit(h):
    m = h >> _S11
    if m == np.uint64(0):
        return TINY
    return np.float64(m) * INV_2_53


@njit(cache=True, inline="always")
def u2(key, x, t):
    h = mix64(np.uint64(key) ^ (np.uint64(x) * _G))
    h = mix64(h ^ (np.uint64(t) * _G))
    return to_unit(h)


@njit(cache=True)
def u_nd(key, coords):
    h = np.uint64(key)
    for i in range(coords.shape[0]):
        h = mix64(h ^ (np.uint64(coords[i]) * _G))
    return to_unit(h)
