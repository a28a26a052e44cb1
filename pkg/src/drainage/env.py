"""Random environment: one reproducible uniform per lattice vertex.

The value at ``w`` is a keyed hash of ``(seed, w)``, so the whole infinite
lattice is available without storage and every downstream quantity is a
pure function of ``(seed, params)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Protocol, Sequence

import numpy as np

from ._hash import MASK64, key_py, replicate_seed_py, uniform_py

Point = tuple[int, ...]

# XOR-ed into the seed to obtain the second environment of an independent pair
INDEPENDENT_SALT = 0x5851F42D4C957F2D


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    d: int = 2
    p: float = 0.5
    seed: int = 0
    max_search_height: int = 64

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d!r}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p!r}")
        if not isinstance(self.max_search_height, int) or self.max_search_height < 1:
            raise ValueError(
                f"max_search_height must be an integer >= 1, got {self.max_search_height!r}"
            )
        if not isinstance(self.seed, int):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")

    @property
    def key(self) -> int:
        return key_py(self.seed)

    @property
    def key64(self) -> np.uint64:
        """The hash key typed for the compiled kernels."""
        return np.uint64(key_py(self.seed))

    @property
    def seed64(self) -> np.uint64:
        return np.uint64(self.seed & MASK64)

    def replicate(self, index: int) -> "ModelParams":
        """Params of replicate ``index``: same model, seed ``seed XOR hash(index)``."""
        return replace(self, seed=replicate_seed_py(self.seed, index))

    def independent(self) -> "ModelParams":
        """A second, independent environment (used by independent pairs)."""
        return replace(self, seed=self.seed ^ INDEPENDENT_SALT)


class Environment(Protocol):
    d: int

    def uniform(self, w: Sequence[int]) -> float: ...


class HashEnvironment:
    """The hash-backed environment of a ModelParams."""

    def __init__(self, params: ModelParams):
        self.d = params.d
        self.seed = params.seed
        self._key = params.key

    def uniform(self, w: Sequence[int]) -> float:
        if len(w) != self.d:
            raise DimensionError(f"point {tuple(w)} has length {len(w)}, expected {self.d}")
        return uniform_py(self._key, w)


class TableEnvironment:
    """Fixture environment: explicit values, ``default`` everywhere else.

    Handy for forcing configurations in tests (ties, closed levels, ...).
    """

    def __init__(self, d: int, values: Mapping[Point, float], default: float = 0.999):
        self.d = d
        self.values = {tuple(k): float(v) for k, v in values.items()}
        self.default = default
        for k in self.values:
            if len(k) != d:
                raise DimensionError(f"fixture point {k} has length {len(k)}, expected {d}")

    def uniform(self, w: Sequence[int]) -> float:
        if len(w) != self.d:
            raise DimensionError(f"point {tuple(w)} has length {len(w)}, expected {self.d}")
        return self.values.get(tuple(w), self.default)


def environment(params: ModelParams, env: Environment | None = None) -> Environment:
    return HashEnvironment(params) if env is None else env


def uniform_at(params: ModelParams, w: Sequence[int], env: Environment | None = None) -> float:
    if len(w) != params.d:
        raise DimensionError(f"point {tuple(w)} has length {len(w)}, expected {params.d}")
    return environment(params, env).uniform(w)


def is_open(params: ModelParams, w: Sequence[int], env: Environment | None = None) -> bool:
    return uniform_at(params, w, env) < params.p


def priority_less(
    params: ModelParams,
    a: Sequence[int],
    b: Sequence[int],
    env: Environment | None = None,
) -> bool:
    """Strict total order: smaller U first, ties broken lexicographically."""
    a = tuple(a)
    b = tuple(b)
    if a == b:
        raise ValueError(f"priority_less needs distinct points, got {a} twice")
    ua = uniform_at(params, a, env)
    ub = uniform_at(params, b, env)
    if ua != ub:
        return ua < ub
    return a < b


def uniform_block(params: ModelParams, x0: int, t0: int, width: int, height: int) -> np.ndarray:
    """U over the d=2 box [x0, x0+width) x [t0, t0+height), indexed [level, x]."""
    if params.d != 2:
        raise DimensionError("uniform_block is a d=2 helper")
    from . import _kernels as K

    return K.uniform_block2(params.key64, int(x0), int(t0), int(width), int(height))
