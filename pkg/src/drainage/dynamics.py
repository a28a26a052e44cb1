"""Successor rule and single-path tracing.

``successor`` takes the first level above ``u`` whose slab holds an open
vertex and returns the open vertex of least priority there.  With the hash
environment the scan runs in compiled code; with an explicit environment
object (fixtures) it runs the literal Python scan.  Both are checked against
a brute-force cone enumeration in the tests.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .env import DimensionError, Environment, ModelParams, Point
from .geometry import LevelSlab, slab_points


class SearchExceeded(RuntimeError):
    """No open vertex within ``max_search_height`` levels."""


@dataclass(frozen=True)
class SuccessorResult:
    next: Point
    level_jump: int


def _check_point(params: ModelParams, u: Sequence[int]) -> Point:
    u = tuple(int(c) for c in u)
    if len(u) != params.d:
        raise DimensionError(f"point {u} has length {len(u)}, expected {params.d}")
    return u


def _successor_scan(params: ModelParams, u: Point, env: Environment) -> SuccessorResult:
    for l in range(1, params.max_search_height + 1):
        best = None
        best_u = 0.0
        for w in slab_points(LevelSlab(u, l)):
            uw = env.uniform(w)
            if uw >= params.p:
                continue
            # slab order is lexicographic, so a strict comparison keeps the tiebreak
            if best is None or uw < best_u:
                best, best_u = w, uw
        if best is not None:
            return SuccessorResult(best, l)
    raise SearchExceeded(f"no open vertex within {params.max_search_height} levels above {u}")


def _successor_fast(params: ModelParams, u: Point) -> SuccessorResult:
    if params.d == 2:
        nx, l = K.succ2(params.key64, params.p, u[0], u[1], params.max_search_height)
        if l == 0:
            raise SearchExceeded(
                f"no open vertex within {params.max_search_height} levels above {u}"
            )
        return SuccessorResult((int(nx), u[1] + int(l)), int(l))
    arr = np.asarray(u, dtype=np.int64)
    out = np.empty(params.d, dtype=np.int64)
    scratch = np.empty(params.d - 1, dtype=np.int64)
    l = K.succ_nd(params.key64, params.p, arr, out, scratch, params.max_search_height)
    if l == 0:
        raise SearchExceeded(f"no open vertex within {params.max_search_height} levels above {u}")
    return SuccessorResult(tuple(int(c) for c in out), int(l))


def successor(
    params: ModelParams, u: Sequence[int], env: Environment | None = None
) -> SuccessorResult:
    u = _check_point(params, u)
    if env is None:
        return _successor_fast(params, u)
    return _successor_scan(params, u, env)


@dataclass
class PathRecord:
    start: Point
    vertices: list[Point] = field(default_factory=list)

    def __post_init__(self):
        if not self.vertices:
            self.vertices = [self.start]

    @property
    def levels(self) -> list[int]:
        return [v[-1] for v in self.vertices]

    @property
    def x_increments(self) -> list[int]:
        """First-coordinate increments X_k."""
        return [b[0] - a[0] for a, b in zip(self.vertices, self.vertices[1:])]

    @property
    def y_increments(self) -> list[int]:
        return [b[-1] - a[-1] for a, b in zip(self.vertices, self.vertices[1:])]

    def displacements(self) -> list[Point]:
        return [
            tuple(bi - ai for ai, bi in zip(a[:-1], b[:-1]))
            for a, b in zip(self.vertices, self.vertices[1:])
        ]


def trace(
    params: ModelParams, u: Sequence[int], horizon: int, env: Environment | None = None
) -> PathRecord:
    """Follow successors from ``u`` until the level reaches u's level + horizon."""
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    u = _check_point(params, u)
    rec = PathRecord(u)
    target = u[-1] + horizon
    if env is None and params.d == 2:
        xs, ts, status = K.trace2(params.key64, params.p, u[0], u[1], horizon, params.max_search_height)
        if status != K.OK:
            raise SearchExceeded(
                f"no open vertex within {params.max_search_height} levels on the path from {u}"
            )
        rec.vertices = [(int(x), int(t)) for x, t in zip(xs, ts)]
        return rec
    cur = u
    while cur[-1] < target:
        cur = successor(params, cur, env).next
        rec.vertices.append(cur)
    return rec


def path_at(record: PathRecord, t: float) -> float:
    """Piecewise-linear first coordinate of a d=2 path at level ``t``."""
    if len(record.start) != 2:
        raise DimensionError("path_at is defined for d=2 paths only")
    levels = record.levels
    if t < levels[0] or t > levels[-1]:
        raise ValueError(f"level {t} outside traced range [{levels[0]}, {levels[-1]}]")
    i = bisect_right(levels, t) - 1
    x0, t0 = record.vertices[i]
    if t == t0 or i == len(levels) - 1:
        return float(x0)
    x1, t1 = record.vertices[i + 1]
    return x0 + (t - t0) * (x1 - x0) / (t1 - t0)


def first_increments(params: ModelParams, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(X_1, Y_1) from the origin for ``n`` independent replicate environments (d=2)."""
    if params.d != 2:
        raise DimensionError("first_increments is implemented for d=2")
    xs, ys, status = K.batch_first_increments2(params.seed64, params.p, n, params.max_search_height)
    if status.any():
        raise SearchExceeded(f"{int(status.sum())} replicates ran past max_search_height")
    return xs, ys


def path_increments(params: ModelParams, n_steps: int) -> tuple[np.ndarray, np.ndarray]:
    """The first ``n_steps`` increments (X_k, Y_k) of the path from the origin (d=2)."""
    if params.d != 2:
        raise DimensionError("path_increments is implemented for d=2")
    xs, ys, status = K.path_increments2(params.key64, params.p, n_steps, params.max_search_height)
    if status != K.OK:
        raise SearchExceeded("successor scan ran past max_search_height")
    return xs, ys


@dataclass(frozen=True)
class PlanarityReport:
    boxes: int
    edges: int
    crossings: int
    shared_level_violations: int

    @property
    def ok(self) -> bool:
        return self.crossings == 0 and self.shared_level_violations == 0


def check_planarity(
    params: ModelParams, box: tuple[int, int, int, int], seeds: int = 1
) -> PlanarityReport:
    """Audit the successor edges of all open vertices in ``box`` for crossings.

    ``box`` is (x0, t0, width, height); ``seeds`` replicate environments
    derived from ``params.seed`` are audited.  Also checks that two edges
    ending on one level with each endpoint inside the other start's light
    cone share their endpoint.
    """
    if params.d != 2:
        raise DimensionError("planarity is a d=2 property")
    x0, t0, width, height = box
    edges = crossings = shared = 0
    if width <= 0 or height <= 0:
        return PlanarityReport(seeds, 0, 0, 0)
    for i in range(seeds):
        rp = params.replicate(i)
        n, c, s, status = K.planarity_box2(
            rp.key64, rp.p, x0, t0, width, height, rp.max_search_height
        )
        if status != K.OK:
            raise SearchExceeded("successor scan ran past max_search_height")
        edges += n
        crossings += c
        shared += s
    return PlanarityReport(seeds, edges, crossings, shared)
