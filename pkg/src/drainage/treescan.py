"""Finite-box probes of the forest structure.

In d=2 every pair of paths eventually merges, so the paths started in a box
collapse into few components as height grows; in d>=4 two distant paths
survive with positive probability.  Both are probed on finite windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .dynamics import SearchExceeded
from .env import DimensionError, ModelParams
from .stats import Proportion

MAX_BOX_VERTICES = 10**7


@dataclass(frozen=True)
class BoxSpec:
    params: ModelParams
    width: int
    height: int
    x0: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 0:
            raise ValueError("box needs width >= 1 and height >= 0")


@dataclass
class ComponentReport:
    components: int  # distinct trees reached from the bottom row by the top
    box_components: int  # distinct trees among all open vertices of the box
    n_open: int
    histogram: dict[int, int] = field(default_factory=dict)  # height -> bottom-row components


def component_count(box: BoxSpec, heights: Sequence[int] | None = None) -> ComponentReport:
    """Union-find over the paths of every open vertex of the box (d=2).

    Each path is followed, leaving the box sideways if it must, until it
    reaches the top level or a vertex already seen.  ``components`` counts
    the trees that paths from open bottom-row vertices belong to at the top;
    ``histogram`` gives that count at each of ``heights``.
    """
    params = box.params
    if params.d != 2:
        raise DimensionError("component_count is implemented for d=2 boxes")
    if box.width * (box.height + 1) > MAX_BOX_VERTICES:
        raise MemoryError(f"box exceeds {MAX_BOX_VERTICES} vertices")
    roots, tops, n_open, status = K.box_components2(
        params.key64, params.p, box.x0, box.width, box.height, params.max_search_height
    )
    if status != K.OK:
        raise SearchExceeded("successor scan ran past max_search_height")
    hist: dict[int, int] = {}
    if heights:
        hs = np.array(sorted(heights), dtype=np.int64)
        key = params.key64
        bottom = np.array(
            [x for x in range(box.x0, box.x0 + box.width) if K.u2(key, x, 0) < params.p],
            dtype=np.int64,
        )
        if bottom.size:
            counts, st = K.distinct_positions2(
                key, params.p, bottom, 0, hs, params.max_search_height
            )
            if st != K.OK:
                raise SearchExceeded("successor scan ran past max_search_height")
            hist = {int(h): int(c) for h, c in zip(hs, counts)}
        else:
            hist = {int(h): 0 for h in hs}
    return ComponentReport(int(tops), int(roots), int(n_open), hist)


@dataclass(frozen=True)
class SurvivalReport:
    d: int
    spacing: int
    height: int
    survived: Proportion
    N: int

    @property
    def fraction(self) -> float:
        return self.survived.value


def pair_survival(
    params: ModelParams, spacing: int, height: int, N: int, level: float = 0.99
) -> SurvivalReport:
    """Fraction of N pair runs, gap ``spacing`` along the first axis, not merged by ``height``.

    A run survives if its gap is still nonzero at the first renewal at or
    above ``height``.
    """
    if spacing < 0:
        raise ValueError("spacing must be >= 0")
    if spacing == 0:
        return SurvivalReport(params.d, 0, height, Proportion.of(0, N, level), N)
    if params.d == 2:
        _, _, capped, status = K.batch_pair_coalesce2(
            params.seed64, params.p, spacing, height - 1, N, params.max_search_height
        )
        alive = capped
    else:
        gap = np.zeros(params.d - 1, dtype=np.int64)
        gap[0] = spacing
        _, _, _, merged, status = K.batch_pair_nd(
            params.seed64, params.p, params.d, gap, 1 << 62, height, N, params.max_search_height
        )
        alive = ~merged
    if np.any(status != K.OK):
        raise SearchExceeded("successor scan ran past max_search_height")
    return SurvivalReport(params.d, spacing, height, Proportion.of(int(alive.sum()), N, level), N)


def top_component_fraction(box: BoxSpec, seeds: int) -> Proportion:
    """Share of replicate boxes whose bottom row forms a single tree at the top."""
    ones = 0
    for i in range(seeds):
        rep = BoxSpec(box.params.replicate(i), box.width, box.height, box.x0)
        if component_count(rep).components == 1:
            ones += 1
    return Proportion.of(ones, seeds)

