"""Slabs, cones and trapezoids above a lattice point.

Regions are small descriptors (base point plus radii).  Iteration is lazy,
level by level ascending and lexicographic within a level.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterator, Sequence

Point = tuple[int, ...]


def apex(u: Sequence[int], k: int) -> Point:
    if k < 1:
        raise ValueError(f"apex needs k >= 1, got {k}")
    u = tuple(u)
    return u[:-1] + (u[-1] + k,)


def ball_offsets(m: int, r: int) -> Iterator[Point]:
    """Points of the closed l1 ball of radius r in Z^m, lexicographic order."""
    if r < 0:
        return
    if m == 0:
        yield ()
        return
    for c in range(-r, r + 1):
        for rest in ball_offsets(m - 1, r - abs(c)):
            yield (c,) + rest


def ball_size(m: int, r: int) -> int:
    if r < 0:
        return 0
    return sum(2**i * comb(m, i) * comb(r, i) for i in range(min(m, r) + 1))


def _l1(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(abs(x - y) for x, y in zip(a, b))


@dataclass(frozen=True)
class LevelSlab:
    """H(base, k): the l1 ball of radius k around apex(base, k) in its level."""

    base: Point
    k: int

    def __iter__(self) -> Iterator[Point]:
        return slab_points(self)

    def __len__(self) -> int:
        return ball_size(len(self.base) - 1, self.k) if self.k >= 1 else 0

    def __contains__(self, w) -> bool:
        w = tuple(w)
        if self.k < 1 or len(w) != len(self.base):
            return False
        return w[-1] == self.base[-1] + self.k and _l1(w[:-1], self.base[:-1]) <= self.k


def slab_points(slab: LevelSlab) -> Iterator[Point]:
    if slab.k < 1:
        return
    base = slab.base
    lev = base[-1] + slab.k
    for off in ball_offsets(len(base) - 1, slab.k):
        yield tuple(b + o for b, o in zip(base[:-1], off)) + (lev,)


@dataclass(frozen=True)
class Cone:
    """V(base, h): union of the slabs H(base, 1..h)."""

    base: Point
    h: int

    def slabs(self) -> Iterator[LevelSlab]:
        for k in range(1, self.h + 1):
            yield LevelSlab(self.base, k)

    def __iter__(self) -> Iterator[Point]:
        for slab in self.slabs():
            yield from slab_points(slab)

    def __len__(self) -> int:
        return cone_size(len(self.base), self.h)

    def __contains__(self, w) -> bool:
        w = tuple(w)
        if len(w) != len(self.base):
            return False
        k = w[-1] - self.base[-1]
        return 1 <= k <= self.h and _l1(w[:-1], self.base[:-1]) <= k


def cone_size(d: int, h: int) -> int:
    if h < 0:
        raise ValueError(f"cone height must be >= 0, got {h}")
    return sum(ball_size(d - 1, k) for k in range(1, h + 1))


def in_light_cone(base: Sequence[int], w: Sequence[int]) -> bool:
    """w lies in V(base), the cone of unbounded height."""
    k = w[-1] - base[-1]
    return k >= 1 and _l1(w[:-1], base[:-1]) <= k


@dataclass(frozen=True)
class Trapezoid:
    """V(base, s) minus V(base, r); radii are relative to base's level."""

    base: Point
    r: int
    s: int

    def __post_init__(self):
        if self.r > self.s:
            raise ValueError(f"trapezoid needs r <= s, got r={self.r}, s={self.s}")

    def __iter__(self) -> Iterator[Point]:
        for k in range(max(self.r, 0) + 1, self.s + 1):
            yield from slab_points(LevelSlab(self.base, k))

    def __len__(self) -> int:
        return sum(ball_size(len(self.base) - 1, k) for k in range(max(self.r, 0) + 1, self.s + 1))

    def __contains__(self, w) -> bool:
        return trapezoid_contains(self, w)

    @property
    def empty(self) -> bool:
        return self.s <= max(self.r, 0)


def trapezoid_contains(t: Trapezoid, w: Sequence[int]) -> bool:
    w = tuple(w)
    if len(w) != len(t.base):
        return False
    k = w[-1] - t.base[-1]
    return max(t.r, 0) < k <= t.s and _l1(w[:-1], t.base[:-1]) <= k
