"""Joint exploration of several walkers, renewals and coalescence times.

Each joint step advances every walker sitting at the minimal level.  For two
walkers this is exactly the alternating rule with a trapezoidal history
region; for more walkers the same min-level schedule is used and the history
kept on the state is the trapezoid above the walker that currently leads.
A renewal is a step after which all walker levels agree (empty history).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels as K
from .dynamics import PathRecord, SearchExceeded, successor, trace
from .env import DimensionError, Environment, ModelParams, Point
from .geometry import Trapezoid


@dataclass(frozen=True)
class JointState:
    positions: tuple[Point, ...]
    previous: tuple[Point, ...]
    r: int
    s: int
    history: Trapezoid | None
    step: int
    leader: tuple[int, ...]  # leader[i] == i unless walker i merged into a lower index

    @property
    def k(self) -> int:
        return len(self.positions)

    @property
    def renewal(self) -> bool:
        return self.r == self.s


def start_state(starts: Sequence[Sequence[int]]) -> JointState:
    pts = tuple(tuple(int(c) for c in s) for s in starts)
    if not pts:
        raise ValueError("need at least one walker")
    levels = {p[-1] for p in pts}
    if len(levels) != 1:
        raise ValueError(f"starts must share their last coordinate, got levels {sorted(levels)}")
    lev = levels.pop()
    leader = []
    for i, p in enumerate(pts):
        leader.append(next(j for j in range(i + 1) if pts[j] == p))
    return JointState(pts, pts, lev, lev, None, 0, tuple(leader))


def joint_step(
    params: ModelParams, state: JointState, env: Environment | None = None
) -> JointState:
    r = state.r
    pos = list(state.positions)
    prev = list(state.previous)
    cache: dict[Point, Point] = {}
    for i, p in enumerate(state.positions):
        if p[-1] != r:
            continue
        if p not in cache:
            cache[p] = successor(params, p, env).next
        prev[i] = p
        pos[i] = cache[p]
    leader = list(state.leader)
    for i in range(len(pos)):
        if leader[i] == i:
            for j in range(i):
                if leader[j] == j and pos[j] == pos[i]:
                    leader[i] = j
                    break
        else:
            leader[i] = leader[leader[i]]
    levels = [p[-1] for p in pos]
    r2, s2 = min(levels), max(levels)
    history = None
    if r2 < s2:
        top = levels.index(s2)
        base = prev[top]
        history = Trapezoid(base, r2 - base[-1], s2 - base[-1])
    return JointState(tuple(pos), tuple(prev), r2, s2, history, state.step + 1, tuple(leader))


@dataclass(frozen=True)
class RegenRecord:
    l: int
    tau: int
    sigma: int
    T: int
    z: tuple[int, ...]  # consecutive walker differences, (k-1) blocks of d-1 coordinates

    def gaps(self, d: int) -> list[tuple[int, ...]]:
        m = d - 1
        return [self.z[i : i + m] for i in range(0, len(self.z), m)]


def _differences(positions: Sequence[Point]) -> tuple[int, ...]:
    z: list[int] = []
    for a, b in zip(positions, positions[1:]):
        z.extend(bi - ai for ai, bi in zip(a[:-1], b[:-1]))
    return tuple(z)


def run_regenerations(
    params: ModelParams,
    starts: Sequence[Sequence[int]],
    L: int,
    env: Environment | None = None,
) -> list[RegenRecord]:
    """Renewal records of the joint process, until L renewals or full coalescence."""
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    state = start_state(starts)
    for p in state.positions:
        if len(p) != params.d:
            raise DimensionError(f"point {p} has length {len(p)}, expected {params.d}")
    t0 = state.r
    if env is None and params.d == 2 and state.k >= 2:
        xs = np.array([p[0] for p in state.positions], dtype=np.int64)
        order_ok = bool(np.all(np.diff(xs) > 0))
        if order_ok:
            return _regenerations_fast(params, xs, t0, L)
    out: list[RegenRecord] = []
    tau_prev = 0
    while len(out) < L:
        state = joint_step(params, state, env)
        if state.renewal:
            out.append(
                RegenRecord(
                    len(out) + 1,
                    state.step,
                    state.step - tau_prev,
                    state.s - t0,
                    _differences(state.positions),
                )
            )
            tau_prev = state.step
            if state.k > 1 and all(l == 0 for l in state.leader):
                break
    return out


def _regenerations_fast(params: ModelParams, xs: np.ndarray, t0: int, L: int) -> list[RegenRecord]:
    # full coalescence: stop at the first renewal where every gap is zero
    out: list[RegenRecord] = []
    after_zero = 0 if xs.shape[0] == 2 else -1
    sig, tl, gaps, count, _, status = K.joint_renewals2(
        params.key64, params.p, xs, t0, L, 1 << 62, after_zero, params.max_search_height
    )
    if status != K.OK:
        raise SearchExceeded("successor scan ran past max_search_height")
    tau = 0
    for i in range(count):
        tau += int(sig[i])
        z = tuple(int(g) for g in gaps[i])
        out.append(RegenRecord(i + 1, tau, int(sig[i]), int(tl[i]), z))
        if all(g == 0 for g in z):
            break
    return out


@dataclass(frozen=True)
class CoalescenceRecord:
    n_steps: int
    T_at_coalescence: int
    hit_cap: bool


def pair_coalescence(
    params: ModelParams,
    x_offset: int,
    t_cap: int = 10**6,
    env: Environment | None = None,
) -> CoalescenceRecord:
    """Renewals of the pair u=(x,0), v=(0,0) until the gap vanishes or T > t_cap."""
    if params.d != 2:
        raise DimensionError("pair_coalescence is a d=2 operation")
    if x_offset < 1:
        raise ValueError(f"x_offset must be >= 1, got {x_offset}")
    if env is None:
        n, t, capped, status = K.pair_coalesce2(
            params.key64, params.p, x_offset, t_cap, params.max_search_height
        )
        if status != K.OK:
            raise SearchExceeded("successor scan ran past max_search_height")
        return CoalescenceRecord(int(n), int(t), bool(capped))
    state = start_state([(0, 0), (x_offset, 0)])
    n = 0
    while True:
        state = joint_step(params, state, env)
        if state.renewal:
            n += 1
            if state.positions[0] == state.positions[1]:
                return CoalescenceRecord(n, state.s, False)
            if state.s > t_cap:
                return CoalescenceRecord(n, state.s, True)


@dataclass(frozen=True)
class TripleRecord:
    coalescence: CoalescenceRecord
    nu: int | None
    T: tuple[int, ...]

    @property
    def T1(self) -> int:
        return self.T[0]


def exact_position(record: PathRecord, level: int) -> Fraction:
    levels = record.levels
    for i in range(len(levels) - 1):
        if levels[i] <= level <= levels[i + 1]:
            (x0, t0), (x1, t1) = record.vertices[i], record.vertices[i + 1]
            return Fraction(x0) + Fraction((level - t0) * (x1 - x0), t1 - t0)
    if level == levels[-1]:
        return Fraction(record.vertices[-1][0])
    raise ValueError(f"level {level} outside traced range")


def first_meeting_level(paths: Sequence[PathRecord], upto: int) -> int | None:
    """First integer level >= 1 at which two neighbouring paths coincide."""
    base = paths[0].start[-1]
    for lev in range(base + 1, base + upto + 1):
        xs = [exact_position(p, lev) for p in paths]
        if any(a == b for a, b in zip(xs, xs[1:])):
            return lev - base
    return None


def triple_collision(
    params: ModelParams,
    x: int,
    y: int,
    z: int,
    t_cap: int = 10**6,
    env: Environment | None = None,
) -> TripleRecord:
    """Three-walker renewals from (x,0),(y,0),(z,0) until a gap vanishes.

    Returns the renewal index and level of the first zero gap, the renewal
    levels T_1, T_2, ..., and nu, the first integer level at which two of the
    piecewise-linear paths meet.
    """
    if params.d != 2:
        raise DimensionError("triple_collision is a d=2 operation")
    if not x < y < z:
        raise ValueError(f"need x < y < z, got {(x, y, z)}")
    state = start_state([(x, 0), (y, 0), (z, 0)])
    Ts: list[int] = []
    capped = False
    while True:
        state = joint_step(params, state, env)
        if state.renewal:
            Ts.append(state.s)
            p = state.positions
            if p[0] == p[1] or p[1] == p[2]:
                break
            if state.s > t_cap:
                capped = True
                break
    tn = Ts[-1]
    paths = [trace(params, (c, 0), tn, env) for c in (x, y, z)]
    nu = first_meeting_level(paths, tn)
    return TripleRecord(CoalescenceRecord(len(Ts), tn, capped), nu, tuple(Ts))


@dataclass
class IndependentPairRecord:
    path_u: PathRecord
    path_v: PathRecord
    levels: list[int] = field(default_factory=list)  # T^IND_l, relative to the start level
    psi_u: list[Point] = field(default_factory=list)
    psi_v: list[Point] = field(default_factory=list)
    n_u: list[int] = field(default_factory=list)
    n_v: list[int] = field(default_factory=list)


def independent_pair(
    params: ModelParams,
    u: Sequence[int],
    v: Sequence[int],
    L: int,
    params_v: ModelParams | None = None,
    env_u: Environment | None = None,
    env_v: Environment | None = None,
) -> IndependentPairRecord:
    """Trace u and v in independent environments; record L simultaneous renewals.

    The environment of v defaults to ``params.independent()``.
    """
    u = tuple(u)
    v = tuple(v)
    if u[-1] != v[-1]:
        raise ValueError("independent_pair needs starts on one level")
    pv = params.independent() if params_v is None else params_v
    rec = IndependentPairRecord(PathRecord(u), PathRecord(v))
    a, b = u, v
    la, lb = u, v
    while len(rec.levels) < L:
        r = min(a[-1], b[-1])
        if a[-1] == r:
            a = successor(params, a, env_u).next
            rec.path_u.vertices.append(a)
        if b[-1] == r:
            b = successor(pv, b, env_v).next
            rec.path_v.vertices.append(b)
        if a[-1] == b[-1]:
            rec.levels.append(a[-1] - u[-1])
            rec.psi_u.append(tuple(ai - li for ai, li in zip(a[:-1], la[:-1])))
            rec.psi_v.append(tuple(bi - li for bi, li in zip(b[:-1], lb[:-1])))
            rec.n_u.append(len(rec.path_u.vertices) - 1)
            rec.n_v.append(len(rec.path_v.vertices) - 1)
            la, lb = a, b
    return rec
