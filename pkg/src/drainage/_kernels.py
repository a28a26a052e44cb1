"""Compiled inner loops.

Every kernel is a pure function of its arguments (environment keys, start
points, caps).  Batch drivers hand replicate ``i`` the environment seeded by
``replicate_seed(seed, i)`` and write into slot ``i`` of preallocated output
arrays, so results do not depend on the thread count.

Status codes: ``OK`` (0) or ``EXCEEDED`` (1) when a successor scan ran past
``maxh`` levels.  A level jump of 0 returned by a successor routine means the
same thing.
"""

import warnings

import numpy as np
from numba import njit, prange

from ._hash import GOLDEN, key_of, mix64, replicate_seed, to_unit, u2

OK = 0
EXCEEDED = 1

# numba falls back to another threading layer on its own; the notice is noise
warnings.filterwarnings("ignore", message="The TBB threading layer")

_G = np.uint64(GOLDEN)


# ---------------------------------------------------------------------------
# successor rule
# ---------------------------------------------------------------------------


@njit(cache=True)
def succ2(key, p, x, t, maxh):
    """Successor of (x, t) in d=2.  Returns (x', level jump); jump 0 = exceeded."""
    for l in range(1, maxh + 1):
        best = 2.0
        bx = x
        lev = t + l
        for dx in range(-l, l + 1):
            v = u2(key, x + dx, lev)
            if v < best:
                best = v
                bx = x + dx
        if best < p:
            return bx, l
    return x, 0


@njit(cache=True)
def succ_nd(key, p, u, out, c, maxh):
    """Successor of ``u`` (length d) written into ``out``; returns the level jump.

    ``c`` is scratch of length d-1.  Slab points are visited in lexicographic
    order of their spatial offsets, and only a strictly smaller value replaces
    the incumbent, so ties resolve to the lexicographically smallest point.
    """
    m = u.shape[0] - 1
    key = np.uint64(key)
    for l in range(1, maxh + 1):
        best = 2.0
        lev = u[m] + l
        hl = np.uint64(lev) * _G
        for i in range(m):
            c[i] = 0
        c[0] = -l
        while True:
            h = key
            for i in range(m):
                h = mix64(h ^ (np.uint64(u[i] + c[i]) * _G))
            v = to_unit(mix64(h ^ hl))
            if v < best:
                best = v
                for i in range(m):
                    out[i] = u[i] + c[i]
            # advance the l1-ball odometer
            i = m - 1
            advanced = False
            while i >= 0:
                used = 0
                for j in range(i):
                    used += abs(c[j])
                if c[i] + 1 <= l - used:
                    c[i] += 1
                    rem = l - used - abs(c[i])
                    if i + 1 < m:
                        c[i + 1] = -rem
                        for j in range(i + 2, m):
                            c[j] = 0
                    advanced = True
                    break
                i -= 1
            if not advanced:
                break
        if best < p:
            out[m] = lev
            return l
    return 0


@njit(cache=True)
def slab_offsets(m, l):
    """All points of the l1 ball of radius l in Z^m, lexicographic order."""
    if m == 1:
        res = np.empty((2 * l + 1, 1), dtype=np.int64)
        for i in range(2 * l + 1):
            res[i, 0] = i - l
        return res
    buf = np.empty((0, m), dtype=np.int64)
    rows = []
    c = np.zeros(m, dtype=np.int64)
    c[0] = -l
    while True:
        rows.append(c.copy())
        i = m - 1
        advanced = False
        while i >= 0:
            used = 0
            for j in range(i):
                used += abs(c[j])
            if c[i] + 1 <= l - used:
                c[i] += 1
                rem = l - used - abs(c[i])
                if i + 1 < m:
                    c[i + 1] = -rem
                    for j in range(i + 2, m):
                        c[j] = 0
                advanced = True
                break
            i -= 1
        if not advanced:
            break
    buf = np.empty((len(rows), m), dtype=np.int64)
    for r in range(len(rows)):
        buf[r] = rows[r]
    return buf


# ---------------------------------------------------------------------------
# single paths, d=2
# ---------------------------------------------------------------------------


@njit(cache=True)
def trace2(key, p, x, t, horizon, maxh):
    """Knots of the path from (x, t) until the level reaches t + horizon."""
    cap = horizon + 1
    xs = np.empty(cap, dtype=np.int64)
    ts = np.empty(cap, dtype=np.int64)
    xs[0] = x
    ts[0] = t
    n = 1
    target = t + horizon
    status = OK
    while ts[n - 1] < target:
        nx, l = succ2(key, p, xs[n - 1], ts[n - 1], maxh)
        if l == 0:
            status = EXCEEDED
            break
        xs[n] = nx
        ts[n] = ts[n - 1] + l
        n += 1
    return xs[:n], ts[:n], status


@njit(cache=True)
def position_at2(key, p, x, t, level, maxh):
    """Interpolated first coordinate of the path from (x, t) at real ``level``."""
    cx = x
    ct = t
    while True:
        nx, l = succ2(key, p, cx, ct, maxh)
        if l == 0:
            return 0.0, EXCEEDED
        nt = ct + l
        if nt > level:
            return cx + (level - ct) / l * (nx - cx), OK
        cx = nx
        ct = nt
        if ct == level:
            return float(cx), OK


@njit(cache=True, parallel=True)
def batch_first_increments2(seed, p, n, maxh):
    xs = np.empty(n, dtype=np.int64)
    ys = np.empty(n, dtype=np.int64)
    status = np.zeros(n, dtype=np.int8)
    for i in prange(n):
        key = key_of(replicate_seed(seed, i))
        nx, l = succ2(key, p, 0, 0, maxh)
        xs[i] = nx
        ys[i] = l
        if l == 0:
            status[i] = EXCEEDED
    return xs, ys, status


@njit(cache=True, parallel=True)
def batch_endpoints2(seed, p, level, n, maxh):
    out = np.empty(n, dtype=np.float64)
    status = np.zeros(n, dtype=np.int8)
    for i in prange(n):
        key = key_of(replicate_seed(seed, i))
        v, s = position_at2(key, p, 0, 0, level, maxh)
        out[i] = v
        status[i] = s
    return out, status


@njit(cache=True)
def path_increments2(key, p, n_steps, maxh):
    """The first ``n_steps`` increments (X_k, Y_k) of the path from the origin."""
    xs = np.empty(n_steps, dtype=np.int64)
    ys = np.empty(n_steps, dtype=np.int64)
    cx = 0
    ct = 0
    for k in range(n_steps):
        nx, l = succ2(key, p, cx, ct, maxh)
        if l == 0:
            return xs[:k], ys[:k], EXCEEDED
        xs[k] = nx - cx
        ys[k] = l
        cx = nx
        ct += l
    return xs, ys, OK


# ---------------------------------------------------------------------------
# joint process, d=2
# ---------------------------------------------------------------------------


@njit(cache=True)
def joint_renewals2(key, p, starts, t0, max_ren, t_cap, after_zero, maxh):
    """Run the k-walker joint process from ``starts`` (ascending, level t0).

    Every step advances all walkers sitting at the minimal level.  A renewal
    is a step after which all levels agree.  Returns per-renewal arrays
    (sigma, T, gaps) plus (count, capped, status).  ``gaps[l, i]`` is
    x_{i+1} - x_i at renewal l+1.  Stops after ``max_ren`` renewals, when
    T exceeds ``t_cap``, or (if ``after_zero`` >= 0) that many renewals
    after the first renewal showing a zero gap.
    """
    k = starts.shape[0]
    xs = starts.copy()
    ts = np.full(k, t0, dtype=np.int64)
    sig = np.empty(max_ren, dtype=np.int64)
    tl = np.empty(max_ren, dtype=np.int64)
    gaps = np.empty((max_ren, k - 1), dtype=np.int64)
    count = 0
    steps = 0
    first_zero = -1
    capped = False
    while count < max_ren:
        r = ts[0]
        for i in range(1, k):
            if ts[i] < r:
                r = ts[i]
        for i in range(k):
            if ts[i] == r:
                # a walker already sharing this vertex with an earlier one copies it
                dup = -1
                for j in range(i):
                    if xs[j] == xs[i] and ts[j] == r and j < i:
                        dup = j
                        break
                if dup >= 0:
                    continue
                nx, l = succ2(key, p, xs[i], ts[i], maxh)
                if l == 0:
                    return sig[:count], tl[:count], gaps[:count], count, capped, EXCEEDED
                ox = xs[i]
                for j in range(i + 1, k):
                    if ts[j] == r and xs[j] == ox:
                        xs[j] = nx
                        ts[j] = r + l
                xs[i] = nx
                ts[i] = r + l
        steps += 1
        s = ts[0]
        equal = True
        for i in range(1, k):
            if ts[i] != s:
                equal = False
                break
        if equal:
            sig[count] = steps
            tl[count] = s - t0
            zero = False
            for i in range(k - 1):
                g = xs[i + 1] - xs[i]
                gaps[count, i] = g
                if g == 0:
                    zero = True
            count += 1
            steps = 0
            if zero and first_zero < 0:
                first_zero = count
            if after_zero >= 0 and first_zero >= 0 and count - first_zero >= after_zero:
                break
            if s - t0 > t_cap:
                capped = True
                break
    return sig[:count], tl[:count], gaps[:count], count, capped, OK


@njit(cache=True)
def pair_coalesce2(key, p, x_offset, t_cap, maxh):
    """(n, T_n, capped, status) for the pair u=(x_offset,0), v=(0,0)."""
    xv = 0
    xu = x_offset
    tv = 0
    tu = 0
    n = 0
    while True:
        r = tu if tu < tv else tv
        if tv == r:
            nx, l = succ2(key, p, xv, tv, maxh)
            if l == 0:
                return n, tu, False, EXCEEDED
            xv = nx
            tv += l
        if tu == r:
            nx, l = succ2(key, p, xu, tu, maxh)
            if l == 0:
                return n, tu, False, EXCEEDED
            xu = nx
            tu += l
        if tu == tv:
            n += 1
            if xu == xv:
                return n, tu, False, OK
            if tu > t_cap:
                return n, tu, True, OK


@njit(cache=True, parallel=True)
def batch_pair_coalesce2(seed, p, x_offset, t_cap, n, maxh):
    nn = np.empty(n, dtype=np.int64)
    tt = np.empty(n, dtype=np.int64)
    capped = np.empty(n, dtype=np.bool_)
    status = np.zeros(n, dtype=np.int8)
    for i in prange(n):
        key = key_of(replicate_seed(seed, i))
        a, b, c, s = pair_coalesce2(key, p, x_offset, t_cap, maxh)
        nn[i] = a
        tt[i] = b
        capped[i] = c
        status[i] = s
    return nn, tt, capped, status


@njit(cache=True)
def _knots_until(key, p, x, t, level, maxh):
    """Knots of the path from (x, t) until it reaches or passes ``level``."""
    cap = level - t + 1
    xs = np.empty(cap, dtype=np.int64)
    ts = np.empty(cap, dtype=np.int64)
    xs[0] = x
    ts[0] = t
    n = 1
    while ts[n - 1] < level:
        nx, l = succ2(key, p, xs[n - 1], ts[n - 1], maxh)
        if l == 0:
            return xs[:n], ts[:n], EXCEEDED
        xs[n] = nx
        ts[n] = ts[n - 1] + l
        n += 1
    return xs[:n], ts[:n], OK


@njit(cache=True)
def first_meeting_level2(xa, ta, xb, tb, upto):
    """First integer level >= 1 at which two polylines (knots from level 0) agree.

    Positions are compared exactly as rationals.  Returns -1 if none up to
    ``upto``.
    """
    ia = 0
    ib = 0
    for lev in range(1, upto + 1):
        while ia + 1 < ta.shape[0] and ta[ia + 1] < lev:
            ia += 1
        while ib + 1 < tb.shape[0] and tb[ib + 1] < lev:
            ib += 1
        if ia + 1 >= ta.shape[0] or ib + 1 >= tb.shape[0]:
            return -1
        # position = x0 + (lev - t0) * dx / dt
        da = ta[ia + 1] - ta[ia]
        db = tb[ib + 1] - tb[ib]
        na = xa[ia] * da + (lev - ta[ia]) * (xa[ia + 1] - xa[ia])
        nb = xb[ib] * db + (lev - tb[ib]) * (xb[ib + 1] - xb[ib])
        if na * db == nb * da:
            return lev
    return -1


@njit(cache=True)
def triple2(key, p, x, y, z, t_cap, maxh):
    """Triple run from (x,0),(y,0),(z,0).

    Returns (n, T_n, T_1, nu, capped, status) where n is the first renewal
    with a zero gap, T_n its level, T_1 the first renewal level and nu the
    first integer level at which two adjacent paths coincide (-1 if none
    before the cap).
    """
    xs = np.empty(3, dtype=np.int64)
    xs[0] = x
    xs[1] = y
    xs[2] = z
    ts = np.zeros(3, dtype=np.int64)
    count = 0
    t1 = 0
    capped = False
    while True:
        r = min(ts[0], min(ts[1], ts[2]))
        for i in range(3):
            if ts[i] == r:
                ox = xs[i]
                nx, l = succ2(key, p, ox, r, maxh)
                if l == 0:
                    return count, 0, t1, -1, capped, EXCEEDED
                for j in range(i, 3):
                    if ts[j] == r and xs[j] == ox:
                        xs[j] = nx
                        ts[j] = r + l
        if ts[0] == ts[1] and ts[1] == ts[2]:
            count += 1
            if count == 1:
                t1 = ts[0]
            if xs[0] == xs[1] or xs[1] == xs[2]:
                break
            if ts[0] > t_cap:
                capped = True
                break
    tn = ts[0]
    xa, ta, s1 = _knots_until(key, p, x, 0, tn, maxh)
    xb, tb, s2 = _knots_until(key, p, y, 0, tn, maxh)
    xc, tc, s3 = _knots_until(key, p, z, 0, tn, maxh)
    nu1 = first_meeting_level2(xa, ta, xb, tb, tn)
    nu2 = first_meeting_level2(xb, tb, xc, tc, tn)
    nu = nu1
    if nu < 0 or (nu2 >= 0 and nu2 < nu):
        nu = nu2
    return count, tn, t1, nu, capped, OK


@njit(cache=True, parallel=True)
def batch_triple2(seed, p, x, y, z, t_cap, n, maxh):
    nn = np.empty(n, dtype=np.int64)
    tn = np.empty(n, dtype=np.int64)
    t1 = np.empty(n, dtype=np.int64)
    nu = np.empty(n, dtype=np.int64)
    capped = np.empty(n, dtype=np.bool_)
    status = np.zeros(n, dtype=np.int8)
    for i in prange(n):
        key = key_of(replicate_seed(seed, i))
        a, b, c, d, e, s = triple2(key, p, x, y, z, t_cap, maxh)
        nn[i] = a
        tn[i] = b
        t1[i] = c
        nu[i] = d
        capped[i] = e
        status[i] = s
    return nn, tn, t1, nu, capped, status


# ---------------------------------------------------------------------------
# many walkers, d=2 (eta counts, tree probes)
# ---------------------------------------------------------------------------


@njit(cache=True)
def distinct_positions2(key, p, starts, t0, levels, maxh):
    """Number of distinct path positions at each of the ascending ``levels``.

    Walkers start at (starts[i], t0); walkers landing on a common vertex are
    merged.  Positions at a level are compared exactly as rationals.
    """
    k = starts.shape[0]
    cx = starts.copy()
    ct = np.full(k, t0, dtype=np.int64)
    px = starts.copy()
    pt = np.full(k, t0, dtype=np.int64)
    alive = k
    out = np.zeros(levels.shape[0], dtype=np.int64)
    num = np.empty(k, dtype=np.int64)
    den = np.empty(k, dtype=np.int64)
    for li in range(levels.shape[0]):
        target = levels[li]
        # advance every walker until its current vertex is at or above target
        while True:
            r = ct[0]
            for i in range(1, alive):
                if ct[i] < r:
                    r = ct[i]
            if r >= target:
                break
            for i in range(alive):
                if ct[i] == r:
                    nx, l = succ2(key, p, cx[i], ct[i], maxh)
                    if l == 0:
                        return out, EXCEEDED
                    px[i] = cx[i]
                    pt[i] = ct[i]
                    cx[i] = nx
                    ct[i] = r + l
            # merge walkers that share a vertex
            i = 0
            while i < alive:
                j = i + 1
                while j < alive:
                    if cx[j] == cx[i] and ct[j] == ct[i]:
                        alive -= 1
                        cx[j] = cx[alive]
                        ct[j] = ct[alive]
                        px[j] = px[alive]
                        pt[j] = pt[alive]
                    else:
                        j += 1
                i += 1
        # exact positions at target: (num/den)
        for i in range(alive):
            if ct[i] == target:
                num[i] = cx[i]
                den[i] = 1
            else:
                dt = ct[i] - pt[i]
                num[i] = px[i] * dt + (target - pt[i]) * (cx[i] - px[i])
                den[i] = dt
        distinct = 0
        for i in range(alive):
            seen = False
            for j in range(i):
                if num[i] * den[j] == num[j] * den[i]:
                    seen = True
                    break
            if not seen:
                distinct += 1
        out[li] = distinct
    return out, OK


@njit(cache=True, parallel=True)
def batch_eta2(seed, p, width, level, n, maxh):
    """eta counts for walkers started at 0..width on level 0, evaluated at ``level``."""
    starts = np.arange(width + 1).astype(np.int64)
    levels = np.empty(1, dtype=np.int64)
    levels[0] = level
    out = np.empty(n, dtype=np.int64)
    status = np.zeros(n, dtype=np.int8)
    for i in prange(n):
        key = key_of(replicate_seed(seed, i))
        c, s = distinct_positions2(key, p, starts, 0, levels, maxh)
        out[i] = c[0]
        status[i] = s
    return out, status


@njit(cache=True)
def _uf_find(parent, a):
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


@njit(cache=True)
def box_components2(key, p, x0, width, height, maxh):
    """Union-find over the paths of every open vertex in [x0, x0+width) x [0, height].

    Paths are followed (sideways out of the box if need be) until they reach
    level ``height`` or a vertex already visited.  Returns the number of
    components, the number of distinct components reached from the bottom
    row, the number of open starts, and a status code.
    """
    index = dict()
    parent = np.empty(16, dtype=np.int64)
    n_nodes = 0
    n_open = 0
    span = np.int64(1) << 32
    bottom = np.empty(width, dtype=np.int64)
    n_bottom = 0
    for t in range(height + 1):
        for x in range(x0, x0 + width):
            if u2(key, x, t) >= p:
                continue
            n_open += 1
            cx = x
            ct = t
            prev = -1
            first = True
            while True:
                code = (cx + (span >> 1)) + ct * span
                if code in index:
                    node = index[code]
                    fresh = False
                else:
                    node = n_nodes
                    if n_nodes == parent.shape[0]:
                        grown = np.empty(parent.shape[0] * 2, dtype=np.int64)
                        grown[: parent.shape[0]] = parent
                        parent = grown
                    parent[node] = node
                    index[code] = node
                    n_nodes += 1
                    fresh = True
                if first:
                    first = False
                    if t == 0:
                        bottom[n_bottom] = node
                        n_bottom += 1
                if prev >= 0:
                    ra = _uf_find(parent, prev)
                    rb = _uf_find(parent, node)
                    if ra != rb:
                        parent[ra] = rb
                if not fresh or ct >= height:
                    break
                nx, l = succ2(key, p, cx, ct, maxh)
                if l == 0:
                    return 0, 0, n_open, EXCEEDED
                prev = node
                cx = nx
                ct += l
    roots = 0
    for i in range(n_nodes):
        if _uf_find(parent, i) == i:
            roots += 1
    tops = np.empty(n_bottom, dtype=np.int64)
    for i in range(n_bottom):
        tops[i] = _uf_find(parent, bottom[i])
    tops = np.unique(tops)
    return roots, tops.shape[0], n_open, OK


# ---------------------------------------------------------------------------
# planarity audit, d=2
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _orient(ax, at, bx, bt, cx, ct):
    v = (bx - ax) * (ct - at) - (bt - at) * (cx - ax)
    if v > 0:
        return 1
    if v < 0:
        return -1
    return 0


@njit(cache=True)
def _bad_intersection(a0x, a0t, a1x, a1t, b0x, b0t, b1x, b1t):
    """True if the segments meet anywhere except at a shared endpoint."""
    o1 = _orient(a0x, a0t, a1x, a1t, b0x, b0t)
    o2 = _orient(a0x, a0t, a1x, a1t, b1x, b1t)
    o3 = _orient(b0x, b0t, b1x, b1t, a0x, a0t)
    o4 = _orient(b0x, b0t, b1x, b1t, a1x, a1t)
    if o1 == 0 and o2 == 0:
        # collinear: overlap length along the level axis (levels strictly increase)
        lo = max(a0t, b0t)
        hi = min(a1t, b1t)
        return hi > lo
    if o1 * o2 > 0 or o3 * o4 > 0:
        return False
    # the segments touch; harmless only when the contact is a shared endpoint
    shared = (
        (a0x == b0x and a0t == b0t)
        or (a0x == b1x and a0t == b1t)
        or (a1x == b0x and a1t == b0t)
        or (a1x == b1x and a1t == b1t)
    )
    return not shared


@njit(cache=True)
def planarity_box2(key, p, x0, t0, width, height, maxh):
    """Audit successor edges of open vertices in a box.

    Returns (n_edges, crossings, shared_level_violations, status).  The
    shared-level check: edges x->y and z->w with y, w on one level and each
    endpoint inside the other start's light cone must have y == w.
    """
    cap = width * height
    ex0 = np.empty(cap, dtype=np.int64)
    et0 = np.empty(cap, dtype=np.int64)
    ex1 = np.empty(cap, dtype=np.int64)
    et1 = np.empty(cap, dtype=np.int64)
    n = 0
    for t in range(t0, t0 + height):
        for x in range(x0, x0 + width):
            if u2(key, x, t) < p:
                nx, l = succ2(key, p, x, t, maxh)
                if l == 0:
                    return n, 0, 0, EXCEEDED
                ex0[n] = x
                et0[n] = t
                ex1[n] = nx
                et1[n] = t + l
                n += 1
    crossings = 0
    shared_bad = 0
    for i in range(n):
        for j in range(i + 1, n):
            if et1[i] <= et0[j] or et1[j] <= et0[i]:
                continue
            lo_i = min(ex0[i], ex1[i])
            hi_i = max(ex0[i], ex1[i])
            lo_j = min(ex0[j], ex1[j])
            hi_j = max(ex0[j], ex1[j])
            if hi_i < lo_j or hi_j < lo_i:
                continue
            if _bad_intersection(
                ex0[i], et0[i], ex1[i], et1[i], ex0[j], et0[j], ex1[j], et1[j]
            ):
                crossings += 1
            if et1[i] == et1[j]:
                lev = et1[i]
                y_in_z = abs(ex1[i] - ex0[j]) <= lev - et0[j]
                w_in_x = abs(ex1[j] - ex0[i]) <= lev - et0[i]
                if y_in_z and w_in_x and ex1[i] != ex1[j]:
                    shared_bad += 1
    return n, crossings, shared_bad, OK


# ---------------------------------------------------------------------------
# general dimension
# ---------------------------------------------------------------------------


@njit(cache=True)
def pair_until_nd(key, p, u, v, max_ren, height, maxh):
    """Joint pair process in any d.

    Runs until ``max_ren`` renewals, a zero gap, or a renewal at relative
    level >= ``height``.  Returns (gap at last renewal, its relative level,
    renewals done, coalesced flag, status).
    """
    d = u.shape[0]
    m = d - 1
    a = u.copy()
    b = v.copy()
    na = np.empty(d, dtype=np.int64)
    c = np.empty(max(m, 1), dtype=np.int64)
    gap = np.empty(m, dtype=np.int64)
    t0 = u[m]
    count = 0
    for i in range(m):
        gap[i] = a[i] - b[i]
    while count < max_ren:
        r = a[m] if a[m] < b[m] else b[m]
        same = True
        for i in range(d):
            if a[i] != b[i]:
                same = False
                break
        if a[m] == r:
            l = succ_nd(key, p, a, na, c, maxh)
            if l == 0:
                return gap, 0, count, False, EXCEEDED
            for i in range(d):
                a[i] = na[i]
        if b[m] == r:
            if same:
                for i in range(d):
                    b[i] = a[i]
            else:
                l = succ_nd(key, p, b, na, c, maxh)
                if l == 0:
                    return gap, 0, count, False, EXCEEDED
                for i in range(d):
                    b[i] = na[i]
        if a[m] == b[m]:
            count += 1
            zero = True
            for i in range(m):
                gap[i] = a[i] - b[i]
                if gap[i] != 0:
                    zero = False
            if zero:
                return gap, a[m] - t0, count, True, OK
            if a[m] - t0 >= height:
                return gap, a[m] - t0, count, False, OK
    return gap, a[m] - t0, count, False, OK


@njit(cache=True, parallel=True)
def batch_pair_nd(seed, p, d, gap, max_ren, height, n, maxh):
    """Replicated joint pair runs from u=(gap,0), v=0 in dimension d."""
    m = d - 1
    gaps = np.empty((n, m), dtype=np.int64)
    levels = np.empty(n, dtype=np.int64)
    counts = np.empty(n, dtype=np.int64)
    merged = np.empty(n, dtype=np.bool_)
    status = np.zeros(n, dtype=np.int8)
    for i in prange(n):
        key = key_of(replicate_seed(seed, i))
        u = np.zeros(d, dtype=np.int64)
        v = np.zeros(d, dtype=np.int64)
        for j in range(m):
            u[j] = gap[j]
        g, lev, cnt, mg, s = pair_until_nd(key, p, u, v, max_ren, height, maxh)
        gaps[i] = g
        levels[i] = lev
        counts[i] = cnt
        merged[i] = mg
        status[i] = s
    return gaps, levels, counts, merged, status


@njit(cache=True)
def indep_renewals_nd(key_u, key_v, p, u, v, n_ren, maxh):
    """Two paths in independent environments; their common-level renewals.

    Returns (levels T_l relative to the start, psi_u, psi_v, N_u, N_v,
    count, status) for l = 1..count.
    """
    d = u.shape[0]
    m = d - 1
    a = u.copy()
    b = v.copy()
    na = np.empty(d, dtype=np.int64)
    c = np.empty(max(m, 1), dtype=np.int64)
    levels = np.empty(n_ren, dtype=np.int64)
    psi_u = np.empty((n_ren, m), dtype=np.int64)
    psi_v = np.empty((n_ren, m), dtype=np.int64)
    nu = np.empty(n_ren, dtype=np.int64)
    nv = np.empty(n_ren, dtype=np.int64)
    la = a.copy()
    lb = b.copy()
    steps_a = 0
    steps_b = 0
    count = 0
    t0 = u[m]
    while count < n_ren:
        r = a[m] if a[m] < b[m] else b[m]
        if a[m] == r:
            l = succ_nd(key_u, p, a, na, c, maxh)
            if l == 0:
                return levels[:count], psi_u[:count], psi_v[:count], nu[:count], nv[:count], count, EXCEEDED
            for i in range(d):
                a[i] = na[i]
            steps_a += 1
        if b[m] == r:
            l = succ_nd(key_v, p, b, na, c, maxh)
            if l == 0:
                return levels[:count], psi_u[:count], psi_v[:count], nu[:count], nv[:count], count, EXCEEDED
            for i in range(d):
                b[i] = na[i]
            steps_b += 1
        if a[m] == b[m]:
            levels[count] = a[m] - t0
            for i in range(m):
                psi_u[count, i] = a[i] - la[i]
                psi_v[count, i] = b[i] - lb[i]
            nu[count] = steps_a
            nv[count] = steps_b
            for i in range(d):
                la[i] = a[i]
                lb[i] = b[i]
            count += 1
    return levels, psi_u, psi_v, nu, nv, count, OK


@njit(cache=True, parallel=True)
def batch_indep_first_nd(seed, seed_salt, p, d, gap, n, maxh):
    """First simultaneous renewal of independent pairs, replicated."""
    m = d - 1
    psi_u = np.empty((n, m), dtype=np.int64)
    psi_v = np.empty((n, m), dtype=np.int64)
    t1 = np.empty(n, dtype=np.int64)
    status = np.zeros(n, dtype=np.int8)
    for i in prange(n):
        s = replicate_seed(seed, i)
        ku = key_of(s)
        kv = key_of(s ^ np.uint64(seed_salt))
        u = np.zeros(d, dtype=np.int64)
        v = np.zeros(d, dtype=np.int64)
        for j in range(m):
            u[j] = gap[j]
        lv, pu, pv, a, b, cnt, st = indep_renewals_nd(ku, kv, p, u, v, 1, maxh)
        status[i] = st
        if cnt == 1:
            psi_u[i] = pu[0]
            psi_v[i] = pv[0]
            t1[i] = lv[0]
        else:
            t1[i] = 0
    return psi_u, psi_v, t1, status


@njit(cache=True, parallel=True)
def uniform_block2(key, x0, t0, width, height):
    out = np.empty((height, width), dtype=np.float64)
    for j in prange(height):
        for i in range(width):
            out[j, i] = u2(key, x0 + i, t0 + j)
    return out
