import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drainage import _kernels as K
from drainage.geometry import (
    Cone,
    LevelSlab,
    Trapezoid,
    apex,
    ball_size,
    cone_size,
    in_light_cone,
    slab_points,
)
from oracles import brute_cone, brute_slab, brute_trapezoid

small = st.integers(-20, 20)


def test_apex():
    assert apex((0, 0), 3) == (0, 3)
    assert apex((2, -1, 5), 1) == (2, -1, 6)
    with pytest.raises(ValueError):
        apex((0, 0), 0)


@given(small, small, st.integers(1, 10), st.integers(1, 10))
def test_apex_additive(x, t, j, k):
    assert apex(apex((x, t), j), k) == apex((x, t), j + k)


def test_slab_examples():
    pts = list(LevelSlab((0, 0), 3))
    assert pts == [(x, 3) for x in range(-3, 4)]
    assert list(LevelSlab((5, 2), 1)) == [(4, 3), (5, 3), (6, 3)]
    assert len(LevelSlab((0, 0, 0), 2)) == 13
    assert list(LevelSlab((0, 0), 0)) == []


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_slab_matches_brute(d, k):
    u = tuple(range(d))
    got = list(slab_points(LevelSlab(u, k)))
    assert got == brute_slab(u, k)
    assert len(LevelSlab(u, k)) == len(got)


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_kernel_slab_order_matches(d, k):
    offs = K.slab_offsets(d - 1, k)
    base = (0,) * d
    expect = [w[:-1] for w in brute_slab(base, k)]
    assert [tuple(int(c) for c in row) for row in offs] == expect


def test_cone_sizes():
    assert cone_size(2, 3) == 15
    assert cone_size(2, 0) == 0
    assert cone_size(3, 2) == 18
    with pytest.raises(ValueError):
        cone_size(2, -1)


@pytest.mark.parametrize("h", range(0, 21))
def test_cone_size_d2_closed_form(h):
    assert cone_size(2, h) == h * h + 2 * h


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("h", range(1, 7))
def test_cone_is_disjoint_union_of_slabs(d, h):
    u = (1,) * d
    pts = list(Cone(u, h))
    assert len(pts) == len(set(pts)) == cone_size(d, h)
    assert sorted(pts) == sorted(brute_cone(u, h))
    assert set(Cone(u, h - 1)) <= set(pts)


@pytest.mark.parametrize("r", range(0, 9))
def test_ball_size_counts(r):
    n = sum(1 for a in range(-r, r + 1) for b in range(-r, r + 1) if abs(a) + abs(b) <= r)
    assert ball_size(2, r) == n
    assert ball_size(1, r) == 2 * r + 1


@settings(max_examples=300)
@given(small, small, small, small)
def test_membership_agrees_with_light_cone(x, t, wx, wt):
    u, w = (x, t), (wx, wt)
    k = wt - t
    assert in_light_cone(u, w) == (k >= 1 and abs(wx - x) <= k)
    if k >= 1:
        assert (w in Cone(u, k)) == in_light_cone(u, w)
        assert (w in LevelSlab(u, k)) == in_light_cone(u, w)


def test_trapezoid_empty_and_invalid():
    assert Trapezoid((0, 0), 3, 3).empty
    assert len(Trapezoid((0, 0), 3, 3)) == 0
    assert list(Trapezoid((0, 0), 3, 3)) == []
    assert Trapezoid((0, 0), -2, 0).empty
    with pytest.raises(ValueError):
        Trapezoid((0, 0), 4, 3)


def test_trapezoid_membership_example():
    t = Trapezoid((0, 0), 1, 3)
    assert (0, 2) in t
    assert (3, 3) in t
    assert (0, 1) not in t
    assert (3, 2) not in t
    assert (0, 4) not in t
    assert len(t) == 5 + 7


@settings(max_examples=100)
@given(
    st.tuples(st.integers(-3, 3), st.integers(-3, 3)),
    st.integers(-2, 6),
    st.integers(0, 6),
)
def test_trapezoid_matches_brute(base, r, ds):
    s = r + ds
    t = Trapezoid(base, r, s)
    brute = brute_trapezoid(base, r, s)
    assert set(t) == brute
    assert len(t) == len(brute)
    for w in brute:
        assert w in t
    for w in brute_cone(base, s + 1):
        assert (w in t) == (w in brute)


@settings(max_examples=200)
@given(small, st.integers(-10, 10), st.integers(1, 15))
def test_shared_points_lie_in_both_slabs(xu, xz, l):
    # for two same-level bases, a point in both cones at level l lies in both level-l slabs
    u, z = (xu, 0), (xz, 0)
    for y in range(-40, 41):
        w = (y, l)
        if in_light_cone(u, w) and in_light_cone(z, w):
            assert w in LevelSlab(u, l) and w in LevelSlab(z, l)
