from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ghzanon.lp import exact_membership, membership

SQUARE = np.array([[0, 1, 0, 1], [0, 0, 1, 1]])


def check_result(points, target, res):
    points = np.asarray(points)
    if res.feasible:
        assert sum(res.weights.values()) == 1
        assert all(w > 0 for w in res.weights.values())
        for i, t in enumerate(target):
            assert sum(w * int(points[i, j]) for j, w in res.weights.items()) == t
    else:
        dots = [sum(f * int(points[i, j]) for i, f in enumerate(res.functional)) for j in range(points.shape[1])]
        assert max(dots) == res.bound
        assert sum(f * t for f, t in zip(res.functional, target)) == res.value
        assert res.value > res.bound


def test_inside_square():
    target = [Fraction(1, 3), Fraction(1, 2)]
    res = exact_membership(SQUARE, target)
    assert res.feasible
    check_result(SQUARE, target, res)


def test_outside_square():
    target = [Fraction(3, 2), Fraction(1, 2)]
    res = exact_membership(SQUARE, target)
    assert not res.feasible
    check_result(SQUARE, target, res)


def test_vertex_and_edge():
    for target in ([1, 1], [Fraction(1, 2), 0]):
        res = exact_membership(SQUARE, target)
        assert res.feasible
        check_result(SQUARE, target, res)


def test_dimension_check():
    with pytest.raises(ValueError):
        exact_membership(SQUARE, [0])
    with pytest.raises(ValueError):
        membership(SQUARE, [0, 0], method="magic")


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_random_hulls(data):
    m = data.draw(st.integers(1, 4))
    N = data.draw(st.integers(1, 8))
    entries = data.draw(st.lists(st.integers(-3, 3), min_size=m * N, max_size=m * N))
    points = np.array(entries, dtype=np.int64).reshape(m, N)
    if data.draw(st.booleans()):
        weights = data.draw(st.lists(st.integers(0, 4), min_size=N, max_size=N))
        if sum(weights) == 0:
            weights[0] = 1
        target = [Fraction(int(points[i] @ weights), sum(weights)) for i in range(m)]
        res = exact_membership(points, target)
        assert res.feasible
    else:
        target = [Fraction(v, 2) for v in data.draw(st.lists(st.integers(-9, 9), min_size=m, max_size=m))]
        res = exact_membership(points, target)
    check_result(points, target, res)


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_seeded_agrees_with_exact(data):
    m, N = 3, 10
    entries = data.draw(st.lists(st.integers(-2, 2), min_size=m * N, max_size=m * N))
    points = np.array(entries, dtype=np.int64).reshape(m, N)
    target = [Fraction(v, 3) for v in data.draw(st.lists(st.integers(-6, 6), min_size=m, max_size=m))]
    exact = exact_membership(points, target)
    seeded = membership(points, target, method="seeded")
    assert exact.feasible == seeded.feasible
    check_result(points, target, seeded)


def test_degenerate_cube_vertices():
    # Many coincident and collinear columns exercise the anti-cycling switch.
    pts = np.array([[0, 1, 1, 0, 0, 1, 1, 0, 1, 1], [0, 0, 1, 1, 0, 0, 1, 1, 1, 0], [0, 0, 0, 0, 1, 1, 1, 1, 1, 0]])
    target = [Fraction(1, 2)] * 3
    res = exact_membership(pts, target, stall_limit=0)
    assert res.feasible
    check_result(pts, target, res)
