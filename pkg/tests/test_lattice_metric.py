import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meandim.lattice_metric import (
    Boundary,
    Box,
    CapExceeded,
    Cover,
    Explicit,
    MetricMatrix,
    chain_component_split,
    cover_join,
    cover_order,
    covering_number_bracket,
    mesh,
    packing_number,
    trivial_cover,
    window_points,
)


def circle_metric(n, circumference=1.0):
    t = np.arange(n) * circumference / n
    diff = np.abs(t[:, None] - t[None, :])
    return MetricMatrix(np.minimum(diff, circumference - diff))


def brute_covering_number(m, eps):
    """Smallest number of diameter < eps subsets covering everything."""
    n = m.n
    good = [s for r in range(1, n + 1) for s in itertools.combinations(range(n), r)
            if m.diameter(s) < eps]
    for k in range(1, n + 1):
        for fam in itertools.combinations(good, k):
            if set().union(*fam) == set(range(n)):
                return k
    return n


def brute_packing(m, eps):
    for r in range(m.n, 0, -1):
        for s in itertools.combinations(range(m.n), r):
            if all(m.dist[i, j] >= eps for i, j in itertools.combinations(s, 2)):
                return r
    return 0


class TestWindows:
    def test_box(self):
        assert len(window_points(Box(1, 2))) == 9

    def test_boundary_2d(self):
        assert len(window_points(Boundary(1, 2))) == 8

    def test_boundary_3d_brute(self):
        pts = [p for p in itertools.product(range(-2, 3), repeat=3)
               if max(abs(c) for c in p) == 2]
        assert len(pts) == 98
        assert window_points(Boundary(2, 3)) == sorted(pts)

    @pytest.mark.parametrize("N,k", [(1, 1), (2, 2), (3, 2), (1, 3), (3, 3)])
    def test_boundary_size_bound(self, N, k):
        pts = window_points(Boundary(N, k))
        assert len(pts) == Boundary(N, k).size()
        assert len(pts) <= 2 * k * (2 * N + 1) ** (k - 1)

    def test_cap(self):
        with pytest.raises(CapExceeded):
            window_points(Box(10, 3), cap=100)

    def test_explicit_deterministic(self):
        assert window_points(Explicit(((1, 0), (0, 0), (1, 0)))) == [(0, 0), (1, 0)]


class TestCovers:
    def test_singletons_order_zero(self):
        assert cover_order(Cover.of([{i} for i in range(5)], 5)) == 0

    def test_duplicate_full_sets(self):
        assert cover_order(Cover.of([range(4), range(4)], 4)) == 1

    def test_three_sets_shared_point(self):
        c = Cover.of([{0, 1}, {1, 2}, {1, 3}], 4)
        # point 1 lies in all three sets
        assert c.multiplicity().tolist() == [1, 3, 1, 1]
        assert cover_order(c) == 2

    def test_empty_cover_rejected(self):
        with pytest.raises(ValueError):
            cover_order(Cover((), 0))

    def test_join_with_trivial(self):
        c = Cover.of([{0, 1}, {1, 2}, {3}], 4)
        assert set(cover_join(c, trivial_cover(4)).sets) == set(c.sets)

    def test_join_singletons(self):
        s = Cover.of([{i} for i in range(4)], 4)
        assert set(cover_join(s, s).sets) == set(s.sets)

    def test_join_order_bound_exhaustive(self):
        u = Cover.of([{0, 1, 2}, {2, 3, 4}], 5)
        v = Cover.of([{0, 1}, {1, 2, 3}, {3, 4}], 5)
        assert cover_order(u) == 1 and cover_order(v) == 1
        j = cover_join(u, v)
        mult = [sum(p in s for s in j.sets) for p in range(5)]
        assert j.is_valid()
        assert max(mult) - 1 == cover_order(j) <= 3

    def test_join_mismatch(self):
        with pytest.raises(ValueError):
            cover_join(trivial_cover(3), trivial_cover(4))


class TestCounting:
    def test_equilateral(self):
        m = MetricMatrix(1 - np.eye(3))
        b = covering_number_bracket(m, 0.5)
        assert b.lb == b.ub == 3
        assert packing_number(m, 0.5) == 3

    def test_single_point(self):
        m = MetricMatrix(np.zeros((1, 1)))
        assert covering_number_bracket(m, 0.1).ub == 1
        assert packing_number(m, 0.1) == 1

    def test_circle_eight_points(self):
        m = circle_metric(8)
        assert brute_covering_number(m, 0.3) == 3
        b = covering_number_bracket(m, 0.3)
        assert b.exact and b.lb == b.ub == 3
        # the returned witness is a genuine cover with small sets
        c = Cover.of(b.witness, 8)
        assert c.is_valid() and mesh(c, m) < 0.3

    def test_collinear_packing(self):
        m = MetricMatrix.from_points([0.0, 0.1, 0.2])
        assert brute_packing(m, 0.15) == 2
        assert packing_number(m, 0.15) == 2

    def test_large_sample_brackets(self):
        rng = np.random.default_rng(3)
        m = MetricMatrix.from_points(rng.random((60, 2)))
        b = covering_number_bracket(m, 0.2)
        assert not b.exact or b.lb == b.ub
        assert b.lb <= b.ub
        c = Cover.of(b.witness, 60)
        assert c.is_valid() and mesh(c, m) < 0.2

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 9), st.integers(0, 10**6),
           st.floats(0.05, 0.8), st.floats(0.05, 0.8))
    def test_bracket_invariants(self, n, seed, e1, e2):
        rng = np.random.default_rng(seed)
        m = MetricMatrix.from_points(rng.random((n, 2)))
        e1, e2 = sorted((e1, e2))
        b1, b2 = covering_number_bracket(m, e1), covering_number_bracket(m, e2)
        exact = brute_covering_number(m, e1)
        assert b1.lb <= exact <= b1.ub
        assert packing_number(m, 2 * e1) <= b1.ub
        assert b1.lb >= b2.lb and b1.ub >= b2.ub


class TestChainSplit:
    def test_close_pair_unchanged(self):
        m = MetricMatrix.from_points([0.0, 0.1])
        c = chain_component_split(trivial_cover(2), m, 0.2)
        assert c.sets == (frozenset({0, 1}),)

    def test_far_pair_split(self):
        m = MetricMatrix.from_points([0.0, 5.0])
        c = chain_component_split(trivial_cover(2), m, 0.2)
        assert set(c.sets) == {frozenset({0}), frozenset({1})}

    def test_chain_on_line(self):
        m = MetricMatrix.from_points([0.0, 0.1, 0.2, 3.0])
        c = chain_component_split(trivial_cover(4), m, 0.15)
        assert set(c.sets) == {frozenset({0, 1, 2}), frozenset({3})}

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 12), st.integers(0, 10**6), st.floats(0.05, 0.6))
    def test_order_preserved(self, n, seed, t):
        rng = np.random.default_rng(seed)
        m = MetricMatrix.from_points(rng.random((n, 1)))
        sets = [set(np.flatnonzero(rng.random(n) < 0.5)) | {i} for i in range(0, n, 2)]
        sets.append(set(range(n)))
        c = Cover.of(sets, n)
        assert cover_order(chain_component_split(c, m, t)) == cover_order(c)
