import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meandim.lattice_metric import Box, CapExceeded, Explicit, window_points
from meandim.systems import (
    AlphabetSite,
    ArithmeticUnion,
    ConfigWindow,
    FiniteSet,
    InsufficientMargin,
    ProductShiftSystem,
    QuantizedTorus,
    ToralAutomorphism,
    TorusSite,
    build_linear_sft,
    build_restricted_Y,
    enumerate_patterns,
    full_shift,
    golden_mean_shift,
    restricted_patterns_bruteforce,
    subgroup_box_density,
    weighted_series_metric,
    window_metric,
)

CAT = ToralAutomorphism(((2, 1), (1, 1)))


def brute_linear_sft(q, L):
    """Count L x L assignments satisfying the rule at every interior placement."""
    count = 0
    for vals in itertools.product(range(q), repeat=L * L):
        x = np.array(vals).reshape(L, L)  # x[m, n]
        if all((3 * x[m, n] + x[m + 1, n] + x[m, n + 1]) % q == 0
               for m in range(L - 1) for n in range(L - 1)):
            count += 1
    return count


class TestTorus:
    def test_cat_map_mod_5(self):
        site = TorusSite(QuantizedTorus(2, 5), CAT)
        t = site.torus
        img = site.apply_h(t.index([1, 2]))
        assert t.coords(img).tolist() == [4, 3]

    def test_inverse_roundtrip(self):
        site = TorusSite(QuantizedTorus(2, 7), CAT)
        pts = np.arange(site.size)
        assert np.array_equal(site.apply_h(site.apply_h(pts, 3), -3), pts)

    def test_euclidean_diameter(self):
        t = QuantizedTorus(2, 8)
        d = t.distance(np.arange(t.size)[:, None], np.arange(t.size)[None, :])
        assert d.max() == pytest.approx(1 / np.sqrt(2))
        assert t.diameter == pytest.approx(1 / np.sqrt(2))

    def test_sup_norm(self):
        t = QuantizedTorus(2, 4, "sup")
        assert t.distance(t.index([0, 0]), t.index([1, 3])) == pytest.approx(0.25)

    def test_det_check(self):
        with pytest.raises(ValueError):
            ToralAutomorphism(((2, 0), (0, 1)))

    def test_hyperbolic(self):
        assert CAT.is_hyperbolic()
        assert not ToralAutomorphism(((1, 1), (0, 1))).is_hyperbolic()


class TestApply:
    def test_shift_zero(self):
        sys = full_shift(2, 2)
        c = ConfigWindow(np.arange(25).reshape(5, 5) % 2, 2)
        assert np.array_equal(sys.apply((0, 0), c).values, c.values)

    def test_identity_cellwise(self):
        sys = ProductShiftSystem(TorusSite(QuantizedTorus(2, 5), ToralAutomorphism(((1, 0), (0, 1)))))
        c = ConfigWindow(np.arange(7), 3)
        out = sys.apply((0, 4), c)
        assert out.margin == 3 and np.array_equal(out.values, c.values)

    def test_margin(self):
        sys = full_shift(1, 2)
        c = ConfigWindow(np.zeros(5), 2)
        assert sys.apply((1,), c).margin == 1
        with pytest.raises(InsufficientMargin):
            sys.apply((3,), c)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6), st.integers(-2, 2), st.integers(-3, 3))
    def test_generators_commute(self, seed, a, t):
        site = TorusSite(QuantizedTorus(2, 6), CAT)
        sys = ProductShiftSystem(site)
        rng = np.random.default_rng(seed)
        c = ConfigWindow(rng.integers(0, site.size, 9), 4)
        one = sys.apply((a, 0), sys.apply((0, t), c))
        two = sys.apply((0, t), sys.apply((a, 0), c))
        assert one.margin == two.margin and np.array_equal(one.values, two.values)


class TestMetrics:
    def test_full_shift_difference_at_three(self):
        sys = full_shift(1, 2)
        x = ConfigWindow(np.zeros(21, dtype=int), 10)
        yv = np.zeros(21, dtype=int)
        yv[10 + 3] = 1
        y = ConfigWindow(yv, 10)
        assert window_metric(sys, Box(5, 1), x, y) == 1.0
        assert window_metric(sys, Box(2, 1), x, y) == 0.0
        assert window_metric(sys, Box(5, 1), x, x) == 0.0

    def test_single_point_window(self):
        site = TorusSite(QuantizedTorus(2, 8), CAT)
        sys = ProductShiftSystem(site)
        x = ConfigWindow(np.array([0, 3, 5]), 1)
        y = ConfigWindow(np.array([1, 9, 2]), 1)
        assert window_metric(sys, Explicit(((0, 0),)), x, y) == pytest.approx(
            float(site.distance(3, 9)))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10**6))
    def test_union_is_max(self, seed):
        rng = np.random.default_rng(seed)
        site = TorusSite(QuantizedTorus(2, 6), CAT)
        sys = ProductShiftSystem(site)
        x = ConfigWindow(rng.integers(0, 36, 9), 4)
        y = ConfigWindow(rng.integers(0, 36, 9), 4)
        p1 = [tuple(p) for p in rng.integers(-2, 3, (3, 2))]
        p2 = [tuple(p) for p in rng.integers(-2, 3, (3, 2))]
        w1, w2, w = Explicit(tuple(p1)), Explicit(tuple(p2)), Explicit(tuple(p1 + p2))
        assert window_metric(sys, w, x, y) == max(
            window_metric(sys, w1, x, y), window_metric(sys, w2, x, y))

    def test_weighted_equal(self):
        x = ConfigWindow(np.zeros(11), 5)
        assert weighted_series_metric(x, x, AlphabetSite(2)) == (0.0, 2.0**-4)

    def test_weighted_origin(self):
        x = ConfigWindow(np.zeros(21), 10)
        yv = np.zeros(21)
        yv[10] = 1
        lo, hi = weighted_series_metric(x, ConfigWindow(yv, 10), AlphabetSite(2))
        assert (lo, hi) == (1.0, 1 + 2.0**-9)

    def test_weighted_pm_one(self):
        x = ConfigWindow(np.zeros(9), 4)
        yv = np.zeros(9)
        yv[[3, 5]] = 1
        lo, hi = weighted_series_metric(x, ConfigWindow(yv, 4), AlphabetSite(2))
        assert (lo, hi) == (1.0, 1 + 2.0**-3)


class TestPatterns:
    def test_q2_box2(self):
        sys = build_linear_sft(2)
        assert brute_linear_sft(2, 2) == 8
        assert len(enumerate_patterns(sys, _box(2))) == 8

    def test_q3_box2(self):
        assert brute_linear_sft(3, 2) == 27
        assert enumerate_patterns(build_linear_sft(3), _box(2), count_only=True) == 27

    @pytest.mark.parametrize("q,L", [(2, 2), (2, 3), (3, 2), (3, 3), (5, 2)])
    def test_count_law_brute(self, q, L):
        sys = build_linear_sft(q)
        assert brute_linear_sft(q, L) == q ** (2 * L - 1)
        assert len(enumerate_patterns(sys, _box(L))) == q ** (2 * L - 1)

    @pytest.mark.parametrize("q,L", [(5, 3), (2, 6), (3, 5), (5, 4)])
    def test_count_law_dp(self, q, L):
        assert enumerate_patterns(build_linear_sft(q), _box(L), count_only=True) == q ** (2 * L - 1)

    def test_legality(self):
        sys = build_linear_sft(2)
        assert sys.is_legal(ConfigWindow(np.zeros((3, 3), dtype=int), 1))
        # constant 1/2: 3/2 + 1/2 + 1/2 = 5/2 is 1/2 mod 1
        assert not sys.is_legal(ConfigWindow(np.ones((3, 3), dtype=int), 1))

    def test_full_shift_five_cells(self):
        assert len(enumerate_patterns(full_shift(1, 2), _line(5))) == 32

    def test_golden_mean(self):
        counts = [enumerate_patterns(golden_mean_shift(), _line(n), count_only=True)
                  for n in range(1, 8)]
        assert counts == [2, 3, 5, 8, 13, 21, 34]

    def test_patterns_are_legal_and_distinct(self):
        sys = build_linear_sft(3)
        pats = enumerate_patterns(sys, _box(3))
        assert len({tuple(p) for p in pats}) == len(pats)
        for p in pats[:50]:
            # cells ordered with the last coordinate outermost: x[m, n] = p[n*3 + m]
            grid = p.reshape(3, 3).T
            assert sys.is_legal(ConfigWindow(grid, 1))

    def test_translate_invariance(self):
        sys = build_linear_sft(3)
        base = window_points(_box(3))
        moved = Explicit(tuple((a + 7, b - 4) for a, b in base))
        assert enumerate_patterns(sys, moved, count_only=True) == \
            enumerate_patterns(sys, _box(3), count_only=True)

    def test_cap(self):
        with pytest.raises(CapExceeded):
            enumerate_patterns(full_shift(1, 2), _line(30), cap=1000)


def _box(L):
    return Explicit(tuple(itertools.product(range(L), repeat=2)))


def _line(n):
    return Explicit(tuple((i,) for i in range(n)))


class TestRestricted:
    def _base(self):
        return ProductShiftSystem(AlphabetSite(2))

    def test_full_lambda(self):
        Y = build_restricted_Y(self._base(), ArithmeticUnion(1, [0]), [0])
        assert Y.box_count(2) == 2**5

    def test_empty_lambda(self):
        Y = build_restricted_Y(self._base(), FiniteSet([]), [0])
        assert Y.box_count(3) == 1

    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_two_z_matches_oracle(self, N):
        Y = build_restricted_Y(self._base(), ArithmeticUnion(2, [0]), [0])
        assert Y.box_count(N) == len(restricted_patterns_bruteforce(Y, N))

    def test_two_z_value(self):
        Y = build_restricted_Y(self._base(), ArithmeticUnion(2, [0]), [0])
        # columns -2..2: even offset frees 3 columns, odd frees 2, overlap only all-zero
        assert Y.box_count(2) == 2**3 + 2**2 - 1

    def test_symbolic_analog(self):
        Y = build_restricted_Y(full_shift(2, 2), ArithmeticUnion(2, [0]), [0])
        for N in (1, 2):
            assert Y.box_count(N) == len(restricted_patterns_bruteforce(Y, N))
        N = 2
        assert Y.box_count(N) == 2 ** ((2 * N + 1) * (N + 1)) + 2 ** ((2 * N + 1) * N) - 1

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 4), st.sets(st.integers(0, 3), min_size=1), st.integers(1, 3))
    def test_periodic_lambda_oracle(self, p, res, N):
        res = {r % p for r in res}
        site = TorusSite(QuantizedTorus(1, 3))  # identity h, 3 points
        base = ProductShiftSystem(site)
        Y = build_restricted_Y(base, ArithmeticUnion(p, res), [0])
        assert Y.box_count(N) == len(restricted_patterns_bruteforce(Y, N))

    def test_finite_lambda_oracle(self):
        Y = build_restricted_Y(self._base(), FiniteSet([0, 3]), [0])
        for N in (1, 2, 3):
            assert Y.box_count(N) == len(restricted_patterns_bruteforce(Y, N))

    def test_noninvariant_A(self):
        site = TorusSite(QuantizedTorus(2, 5), CAT)
        with pytest.raises(ValueError):
            build_restricted_Y(ProductShiftSystem(site), ArithmeticUnion(2, [0]), [1])
        Y = build_restricted_Y(ProductShiftSystem(site), ArithmeticUnion(2, [0]), [0])
        assert Y.A == (0,)


class TestSubgroupDensity:
    def test_axis(self):
        assert subgroup_box_density([[1, 0]], 10) == (21, Fraction(10, 21))

    def test_even_axis(self):
        assert subgroup_box_density([[2, 0]], 10)[0] == 11

    def test_diagonal(self):
        assert subgroup_box_density([[1, 1]], 10)[0] == 21

    def test_rank_mismatch(self):
        with pytest.raises(ValueError):
            subgroup_box_density([[1, 0], [0, 1]], 3)
