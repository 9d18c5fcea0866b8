from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rectpart.loads import build_rect_index, build_tensor, dim_prefix, prefix_inverse, rect_load

from conftest import naive_rect, random_tensor

F1 = [0, 5, 9, 11, 11, 12, 12, 14, 15]
F2 = [0, 2, 3, 4, 7, 8, 9, 13, 15]


class TestBuildTensor:
    def test_toy_total(self, toy):
        assert toy.total_load == 15
        assert toy.nnz == 15

    def test_duplicates_merge(self):
        t = build_tensor((4,), [[0], [0]], [1, 2])
        assert t.entries() == [((0,), 3)]

    def test_empty(self):
        t = build_tensor((3, 3), [])
        assert t.total_load == 0
        assert t.nnz == 0

    def test_zero_weight_dropped(self):
        t = build_tensor((3,), [[0], [1]], [0.0, 2.0])
        assert t.entries() == [((1,), 2)]

    def test_out_of_range_reports_entry(self):
        with pytest.raises(ValueError, match=r"entry 1 has index \(0, 5\)"):
            build_tensor((3, 3), [(0, 0), (0, 5)])

    def test_negative_weight(self):
        with pytest.raises(ValueError, match="negative weight"):
            build_tensor((3,), [[0]], [-1.0])

    def test_real_weights_stay_real(self):
        t = build_tensor((2, 2), [(0, 0), (1, 1)], [0.5, 1.25])
        assert t.total_load == 1.75
        assert not t.is_integral

    @given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), st.integers(1, 3)), max_size=40))
    def test_merge_preserves_total(self, raw):
        idx = [(a, b) for a, b, _ in raw]
        w = [float(x) for _, _, x in raw]
        t = build_tensor((5, 5), idx, w if raw else None)
        assert t.total_load == sum(w)


class TestDimPrefix:
    def test_toy_rows(self, toy):
        assert dim_prefix(toy, 0).values.tolist() == F1

    def test_toy_cols(self, toy):
        assert dim_prefix(toy, 1).values.tolist() == F2

    def test_all_ones(self):
        t = build_tensor((4,), [[0], [1], [2], [3]])
        assert dim_prefix(t, 0).values.tolist() == [0, 1, 2, 3, 4]

    def test_bad_dim(self, toy):
        with pytest.raises(ValueError):
            dim_prefix(toy, 2)

    @given(st.integers(0, 10_000))
    def test_monotone_with_fixed_ends(self, seed):
        rng = np.random.default_rng(seed)
        t = random_tensor(rng, 7, 9, nnz=20)
        for d in (0, 1):
            v = dim_prefix(t, d).values
            assert v[0] == 0 and v[-1] == t.total_load
            assert np.all(np.diff(v) >= 0)


class TestPrefixInverse:
    @pytest.mark.parametrize("y,x", [(Fraction(17, 3), 1), (Fraction(31, 3), 2)])
    def test_rows(self, y, x):
        assert prefix_inverse(np.array(F1), y) == x

    @pytest.mark.parametrize("y,x", [(5, 3), (11, 6)])
    def test_cols(self, y, x):
        assert prefix_inverse(np.array(F2), y) == x

    def test_leading_zeros(self):
        assert prefix_inverse(np.array([0, 0, 0, 1, 2]), 0) == 2

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            prefix_inverse(np.array(F1), 16)
        with pytest.raises(ValueError):
            prefix_inverse(np.array(F1), -0.5)

    @given(st.lists(st.integers(0, 3), min_size=1, max_size=12))
    def test_largest_le(self, costs):
        values = np.concatenate([[0], np.cumsum(costs)])
        for x, v in enumerate(values):
            got = prefix_inverse(values, v)
            assert got >= x
            assert values[got] <= v
            assert got == len(values) - 1 or values[got + 1] > v


class TestRectIndex:
    def test_toy_full_range(self, toy):
        idx = build_rect_index(toy)
        assert rect_load(idx, (0, 8), (0, 8)) == 15

    def test_toy_tiles(self, toy):
        idx = build_rect_index(toy)
        assert rect_load(idx, (0, 2), (4, 8)) == 5
        assert rect_load(idx, (2, 4), (0, 2)) == 0
        assert rect_load(idx, (3, 3), (0, 8)) == 0

    def test_empty_tensor(self):
        idx = build_rect_index(build_tensor((5, 6), []))
        assert rect_load(idx, (0, 5), (0, 6)) == 0
        assert idx.grid([0, 2, 5], [0, 6]).tolist() == [[0], [0]]

    def test_rejects_non_2d(self):
        with pytest.raises(ValueError):
            build_rect_index(build_tensor((4,), [[1]]))

    def test_ranges_are_clamped(self, toy):
        idx = build_rect_index(toy)
        assert rect_load(idx, (-3, 100), (-1, 99)) == 15

    @pytest.mark.parametrize("shape", [(200, 300), (300, 200), (1, 50), (50, 1)])
    def test_random_queries_match_scan(self, shape):
        rng = np.random.default_rng(sum(shape))
        t = random_tensor(rng, *shape, nnz=5000)
        idx = build_rect_index(t)
        n, m = shape
        for _ in range(1000):
            r1, r2 = np.sort(rng.integers(0, n + 1, 2))
            c1, c2 = np.sort(rng.integers(0, m + 1, 2))
            assert rect_load(idx, (r1, r2), (c1, c2)) == naive_rect(t, r1, r2, c1, c2)

    def test_weighted_queries(self):
        rng = np.random.default_rng(3)
        t = random_tensor(rng, 40, 30, nnz=300, weighted=True)
        idx = build_rect_index(t)
        for _ in range(300):
            r1, r2 = np.sort(rng.integers(0, 41, 2))
            c1, c2 = np.sort(rng.integers(0, 31, 2))
            assert rect_load(idx, (r1, r2), (c1, c2)) == pytest.approx(naive_rect(t, r1, r2, c1, c2), abs=1e-9)

    @settings(max_examples=60)
    @given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 60), st.integers(0, 2**32 - 1))
    def test_grid_matches_dense(self, n, m, nnz, seed):
        rng = np.random.default_rng(seed)
        t = random_tensor(rng, n, m, nnz=nnz)
        dense = t.to_dense()
        rb = np.concatenate([[0], np.sort(rng.integers(0, n + 1, 2)), [n]])
        cb = np.concatenate([[0], np.sort(rng.integers(0, m + 1, 3)), [m]])
        want = np.array([[dense[rb[a]:rb[a + 1], cb[b]:cb[b + 1]].sum() for b in range(4)] for a in range(3)])
        assert np.array_equal(build_rect_index(t).grid(rb, cb), want)
