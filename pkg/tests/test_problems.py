import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rectpart.loads import build_tensor
from rectpart.problems import (
    ConstraintSpec,
    evaluate,
    make_rpp1d,
    make_rpp2d,
    make_spgemm3d,
    make_srpp2d,
    make_tri3d,
    normalized_load,
    tile_loads,
)
from rectpart.sgo import OptimizerConfig, optimize

from conftest import TOY_P, naive_tiles, random_partition, random_tensor


def naive_spgemm(A, B, p):
    ta = naive_tiles(A, p[0], p[1])
    tb = naive_tiles(B, p[1], p[2])
    return ta[:, :, None] + tb[None, :, :]


def naive_tri(A, p):
    t01 = naive_tiles(A, p[0], p[1])
    t12 = naive_tiles(A, p[1], p[2])
    t02 = naive_tiles(A, p[0], p[2])
    return t01[:, :, None] + t12[None, :, :] + t02[:, None, :]


class TestConstraintSpec:
    def test_unconstrained(self):
        s = ConstraintSpec.unconstrained([2, 3])
        assert s.groups == ((0,), (1,)) and s.parts == (2, 3) and s.d == 2

    def test_group_of(self):
        s = ConstraintSpec.from_groups([(0, 2), (1,)], [4, 5, 4])
        assert s.group_of(2) == 0 and s.group_of(1) == 1

    def test_rejects_mismatched_k(self):
        with pytest.raises(ValueError):
            ConstraintSpec.from_groups([(0, 1)], [2, 3])

    def test_rejects_overlap(self):
        with pytest.raises(ValueError):
            ConstraintSpec((( 0, 1), (1,)), (2, 2))


class TestRpp2d:
    def test_toy(self, toy):
        prob = make_rpp2d(toy, 3, 3)
        ev = evaluate(prob, (TOY_P, TOY_P))
        assert ev.max_load == 5 and ev.argmax == (0, 2)
        assert ev.tiles.tolist() == [[2, 2, 5], [0, 2, 0], [1, 0, 3]]

    def test_single_part(self, toy):
        assert evaluate(make_rpp2d(toy, 1, 1), ([0, 8], [0, 8])).max_load == 15

    def test_worked_results(self, toy):
        assert evaluate(make_rpp2d(toy, 3, 3), ([0, 1, 2, 8], [0, 3, 6, 8])).max_load == 2
        assert evaluate(make_srpp2d(toy, 3), ([0, 1, 6, 8],) * 2).max_load == 3

    def test_rejects_non_matrix(self):
        with pytest.raises(ValueError):
            make_rpp2d(build_tensor((4,), [[0]]), 2, 2)

    def test_random_matches_naive(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            A = random_tensor(rng, 25, 17, density=0.2, weighted=True)
            p = (random_partition(rng, 25, 4), random_partition(rng, 17, 3))
            assert np.allclose(tile_loads(make_rpp2d(A, 4, 3), p), naive_tiles(A, *p))

    def test_tile_sum_is_total(self):
        rng = np.random.default_rng(1)
        A = random_tensor(rng, 30, 30, density=0.1)
        p = (random_partition(rng, 30, 5), random_partition(rng, 30, 6))
        assert tile_loads(make_rpp2d(A, 5, 6), p).sum() == A.total_load

    def test_malformed_partition(self, toy):
        prob = make_rpp2d(toy, 3, 3)
        with pytest.raises(ValueError, match="boundaries"):
            evaluate(prob, ([0, 8], TOY_P))
        with pytest.raises(ValueError, match="monotone"):
            evaluate(prob, ([0, 5, 3, 8], TOY_P))
        with pytest.raises(ValueError, match="monotone"):
            evaluate(prob, ([0, 2, 4, 7], TOY_P))
        with pytest.raises(ValueError):
            evaluate(prob, (TOY_P,))


class TestSrpp2d:
    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            make_srpp2d(build_tensor((3, 4), []), 2)

    def test_diagonal(self):
        from rectpart.baselines import brute_force_optimal

        eye = build_tensor((9, 9), [(i, i) for i in range(9)])
        _, load = brute_force_optimal(make_srpp2d(eye, 3))
        assert load == 3

    def test_sgo_respects_symmetry(self):
        rng = np.random.default_rng(2)
        A = random_tensor(rng, 20, 20, density=0.2)
        for seed in range(3):
            res = optimize(make_srpp2d(A, 4), OptimizerConfig(seed=seed))
            assert np.array_equal(res.partition[0], res.partition[1])


class TestSpgemm3d:
    def test_toy_tile(self, toy):
        prob = make_spgemm3d(toy, toy, 3)
        assert prob.k == (3, 3, 3)
        assert tile_loads(prob, (TOY_P,) * 3)[0, 0, 0] == 4

    def test_per_dim_k(self, toy):
        assert make_spgemm3d(toy, toy, (2, 3, 4)).k == (2, 3, 4)

    def test_empty_b_reduces_to_2d(self, toy):
        prob = make_spgemm3d(toy, build_tensor((8, 5), []), (3, 3, 2))
        t = tile_loads(prob, (TOY_P, TOY_P, [0, 2, 5]))
        base = naive_tiles(toy, np.array(TOY_P), np.array(TOY_P))
        assert np.array_equal(t, np.repeat(base[:, :, None], 2, axis=2))

    def test_dimension_mismatch(self, toy):
        with pytest.raises(ValueError, match="inner dimensions"):
            make_spgemm3d(toy, build_tensor((7, 3), []), 2)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31))
    def test_matches_naive(self, seed):
        rng = np.random.default_rng(seed)
        n, m, q = rng.integers(1, 30, 3)
        A = random_tensor(rng, n, m, nnz=int(rng.integers(0, 200)))
        B = random_tensor(rng, m, q, nnz=int(rng.integers(0, 200)))
        k = tuple(int(x) for x in rng.integers(1, 5, 3))
        p = tuple(random_partition(rng, e, kk) for e, kk in zip((n, m, q), k))
        assert np.array_equal(tile_loads(make_spgemm3d(A, B, k), p), naive_spgemm(A, B, p))

    def test_prefix_sums_terms(self, toy):
        prob = make_spgemm3d(toy, toy, 2)
        F = prob.prefix(1)
        assert F[-1] == 30
        assert prob.prefix(0)[-1] == 15 and prob.prefix(2)[-1] == 15


class TestTri3d:
    def test_toy_tile(self, toy):
        assert tile_loads(make_tri3d(toy, 3), (TOY_P,) * 3)[0, 0, 0] == 6

    def test_empty(self):
        t = tile_loads(make_tri3d(build_tensor((6, 6), []), 2), ([0, 3, 6],) * 3)
        assert not t.any()

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            make_tri3d(build_tensor((3, 4), []), 2)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31))
    def test_matches_naive(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 30))
        A = random_tensor(rng, n, n, nnz=int(rng.integers(0, 200)))
        k = int(rng.integers(1, 5))
        p = random_partition(rng, n, k)
        assert np.array_equal(tile_loads(make_tri3d(A, k), (p, p, p)), naive_tri(A, (p, p, p)))

    def test_sgo_respects_symmetry(self):
        rng = np.random.default_rng(3)
        A = random_tensor(rng, 20, 20, density=0.2)
        for seed in range(3):
            res = optimize(make_tri3d(A, 3), OptimizerConfig(seed=seed))
            assert np.array_equal(res.partition[0], res.partition[1])
            assert np.array_equal(res.partition[0], res.partition[2])


class TestNormalizedLoad:
    def test_worked_result(self, toy):
        assert normalized_load(make_rpp2d(toy, 3, 3), ([0, 1, 2, 8], [0, 3, 6, 8])) == pytest.approx(1.2)

    def test_perfect_balance(self):
        eye = build_tensor((8, 8), [(i, i) for i in range(8)])
        assert normalized_load(make_srpp2d(eye, 1), ([0, 8], [0, 8])) == 1.0
        ones = build_tensor((12,), [[i] for i in range(12)])
        assert normalized_load(make_rpp1d(ones, 3), ([0, 4, 8, 12],)) == 1.0

    def test_at_least_one(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            A = random_tensor(rng, 20, 20, density=0.2)
            p = (random_partition(rng, 20, 3), random_partition(rng, 20, 3))
            assert normalized_load(make_rpp2d(A, 3, 3), p) >= 1 - 1e-12
            assert normalized_load(make_tri3d(A, 3), (p[0],) * 3) >= 1 - 1e-12

    def test_empty(self):
        with pytest.raises(ValueError):
            normalized_load(make_rpp2d(build_tensor((4, 4), []), 2, 2), ([0, 2, 4],) * 2)
