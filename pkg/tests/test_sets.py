"""Interval-matrix and matrix-zonotope algebra."""

import numpy as np
import pytest

from intervalmpc.sets import (
    IntervalMatrix,
    MatrixZonotope,
    bounding_box,
    entrywise_decomposition,
    interval_product,
    interval_sum,
    left_matrix_product,
    right_matrix_product,
    t_operator,
    t_operator_iterated,
    zonotope_minkowski_sum,
)

from _oracles import interval_membership_slack, zonotope_membership_residual


def rand_interval(rng, shape):
    return IntervalMatrix(rng.normal(size=shape), rng.uniform(0, 1, shape))


def rand_zonotope(rng, shape, g=3):
    return MatrixZonotope(rng.normal(size=shape),
                          [rng.normal(size=shape) for _ in range(g)])


class TestIntervalMatrix:
    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            IntervalMatrix([[0.0]], [[-1.0]])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            IntervalMatrix(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_from_bounds_round_trip(self):
        iv = IntervalMatrix.from_bounds([[1.0, -2.0]], [[3.0, 4.0]])
        assert np.allclose(iv.lower(), [[1.0, -2.0]])
        assert np.allclose(iv.upper(), [[3.0, 4.0]])

    def test_contains_and_sample(self):
        rng = np.random.default_rng(0)
        iv = rand_interval(rng, (3, 2))
        for _ in range(100):
            assert iv.contains(iv.sample(rng))


class TestIntervalSum:
    def test_scalar_example(self):
        out = interval_sum(IntervalMatrix([[1.0]], [[0.5]]),
                           IntervalMatrix([[2.0]], [[1.0]]))
        assert out.center == [[3.0]] and out.radius == [[1.5]]

    def test_zero_identity(self):
        rng = np.random.default_rng(1)
        a = rand_interval(rng, (2, 3))
        z = IntervalMatrix(np.zeros((2, 3)), np.zeros((2, 3)))
        out = interval_sum(a, z)
        assert np.array_equal(out.center, a.center)
        assert np.array_equal(out.radius, a.radius)

    def test_dimension_error(self):
        with pytest.raises(ValueError):
            interval_sum(IntervalMatrix([[0.0]], [[0.0]]),
                         IntervalMatrix(np.zeros((2, 1)), np.zeros((2, 1))))

    def test_exactness_by_sampled_extrema(self):
        # the sum is exact: per-entry sampled extrema approach center+radius
        rng = np.random.default_rng(2)
        a = rand_interval(rng, (3, 2))
        b = rand_interval(rng, (3, 2))
        out = interval_sum(a, b)
        hi = np.full((3, 2), -np.inf)
        for _ in range(2000):
            s = a.sample_vertex(rng) if False else \
                a.center + a.radius * rng.choice([-1.0, 1.0], (3, 2))
            t = b.center + b.radius * rng.choice([-1.0, 1.0], (3, 2))
            assert out.contains(s + t, tol=1e-12)
            hi = np.maximum(hi, s + t)
        assert np.all(hi >= out.upper() - 1e-9)


class TestZonotopeSum:
    def test_generator_concatenation(self):
        a = MatrixZonotope([[1.0]], [[[2.0]]])
        b = MatrixZonotope([[3.0]], [[[4.0]]])
        out = zonotope_minkowski_sum(a, b)
        assert np.array_equal(out.center, [[4.0]])
        assert [g.tolist() for g in out.generators] == [[[2.0]], [[4.0]]]

    def test_zero_identity(self):
        a = MatrixZonotope([[5.0, 1.0]])
        out = zonotope_minkowski_sum(a, MatrixZonotope([[0.0, 0.0]]))
        assert np.array_equal(out.center, a.center)
        assert out.order == 0

    def test_member_sums_contained(self):
        rng = np.random.default_rng(3)
        a = rand_zonotope(rng, (2, 2), g=2)
        b = rand_zonotope(rng, (2, 2), g=3)
        out = zonotope_minkowski_sum(a, b)
        for _ in range(50):
            s = a.sample(rng) + b.sample(rng)
            assert zonotope_membership_residual(out, s) <= 1e-9


class TestIntervalProduct:
    def test_scalar_example(self):
        out = interval_product(IntervalMatrix([[1.0]], [[0.5]]),
                               IntervalMatrix([[2.0]], [[1.0]]))
        assert out.center == [[2.0]] and out.radius == [[2.5]]

    def test_degenerate_product_exact(self):
        rng = np.random.default_rng(4)
        c1, c2 = rng.normal(size=(2, 3)), rng.normal(size=(3, 2))
        out = interval_product(IntervalMatrix(c1, np.zeros_like(c1)),
                               IntervalMatrix(c2, np.zeros_like(c2)))
        assert np.allclose(out.center, c1 @ c2)
        assert np.all(out.radius == 0)

    def test_members_contained(self):
        rng = np.random.default_rng(5)
        a = rand_interval(rng, (2, 3))
        b = rand_interval(rng, (3, 2))
        out = interval_product(a, b)
        for _ in range(2000):
            assert interval_membership_slack(out, a.sample(rng) @ b.sample(rng)) <= 1e-9


class TestMatrixProducts:
    def test_scalar_right(self):
        out = right_matrix_product(IntervalMatrix([[0.0]], [[1.0]]), [[2.0]])
        assert out.center == [[0.0]] and out.radius == [[2.0]]

    def test_identity_unchanged(self):
        rng = np.random.default_rng(6)
        a = rand_interval(rng, (3, 3))
        for out in (left_matrix_product(np.eye(3), a),
                    right_matrix_product(a, np.eye(3))):
            assert np.allclose(out.center, a.center)
            assert np.allclose(out.radius, a.radius)

    def test_members_contained(self):
        rng = np.random.default_rng(7)
        a = rand_interval(rng, (3, 3))
        m = rng.normal(size=(3, 3))
        lo = left_matrix_product(m, a)
        ro = right_matrix_product(a, m)
        for _ in range(500):
            d = a.sample(rng)
            assert interval_membership_slack(lo, m @ d) <= 1e-9
            assert interval_membership_slack(ro, d @ m) <= 1e-9


class TestBoundingBox:
    def test_two_generator_example(self):
        out = bounding_box(MatrixZonotope([[0.0]], [[[1.0]], [[-2.0]]]))
        assert out.center == [[0.0]] and out.radius == [[3.0]]

    def test_generator_free(self):
        out = bounding_box(MatrixZonotope([[1.0, 2.0]]))
        assert np.all(out.radius == 0)

    def test_tightness_per_entry(self):
        # extreme-coefficient members attain center +- radius per entry
        rng = np.random.default_rng(8)
        z = rand_zonotope(rng, (2, 3), g=4)
        box = bounding_box(z)
        for i in range(2):
            for j in range(3):
                signs = [np.sign(g[i, j]) or 1.0 for g in z.generators]
                member = z.center + sum(s * g for s, g in zip(signs, z.generators))
                assert member[i, j] == pytest.approx(box.upper()[i, j], abs=1e-12)


class TestEntrywiseDecomposition:
    def test_basic(self):
        out = entrywise_decomposition(np.array([[1.0, 2.0]]))
        assert [m.tolist() for m in out] == [[[1.0, 0.0]], [[0.0, 2.0]]]

    def test_zero_dropping(self):
        assert entrywise_decomposition(np.zeros((2, 2))) == []
        kept = entrywise_decomposition(np.zeros((2, 2)), drop_zeros=False)
        assert len(kept) == 4

    def test_sums_back(self):
        rng = np.random.default_rng(9)
        m = rng.normal(size=(3, 4))
        assert np.array_equal(sum(entrywise_decomposition(m)), m)

    def test_absolute_sum_identity(self):
        # sum_k |A M^(k)| = |A| m for any A and entrywise-nonnegative m
        rng = np.random.default_rng(10)
        for _ in range(20):
            a = rng.normal(size=(3, 3))
            m = rng.uniform(0, 2, (3, 4))
            total = sum(np.abs(a @ part) for part in entrywise_decomposition(m))
            ref = np.abs(a) @ m
            assert np.allclose(total, ref, rtol=1e-12, atol=1e-14)


class TestTOperator:
    def test_zero_radius_is_plain_product(self):
        rng = np.random.default_rng(11)
        c = rng.normal(size=(2, 2))
        z = rand_zonotope(rng, (2, 2), g=2)
        out = t_operator(IntervalMatrix(c, np.zeros_like(c)), z)
        assert np.allclose(out.center, c @ z.center)
        assert out.order == z.order
        for g_out, g_in in zip(out.generators, z.generators):
            assert np.allclose(g_out, c @ g_in)

    def test_scalar_pure_radius(self):
        out = t_operator(IntervalMatrix([[0.0]], [[0.5]]),
                         MatrixZonotope([[3.0]]))
        assert out.center == [[0.0]]
        assert [g.tolist() for g in out.generators] == [[[1.5]]]

    def test_generator_count(self):
        rng = np.random.default_rng(12)
        iv = rand_interval(rng, (2, 2))
        z = rand_zonotope(rng, (2, 3), g=3)
        out = t_operator(iv, z, drop_zeros=False)
        assert out.order == z.order + 6  # prior count + entries of F

    def test_containment(self):
        rng = np.random.default_rng(13)
        iv = rand_interval(rng, (2, 2))
        z = rand_zonotope(rng, (2, 1), g=2)
        out = t_operator(iv, z)
        for _ in range(300):
            member = iv.sample(rng) @ z.sample(rng)
            assert zonotope_membership_residual(out, member) <= 1e-9

    def test_box_ordering_vs_interval_product(self):
        # box(T(I, Z)) is contained in I * box(Z), entrywise
        rng = np.random.default_rng(14)
        for _ in range(20):
            iv = rand_interval(rng, (3, 3))
            z = rand_zonotope(rng, (3, 2), g=3)
            lhs = bounding_box(t_operator(iv, z))
            rhs = interval_product(iv, bounding_box(z))
            gap = np.abs(lhs.center - rhs.center) + lhs.radius - rhs.radius
            assert np.all(gap <= 1e-12)


class TestTOperatorIterated:
    def test_zero_iterations(self):
        z = MatrixZonotope([[1.0]], [[[2.0]]])
        out = t_operator_iterated(IntervalMatrix([[1.0]], [[0.1]]), z, 0)
        assert out is z

    def test_one_iteration_matches(self):
        rng = np.random.default_rng(15)
        iv = rand_interval(rng, (2, 2))
        z = rand_zonotope(rng, (2, 2), g=2)
        a = t_operator_iterated(iv, z, 1)
        b = t_operator(iv, z)
        assert np.array_equal(a.center, b.center)
        assert all(np.array_equal(x, y) for x, y in zip(a.generators, b.generators))

    def test_common_and_independent_factors_contained(self):
        rng = np.random.default_rng(16)
        iv = rand_interval(rng, (2, 2))
        z = rand_zonotope(rng, (2, 1), g=1)
        out = t_operator_iterated(iv, z, 3)
        for _ in range(100):
            d = iv.sample(rng)
            m = z.sample(rng)
            assert zonotope_membership_residual(out, d @ d @ d @ m) <= 1e-9
            prod = iv.sample(rng) @ iv.sample(rng) @ iv.sample(rng) @ m
            assert zonotope_membership_residual(out, prod) <= 1e-9

    def test_nonsquare_rejected(self):
        with pytest.raises(ValueError):
            t_operator_iterated(IntervalMatrix(np.zeros((2, 3)), np.zeros((2, 3))),
                                MatrixZonotope(np.zeros((3, 1))), 2)
