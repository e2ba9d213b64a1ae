"""Offline tightening radii: dual computation paths and serialization."""

import numpy as np
import pytest

from intervalmpc.bounds import (
    UncertainSystem,
    bounds_recursion,
    closed_loop_matrices,
    compute_bounds,
    compute_bounds_zonotope,
    config_hash,
    error_term_recursion,
    load_bounds,
    save_bounds,
)
from intervalmpc.sets import IntervalMatrix, interval_product

from conftest import random_uncertain_system


def di_system():
    return UncertainSystem(
        [[1.0, 1.0], [0.0, 1.0]], [[0.0], [1.0]],
        [[0.1, 0.05], [0.01, 0.03]], [[0.05], [0.02]],
    )


DI_K = np.array([[-0.47, -1.48]])


class TestUncertainSystem:
    def test_validation(self):
        with pytest.raises(ValueError):
            UncertainSystem([[1.0, 0.0]], [[1.0]], [[0.0, 0.0]], [[0.0]])
        with pytest.raises(ValueError):
            UncertainSystem([[1.0]], [[1.0]], [[-0.1]], [[0.0]])

    def test_joint_radius(self):
        sys = di_system()
        assert sys.delta_s.shape == (2, 3)
        assert np.array_equal(sys.delta_s[:, :2], sys.delta_a)
        assert np.array_equal(sys.delta_s[:, 2:], sys.delta_b)

    def test_closed_loop_matrices(self):
        sys = di_system()
        a_k, d_k = closed_loop_matrices(sys, DI_K)
        assert np.allclose(a_k, sys.a_hat + sys.b_hat @ DI_K)
        assert np.allclose(d_k, sys.delta_a + sys.delta_b @ np.abs(DI_K))


class TestComputeBounds:
    def test_first_radius_is_joint_radius(self):
        sys = di_system()
        bounds = compute_bounds(sys, DI_K, 5)
        assert np.array_equal(bounds.radius(0), sys.delta_s)

    def test_zero_uncertainty_gives_zero_radii(self):
        sys = UncertainSystem([[1.0, 1.0], [0.0, 1.0]], [[0.0], [1.0]],
                              np.zeros((2, 2)), np.zeros((2, 1)))
        bounds = compute_bounds(sys, DI_K, 8)
        for j in range(8):
            assert np.all(bounds.radius(j) == 0)

    def test_one_step_closed_form(self):
        sys = di_system()
        a_k, d_k = closed_loop_matrices(sys, DI_K)
        bounds = compute_bounds(sys, DI_K, 2)
        expect = np.abs(a_k) @ sys.delta_s + d_k @ sys.delta_s
        assert np.allclose(bounds.radius(1), expect, rtol=1e-12)

    def test_index_bounds(self):
        bounds = compute_bounds(di_system(), DI_K, 3)
        with pytest.raises(IndexError):
            bounds.radius(3)

    def test_decay_under_robust_stability(self):
        bounds = compute_bounds(di_system(), DI_K, 25)
        assert bounds.radius(24).max() < bounds.radius(0).max()
        # the tail keeps shrinking
        assert bounds.radius(24).max() < bounds.radius(15).max()


class TestDualPathEquality:
    def test_double_integrator(self):
        sys = di_system()
        zono = compute_bounds_zonotope(sys, DI_K, 26)
        form = bounds_recursion(sys, DI_K, 26)
        for a, b in zip(zono, form):
            assert np.allclose(a, b, rtol=1e-12, atol=1e-300)

    def test_random_systems(self):
        rng = np.random.default_rng(100)
        for _ in range(3):
            sys = random_uncertain_system(rng)
            k = rng.normal(scale=0.2, size=(sys.m, sys.n))
            zono = compute_bounds_zonotope(sys, k, 16)
            form = bounds_recursion(sys, k, 16)
            for a, b in zip(zono, form):
                assert np.allclose(a, b, rtol=1e-12, atol=1e-300)


class TestErrorTermRecursion:
    def test_base_cases(self):
        sys = di_system()
        a_k, d_k = closed_loop_matrices(sys, DI_K)
        f = error_term_recursion(sys, DI_K, 2)
        assert np.allclose(f[0], d_k @ sys.delta_s, rtol=1e-12)
        assert np.allclose(f[1], d_k @ (np.abs(a_k) + d_k) @ sys.delta_s,
                           rtol=1e-12)

    def test_agrees_with_primary_recursion(self):
        # the radii recursion internally generates F_{j+1} = Delta_K * radius(j)
        rng = np.random.default_rng(101)
        for _ in range(3):
            sys = random_uncertain_system(rng)
            k = rng.normal(scale=0.2, size=(sys.m, sys.n))
            _, d_k = closed_loop_matrices(sys, k)
            radii = bounds_recursion(sys, k, 10)
            f_alt = error_term_recursion(sys, k, 10)
            for j in range(10):
                assert np.allclose(d_k @ radii[j], f_alt[j], rtol=1e-12,
                                   atol=1e-300)


class TestMonotoneDominance:
    def test_interval_product_propagation_dominates(self):
        sys = di_system()
        a_k, d_k = closed_loop_matrices(sys, DI_K)
        bounds = compute_bounds(sys, DI_K, 12)
        cl = IntervalMatrix(a_k, d_k)
        cur = IntervalMatrix(np.zeros_like(sys.delta_s), sys.delta_s)
        for j in range(12):
            assert np.all(bounds.radius(j) <= cur.radius + 1e-12)
            cur = interval_product(cl, cur)


class TestContainment:
    def test_sampled_impulse_response_within_radii(self):
        sys = di_system()
        a_k, _ = closed_loop_matrices(sys, DI_K)
        bounds = compute_bounds(sys, DI_K, 11)
        rng = np.random.default_rng(102)
        model = sys.model_set()
        for _ in range(200):
            ab = model.sample(rng)
            a, b = ab[:, :2], ab[:, 2:]
            cl = a + b @ DI_K
            err = np.hstack([a - sys.a_hat, b - sys.b_hat])
            term = err
            for j in range(11):
                assert np.all(np.abs(term) <= bounds.radius(j) + 1e-9)
                term = cl @ term


class TestSerialization:
    def test_round_trip_exact(self, tmp_path):
        bounds = compute_bounds(di_system(), DI_K, 7)
        path = tmp_path / "bounds.json"
        save_bounds(bounds, path)
        back = load_bounds(path)
        assert back.config_hash == bounds.config_hash
        assert back.n_max == bounds.n_max
        assert np.array_equal(back.k_gain, bounds.k_gain)
        assert np.array_equal(back.a_k_hat, bounds.a_k_hat)
        assert np.array_equal(back.delta_k, bounds.delta_k)
        for a, b in zip(back.delta_i, bounds.delta_i):
            assert np.array_equal(a, b)

    def test_hash_tracks_inputs(self):
        sys = di_system()
        h1 = config_hash(sys, DI_K, 5)
        assert h1 == config_hash(sys, DI_K, 5)
        assert h1 != config_hash(sys, DI_K, 6)
        assert h1 != config_hash(sys, np.array([[-0.47, -1.47]]), 5)
