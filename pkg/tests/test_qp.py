"""Dense QP solver: analytic cases, KKT invariants, oracle equivalence."""

import numpy as np
import pytest

from intervalmpc.qp import QpProblem, QpSolution, solve_qp

from _oracles import brute_force_qp, lp_feasible


def random_qp(rng, n=None, mi=None, me=None, feasible=True):
    n = int(rng.integers(2, 7)) if n is None else n
    mi = int(rng.integers(1, 11)) if mi is None else mi
    me = int(rng.integers(0, max(1, n // 2))) if me is None else me
    L = rng.normal(size=(n, n))
    q = L @ L.T + 0.5 * np.eye(n)
    c = rng.normal(size=n)
    xf = rng.normal(size=n)
    a_in = rng.normal(size=(mi, n))
    a_eq = rng.normal(size=(me, n))
    if feasible:
        b_in = a_in @ xf + rng.uniform(0.0, 1.0, mi)
        b_eq = a_eq @ xf
    else:
        # x . d <= -1 and x . d >= 1 cannot both hold
        d = rng.normal(size=n)
        a_in = np.vstack([a_in, d, -d])
        b_in = np.concatenate([rng.uniform(0, 1, mi), [-1.0, -1.0]])
        b_eq = a_eq @ xf
    return QpProblem(q, c, a_eq, b_eq, a_in, b_in)


class TestAnalyticCases:
    def test_scalar_bound(self):
        # min x^2 subject to x >= 1
        sol = solve_qp(QpProblem(np.array([[2.0]]), np.zeros(1),
                                 a_in=np.array([[-1.0]]), b_in=np.array([-1.0])))
        assert sol.status == "optimal"
        assert sol.x[0] == pytest.approx(1.0, abs=1e-9)
        assert sol.objective == pytest.approx(1.0, abs=1e-9)

    def test_equality_symmetry(self):
        # min ||x||^2 / 2 subject to x1 + x2 = 2
        sol = solve_qp(QpProblem(np.eye(2), np.zeros(2),
                                 a_eq=np.array([[1.0, 1.0]]),
                                 b_eq=np.array([2.0])))
        assert sol.status == "optimal"
        assert np.allclose(sol.x, [1.0, 1.0], atol=1e-9)

    def test_unconstrained(self):
        q = np.diag([2.0, 4.0])
        c = np.array([-2.0, -4.0])
        sol = solve_qp(QpProblem(q, c))
        assert np.allclose(sol.x, [1.0, 1.0], atol=1e-9)

    def test_infeasible_detected(self):
        sol = solve_qp(QpProblem(np.eye(1), np.zeros(1),
                                 a_in=np.array([[1.0], [-1.0]]),
                                 b_in=np.array([-2.0, 1.0])))
        assert sol.status == "infeasible"

    def test_non_psd_rejected(self):
        with pytest.raises(ValueError):
            solve_qp(QpProblem(np.array([[-1.0]]), np.zeros(1)))
        with pytest.raises(ValueError):
            solve_qp(QpProblem(np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros(2)))


class TestKktInvariants:
    @pytest.mark.parametrize("method", ["active-set", "ipm"])
    def test_residuals_within_tolerance(self, method):
        rng = np.random.default_rng(20)
        for _ in range(40):
            p = random_qp(rng)
            sol = solve_qp(p, method=method)
            assert sol.status == "optimal"
            q, c, a_eq, b_eq, a_in, b_in = p.normalized()
            grad = q @ sol.x + c
            if a_eq.shape[0]:
                grad = grad + a_eq.T @ sol.eq_mult
                assert np.abs(a_eq @ sol.x - b_eq).max() <= 1e-8
            if a_in.shape[0]:
                grad = grad + a_in.T @ sol.in_mult
                slack = a_in @ sol.x - b_in
                assert slack.max() <= 1e-8
                assert sol.in_mult.min() >= -1e-6
                assert np.abs(sol.in_mult * slack).max() <= 1e-6
            assert np.abs(grad).max() <= 1e-6

    def test_dropping_constraints_never_raises_optimum(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            p = random_qp(rng, me=0)
            full = solve_qp(p)
            assert full.status == "optimal"
            for drop in range(p.a_in.shape[0]):
                keep = [i for i in range(p.a_in.shape[0]) if i != drop]
                sub = QpProblem(p.q, p.c, a_in=p.a_in[keep], b_in=p.b_in[keep])
                sol = solve_qp(sub)
                assert sol.objective <= full.objective + 1e-7

    def test_determinism(self):
        rng = np.random.default_rng(22)
        p = random_qp(rng)
        a = solve_qp(p)
        b = solve_qp(p)
        assert np.array_equal(a.x, b.x)
        assert a.objective == b.objective


class TestOracleEquivalence:
    def test_small_random_qps(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            p = random_qp(rng, n=int(rng.integers(2, 6)),
                          mi=int(rng.integers(1, 9)), me=0)
            sol = solve_qp(p)
            status, obj = brute_force_qp(p.q, p.c, [], [], p.a_in, p.b_in)
            assert sol.status == status == "optimal"
            assert sol.objective == pytest.approx(obj, abs=1e-6, rel=1e-6)

    def test_infeasibility_classification(self):
        rng = np.random.default_rng(24)
        for i in range(60):
            p = random_qp(rng, feasible=(i % 2 == 0))
            sol = solve_qp(p)
            q, c, a_eq, b_eq, a_in, b_in = p.normalized()
            expect = lp_feasible(a_in, b_in, a_eq, b_eq)
            assert (sol.status == "optimal") == expect


class TestIpmPath:
    def test_matches_active_set(self):
        rng = np.random.default_rng(25)
        for _ in range(40):
            p = random_qp(rng)
            a = solve_qp(p)
            b = solve_qp(p, method="ipm")
            assert a.status == b.status == "optimal"
            assert a.objective == pytest.approx(b.objective, abs=1e-6, rel=1e-6)

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            solve_qp(QpProblem(np.eye(1), np.zeros(1)), method="simplex")


class TestWarmStart:
    def test_feasible_warm_start_used(self):
        rng = np.random.default_rng(26)
        p = random_qp(rng, me=0)
        cold = solve_qp(p)
        warm = solve_qp(p, x0=cold.x, active0=cold.active_set)
        assert warm.status == "optimal"
        assert warm.objective == pytest.approx(cold.objective, abs=1e-8)
        assert warm.iterations <= cold.iterations

    def test_infeasible_warm_start_ignored(self):
        p = QpProblem(np.eye(2), np.zeros(2),
                      a_in=np.array([[1.0, 0.0]]), b_in=np.array([-1.0]))
        sol = solve_qp(p, x0=np.array([5.0, 5.0]))
        assert sol.status == "optimal"
        assert sol.x[0] == pytest.approx(-1.0, abs=1e-9)
