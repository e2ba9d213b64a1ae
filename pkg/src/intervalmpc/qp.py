"""Dense convex quadratic programming via a primal active-set method.

Solves  min 1/2 x'Qx + c'x  s.t.  A_eq x = b_eq,  A_in x <= b_in  with Q
positive semidefinite.  A phase-1 linear program (HiGHS) provides the
starting point and certifies infeasibility; the active-set iteration then
works on the null space of the working constraints, so flat directions of
a merely semidefinite Q are handled without regularization.  The QR
factorization of the working-set rows is updated incrementally as
constraints enter and leave.  Everything is deterministic for identical
inputs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linprog


@dataclass(frozen=True)
class QpProblem:
    q: np.ndarray
    c: np.ndarray
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    a_in: np.ndarray | None = None
    b_in: np.ndarray | None = None

    def normalized(self):
        """Return (q, c, a_eq, b_eq, a_in, b_in) with empty blocks as 0-row arrays."""
        q = np.asarray(self.q, dtype=float)
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        if q.shape != (n, n):
            raise ValueError(f"Q must be {n} x {n}")
        a_eq = np.zeros((0, n)) if self.a_eq is None else np.atleast_2d(
            np.asarray(self.a_eq, dtype=float))
        b_eq = np.zeros(0) if self.b_eq is None else np.asarray(
            self.b_eq, dtype=float).ravel()
        a_in = np.zeros((0, n)) if self.a_in is None else np.atleast_2d(
            np.asarray(self.a_in, dtype=float))
        b_in = np.zeros(0) if self.b_in is None else np.asarray(
            self.b_in, dtype=float).ravel()
        if a_eq.shape[0] != b_eq.size or a_in.shape[0] != b_in.size:
            raise ValueError("constraint row counts must match right-hand sides")
        if a_eq.shape[1] != n or a_in.shape[1] != n:
            raise ValueError("constraint column counts must match variable count")
        return q, c, a_eq, b_eq, a_in, b_in


@dataclass
class QpSolution:
    x: np.ndarray
    objective: float
    status: str  # optimal | infeasible | max_iterations
    kkt_residual: float
    iterations: int = 0
    eq_mult: np.ndarray = field(default_factory=lambda: np.zeros(0))
    in_mult: np.ndarray = field(default_factory=lambda: np.zeros(0))
    active_set: list = field(default_factory=list)


FEAS_TOL = 1e-8
STAT_TOL = 1e-6


def _check_psd(q: np.ndarray) -> None:
    if not np.allclose(q, q.T, atol=1e-10):
        raise ValueError("Q must be symmetric")
    if not q.size:
        return
    jitter = 1e-9 * max(1.0, np.abs(q).max())
    try:
        np.linalg.cholesky((q + q.T) / 2.0 + jitter * np.eye(q.shape[0]))
        return
    except np.linalg.LinAlgError:
        pass
    if np.linalg.eigvalsh((q + q.T) / 2.0).min() < -1e-9:
        raise ValueError("Q must be positive semidefinite")


def _phase1(a_eq, b_eq, a_in, b_in, n):
    """Feasible point via LP, or None when certified infeasible."""
    res = linprog(
        np.zeros(n),
        A_ub=a_in if a_in.size else None,
        b_ub=b_in if a_in.size else None,
        A_eq=a_eq if a_eq.size else None,
        b_eq=b_eq if a_eq.size else None,
        bounds=(None, None),
        method="highs",
    )
    if res.status == 2:
        return None
    if not res.success:
        raise RuntimeError(f"phase-1 LP failed: {res.message}")
    return np.asarray(res.x, dtype=float)


class _WorkingSetQR:
    """Full QR of the transposed working-set rows, updated in place."""

    def __init__(self, n: int):
        self.qf = np.eye(n)
        self.r = np.zeros((n, 0))

    @property
    def k(self) -> int:
        return self.r.shape[1]

    def add(self, row: np.ndarray) -> bool:
        """Append a constraint row; reject (return False) if dependent."""
        k = self.k
        if k >= self.qf.shape[0]:
            return False
        qf2, r2 = scipy.linalg.qr_insert(self.qf, self.r, row, k, which="col")
        if abs(r2[k, k]) <= 1e-10 * max(1.0, np.linalg.norm(row)):
            return False
        self.qf, self.r = qf2, r2
        return True

    def remove(self, col: int) -> None:
        self.qf, self.r = scipy.linalg.qr_delete(self.qf, self.r, col, which="col")

    def null_basis(self) -> np.ndarray:
        return self.qf[:, self.k:]

    def multipliers(self, rhs: np.ndarray) -> np.ndarray:
        """Least-squares solution of  rows' m = rhs."""
        y = self.qf.T @ rhs
        return scipy.linalg.solve_triangular(self.r[: self.k, :], y[: self.k])


def _eqp_direction(q, g, z):
    """Step minimizing the model on the working-set null space.

    Returns (d, is_ray): a Newton-type step, or an unbounded descent ray
    when the reduced Hessian is singular along a nonzero reduced gradient.
    """
    if z.shape[1] == 0:
        return np.zeros(q.shape[0]), False
    hr = z.T @ (q @ z)
    gr = z.T @ g
    try:
        cf = scipy.linalg.cho_factor(hr, check_finite=False)
        p = scipy.linalg.cho_solve(cf, -gr, check_finite=False)
        return z @ p, False
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError):
        pass
    w, v = np.linalg.eigh((hr + hr.T) / 2.0)
    gv = v.T @ gr
    scale = max(1.0, np.abs(hr).max())
    flat = w <= 1e-12 * scale
    g_scale = max(1.0, np.abs(g).max())
    if np.any(flat & (np.abs(gv) > 1e-10 * g_scale)):
        # descent to -inf along a flat eigendirection
        idx = int(np.argmax(flat * np.abs(gv)))
        ray = -np.sign(gv[idx]) * (z @ v[:, idx])
        return ray, True
    p = np.zeros_like(gv)
    pos = ~flat
    p[pos] = -gv[pos] / w[pos]
    return z @ (v @ p), False


def _ipm_point(q, c, a_eq, b_eq, a_in, b_in, max_iter=50, tol=1e-9):
    """Infeasible-start predictor-corrector interior-point iteration.

    Returns (x, predicted active set, converged flag).  Used as a
    size-driven path whose cost barely depends on the problem data; the
    result is certified afterwards, so approximate convergence is fine.
    """
    n = c.size
    me, mi = a_eq.shape[0], a_in.shape[0]
    x = np.linalg.lstsq(a_eq, b_eq, rcond=None)[0] if me else np.zeros(n)
    y = np.zeros(me)
    s = np.maximum(b_in - a_in @ x, 1.0)
    z = np.ones(mi)
    scale = 1.0 + max(np.abs(c).max(), np.abs(b_in).max(),
                      np.abs(b_eq).max() if me else 0.0)
    reg = 1e-9 * max(1.0, np.abs(q).max())
    eye_n = np.eye(n)
    converged = False
    for _ in range(max_iter):
        r_d = q @ x + c + (a_eq.T @ y if me else 0.0) + a_in.T @ z
        r_p = a_eq @ x - b_eq if me else np.zeros(0)
        r_i = a_in @ x + s - b_in
        mu = float(s @ z) / mi
        if mu < tol * scale and np.abs(r_d).max() < 1e-8 * scale \
                and np.abs(r_i).max() < 1e-9 * scale \
                and (not me or np.abs(r_p).max() < 1e-9 * scale):
            converged = True
            break
        d = z / s
        m = q + (a_in.T * d) @ a_in + reg * eye_n
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            if me:
                kkt = np.block([[m, a_eq.T], [a_eq, -1e-10 * np.eye(me)]])
                lu = scipy.linalg.lu_factor(kkt, check_finite=False)

                def solve(rx):
                    sol = scipy.linalg.lu_solve(
                        lu, np.concatenate([rx, -r_p]), check_finite=False)
                    return sol[:n], sol[n:]
            else:
                try:
                    cf = scipy.linalg.cho_factor(m, check_finite=False)

                    def solve(rx):
                        return scipy.linalg.cho_solve(
                            cf, rx, check_finite=False), y
                except scipy.linalg.LinAlgError:
                    lu = scipy.linalg.lu_factor(m, check_finite=False)

                    def solve(rx):
                        return scipy.linalg.lu_solve(
                            lu, rx, check_finite=False), y

        def newton(sz_target):
            # sz_target is the desired componentwise product s * z
            rx = -r_d - a_in.T @ (sz_target / s - z + z * r_i / s)
            dx, dy = solve(rx)
            ds = -r_i - a_in @ dx
            dz = (sz_target - z * ds) / s - z
            return dx, dy, ds, dz

        def max_step(v, dv):
            neg = dv < -1e-300
            return min(1.0, float(np.min(-v[neg] / dv[neg]))) if neg.any() else 1.0

        dx, dy, ds, dz = newton(np.zeros(mi))
        if not np.all(np.isfinite(dx)):
            break  # degenerate normal matrix; report non-convergence
        mu_aff = float((s + max_step(s, ds) * ds) @ (z + max_step(z, dz) * dz)) / mi
        sigma = min(1.0, (max(mu_aff, 0.0) / mu) ** 3)
        dx, dy, ds, dz = newton(sigma * mu - ds * dz)
        if not np.all(np.isfinite(dx)):
            break
        a_p, a_d = 0.995 * max_step(s, ds), 0.995 * max_step(z, dz)
        x = x + a_p * dx
        s = s + a_p * ds
        y = y + a_d * dy
        z = z + a_d * dz
    return x, np.flatnonzero(z > s).tolist(), converged


def _crash_solve(q, c, a_eq, b_eq, a_in, b_in, active, xi):
    """One constrained Newton step from ``xi`` on a predicted active set.

    Directions not pinned by the working rows and flat in the objective
    stay at their ``xi`` values, which keeps the weakly active
    constraints satisfied.  Returns a certified optimal QpSolution, or
    None when the prediction fails primal or dual verification.
    """
    n = c.size
    wsqr = _WorkingSetQR(n)
    eq_added, work = [], []
    for i, row in enumerate(a_eq):
        if wsqr.add(row):
            eq_added.append(i)
    for i in active:
        if wsqr.add(a_in[i]):
            work.append(int(i))
    k = wsqr.k
    rows = np.vstack([a_eq[eq_added], a_in[work]]) if k else np.zeros((0, n))
    rhs = np.concatenate([b_eq[eq_added], b_in[work]])
    # minimum-norm restoration onto the working manifold
    x = xi.copy()
    if k:
        u = np.zeros(n)
        u[:k] = scipy.linalg.solve_triangular(
            wsqr.r[:k, :].T, rhs - rows @ xi, lower=True)
        x = xi + wsqr.qf @ u
    z = wsqr.null_basis()
    if z.shape[1]:
        hr = z.T @ (q @ z)
        jitter = 1e-11 * max(1.0, np.abs(q).max())
        try:
            cf = scipy.linalg.cho_factor(
                hr + jitter * np.eye(z.shape[1]), check_finite=False)
            x = x + z @ scipy.linalg.cho_solve(
                cf, -(z.T @ (q @ x + c)), check_finite=False)
        except (scipy.linalg.LinAlgError, ValueError):
            return None
    if not np.all(np.isfinite(x)):
        return None
    mult = wsqr.multipliers(-(q @ x + c)) if k else np.zeros(0)
    nu_work, mu_work = mult[: len(eq_added)], mult[len(eq_added):]
    if mu_work.size and mu_work.min() < -STAT_TOL:
        return None
    if a_in.shape[0] and (a_in @ x - b_in).max() > FEAS_TOL:
        return None
    if a_eq.shape[0] and np.abs(a_eq @ x - b_eq).max() > FEAS_TOL:
        return None
    out = _finalize(q, c, a_eq, b_eq, a_in, b_in, x, work,
                    eq_added, nu_work, mu_work, 1)
    return out if out.status == "optimal" else None


def solve_qp(
    problem: QpProblem,
    x0: np.ndarray | None = None,
    active0: list | None = None,
    max_iter: int | None = None,
    method: str = "active-set",
) -> QpSolution:
    """Solve a convex QP.

    ``x0`` is an optional warm start; it is used only if it is feasible
    (after projection onto the equality constraints), otherwise the
    phase-1 LP runs as usual.  ``active0`` optionally seeds the working
    set with inequality indices known to be active at the optimum.
    ``method="ipm"`` runs an interior-point pass first and certifies the
    predicted active set with a single constrained solve, falling back
    to the active-set iteration; its runtime depends on the problem size
    rather than on the combinatorial path.
    """
    q, c, a_eq, b_eq, a_in, b_in = problem.normalized()
    n = c.size
    _check_psd(q)
    if method not in ("active-set", "ipm"):
        raise ValueError(f"unknown method {method!r}")
    if method == "ipm" and x0 is None and a_in.shape[0]:
        xi, predicted, converged = _ipm_point(q, c, a_eq, b_eq, a_in, b_in)
        if converged:
            crash = _crash_solve(q, c, a_eq, b_eq, a_in, b_in, predicted, xi)
            if crash is not None:
                return crash
            feas = float((a_in @ xi - b_in).max()) <= FEAS_TOL and (
                not a_eq.shape[0]
                or float(np.abs(a_eq @ xi - b_eq).max()) <= FEAS_TOL
            )
            if feas:
                x0 = xi  # polish from the interior point
    if max_iter is None:
        max_iter = 100 + 10 * n

    x = None
    if x0 is not None and np.asarray(x0).size == n:
        cand = np.asarray(x0, dtype=float).ravel().copy()
        if a_eq.shape[0] and np.abs(a_eq @ cand - b_eq).max() > FEAS_TOL:
            # minimum-norm correction onto the equality manifold
            corr = np.linalg.lstsq(a_eq, b_eq - a_eq @ cand, rcond=None)[0]
            cand = cand + corr
        ok = True
        if a_eq.shape[0] and np.abs(a_eq @ cand - b_eq).max() > FEAS_TOL:
            ok = False
        if ok and a_in.shape[0] and (a_in @ cand - b_in).max() > FEAS_TOL:
            ok = False
        if ok:
            x = cand
    if x is None:
        x = _phase1(a_eq, b_eq, a_in, b_in, n)
        if x is None:
            return QpSolution(np.full(n, np.nan), np.inf, "infeasible", np.inf)

    wsqr = _WorkingSetQR(n)
    eq_added = []  # dependent equality rows are consistent; safe to skip
    for i, row in enumerate(a_eq):
        if wsqr.add(row):
            eq_added.append(i)
    work: list[int] = []
    if a_in.shape[0]:
        resid = a_in @ x - b_in
        seeds = active0 if active0 else np.flatnonzero(resid > -1e-9).tolist()
        for i in seeds:
            if resid[i] > -1e-9 and wsqr.add(a_in[i]):
                work.append(int(i))

    n_eq_cols = wsqr.k - len(work)
    iters = 0
    stall = 0  # consecutive iterations without movement (degenerate vertex)
    # rows numerically dependent on the working set at the current point;
    # they cannot block (their product with any null-space direction is
    # zero in exact arithmetic), so keep them out of the ratio test
    dependent: set[int] = set()
    while iters < max_iter:
        iters += 1
        g = q @ x + c
        z = wsqr.null_basis()
        d, is_ray = _eqp_direction(q, g, z)

        step_norm = np.abs(d).max() if d.size else 0.0
        if not is_ray and step_norm <= 1e-10 * (1.0 + np.abs(x).max()):
            # stationary on the working set: check multipliers
            mult = wsqr.multipliers(-g) if wsqr.k else np.zeros(0)
            mu = mult[n_eq_cols:]
            if mu.size == 0 or mu.min() >= -STAT_TOL:
                return _finalize(
                    q, c, a_eq, b_eq, a_in, b_in, x,
                    work, eq_added, mult[:n_eq_cols], mu, iters,
                )
            if stall > 25:
                # Bland-style anti-cycling: lowest constraint index wins
                neg = np.flatnonzero(mu < -STAT_TOL)
                drop = int(neg[np.argmin([work[i] for i in neg])])
            else:
                drop = int(np.argmin(mu))
            wsqr.remove(n_eq_cols + drop)
            work.pop(drop)
            continue

        # ratio test against inactive inequalities
        alpha = np.inf if is_ray else 1.0
        blocking = -1
        if a_in.shape[0]:
            ad = a_in @ d
            res = b_in - a_in @ x
            mask = np.ones(a_in.shape[0], dtype=bool)
            mask[work] = False
            if dependent:
                mask[list(dependent)] = False
            mask &= ad > 1e-12 * (1.0 + np.abs(ad).max())
            idx = np.flatnonzero(mask)
            if idx.size:
                ratios = np.maximum(res[idx] / ad[idx], 0.0)
                j = int(np.argmin(ratios))
                if stall > 25:
                    ties = np.flatnonzero(ratios <= ratios[j] + 1e-14)
                    j = int(ties[np.argmin(idx[ties])])
                if ratios[j] < alpha:
                    alpha = float(ratios[j])
                    blocking = int(idx[j])
        if np.isinf(alpha):
            # objective unbounded below on the feasible set
            return QpSolution(x, -np.inf, "max_iterations", np.inf, iters)
        moved = alpha * step_norm > 1e-12 * (1.0 + np.abs(x).max())
        stall = 0 if moved else stall + 1
        x = x + alpha * d
        if moved:
            dependent.clear()
        if blocking >= 0:
            if wsqr.add(a_in[blocking]):
                work.append(blocking)
            else:
                dependent.add(blocking)

    return QpSolution(
        x, float(0.5 * x @ (q @ x) + c @ x), "max_iterations", np.inf, iters
    )


def _finalize(q, c, a_eq, b_eq, a_in, b_in, x, work, eq_added, nu_work, mu_work, iters):
    # equality multipliers in original row order (dependent rows get zero)
    nu = np.zeros(a_eq.shape[0])
    for pos, i in enumerate(eq_added):
        nu[i] = nu_work[pos]
    mu_full = np.zeros(a_in.shape[0])
    for pos, i in enumerate(work):
        mu_full[i] = mu_work[pos]
    # a negative working multiplier within tolerance is numerically zero
    mu_full = np.maximum(mu_full, 0.0)
    g = q @ x + c
    stat = g.copy()
    if a_eq.shape[0]:
        stat = stat + a_eq.T @ nu
    if a_in.shape[0]:
        stat = stat + a_in.T @ mu_full
    stat_res = float(np.abs(stat).max()) if stat.size else 0.0
    comp_res = 0.0
    feas_res = 0.0
    if a_in.shape[0]:
        slack = a_in @ x - b_in
        comp_res = float(np.abs(mu_full * slack).max())
        feas_res = float(max(0.0, slack.max()))
    if a_eq.shape[0]:
        feas_res = max(feas_res, float(np.abs(a_eq @ x - b_eq).max()))
    kkt = float(max(stat_res, comp_res))
    status = "optimal"
    if feas_res > FEAS_TOL * 10 or kkt > STAT_TOL * 10:
        status = "max_iterations"
    return QpSolution(
        x,
        float(0.5 * x @ (q @ x) + c @ x),
        status,
        kkt,
        iters,
        eq_mult=nu,
        in_mult=mu_full,
        active_set=list(work),
    )
