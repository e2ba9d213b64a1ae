"""Variable-horizon robust optimal control problem with tightened constraints.

The nominal trajectory is optimized subject to state/input/terminal
constraints that are tightened by the offline interval radii: the worst
case of the model-error tube at prediction step j is bounded by
``sum_i delta_i(j-i-1) |xi(i)|`` where ``xi(i)`` stacks the nominal state
and input.  The absolute values enter the QP through per-step epigraph
variables ``t(i) >= |xi(i)|`` whose tightening coefficients are
nonnegative, keeping the subproblem a convex QP with linear constraints.
The horizon length is chosen by enumerating ``N = 1..n_max`` and picking
the cheapest feasible subproblem.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import OfflineBounds, UncertainSystem
from .qp import QpProblem, QpSolution, solve_qp


class OcpSolverError(RuntimeError):
    """A QP subproblem failed numerically (not infeasibility)."""


class ConstraintSet:
    """Polytope {x : H x <= b}."""

    __slots__ = ("h", "b")

    def __init__(self, h, b):
        h = np.atleast_2d(np.asarray(h, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if h.shape[0] != b.size:
            raise ValueError("row count of h must match length of b")
        if not np.all(np.isfinite(b)):
            raise ValueError("b must be finite")
        if np.any(np.all(h == 0.0, axis=1)):
            raise ValueError("rows of h must be nonzero")
        h.setflags(write=False)
        b.setflags(write=False)
        self.h = h
        self.b = b

    @property
    def dim(self) -> int:
        return self.h.shape[1]

    @property
    def rows(self) -> int:
        return self.h.shape[0]

    def contains(self, x, tol: float = 1e-9) -> bool:
        return bool(np.all(self.h @ np.asarray(x, dtype=float).ravel() - self.b <= tol))

    @classmethod
    def box(cls, lower, upper) -> "ConstraintSet":
        lower = np.asarray(lower, dtype=float).ravel()
        upper = np.asarray(upper, dtype=float).ravel()
        n = lower.size
        eye = np.eye(n)
        return cls(np.vstack([eye, -eye]), np.concatenate([upper, -lower]))


class MpcConfig:
    """Immutable problem data for the variable-horizon controller."""

    def __init__(
        self,
        sys: UncertainSystem,
        k_gain,
        state_set: ConstraintSet,
        input_set: ConstraintSet,
        terminal_set: ConstraintSet,
        gamma: float,
        n_max: int,
        bounds: OfflineBounds,
        weight=None,
    ):
        k_gain = np.atleast_2d(np.asarray(k_gain, dtype=float))
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        if n_max < 1:
            raise ValueError("n_max must be at least 1")
        if bounds.n_max < n_max:
            raise ValueError("offline bounds cover fewer steps than n_max")
        if state_set.dim != sys.n or terminal_set.dim != sys.n:
            raise ValueError("state/terminal set dimension mismatch")
        if input_set.dim != sys.m:
            raise ValueError("input set dimension mismatch")
        if not terminal_set.contains(np.zeros(sys.n)):
            raise ValueError("terminal set must contain the origin")
        self.sys = sys
        self.k_gain = k_gain
        self.state_set = state_set
        self.input_set = input_set
        self.terminal_set = terminal_set
        self.gamma = float(gamma)
        self.n_max = int(n_max)
        self.bounds = bounds
        self.weight = np.eye(sys.m) if weight is None else np.asarray(weight, float)

        # tightening coefficient tables, one (rows x (n+m)) matrix per lag
        hu_k = np.abs(input_set.h @ k_gain)
        self._state_tight = [np.abs(state_set.h) @ bounds.radius(d)
                             for d in range(n_max)]
        self._input_tight = [hu_k @ bounds.radius(d) for d in range(n_max)]
        self._term_tight = [np.abs(terminal_set.h) @ bounds.radius(d)
                            for d in range(n_max)]


@dataclass
class OcpSolution:
    feasible: bool
    n_star: int
    v_seq: list
    z_seq: list
    cost: float
    per_horizon: list = field(default_factory=list)
    qp_x: np.ndarray | None = None
    qp_active_set: list = field(default_factory=list)


def _layout(cfg: MpcConfig, horizon: int):
    n, m = cfg.sys.n, cfg.sys.m
    nz = n * (horizon + 1)
    nv = m * horizon
    nt = (n + m) * horizon
    return n, m, nz, nv, nt, nz + nv + nt


def build_subproblem(cfg: MpcConfig, x0, horizon: int) -> QpProblem:
    """Assemble the tightened QP for a fixed horizon length.

    Decision vector: z(0..N) then v(0..N-1) then t(0..N-1), where each
    t(i) has n+m entries bounding |(z(i), v(i))| from above.
    """
    if not 1 <= horizon <= cfg.n_max:
        raise ValueError(f"horizon must be in 1..{cfg.n_max}")
    x0 = np.asarray(x0, dtype=float).ravel()
    n, m, nz, nv, nt, ntot = _layout(cfg, horizon)
    if x0.size != n:
        raise ValueError(f"x0 must have length {n}")
    N = horizon

    def zs(j):
        return slice(j * n, (j + 1) * n)

    def vs(j):
        return slice(nz + j * m, nz + (j + 1) * m)

    def ts(i):
        return slice(nz + nv + i * (n + m), nz + nv + (i + 1) * (n + m))

    # objective: sum_j (v(j) - K z(j))' W (v(j) - K z(j))
    q = np.zeros((ntot, ntot))
    for j in range(N):
        s = np.zeros((m, ntot))
        s[:, vs(j)] = np.eye(m)
        s[:, zs(j)] = -cfg.k_gain
        q += 2.0 * s.T @ cfg.weight @ s
    c = np.zeros(ntot)

    # equalities: z(0) = x0 and nominal dynamics
    a_eq = np.zeros((n * (N + 1), ntot))
    b_eq = np.zeros(n * (N + 1))
    a_eq[:n, zs(0)] = np.eye(n)
    b_eq[:n] = x0
    for j in range(N):
        r = slice((j + 1) * n, (j + 2) * n)
        a_eq[r, zs(j + 1)] = np.eye(n)
        a_eq[r, zs(j)] = -cfg.sys.a_hat
        a_eq[r, vs(j)] = -cfg.sys.b_hat
    # inequalities: state (j=0..N), input (j=0..N-1), terminal, epigraph
    hx, bx = cfg.state_set.h, cfg.state_set.b
    hu, bu = cfg.input_set.h, cfg.input_set.b
    hf, bf = cfg.terminal_set.h, cfg.terminal_set.b
    rows = hx.shape[0] * (N + 1) + hu.shape[0] * N + hf.shape[0] + 2 * (n + m) * N
    a_in = np.zeros((rows, ntot))
    b_in = np.zeros(rows)
    at = 0
    for j in range(N + 1):
        r = slice(at, at + hx.shape[0])
        a_in[r, zs(j)] = hx
        for i in range(j):
            a_in[r, ts(i)] = cfg._state_tight[j - i - 1]
        b_in[r] = bx
        at += hx.shape[0]
    for j in range(N):
        r = slice(at, at + hu.shape[0])
        a_in[r, vs(j)] = hu
        for i in range(j):
            a_in[r, ts(i)] = cfg._input_tight[j - i - 1]
        b_in[r] = bu
        at += hu.shape[0]
    r = slice(at, at + hf.shape[0])
    a_in[r, zs(N)] = hf
    for i in range(N):
        a_in[r, ts(i)] = cfg._term_tight[N - i - 1]
    b_in[r] = bf
    at += hf.shape[0]
    eye_nm = np.eye(n + m)
    for i in range(N):
        r = slice(at, at + (n + m))
        a_in[r.start:r.start + n, zs(i)] = np.eye(n)
        a_in[r.start + n:r.stop, vs(i)] = np.eye(m)
        a_in[r, ts(i)] = -eye_nm
        at += n + m
        r = slice(at, at + (n + m))
        a_in[r.start:r.start + n, zs(i)] = -np.eye(n)
        a_in[r.start + n:r.stop, vs(i)] = -np.eye(m)
        a_in[r, ts(i)] = -eye_nm
        at += n + m
    assert at == rows
    return QpProblem(q, c, a_eq=a_eq, b_eq=b_eq, a_in=a_in, b_in=b_in)


def subproblem_sizes(cfg: MpcConfig, horizon: int) -> tuple[int, int]:
    """(equality rows, inequality rows) of the horizon-N subproblem."""
    n, m = cfg.sys.n, cfg.sys.m
    N = horizon
    n_eq = n * (N + 1)
    n_in = (cfg.state_set.rows * (N + 1) + cfg.input_set.rows * N
            + cfg.terminal_set.rows + 2 * (n + m) * N)
    return n_eq, n_in


def split_solution(cfg: MpcConfig, horizon: int, x: np.ndarray):
    """Extract (z_seq, v_seq, t_flat) from a stacked decision vector."""
    n, m, nz, nv, nt, _ = _layout(cfg, horizon)
    z_seq = [x[j * n:(j + 1) * n].copy() for j in range(horizon + 1)]
    v_seq = [x[nz + j * m:nz + (j + 1) * m].copy() for j in range(horizon)]
    return z_seq, v_seq, x[nz + nv:].copy()


def stack_solution(cfg: MpcConfig, z_seq, v_seq) -> np.ndarray:
    """Stack trajectories into a decision vector with t = |(z, v)|."""
    horizon = len(v_seq)
    parts = [np.asarray(z, float).ravel() for z in z_seq]
    parts += [np.asarray(v, float).ravel() for v in v_seq]
    for j in range(horizon):
        xi = np.concatenate([z_seq[j], v_seq[j]])
        parts.append(np.abs(xi))
    return np.concatenate(parts)


def trajectory_cost(cfg: MpcConfig, z_seq, v_seq) -> float:
    """gamma * N plus the weighted quadratic stage cost."""
    total = cfg.gamma * len(v_seq)
    for z, v in zip(z_seq, v_seq):
        r = np.asarray(v, float) - cfg.k_gain @ np.asarray(z, float)
        total += float(r @ cfg.weight @ r)
    return total


def constraint_violation(cfg: MpcConfig, x0, z_seq, v_seq) -> dict:
    """Worst violation of each tightened constraint group for a candidate
    trajectory (using t = |(z, v)| exactly).  Nonpositive means satisfied."""
    horizon = len(v_seq)
    z_seq = [np.asarray(z, float).ravel() for z in z_seq]
    v_seq = [np.asarray(v, float).ravel() for v in v_seq]
    xi = [np.concatenate([z_seq[j], v_seq[j]]) for j in range(horizon)]
    out = {}
    out["initial"] = float(np.abs(z_seq[0] - np.asarray(x0, float).ravel()).max())
    dyn = 0.0
    for j in range(horizon):
        res = z_seq[j + 1] - cfg.sys.a_hat @ z_seq[j] - cfg.sys.b_hat @ v_seq[j]
        dyn = max(dyn, float(np.abs(res).max()))
    out["dynamics"] = dyn
    worst = -np.inf
    for j in range(horizon + 1):
        lhs = cfg.state_set.h @ z_seq[j]
        for i in range(j):
            lhs = lhs + cfg._state_tight[j - i - 1] @ np.abs(xi[i])
        worst = max(worst, float((lhs - cfg.state_set.b).max()))
    out["state"] = worst
    worst = -np.inf
    for j in range(horizon):
        lhs = cfg.input_set.h @ v_seq[j]
        for i in range(j):
            lhs = lhs + cfg._input_tight[j - i - 1] @ np.abs(xi[i])
        worst = max(worst, float((lhs - cfg.input_set.b).max()))
    out["input"] = worst
    lhs = cfg.terminal_set.h @ z_seq[horizon]
    for i in range(horizon):
        lhs = lhs + cfg._term_tight[horizon - i - 1] @ np.abs(xi[i])
    out["terminal"] = float((lhs - cfg.terminal_set.b).max())
    return out


def solve_ocp(
    cfg: MpcConfig,
    x0,
    prune: bool = True,
    warm_starts: dict | None = None,
) -> OcpSolution:
    """Enumerate horizons 1..n_max and return the cheapest feasible one.

    ``prune=True`` skips horizons whose gamma*N term alone already exceeds
    the best cost found (they cannot win); skipped horizons are recorded
    with status "pruned".  ``warm_starts`` optionally maps a horizon
    length to a decision vector used to warm start its QP.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    warm_starts = warm_starts or {}
    best = None
    per_horizon = []
    for N in range(1, cfg.n_max + 1):
        if prune and best is not None and cfg.gamma * N >= best[0] - 1e-12:
            per_horizon.append((N, "pruned", None))
            continue
        problem = build_subproblem(cfg, x0, N)
        sol = solve_qp(problem, x0=warm_starts.get(N))
        if sol.status == "max_iterations":
            raise OcpSolverError(
                f"QP solver failed at horizon {N} (x0={x0.tolist()})"
            )
        if sol.status == "infeasible":
            per_horizon.append((N, "infeasible", None))
            continue
        cost = cfg.gamma * N + sol.objective
        per_horizon.append((N, "optimal", cost))
        if best is None or cost < best[0] - 1e-12:
            best = (cost, N, sol)
    if best is None:
        return OcpSolution(False, 0, [], [], np.inf, per_horizon)
    cost, n_star, sol = best
    z_seq, v_seq, _ = split_solution(cfg, n_star, sol.x)
    return OcpSolution(
        True,
        n_star,
        v_seq,
        z_seq,
        trajectory_cost(cfg, z_seq, v_seq),
        per_horizon,
        qp_x=sol.x,
        qp_active_set=sol.active_set,
    )


def control_move(sol: OcpSolution) -> np.ndarray:
    """Input applied to the plant: the first nominal input of the plan.

    The subproblem anchors z(0) at the measured state, so the feedback
    term K (x - z(0)) vanishes and u(k) = v*(0).
    """
    if not sol.feasible:
        raise ValueError("no control move available: problem was infeasible")
    return np.asarray(sol.v_seq[0], dtype=float)


def dump_qp(problem: QpProblem, path) -> None:
    """Write a QP to a plain-text interchange format (dense, row-major)."""
    q, c, a_eq, b_eq, a_in, b_in = problem.normalized()

    def block(name, m):
        m = np.atleast_2d(m)
        lines = [f"{name} {m.shape[0]} {m.shape[1] if m.ndim > 1 else 1}"]
        for row in m:
            lines.append(" ".join(f"{v:.17g}" for v in np.atleast_1d(row)))
        return lines

    lines = []
    lines += block("Q", q)
    lines += block("c", c.reshape(1, -1))
    lines += block("A_eq", a_eq if a_eq.size else np.zeros((0, c.size)))
    lines += block("b_eq", b_eq.reshape(1, -1) if b_eq.size else np.zeros((0, 0)))
    lines += block("A_in", a_in if a_in.size else np.zeros((0, c.size)))
    lines += block("b_in", b_in.reshape(1, -1) if b_in.size else np.zeros((0, 0)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
