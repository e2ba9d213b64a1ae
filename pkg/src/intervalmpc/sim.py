"""Closed-loop simulation of the uncertain plant under the robust MPC law.

The simulator samples an admissible realization of the true model,
re-solves the variable-horizon problem at every measured state, applies
the first nominal input, and logs everything needed to audit the
theoretical guarantees: per-step feasibility, cost decrease, first entry
into the terminal set, and the shifted-candidate feasibility argument.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .bounds import UncertainSystem
from .ocp import (
    MpcConfig,
    OcpSolution,
    constraint_violation,
    control_move,
    solve_ocp,
    stack_solution,
    trajectory_cost,
)


class Realization:
    """One admissible (A, B) pair together with the seed that produced it."""

    __slots__ = ("a", "b", "seed")

    def __init__(self, a, b, seed: int = -1):
        self.a = np.atleast_2d(np.asarray(a, dtype=float))
        self.b = np.atleast_2d(np.asarray(b, dtype=float))
        self.seed = int(seed)

    def step(self, x, u) -> np.ndarray:
        return self.a @ np.asarray(x, float).ravel() + \
            self.b @ np.asarray(u, float).ravel()


def sample_realization(
    sys: UncertainSystem, seed: int, mode: str = "uniform"
) -> Realization:
    """Draw an admissible model. Modes: uniform, vertex, nominal."""
    rng = np.random.default_rng(seed)
    if mode == "nominal":
        da = np.zeros_like(sys.delta_a)
        db = np.zeros_like(sys.delta_b)
    elif mode == "uniform":
        da = sys.delta_a * rng.uniform(-1.0, 1.0, sys.delta_a.shape)
        db = sys.delta_b * rng.uniform(-1.0, 1.0, sys.delta_b.shape)
    elif mode == "vertex":
        da = sys.delta_a * rng.choice([-1.0, 1.0], sys.delta_a.shape)
        db = sys.delta_b * rng.choice([-1.0, 1.0], sys.delta_b.shape)
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    return Realization(sys.a_hat + da, sys.b_hat + db, seed)


@dataclass
class StepRecord:
    k: int
    x: np.ndarray
    u: np.ndarray
    n_star: int
    cost: float
    solve_ms: float
    feasible: bool
    in_terminal: bool


@dataclass
class SimLog:
    seed: int
    records: list = field(default_factory=list)
    first_terminal_entry: int | None = None
    initial_cost: float = np.inf
    candidate_reports: list = field(default_factory=list)

    @property
    def feasible_throughout(self) -> bool:
        return all(r.feasible for r in self.records)

    def states(self) -> np.ndarray:
        return np.array([r.x for r in self.records])

    def inputs(self) -> np.ndarray:
        return np.array([r.u for r in self.records if r.u is not None])

    def costs(self) -> list:
        return [r.cost for r in self.records if r.feasible]

    def write_csv(self, path) -> None:
        n = self.records[0].x.size
        m = self.records[0].u.size if self.records[0].u is not None else 0
        header = (
            ["k"] + [f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(m)]
            + ["n_star", "cost", "solve_ms", "in_terminal"]
        )
        lines = [",".join(header)]
        for r in self.records:
            vals = [str(r.k)]
            vals += [f"{v:.17g}" for v in r.x]
            u = r.u if r.u is not None else np.full(m, np.nan)
            vals += [f"{v:.17g}" for v in u]
            vals += [str(r.n_star), f"{r.cost:.17g}", f"{r.solve_ms:.3f}",
                     str(int(r.in_terminal))]
            lines.append(",".join(vals))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass
class CandidateReport:
    n_star: int
    max_violation: float
    candidate_cost: float
    cost_bound: float  # J*_k - gamma (the candidate must not exceed it)
    ok: bool


def shifted_candidate(cfg: MpcConfig, sol: OcpSolution, delta: np.ndarray):
    """Feasible candidate for the next step built from the current plan.

    For a plan longer than one step, the tail of the optimal solution is
    shifted and corrected by powers of the nominal closed loop acting on
    the one-step model-error residual ``delta``.
    """
    a_k_hat = cfg.sys.a_hat + cfg.sys.b_hat @ cfg.k_gain
    n_star = sol.n_star
    power = np.eye(cfg.sys.n)
    z_hat, v_hat = [], []
    for j in range(n_star - 1):
        v_hat.append(sol.v_seq[j + 1] + cfg.k_gain @ (power @ delta))
        z_hat.append(sol.z_seq[j + 1] + power @ delta)
        power = a_k_hat @ power
    z_hat.append(sol.z_seq[n_star] + power @ delta)
    return z_hat, v_hat


def terminal_candidate(cfg: MpcConfig, x_next: np.ndarray):
    """One-step candidate used once the state has entered the terminal set."""
    a_k_hat = cfg.sys.a_hat + cfg.sys.b_hat @ cfg.k_gain
    v_hat = [cfg.k_gain @ x_next]
    z_hat = [x_next, a_k_hat @ x_next]
    return z_hat, v_hat


def check_candidate_feasibility(
    cfg: MpcConfig,
    real: Realization,
    x_k,
    sol_k: OcpSolution,
    tol: float = 1e-8,
) -> CandidateReport:
    """Audit the recursive-feasibility construction after one true step.

    The model-error residual is computed from measured states only, as the
    controller would online.
    """
    x_k = np.asarray(x_k, dtype=float).ravel()
    u_k = control_move(sol_k)
    x_next = real.step(x_k, u_k)
    delta = x_next - cfg.sys.a_hat @ x_k - cfg.sys.b_hat @ u_k
    if sol_k.n_star > 1:
        z_hat, v_hat = shifted_candidate(cfg, sol_k, delta)
        bound = sol_k.cost - cfg.gamma
    else:
        z_hat, v_hat = terminal_candidate(cfg, x_next)
        bound = cfg.gamma
    viol = constraint_violation(cfg, x_next, z_hat, v_hat)
    max_viol = max(viol.values())
    cand_cost = trajectory_cost(cfg, z_hat, v_hat)
    ok = max_viol <= tol and cand_cost <= bound + 1e-6
    return CandidateReport(sol_k.n_star, max_viol, cand_cost, bound, ok)


def run_closed_loop(
    cfg: MpcConfig,
    real: Realization,
    x0,
    steps: int | None = None,
    check_candidates: bool = False,
    min_steps: int = 30,
    settle_steps: int = 10,
) -> SimLog:
    """Simulate the true plant under the receding-horizon law.

    With ``steps=None`` the run lasts ``min_steps`` or ``settle_steps``
    past the first terminal-set entry, whichever is later (capped at
    10 * min_steps when the terminal set is never reached).
    """
    x = np.asarray(x0, dtype=float).ravel()
    log = SimLog(seed=real.seed)
    warm = {}
    k = 0
    while True:
        t0 = time.perf_counter()
        sol = solve_ocp(cfg, x, warm_starts=warm)
        ms = 1000.0 * (time.perf_counter() - t0)
        in_term = cfg.terminal_set.contains(x)
        if in_term and log.first_terminal_entry is None:
            log.first_terminal_entry = k
        if not sol.feasible:
            log.records.append(
                StepRecord(k, x.copy(), None, 0, np.inf, ms, False, in_term)
            )
            break
        if k == 0:
            log.initial_cost = sol.cost
        u = control_move(sol)
        log.records.append(
            StepRecord(k, x.copy(), u.copy(), sol.n_star, sol.cost, ms, True, in_term)
        )
        if check_candidates:
            log.candidate_reports.append(
                check_candidate_feasibility(cfg, real, x, sol)
            )
        x_next = real.step(x, u)
        # warm start the next step with the theoretical feasible candidate
        delta = x_next - cfg.sys.a_hat @ x - cfg.sys.b_hat @ u
        warm = {}
        if sol.n_star > 1:
            z_hat, v_hat = shifted_candidate(cfg, sol, delta)
            warm[sol.n_star - 1] = stack_solution(cfg, z_hat, v_hat)
        z1, v1 = terminal_candidate(cfg, x_next)
        warm.setdefault(1, stack_solution(cfg, z1, v1))
        x = x_next
        k += 1
        if steps is not None:
            if k >= steps:
                break
        else:
            entered = log.first_terminal_entry
            if k >= min_steps and (entered is not None and k >= entered + settle_steps):
                break
            if k >= 10 * min_steps:
                break
    return log


def feasible_domain_grid(cfg: MpcConfig, grid, jobs: int = 1):
    """Feasibility and optimal horizon of every grid point, input order kept."""
    points = [np.asarray(p, dtype=float).ravel() for p in grid]

    def probe(p):
        sol = solve_ocp(cfg, p)
        return (p, sol.feasible, sol.n_star if sol.feasible else None)

    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_probe_point, [(cfg, p) for p in points]))
    return [probe(p) for p in points]


def _probe_point(arg):
    cfg, p = arg
    sol = solve_ocp(cfg, p)
    return (p, sol.feasible, sol.n_star if sol.feasible else None)
