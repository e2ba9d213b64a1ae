"""Command-line front end.

Subcommands: verify | bounds | solve | simulate | experiment.  Every
report-producing path writes delimited CSV artifacts and renders the
matching matplotlib figure next to them.  Exit codes: 0 success, 1 check
failure, 2 usage or config error, 3 internal solver failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .bounds import (
    UncertainSystem,
    compute_bounds,
    compute_bounds_zonotope,
    save_bounds,
)
from .config import ConfigError, ExperimentConfig, load_config
from .ocp import (
    MpcConfig,
    OcpSolverError,
    build_subproblem,
    solve_ocp,
    subproblem_sizes,
)
from .qp import solve_qp
from .sim import feasible_domain_grid, run_closed_loop, sample_realization
from .terminal import verify_gain_robust_schur, verify_rpi
from . import plots

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _write_csv(path: Path, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            _fmt(v) if isinstance(v, float) else str(v) for v in row
        ))
    path.write_text("\n".join(lines) + "\n")


def _out_dir(ec: ExperimentConfig, args) -> Path:
    out = Path(args.out if args.out else ec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _mpc_config(ec: ExperimentConfig):
    bounds = compute_bounds(ec.sys, ec.k_gain, ec.n_max)
    return ec.mpc_config(bounds), bounds


def cmd_verify(ec: ExperimentConfig, args) -> int:
    out = _out_dir(ec, args)
    lines = [f"verification report: {ec.name}"]
    failed = False

    gain = verify_gain_robust_schur(ec.sys, ec.k_gain, seed=ec.seed)
    lines.append(
        f"gain check: {gain.status} "
        f"(spectral radius bound {gain.spectral_radius_bound:.6g}, "
        f"sampled max {gain.sampled_max_rho:.6g})"
    )
    if gain.status == "falsified":
        failed = True
        lines.append(f"  witness model:\n{gain.witness}")

    rep = verify_rpi(
        ec.sys, ec.k_gain,
        ec.terminal_template if ec.terminal_template is not None else ec.terminal_hrep,
        ec.state_set, ec.input_set, vertices=ec.terminal_vertices,
    )
    lines.append(rep.summary())
    failed = failed or not rep.ok

    if ec.x0_list:
        cfg, _ = _mpc_config(ec)
        for x0 in ec.x0_list:
            sol = solve_ocp(cfg, x0)
            tag = f"N* = {sol.n_star}, cost = {sol.cost:.6g}" if sol.feasible \
                else "INFEASIBLE"
            lines.append(f"initial state {x0.tolist()}: {tag}")
            failed = failed or not sol.feasible

    report = "\n".join(lines)
    print(report)
    (out / "verify.txt").write_text(report + "\n")
    return EXIT_CHECK if failed else EXIT_OK


def cmd_bounds(ec: ExperimentConfig, args) -> int:
    out = _out_dir(ec, args)
    bounds = compute_bounds(ec.sys, ec.k_gain, ec.n_max)
    cross = compute_bounds_zonotope(ec.sys, ec.k_gain, ec.n_max)
    worst = 0.0
    for a, b in zip(bounds.delta_i, cross):
        scale = max(1.0, float(np.abs(a).max()))
        worst = max(worst, float(np.abs(a - b).max()) / scale)
    save_bounds(bounds, out / "bounds.json")

    rows = [(j, float(np.max(r))) for j, r in enumerate(bounds.delta_i)]
    _write_csv(out / "bounds.csv", ["j", "max_entry"], rows)
    plots.plot_bound_decay(bounds.delta_i, out / "bounds.png")
    print(f"wrote {len(bounds.delta_i)} propagation radii of shape "
          f"{ec.sys.n} x {ec.sys.n + ec.sys.m} to {out / 'bounds.json'}")
    print(f"closed-form vs set-propagation cross-check: "
          f"max relative difference {worst:.3e}")
    for j, peak in rows:
        print(f"  j = {j:3d}  max entry {peak:.6e}")
    return EXIT_OK


def cmd_solve(ec: ExperimentConfig, args) -> int:
    out = _out_dir(ec, args)
    cfg, _ = _mpc_config(ec)
    if args.x0:
        starts = [np.array([float(v) for v in args.x0.split(",")])]
    elif ec.x0_list:
        starts = ec.x0_list
    else:
        print("no initial state: pass --x0 or set x0_list in the config",
              file=sys.stderr)
        return EXIT_USAGE
    rows = []
    for x0 in starts:
        sol = solve_ocp(cfg, x0)
        if sol.feasible:
            u = sol.v_seq[0]
            print(f"x0 = {x0.tolist()}: N* = {sol.n_star}, "
                  f"cost = {sol.cost:.8g}, u = {u.tolist()}")
            rows.append(tuple(x0) + (1, sol.n_star, float(sol.cost)) + tuple(u))
        else:
            print(f"x0 = {x0.tolist()}: infeasible")
            rows.append(tuple(x0) + (0, 0, float("inf"))
                        + tuple([float("nan")] * cfg.sys.m))
        if args.dump_qp and sol.feasible:
            from .ocp import dump_qp
            dump_qp(build_subproblem(cfg, x0, sol.n_star), out / "subproblem.txt")
    header = ([f"x{i + 1}" for i in range(cfg.sys.n)]
              + ["feasible", "n_star", "cost"]
              + [f"u{i + 1}" for i in range(cfg.sys.m)])
    _write_csv(out / "solve.csv", header, rows)
    return EXIT_OK


def cmd_simulate(ec: ExperimentConfig, args) -> int:
    out = _out_dir(ec, args)
    cfg, _ = _mpc_config(ec)
    sim = ec.simulation
    n_real = int(sim.get("realizations", 10))
    steps = sim.get("steps")
    steps = int(steps) if steps is not None else None
    mode = str(sim.get("mode", "uniform"))
    base_seed = args.seed if args.seed is not None else ec.seed
    starts = ec.x0_list or [np.zeros(cfg.sys.n)]

    logs, failed = [], False
    for ix, x0 in enumerate(starts):
        for r in range(n_real):
            real = sample_realization(ec.sys, base_seed + 1000 * ix + r, mode)
            log = run_closed_loop(cfg, real, x0, steps=steps)
            log.write_csv(out / f"sim_x{ix}_seed{real.seed}.csv")
            logs.append(log)
            if not log.feasible_throughout:
                failed = True
                print(f"x0 index {ix}, seed {real.seed}: INFEASIBLE at step "
                      f"{len(log.records) - 1}")
    plots.plot_trajectories(logs, out / "simulate.png")
    ok = sum(log.feasible_throughout for log in logs)
    print(f"{ok}/{len(logs)} runs feasible throughout; "
          f"CSV and figure written to {out}")
    return EXIT_CHECK if failed else EXIT_OK


def _exp_feasible_domain(ec: ExperimentConfig, args, out: Path) -> int:
    cfg, _ = _mpc_config(ec)
    results = feasible_domain_grid(cfg, ec.grid_points(), jobs=args.jobs)
    rows = [tuple(p) + (int(f), ns if ns is not None else 0)
            for p, f, ns in results]
    header = [f"x{i + 1}" for i in range(cfg.sys.n)] + ["feasible", "n_star"]
    _write_csv(out / "feasible_domain.csv", header, rows)
    plots.plot_feasible_domain(results, out / "feasible_domain.png",
                               terminal_template=ec.terminal_template)
    n_feas = sum(f for _, f, _ in results)
    print(f"{n_feas}/{len(results)} grid points feasible")
    return EXIT_OK


def _exp_coverage(ec: ExperimentConfig, args, out: Path) -> int:
    cov = ec.coverage
    deltas = [float(d) for d in cov.get("deltas", [0.0])]
    pattern = np.atleast_2d(np.asarray(cov.get("delta_a_pattern"), dtype=float))
    grid = ec.grid_points()
    counts = []
    for d in deltas:
        sys_d = UncertainSystem(
            ec.sys.a_hat, ec.sys.b_hat, d * pattern, ec.sys.delta_b
        )
        bounds = compute_bounds(sys_d, ec.k_gain, ec.n_max)
        cfg = MpcConfig(sys_d, ec.k_gain, ec.state_set, ec.input_set,
                        ec.terminal_hrep, ec.gamma, ec.n_max, bounds,
                        weight=ec.weight)
        results = feasible_domain_grid(cfg, grid, jobs=args.jobs)
        counts.append(sum(f for _, f, _ in results))
    base = counts[0] if counts and counts[0] else 1
    rows = [(d, c, len(grid), c / base) for d, c in zip(deltas, counts)]
    _write_csv(out / "coverage.csv",
               ["delta", "n_feasible", "n_grid", "ratio_vs_first"], rows)
    plots.plot_coverage(deltas, [r[3] for r in rows], out / "coverage.png")
    for d, c, _, ratio in rows:
        print(f"delta = {d:.3g}: {c}/{len(grid)} feasible (ratio {ratio:.3f})")
    return EXIT_OK


def _exp_leslie_runtime(ec: ExperimentConfig, args, out: Path) -> int:
    rt = ec.runtime
    order = [tuple(int(v) for v in e) for e in rt.get("entry_order", [])]
    if not order:
        print("runtime.entry_order missing from config", file=sys.stderr)
        return EXIT_USAGE
    horizon = int(rt.get("horizon", ec.n_max))
    x0_count = int(rt.get("x0_count", 20))
    n = ec.sys.n
    base = np.hstack([ec.sys.delta_a, ec.sys.delta_b])
    rng = np.random.default_rng(ec.seed)
    starts = [rng.uniform(-1.0, 1.0, n) for _ in range(x0_count)]

    rows = []
    for u in range(len(order) + 1):
        mask = np.zeros_like(base)
        for r, c in order[:u]:
            mask[r, c] = 1.0
        sys_u = UncertainSystem(ec.sys.a_hat, ec.sys.b_hat,
                                (base * mask)[:, :n], (base * mask)[:, n:])
        bounds = compute_bounds(sys_u, ec.k_gain, ec.n_max)
        cfg = MpcConfig(sys_u, ec.k_gain, ec.state_set, ec.input_set,
                        ec.terminal_hrep, ec.gamma, ec.n_max, bounds,
                        weight=ec.weight)
        n_eq, n_in = subproblem_sizes(cfg, horizon)
        times = []
        for x0 in starts:
            prob = build_subproblem(cfg, x0, horizon)
            best = np.inf  # best of three repeats to suppress timer jitter
            for _ in range(3):
                t0 = time.perf_counter()
                solve_qp(prob, method="ipm")
                best = min(best, time.perf_counter() - t0)
            times.append(1000.0 * best)
        rows.append((u, n_eq + n_in, float(np.mean(times))))
        print(f"u = {u:2d}: {n_eq + n_in} constraint rows, "
              f"mean solve {rows[-1][2]:.2f} ms")
    _write_csv(out / "leslie_runtime.csv",
               ["uncertain_entries", "constraint_rows", "mean_solve_ms"], rows)
    plots.plot_runtime([r[0] for r in rows], [r[1] for r in rows],
                       [r[2] for r in rows], out / "leslie_runtime.png")
    return EXIT_OK


def _exp_leslie_trajectories(ec: ExperimentConfig, args, out: Path) -> int:
    cfg, _ = _mpc_config(ec)
    sim = ec.simulation
    n_real = int(sim.get("realizations", 100))
    steps = int(sim.get("steps", 30))
    x0 = ec.x0_list[0] if ec.x0_list else -np.ones(cfg.sys.n)
    base_seed = args.seed if args.seed is not None else ec.seed
    logs, summary, failed = [], [], False
    for r in range(n_real):
        real = sample_realization(ec.sys, base_seed + r, "uniform")
        log = run_closed_loop(cfg, real, x0, steps=steps)
        log.write_csv(out / f"leslie_seed{real.seed}.csv")
        logs.append(log)
        xs = log.states()
        summary.append((real.seed, int(log.feasible_throughout),
                        log.first_terminal_entry if log.first_terminal_entry
                        is not None else -1,
                        float(np.abs(xs).max()),
                        float(np.abs(xs[-1]).max())))
        failed = failed or not log.feasible_throughout
    _write_csv(out / "leslie_summary.csv",
               ["seed", "feasible", "first_terminal_entry", "max_abs_state",
                "final_abs_state"], summary)
    plots.plot_trajectories(
        logs, out / "leslie_trajectories.png", state_indices=(0, cfg.sys.n - 1),
        input_bounds=None,
    )
    print(f"{sum(s[1] for s in summary)}/{n_real} runs feasible throughout")
    return EXIT_CHECK if failed else EXIT_OK


EXPERIMENTS = {
    "feasible-domain": _exp_feasible_domain,
    "coverage": _exp_coverage,
    "leslie-runtime": _exp_leslie_runtime,
    "leslie-trajectories": _exp_leslie_trajectories,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="intervalmpc",
        description="Robust MPC for linear systems with interval-matrix "
                    "uncertainty",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="YAML config path")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--jobs", type=int, default=1)

    common(sub.add_parser("verify", help="check gain, terminal set, and "
                                         "initial feasibility"))
    common(sub.add_parser("bounds", help="compute and save the offline "
                                         "propagation bounds"))
    sp = sub.add_parser("solve", help="solve the optimal control problem at "
                                      "one or more states")
    common(sp)
    sp.add_argument("--x0", default=None, help="comma-separated initial state")
    sp.add_argument("--dump-qp", action="store_true",
                    help="write the winning subproblem in dense text form")
    sp = sub.add_parser("simulate", help="closed-loop batch simulation")
    common(sp)
    sp = sub.add_parser("experiment", help="run a named batch experiment")
    sp.add_argument("name", choices=sorted(EXPERIMENTS))
    common(sp)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        ec = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "verify":
            return cmd_verify(ec, args)
        if args.command == "bounds":
            return cmd_bounds(ec, args)
        if args.command == "solve":
            return cmd_solve(ec, args)
        if args.command == "simulate":
            return cmd_simulate(ec, args)
        if args.command == "experiment":
            out = _out_dir(ec, args)
            return EXPERIMENTS[args.name](ec, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OcpSolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
