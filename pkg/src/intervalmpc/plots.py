"""Figure rendering for the experiment reports.

Every plot function takes already-computed data and a target path; the
Agg backend is forced so rendering works headless.  Figures are written
next to the CSV files they illustrate.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_feasible_domain(results, path, terminal_template=None) -> None:
    """Scatter of grid points colored by feasibility (2-D systems only)."""
    pts = np.array([p for p, _, _ in results])
    feas = np.array([f for _, f, _ in results], dtype=bool)
    if pts.shape[1] != 2:
        return
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.scatter(pts[~feas, 0], pts[~feas, 1], s=14, c="lightgray", label="infeasible")
    ax.scatter(pts[feas, 0], pts[feas, 1], s=14, c="tab:blue", label="feasible")
    if terminal_template is not None:
        verts = np.array(terminal_template.vertices())
        order = np.argsort(np.arctan2(verts[:, 1] - verts[:, 1].mean(),
                                      verts[:, 0] - verts[:, 0].mean()))
        ring = np.vstack([verts[order], verts[order][:1]])
        ax.plot(ring[:, 0], ring[:, 1], "k-", lw=1, label="terminal set")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title("feasible domain")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_coverage(deltas, ratios, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(deltas, ratios, "o-")
    ax.set_xlabel("uncertainty radius")
    ax.set_ylabel("coverage ratio")
    ax.set_ylim(0, 1.05)
    ax.grid(True, alpha=0.3)
    ax.set_title("feasible-domain coverage vs uncertainty")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_runtime(counts_uncertain, n_constraints, mean_ms, path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(counts_uncertain, mean_ms, "o-")
    ax1.set_xlabel("uncertain entries")
    ax1.set_ylabel("mean solve time [ms]")
    ax1.grid(True, alpha=0.3)
    ax2.plot(counts_uncertain, n_constraints, "s-")
    ax2.set_xlabel("uncertain entries")
    ax2.set_ylabel("constraint rows")
    ax2.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_trajectories(logs, path, state_indices=(0, -1), input_bounds=None) -> None:
    """Overlay state and input trajectories of many closed-loop runs."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for log in logs:
        xs = log.states()
        for i in state_indices:
            ax1.plot(np.arange(xs.shape[0]), xs[:, i], lw=0.6, alpha=0.5)
        us = log.inputs()
        ax2.plot(np.arange(us.shape[0]), us, lw=0.6, alpha=0.5)
    ax1.axhline(0.0, color="k", lw=0.8, ls="--")
    ax1.set_ylabel("state")
    if input_bounds is not None:
        for ub in np.asarray(input_bounds, dtype=float).ravel():
            ax2.axhline(ub, color="g", lw=0.8, ls="--")
            ax2.axhline(-ub, color="g", lw=0.8, ls="--")
    ax2.set_ylabel("input")
    ax2.set_xlabel("step k")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_bound_decay(radii, path) -> None:
    """Max entry of each propagation radius versus step count."""
    peaks = [float(np.max(r)) for r in radii]
    fig, ax = plt.subplots(figsize=(5, 4))
    plot = ax.semilogy if any(p > 0 for p in peaks) else ax.plot
    plot(np.arange(len(peaks)), peaks, "o-")
    ax.set_xlabel("propagation steps j")
    ax.set_ylabel("max entry of the error bound")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
