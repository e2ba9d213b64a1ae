"""Offline tightening bounds for the uncertain closed-loop impulse response.

Given an uncertain system with interval model error and a stabilizing
feedback gain, this module precomputes the interval radii bounding each
term of the closed-loop impulse response of the model error.  Those
radii are what the online optimal control problem uses to tighten its
constraints, so they are computed once per (system, gain) pair.

Two independent computation paths are provided: the zonotope propagation
path (repeated application of the T operator followed by a bounding box)
and a closed-form recursion on absolute powers of the nominal closed
loop.  They must agree to floating-point accuracy; the test suite pins
this down.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .sets import IntervalMatrix, bounding_box, t_operator


class UncertainSystem:
    """Linear system x+ = A x + B u with [A B] in an interval matrix set."""

    __slots__ = ("a_hat", "b_hat", "delta_a", "delta_b")

    def __init__(self, a_hat, b_hat, delta_a, delta_b):
        a_hat = np.atleast_2d(np.asarray(a_hat, dtype=float))
        b_hat = np.atleast_2d(np.asarray(b_hat, dtype=float))
        delta_a = np.atleast_2d(np.asarray(delta_a, dtype=float))
        delta_b = np.atleast_2d(np.asarray(delta_b, dtype=float))
        n = a_hat.shape[0]
        if a_hat.shape != (n, n):
            raise ValueError("a_hat must be square")
        m = b_hat.shape[1]
        if b_hat.shape != (n, m):
            raise ValueError("b_hat row count must match a_hat")
        if delta_a.shape != a_hat.shape or delta_b.shape != b_hat.shape:
            raise ValueError("radius shapes must match nominal shapes")
        if np.any(delta_a < 0) or np.any(delta_b < 0):
            raise ValueError("uncertainty radii must be nonnegative")
        for arr in (a_hat, b_hat, delta_a, delta_b):
            arr.setflags(write=False)
        self.a_hat = a_hat
        self.b_hat = b_hat
        self.delta_a = delta_a
        self.delta_b = delta_b

    @property
    def n(self) -> int:
        return self.a_hat.shape[0]

    @property
    def m(self) -> int:
        return self.b_hat.shape[1]

    @property
    def delta_s(self) -> np.ndarray:
        """Radius of the joint [A B] uncertainty, n x (n+m)."""
        return np.hstack([self.delta_a, self.delta_b])

    def model_set(self) -> IntervalMatrix:
        """Interval matrix containing every admissible [A B]."""
        return IntervalMatrix(np.hstack([self.a_hat, self.b_hat]), self.delta_s)


def closed_loop_matrices(sys: UncertainSystem, k_gain) -> tuple[np.ndarray, np.ndarray]:
    """Nominal closed-loop matrix A_hat + B_hat K and its uncertainty radius."""
    k_gain = np.atleast_2d(np.asarray(k_gain, dtype=float))
    if k_gain.shape != (sys.m, sys.n):
        raise ValueError(f"gain must be {sys.m} x {sys.n}, got {k_gain.shape}")
    a_k_hat = sys.a_hat + sys.b_hat @ k_gain
    delta_k = sys.delta_a + sys.delta_b @ np.abs(k_gain)
    return a_k_hat, delta_k


class OfflineBounds:
    """Precomputed tightening radii delta_i[j], one n x (n+m) matrix per j."""

    __slots__ = ("k_gain", "a_k_hat", "delta_k", "delta_i", "n_max", "config_hash")

    def __init__(self, k_gain, a_k_hat, delta_k, delta_i, config_hash=""):
        self.k_gain = np.atleast_2d(np.asarray(k_gain, dtype=float))
        self.a_k_hat = np.asarray(a_k_hat, dtype=float)
        self.delta_k = np.asarray(delta_k, dtype=float)
        self.delta_i = [np.asarray(d, dtype=float) for d in delta_i]
        if not self.delta_i:
            raise ValueError("at least one tightening radius is required")
        self.n_max = len(self.delta_i)
        self.config_hash = config_hash

    def radius(self, j: int) -> np.ndarray:
        if not 0 <= j < self.n_max:
            raise IndexError(f"bound index {j} outside 0..{self.n_max - 1}")
        return self.delta_i[j]


def config_hash(sys: UncertainSystem, k_gain, n_max: int) -> str:
    """Stable hash of everything the bounds depend on."""
    payload = {
        "a_hat": np.asarray(sys.a_hat).tolist(),
        "b_hat": np.asarray(sys.b_hat).tolist(),
        "delta_a": np.asarray(sys.delta_a).tolist(),
        "delta_b": np.asarray(sys.delta_b).tolist(),
        "k_gain": np.atleast_2d(np.asarray(k_gain, dtype=float)).tolist(),
        "n_max": int(n_max),
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def compute_bounds_zonotope(
    sys: UncertainSystem, k_gain, n_max: int
) -> list[np.ndarray]:
    """Tightening radii via T-operator propagation and bounding boxes.

    Retained as the cross-validation path; :func:`compute_bounds` uses the
    cheaper closed-form recursion.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    a_k_hat, delta_k = closed_loop_matrices(sys, k_gain)
    cl_interval = IntervalMatrix(a_k_hat, delta_k)
    zono = IntervalMatrix.symmetric(sys.delta_s).as_zonotope()
    radii = [bounding_box(zono).radius]
    for _ in range(1, n_max):
        zono = t_operator(cl_interval, zono)
        radii.append(bounding_box(zono).radius)
    return radii


def bounds_recursion(
    sys: UncertainSystem, k_gain, n_max: int
) -> list[np.ndarray]:
    """Closed-form tightening radii: sum_i |A_K^(j-i)| F_i with
    F_0 = Delta_S and F_{j+1} = Delta_K * (that sum)."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    a_k_hat, delta_k = closed_loop_matrices(sys, k_gain)
    abs_powers = [np.eye(sys.n)]  # |A_K^j|, grown incrementally
    power = np.eye(sys.n)
    f = [sys.delta_s]
    radii = []
    for j in range(n_max):
        acc = np.zeros_like(sys.delta_s)
        for i in range(j + 1):
            acc += abs_powers[j - i] @ f[i]
        radii.append(acc)
        f.append(delta_k @ acc)
        power = a_k_hat @ power
        abs_powers.append(np.abs(power))
    return radii


def error_term_recursion(
    sys: UncertainSystem, k_gain, j_max: int
) -> list[np.ndarray]:
    """F_j via the alternate recursion F_j = Delta_K P_j Delta_S, P_1 = I,
    P_{j+1} = |A_K^j| + sum_h P_h Delta_K |A_K^(j-h)|.  Returns F_1..F_j_max."""
    if j_max < 1:
        raise ValueError("j_max must be at least 1")
    a_k_hat, delta_k = closed_loop_matrices(sys, k_gain)
    abs_powers = [np.eye(sys.n)]
    power = np.eye(sys.n)
    for _ in range(j_max):
        power = a_k_hat @ power
        abs_powers.append(np.abs(power))
    p = [None, np.eye(sys.n)]  # 1-based
    for j in range(1, j_max):
        nxt = abs_powers[j].copy()
        for h in range(1, j + 1):
            nxt += p[h] @ delta_k @ abs_powers[j - h]
        p.append(nxt)
    return [delta_k @ p[j] @ sys.delta_s for j in range(1, j_max + 1)]


def compute_bounds(sys: UncertainSystem, k_gain, n_max: int) -> OfflineBounds:
    """Precompute the tightening radii for horizon indices 0..n_max-1."""
    a_k_hat, delta_k = closed_loop_matrices(sys, k_gain)
    radii = bounds_recursion(sys, k_gain, n_max)
    return OfflineBounds(
        k_gain, a_k_hat, delta_k, radii, config_hash=config_hash(sys, k_gain, n_max)
    )


def _fmt_matrix(m: np.ndarray) -> dict:
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [float(f"{v:.17g}") for v in np.asarray(m, dtype=float).ravel()],
    }


def _read_matrix(d: dict) -> np.ndarray:
    return np.asarray(d["data"], dtype=float).reshape(d["rows"], d["cols"])


def save_bounds(bounds: OfflineBounds, path) -> None:
    """Serialize bounds to a JSON text file (row-major, exact round trip)."""
    doc = {
        "config_hash": bounds.config_hash,
        "n_max": bounds.n_max,
        "k_gain": _fmt_matrix(bounds.k_gain),
        "a_k_hat": _fmt_matrix(bounds.a_k_hat),
        "delta_k": _fmt_matrix(bounds.delta_k),
        "delta_i": [_fmt_matrix(d) for d in bounds.delta_i],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_bounds(path) -> OfflineBounds:
    with open(path) as fh:
        doc = json.load(fh)
    bounds = OfflineBounds(
        _read_matrix(doc["k_gain"]),
        _read_matrix(doc["a_k_hat"]),
        _read_matrix(doc["delta_k"]),
        [_read_matrix(d) for d in doc["delta_i"]],
        config_hash=doc["config_hash"],
    )
    if bounds.n_max != doc["n_max"]:
        raise ValueError("bound file is inconsistent")
    return bounds
