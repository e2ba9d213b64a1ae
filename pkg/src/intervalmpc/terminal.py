"""Verification of the feedback gain and the robust invariant terminal set.

The gain check uses the sufficient condition that the spectral radius of
``|A_K_hat| + Delta_K`` is below one (every admissible closed loop is
then Schur, by monotonicity of the spectral radius for nonnegative
matrices), falling back to sampled falsification.  Terminal-set checks
are exact vertex conditions: for each facet row h and vertex w,
``h A_K_hat w + |h| (Delta_A |w| + Delta_B |K w|) <= b`` is the exact
worst case of ``h (A + B K) w`` over all admissible (A, B); the model
error enters the closed loop only through the fixed directions (I, K),
so bounding it by the box Delta_A + Delta_B |K| would be conservative.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .bounds import UncertainSystem, closed_loop_matrices
from .ocp import ConstraintSet

MAX_TEMPLATE_DIM = 16  # sign-vector vertex enumeration is 2^n


class TemplateSet:
    """Terminal set template {x : |V x| <= alpha} with square invertible V."""

    __slots__ = ("v", "alpha")

    def __init__(self, v, alpha):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        alpha = np.asarray(alpha, dtype=float).ravel()
        if v.shape[0] != v.shape[1]:
            raise ValueError("template matrix must be square")
        if v.shape[0] != alpha.size:
            raise ValueError("alpha length must match template rows")
        if np.any(alpha <= 0):
            raise ValueError("alpha must be strictly positive")
        if abs(np.linalg.det(v)) < 1e-12:
            raise ValueError("template matrix must be invertible")
        v.setflags(write=False)
        alpha.setflags(write=False)
        self.v = v
        self.alpha = alpha

    @property
    def dim(self) -> int:
        return self.v.shape[1]

    def h_rep(self) -> ConstraintSet:
        return ConstraintSet(
            np.vstack([self.v, -self.v]), np.concatenate([self.alpha, self.alpha])
        )

    def vertices(self) -> list[np.ndarray]:
        n = self.dim
        if n > MAX_TEMPLATE_DIM:
            raise ValueError(f"vertex enumeration capped at dimension {MAX_TEMPLATE_DIM}")
        vinv = np.linalg.inv(self.v)
        return [vinv @ (self.alpha * np.asarray(s, dtype=float))
                for s in itertools.product((-1.0, 1.0), repeat=n)]

    def scaled(self, sigma: float) -> "TemplateSet":
        return TemplateSet(self.v, sigma * self.alpha)

    def contains(self, x, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.v @ np.asarray(x, float).ravel())
                           <= self.alpha + tol))


@dataclass
class GainCheck:
    status: str  # verified | unverified | falsified
    spectral_radius_bound: float
    witness: np.ndarray | None = None
    sampled_max_rho: float = 0.0


def spectral_radius(m) -> float:
    return float(np.abs(np.linalg.eigvals(np.asarray(m, dtype=float))).max())


def verify_gain_robust_schur(
    sys: UncertainSystem, k_gain, samples: int = 10_000, seed: int = 0
) -> GainCheck:
    """Check that A + B K is Schur over the whole interval model set."""
    a_k_hat, delta_k = closed_loop_matrices(sys, k_gain)
    rho_bound = spectral_radius(np.abs(a_k_hat) + delta_k)
    if rho_bound < 1.0:
        return GainCheck("verified", rho_bound)
    k_gain = np.atleast_2d(np.asarray(k_gain, dtype=float))
    rng = np.random.default_rng(seed)
    model = sys.model_set()
    worst = 0.0
    for i in range(samples):
        ab = model.sample(rng) if i else model.center  # nominal first
        a, b = ab[:, : sys.n], ab[:, sys.n:]
        rho = spectral_radius(a + b @ k_gain)
        if rho >= 1.0:
            return GainCheck("falsified", rho_bound, witness=ab, sampled_max_rho=rho)
        worst = max(worst, rho)
    return GainCheck("unverified", rho_bound, sampled_max_rho=worst)


@dataclass
class RpiReport:
    ok: bool
    invariance_slack: float  # worst (lhs - b); <= tol means holds
    state_slack: float
    input_slack: float
    failed: list = field(default_factory=list)

    def summary(self) -> str:
        lines = ["terminal set verification"]
        for name, slack in (
            ("invariance", self.invariance_slack),
            ("state inclusion", self.state_slack),
            ("input inclusion", self.input_slack),
        ):
            mark = "ok" if name not in self.failed else "VIOLATED"
            lines.append(f"  {name:16s} worst slack {slack: .3e}  {mark}")
        lines.append(f"  verdict: {'PASS' if self.ok else 'FAIL'}")
        return "\n".join(lines)


def verify_rpi(
    sys: UncertainSystem,
    k_gain,
    xf,
    state_set: ConstraintSet,
    input_set: ConstraintSet,
    vertices=None,
    tol: float = 1e-9,
) -> RpiReport:
    """Exact vertex check of robust invariance and of the state/input
    inclusions of the terminal set."""
    if isinstance(xf, TemplateSet):
        hrep = xf.h_rep()
        verts = xf.vertices() if vertices is None else list(vertices)
    else:
        hrep = xf
        if vertices is None:
            raise ValueError("vertex list required for a general H-polytope")
        verts = [np.asarray(w, dtype=float).ravel() for w in vertices]
    a_k_hat, _ = closed_loop_matrices(sys, k_gain)
    k_gain = np.atleast_2d(np.asarray(k_gain, dtype=float))

    inv_slack = -np.inf
    for w in verts:
        err = sys.delta_a @ np.abs(w) + sys.delta_b @ np.abs(k_gain @ w)
        lhs = hrep.h @ (a_k_hat @ w) + np.abs(hrep.h) @ err
        inv_slack = max(inv_slack, float((lhs - hrep.b).max()))
    state_slack = max(
        float((state_set.h @ w - state_set.b).max()) for w in verts
    )
    input_slack = max(
        float((input_set.h @ (k_gain @ w) - input_set.b).max()) for w in verts
    )
    failed = [name for name, s in (
        ("invariance", inv_slack),
        ("state inclusion", state_slack),
        ("input inclusion", input_slack),
    ) if s > tol]
    return RpiReport(not failed, inv_slack, state_slack, input_slack, failed)


def falsify_rpi(
    sys: UncertainSystem,
    k_gain,
    xf: TemplateSet,
    state_set: ConstraintSet,
    input_set: ConstraintSet,
    samples: int = 100_000,
    seed: int = 0,
):
    """Randomized search for a counterexample to the terminal-set conditions.

    Samples x uniformly in the template set and (A, B) uniformly in the
    model set; returns (condition, x, model) for the first violation found,
    or None.  A None result never contradicts a true verify_rpi verdict.
    """
    rng = np.random.default_rng(seed)
    k_gain = np.atleast_2d(np.asarray(k_gain, dtype=float))
    vinv = np.linalg.inv(xf.v)
    model = sys.model_set()
    n = sys.n
    for _ in range(samples):
        x = vinv @ (xf.alpha * rng.uniform(-1.0, 1.0, n))
        ab = model.sample(rng)
        a, b = ab[:, :n], ab[:, n:]
        x_next = (a + b @ k_gain) @ x
        if not xf.contains(x_next):
            return ("invariance", x, ab)
        if np.any(state_set.h @ x > state_set.b + 1e-9):
            return ("state inclusion", x, ab)
        if np.any(input_set.h @ (k_gain @ x) > input_set.b + 1e-9):
            return ("input inclusion", x, ab)
    return None


def _default_alpha(sys: UncertainSystem, k_gain, v) -> np.ndarray:
    a_k_hat, _ = closed_loop_matrices(sys, k_gain)
    k_gain = np.atleast_2d(np.asarray(k_gain, dtype=float))
    vinv = np.linalg.inv(v)
    contraction = np.abs(v @ a_k_hat @ vinv) + np.abs(v) @ (
        sys.delta_a @ np.abs(vinv) + sys.delta_b @ np.abs(k_gain @ vinv)
    )
    if spectral_radius(contraction) >= 1.0:
        raise ValueError("template V is not robustly invariant at any scaling")
    return np.linalg.solve(np.eye(v.shape[0]) - contraction, np.ones(v.shape[0]))


def synthesize_alpha(
    sys: UncertainSystem,
    k_gain,
    v,
    state_set: ConstraintSet,
    input_set: ConstraintSet,
    alpha0=None,
    rel_tol: float = 1e-9,
) -> TemplateSet:
    """Largest uniform scaling of a template terminal set.

    Invariance of {|Vx| <= sigma * alpha0} does not depend on sigma, so it
    is verified once at the template; the state/input inclusions are then
    maximized over sigma by bisection.  When ``alpha0`` is omitted it is
    taken as (I - M)^-1 1 where M is the one-step contraction matrix of
    the template coordinates, which satisfies the invariance inequalities
    strictly whenever the template admits any invariant scaling.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if alpha0 is None:
        alpha0 = _default_alpha(sys, k_gain, v)
    else:
        alpha0 = np.asarray(alpha0, dtype=float).ravel()
    base = TemplateSet(v, alpha0)
    rep = verify_rpi(sys, k_gain, base, state_set, input_set)
    if "invariance" in rep.failed:
        raise ValueError(
            f"template V is not robustly invariant (worst slack "
            f"{rep.invariance_slack:.3e})"
        )

    def inclusions_ok(sigma: float) -> bool:
        r = verify_rpi(sys, k_gain, base.scaled(sigma), state_set, input_set)
        return "state inclusion" not in r.failed and "input inclusion" not in r.failed

    lo, hi = 0.0, 1.0
    while inclusions_ok(hi):
        lo, hi = hi, hi * 2.0
        if hi > 1e12:
            break
    if lo == 0.0:
        # shrink until feasible
        while not inclusions_ok(hi) and hi > 1e-12:
            hi *= 0.5
        if hi <= 1e-12:
            raise ValueError("no positive scaling satisfies the state/input bounds")
        lo, hi = hi, hi * 2.0
    while hi - lo > rel_tol * max(lo, 1e-30):
        mid = 0.5 * (lo + hi)
        if inclusions_ok(mid):
            lo = mid
        else:
            hi = mid
    return base.scaled(lo)
