"""Interval matrices, matrix zonotopes and their over-approximation operators.

An interval matrix is the set of matrices between elementwise bounds,
stored as a center matrix and a nonnegative radius matrix.  A matrix
zonotope is the set ``{M_C + sum_i G_i b_i : |b_i| <= 1}`` with center
``M_C`` and generator matrices ``G_i``.  All operations are pure and the
objects are immutable after construction.
"""

from __future__ import annotations

import numpy as np


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


class IntervalMatrix:
    """Set of matrices ``{C + D : |D| <= radius}`` (elementwise)."""

    __slots__ = ("center", "radius")

    def __init__(self, center, radius):
        center = _as_matrix(center)
        radius = _as_matrix(radius)
        if center.shape != radius.shape:
            raise ValueError(
                f"center shape {center.shape} != radius shape {radius.shape}"
            )
        if np.any(radius < 0):
            raise ValueError("radius must be elementwise nonnegative")
        center.setflags(write=False)
        radius.setflags(write=False)
        self.center = center
        self.radius = radius

    @property
    def shape(self):
        return self.center.shape

    @classmethod
    def from_bounds(cls, lower, upper) -> "IntervalMatrix":
        lower = _as_matrix(lower)
        upper = _as_matrix(upper)
        return cls((upper + lower) / 2.0, (upper - lower) / 2.0)

    @classmethod
    def symmetric(cls, radius) -> "IntervalMatrix":
        radius = _as_matrix(radius)
        return cls(np.zeros_like(radius), radius)

    def lower(self) -> np.ndarray:
        return self.center - self.radius

    def upper(self) -> np.ndarray:
        return self.center + self.radius

    def contains(self, m, tol: float = 0.0) -> bool:
        m = _as_matrix(m)
        return bool(np.all(np.abs(m - self.center) <= self.radius + tol))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform random member."""
        return self.center + self.radius * rng.uniform(-1.0, 1.0, self.shape)

    def as_zonotope(self, drop_zeros: bool = True) -> "MatrixZonotope":
        """Represent the interval as a zonotope with one generator per entry."""
        return MatrixZonotope(
            self.center, entrywise_decomposition(self.radius, drop_zeros=drop_zeros)
        )

    def __repr__(self):
        return f"IntervalMatrix(center={self.center!r}, radius={self.radius!r})"


class MatrixZonotope:
    """Set ``{C + sum_i G_i b_i : |b_i| <= 1}``."""

    __slots__ = ("center", "generators")

    def __init__(self, center, generators=()):
        center = _as_matrix(center)
        gens = []
        for g in generators:
            g = _as_matrix(g)
            if g.shape != center.shape:
                raise ValueError(
                    f"generator shape {g.shape} != center shape {center.shape}"
                )
            g.setflags(write=False)
            gens.append(g)
        center.setflags(write=False)
        self.center = center
        self.generators = tuple(gens)

    @property
    def shape(self):
        return self.center.shape

    @property
    def order(self) -> int:
        return len(self.generators)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Random member with coefficients uniform on [-1, 1]."""
        m = self.center.copy()
        for g in self.generators:
            m += g * rng.uniform(-1.0, 1.0)
        return m

    def sample_extreme(self, rng: np.random.Generator) -> np.ndarray:
        """Random member with coefficients at +-1."""
        m = self.center.copy()
        for g in self.generators:
            m += g * rng.choice([-1.0, 1.0])
        return m

    def __repr__(self):
        return (
            f"MatrixZonotope(center shape {self.shape}, {self.order} generators)"
        )


def interval_sum(a: IntervalMatrix, b: IntervalMatrix) -> IntervalMatrix:
    """Minkowski sum of two interval matrices (exact)."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return IntervalMatrix(a.center + b.center, a.radius + b.radius)


def zonotope_minkowski_sum(a: MatrixZonotope, b: MatrixZonotope) -> MatrixZonotope:
    """Minkowski sum of two matrix zonotopes (exact; generators concatenate)."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return MatrixZonotope(a.center + b.center, a.generators + b.generators)


def interval_product(a: IntervalMatrix, b: IntervalMatrix) -> IntervalMatrix:
    """Interval matrix product; over-approximates the exact set product."""
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions mismatch: {a.shape} x {b.shape}")
    center = a.center @ b.center
    radius = (
        np.abs(a.center) @ b.radius
        + a.radius @ np.abs(b.center)
        + a.radius @ b.radius
    )
    return IntervalMatrix(center, radius)


def left_matrix_product(m, a: IntervalMatrix) -> IntervalMatrix:
    """Product of a fixed matrix with an interval matrix: M * A."""
    m = _as_matrix(m)
    if m.shape[1] != a.shape[0]:
        raise ValueError(f"inner dimensions mismatch: {m.shape} x {a.shape}")
    return IntervalMatrix(m @ a.center, np.abs(m) @ a.radius)


def right_matrix_product(a: IntervalMatrix, m) -> IntervalMatrix:
    """Product of an interval matrix with a fixed matrix: A * M."""
    m = _as_matrix(m)
    if a.shape[1] != m.shape[0]:
        raise ValueError(f"inner dimensions mismatch: {a.shape} x {m.shape}")
    return IntervalMatrix(a.center @ m, a.radius @ np.abs(m))


def bounding_box(z: MatrixZonotope) -> IntervalMatrix:
    """Smallest interval matrix containing a matrix zonotope."""
    radius = np.zeros(z.shape)
    for g in z.generators:
        radius += np.abs(g)
    return IntervalMatrix(z.center, radius)


def entrywise_decomposition(m, drop_zeros: bool = True) -> list[np.ndarray]:
    """Split a matrix into single-entry matrices that sum back to it.

    Entries are emitted in row-major order.  Exactly-zero entries are
    skipped by default since they contribute nothing to the set a
    generator list represents.
    """
    m = _as_matrix(m)
    out = []
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            if drop_zeros and m[i, j] == 0.0:
                continue
            e = np.zeros_like(m)
            e[i, j] = m[i, j]
            out.append(e)
    return out


def t_operator(
    i: IntervalMatrix, z: MatrixZonotope, drop_zeros: bool = True
) -> MatrixZonotope:
    """Zonotope over-approximation of the product interval * zonotope.

    The result keeps the mapped center and generators and appends one
    single-entry generator per entry of
    ``F = radius * (|center| + sum_j |G_j|)``.
    """
    if i.shape[1] != z.shape[0]:
        raise ValueError(f"inner dimensions mismatch: {i.shape} x {z.shape}")
    abs_sum = np.abs(z.center)
    for g in z.generators:
        abs_sum = abs_sum + np.abs(g)
    f = i.radius @ abs_sum
    gens = [i.center @ g for g in z.generators]
    gens.extend(entrywise_decomposition(f, drop_zeros=drop_zeros))
    return MatrixZonotope(i.center @ z.center, gens)


def t_operator_iterated(
    i: IntervalMatrix, z: MatrixZonotope, j: int, drop_zeros: bool = True
) -> MatrixZonotope:
    """j-fold application of :func:`t_operator` (j = 0 returns z)."""
    if j < 0:
        raise ValueError("iteration count must be nonnegative")
    if j > 0 and i.shape[0] != i.shape[1]:
        raise ValueError("interval matrix must be square for repeated application")
    out = z
    for _ in range(j):
        out = t_operator(i, out, drop_zeros=drop_zeros)
    return out
