"""Quadrature on the unit sphere S^{n-1} and on the radial interval (0, 1).

Sphere rules are tensor products along the polar-angle chain

    theta = (sqrt(1 - z^2) * omega, z),    omega in S^{n-2},

with a Gauss-Jacobi rule for the weight (1 - z^2)^{(n-3)/2} in ``z`` and a
uniform rule on the final circle.  The chain structure is kept on the grid so
that the spherical harmonic transform in :mod:`harmext.sht` can be done
degree by degree instead of with a dense matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import gamma, pi

import numpy as np
from scipy.special import roots_jacobi

__all__ = [
    "DomainError",
    "SphereGrid",
    "RadialRule",
    "BoundaryField",
    "sphere_area",
    "ball_volume",
    "build_sphere_grid",
    "build_radial_rule",
    "lp_norm_boundary",
    "integrate",
]


class DomainError(ValueError):
    """Raised when an argument lies outside an operation's domain."""


def ball_volume(n: int) -> float:
    """Volume omega_n of the unit ball in R^n."""
    return pi ** (n / 2) / gamma(n / 2 + 1)


def sphere_area(n: int) -> float:
    """Area |S^{n-1}| = n * omega_n."""
    return n * ball_volume(n)


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Product quadrature rule on S^{n-1}.

    Node ``j`` is stored at ``j = iz * sub.size + isub`` for n >= 3, so values
    can be reshaped to ``(len(z), sub.size)`` for the separable transforms.
    For n == 2 the grid is a uniform circle and ``z`` / ``sub`` are unused.
    """

    n: int
    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int
    resolution: int
    z: np.ndarray | None = None
    z_weights: np.ndarray | None = None
    sub: "SphereGrid | None" = None
    angles: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def area(self) -> float:
        return sphere_area(self.n)

    def integrate(self, values) -> float:
        values = np.asarray(values, dtype=float)
        return float(values @ self.weights)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "resolution": self.resolution,
                "nodes": self.nodes.tolist(),
                "weights": self.weights.tolist(),
                "exactness_degree": self.exactness_degree,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SphereGrid":
        data = json.loads(text)
        grid = build_sphere_grid(data["n"], data["resolution"])
        nodes = np.asarray(data["nodes"], dtype=float)
        weights = np.asarray(data["weights"], dtype=float)
        if nodes.shape != grid.nodes.shape or not (
            np.allclose(nodes, grid.nodes, rtol=0, atol=1e-14)
            and np.allclose(weights, grid.weights, rtol=1e-14, atol=0)
        ):
            raise ValueError("serialized grid does not match its stated construction")
        return grid


def _circle(m: int, exactness: int, resolution: int) -> SphereGrid:
    phi = 2 * pi * np.arange(m) / m
    nodes = np.column_stack([np.cos(phi), np.sin(phi)])
    weights = np.full(m, 2 * pi / m)
    return SphereGrid(2, nodes, weights, exactness, resolution, angles=phi)


def _chain(n: int, resolution: int) -> SphereGrid:
    if n == 2:
        # exact for trigonometric degree 2 * resolution + 1
        return _circle(2 * resolution + 2, 2 * resolution + 1, resolution)
    sub = _chain(n - 1, resolution)
    a = (n - 3) / 2
    z, wz = roots_jacobi(resolution + 1, a, a)
    s = np.sqrt(1.0 - z**2)
    nodes = np.concatenate(
        [
            (s[:, None, None] * sub.nodes[None]).reshape(-1, n - 1),
            np.repeat(z, sub.size)[:, None],
        ],
        axis=1,
    )
    weights = np.outer(wz, sub.weights).ravel()
    exact = min(2 * resolution + 1, sub.exactness_degree)
    return SphereGrid(n, nodes, weights, exact, resolution, z=z, z_weights=wz, sub=sub)


def _self_test(grid: SphereGrid) -> None:
    n = grid.n
    area = grid.area
    if abs(grid.weights.sum() - area) > 1e-10 * area:
        raise AssertionError("sphere rule does not reproduce the area")
    first = grid.nodes.T @ grid.weights
    second = (grid.nodes.T * grid.weights) @ grid.nodes
    if np.max(np.abs(first)) > 1e-10 or np.max(np.abs(second - area / n * np.eye(n))) > 1e-10:
        raise AssertionError("sphere rule fails the first/second moment identities")


def build_sphere_grid(n: int, resolution: int) -> SphereGrid:
    """Product Gauss rule on S^{n-1}.

    For n >= 3 the rule integrates every polynomial of total degree
    ``2 * resolution + 1`` exactly.  For n == 2 it is the uniform rule with
    ``2 * resolution`` nodes (exact to trigonometric degree ``2 * resolution - 1``).
    """
    if int(n) != n or n < 2:
        raise DomainError(f"sphere dimension n must be an integer >= 2, got {n}")
    if int(resolution) != resolution or resolution < 1:
        raise DomainError(f"resolution must be an integer >= 1, got {resolution}")
    n, resolution = int(n), int(resolution)
    if n == 2:
        grid = _circle(2 * resolution, 2 * resolution - 1, resolution)
    else:
        grid = _chain(n, resolution)
    _self_test(grid)
    return grid


@dataclass(frozen=True, eq=False)
class RadialRule:
    """Gauss rule with sum(weights * phi(nodes)) ~ int_0^1 phi(r) r^{n-1} dr."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def max_radius(self) -> float:
        return float(self.nodes.max())


def build_radial_rule(n: int, m: int) -> RadialRule:
    """Gauss-Jacobi rule on (0, 1) for the weight r^{n-1}, exact to degree 2m - 1."""
    if int(n) != n or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n}")
    if int(m) != m or m < 1:
        raise DomainError(f"node count must be an integer >= 1, got {m}")
    x, w = roots_jacobi(int(m), 0.0, float(n - 1))
    return RadialRule(int(n), (1 + x) / 2, w / 2**n)


@dataclass(frozen=True, eq=False)
class BoundaryField:
    """Real function on the unit sphere sampled at the nodes of ``grid``.

    ``spectral`` optionally carries the harmonic coefficients the values were
    synthesized from (or analyzed into).
    """

    grid: SphereGrid
    values: np.ndarray
    spectral: object = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("boundary field has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: SphereGrid, func) -> "BoundaryField":
        return cls(grid, np.asarray(func(grid.nodes), dtype=float))

    def _check(self, other: "BoundaryField") -> None:
        if other.grid is not self.grid:
            raise ValueError("fields live on different grids")

    def __mul__(self, c):
        if isinstance(c, BoundaryField):
            self._check(c)
            return BoundaryField(self.grid, self.values * c.values)
        return BoundaryField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, BoundaryField):
            self._check(other)
            return BoundaryField(self.grid, self.values + other.values)
        return BoundaryField(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def integral(self) -> float:
        return self.grid.integrate(self.values)


def integrate(f: BoundaryField) -> float:
    return f.integral()


def lp_norm_boundary(f: BoundaryField, p: float) -> float:
    """(sum_j w_j |f_j|^p)^(1/p)."""
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    if np.isinf(p):
        return float(np.max(np.abs(f.values)))
    return float(f.grid.weights @ np.abs(f.values) ** p) ** (1.0 / p)
