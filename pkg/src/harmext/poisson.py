"""Poisson kernels, the harmonic extension P and its dual T on the unit ball.

Both operators are applied spectrally: the degree-l part of a boundary field
extends as r^l, and T acts on each radial shell by projecting to harmonics and
weighting the degree-l part with r^l.  The explicit kernel is kept for
cross-checks away from the boundary.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .sht import SpectralField, analyze, analyze_values, degrees, synthesize_values
from .sphere import BoundaryField, DomainError, RadialRule, SphereGrid, ball_volume

__all__ = [
    "BallSample",
    "poisson_kernel_ball",
    "poisson_kernel_halfspace",
    "harmonic_extension",
    "extend",
    "extension_by_kernel",
    "extension_lq_norm",
    "apply_T",
]


def poisson_kernel_ball(n: int, x, xi) -> np.ndarray:
    """P(x, xi) = (1 - |x|^2) / (n omega_n |x - xi|^n); broadcasts over leading axes."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    r2 = np.sum(x**2, axis=-1)
    if np.any(r2 >= 1.0):
        raise DomainError("Poisson kernel of the ball needs |x| < 1")
    d = np.sqrt(np.sum((x - xi) ** 2, axis=-1))
    return (1.0 - r2) / (n * ball_volume(n) * d**n)


def poisson_kernel_halfspace(n: int, x, xi) -> np.ndarray:
    """Upper half space kernel (2 / (n omega_n)) x_n / (|x' - xi|^2 + x_n^2)^{n/2}.

    ``x`` has n coordinates with x_n > 0, ``xi`` has n - 1.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    xn = x[..., -1]
    if np.any(xn <= 0):
        raise DomainError("half space kernel needs x_n > 0")
    d2 = np.sum((x[..., :-1] - xi) ** 2, axis=-1) + xn**2
    return 2.0 / (n * ball_volume(n)) * xn / d2 ** (n / 2)


@dataclass(frozen=True, eq=False)
class BallSample:
    """Values of a function on B_1 at r_k * theta_j, table shape (radial, sphere)."""

    rule: RadialRule
    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.rule.size, self.grid.size):
            raise ValueError(
                f"value table must be {(self.rule.size, self.grid.size)}, got {v.shape}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, rule: RadialRule, grid: SphereGrid, func) -> "BallSample":
        pts = rule.nodes[:, None, None] * grid.nodes[None, :, :]
        return cls(rule, grid, func(pts))

    def integral(self) -> float:
        return float(self.rule.weights @ (self.values @ self.grid.weights))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["r", "node_index", "value"])
        for k, r in enumerate(self.rule.nodes):
            for j, v in enumerate(self.values[k]):
                w.writerow([repr(float(r)), j, repr(float(v))])
        return buf.getvalue()


def harmonic_extension(spec: SpectralField, rule: RadialRule, grid: SphereGrid) -> BallSample:
    """Sample Pf = sum c_{l,m} r^l Y_{l,m} at every r_k theta_j."""
    if grid.n != spec.n or rule.n != spec.n:
        raise ValueError("dimension mismatch")
    l = spec.degrees
    scaled = rule.nodes[:, None] ** l[None, :] * spec.coeffs[None, :]
    return BallSample(rule, grid, synthesize_values(grid, scaled, spec.L))


def extend(f: BoundaryField, L: int, rule: RadialRule) -> BallSample:
    """Harmonic extension of a boundary field truncated at degree L."""
    spec = f.spectral if isinstance(f.spectral, SpectralField) and f.spectral.L == L else analyze(f, L)
    return harmonic_extension(spec, rule, f.grid)


def extension_by_kernel(f: BoundaryField, points) -> np.ndarray:
    """(Pf)(x) = int P(x, xi) f(xi) dS by direct grid quadrature of the kernel.

    Only accurate well inside the ball; used as an independent check.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    grid = f.grid
    K = poisson_kernel_ball(grid.n, pts[:, None, :], grid.nodes[None, :, :])
    return K @ (grid.weights * f.values)


def extension_lq_norm(u: BallSample, q: float) -> float:
    """(sum_k rho_k sum_j w_j |u_kj|^q)^(1/q)."""
    if not q >= 1:
        raise DomainError(f"q must be >= 1, got {q}")
    total = u.rule.weights @ (np.abs(u.values) ** q @ u.grid.weights)
    return float(total) ** (1.0 / q)


def apply_T(h: BallSample, L: int) -> BoundaryField:
    """(Th)(xi) = int_B P(x, xi) h(x) dx, evaluated degree by degree.

    Each radial shell is projected onto harmonics of degree <= L; the degree-l
    coefficients are weighted by rho_k r_k^l and summed over shells.
    """
    grid, rule = h.grid, h.rule
    shells = analyze_values(grid, h.values, L)
    l = degrees(grid.n, L)
    weights = rule.weights[:, None] * rule.nodes[:, None] ** l[None, :]
    coeffs = np.sum(weights * shells, axis=0)
    spec = SpectralField(grid.n, L, coeffs)
    return BoundaryField(grid, synthesize_values(grid, coeffs, L), spectral=spec)
