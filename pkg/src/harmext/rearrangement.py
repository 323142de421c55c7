"""Symmetric decreasing rearrangement on S^{n-1}.

The rearrangement of a grid field is represented two ways: as an exact
staircase profile in cap area (equimeasurable with the quadrature measure,
so all L^p norms are preserved), and as a grid field.  For the grid field the
nodes are sorted by polar angle and each ring of nodes at equal angle takes
the mean of the staircase over the ring's cumulative-weight interval.  Ring
averaging keeps the grid field axisymmetric, which the harmonic extension
needs; handing single sorted values to single nodes would spread different
values around one ring and feed spurious high-degree content into Pf*.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import betainc, betaincinv

from .poisson import extend, extension_lq_norm
from .sht import analyze_values, basis_at, synthesize_values
from .sphere import BoundaryField, DomainError, build_radial_rule, build_sphere_grid, sphere_area

__all__ = [
    "AxisymmetricField",
    "distribution_function",
    "symmetric_rearrangement",
    "extension_comparison",
    "cap_area",
]


def cap_area(n: int, angle) -> np.ndarray:
    """Area of the geodesic cap {theta : angle(theta, pole) <= angle} on S^{n-1}."""
    angle = np.clip(np.asarray(angle, dtype=float), 0.0, np.pi)
    half = 0.5 * betainc((n - 1) / 2, 0.5, np.sin(angle) ** 2)
    frac = np.where(angle <= np.pi / 2, half, 1.0 - half)
    return sphere_area(n) * frac


def _cap_angle(n: int, area) -> np.ndarray:
    frac = np.clip(np.asarray(area, dtype=float) / sphere_area(n), 0.0, 1.0)
    lower = frac <= 0.5
    s2 = betaincinv((n - 1) / 2, 0.5, np.where(lower, 2 * frac, 2 * (1 - frac)))
    phi = np.arcsin(np.sqrt(np.clip(s2, 0.0, 1.0)))
    return np.where(lower, phi, np.pi - phi)


@dataclass(frozen=True, eq=False)
class AxisymmetricField:
    """Nonincreasing staircase in the polar angle from ``pole``.

    ``values[k]`` holds on caps whose area lies in [cum_area[k], cum_area[k+1]);
    ``breaks`` are the corresponding polar angles.
    """

    n: int
    pole: np.ndarray
    values: np.ndarray
    cum_area: np.ndarray
    breaks: np.ndarray
    grid_field: BoundaryField | None = None

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) <= 0))

    def at_cap_area(self, area) -> np.ndarray:
        k = np.searchsorted(self.cum_area, area, side="right") - 1
        return self.values[np.clip(k, 0, len(self.values) - 1)]

    def evaluate(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        angle = np.arccos(np.clip(pts @ self.pole, -1.0, 1.0))
        return self.at_cap_area(cap_area(self.n, angle))

    def lp_norm(self, p: float) -> float:
        widths = np.diff(self.cum_area)
        return float(widths @ np.abs(self.values) ** p) ** (1 / p)

    def distribution(self, t: float) -> float:
        return float(np.diff(self.cum_area)[self.values > t].sum())


def distribution_function(f: BoundaryField, t: float) -> float:
    """Quadrature measure of {f > t}."""
    return float(f.grid.weights[f.values > t].sum())


def _staircase_integral(cum, vals, s):
    """int_0^s of the staircase taking vals[k] on [cum[k], cum[k+1])."""
    k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(vals) - 1)
    head = np.r_[0.0, np.cumsum(np.diff(cum) * vals)]
    return head[k] + vals[k] * (s - cum[k])


def symmetric_rearrangement(f: BoundaryField, pole=None) -> AxisymmetricField:
    grid = f.grid
    n = grid.n
    pole = np.eye(n)[-1] if pole is None else np.asarray(pole, dtype=float)
    pole = pole / np.linalg.norm(pole)
    by_value = np.argsort(-f.values, kind="stable")
    vals = f.values[by_value]
    cum = np.concatenate([[0.0], np.cumsum(grid.weights[by_value])])
    cosines = grid.nodes @ pole
    by_angle = np.argsort(-cosines, kind="stable")
    ring_cos = np.round(cosines[by_angle], 12)
    starts = np.flatnonzero(np.r_[True, ring_cos[1:] != ring_cos[:-1]])
    edges = np.r_[0.0, np.cumsum(grid.weights[by_angle])][np.r_[starts, grid.size]]
    edges[-1] = cum[-1]
    mean = np.diff(_staircase_integral(cum, vals, edges)) / np.diff(edges)
    star = np.empty(grid.size)
    star[by_angle] = np.repeat(mean, np.diff(np.r_[starts, grid.size]))
    return AxisymmetricField(
        n=n,
        pole=pole,
        values=vals,
        cum_area=cum,
        breaks=_cap_angle(n, cum),
        grid_field=BoundaryField(grid, star),
    )


def _rotation_to(axis: np.ndarray) -> np.ndarray:
    """Orthogonal matrix (a reflection) sending e_n to ``axis``."""
    n = len(axis)
    v = np.eye(n)[-1] - axis
    if np.linalg.norm(v) < 1e-15:
        return np.eye(n)
    return np.eye(n) - 2 * np.outer(v, v) / (v @ v)


def _peak_direction(n: int, L: int, coeffs: np.ndarray, start: np.ndarray) -> np.ndarray:
    """Local maximum of the band-limited field near ``start``."""
    R = _rotation_to(start)
    tangent = R[:, :-1]

    def neg(u):
        x = start + tangent @ u
        return -float((basis_at(n, L, x / np.linalg.norm(x)) @ coeffs)[0])

    res = minimize(neg, np.zeros(n - 1), method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15})
    x = start + tangent @ res.x
    return x / np.linalg.norm(x)


def extension_comparison(
    f: BoundaryField, q: float, L: int | None = None, m: int = 40, refine: int = 2, align: bool = True
):
    """(|Pf|_{L^q(B)}, |Pf*|_{L^q(B)}) for nonnegative f, Pf truncated at degree L.

    The degree-L part of f is resampled on a grid ``refine`` times finer
    before rearranging: the weight-sorted distribution of a field that is not
    symmetric about the grid axis carries an O(h^2) quadrature error.  With
    ``align`` the field is also rotated so that its maximum sits on the grid
    axis; both norms are rotation invariant, and a rotated axisymmetric field
    is then rearranged exactly.  f* is extended to the full degree of its grid.
    """
    if np.any(f.values < 0):
        raise DomainError("rearrangement comparison needs f >= 0")
    if not q >= 1:
        raise DomainError("q must be >= 1")
    if refine < 1:
        raise DomainError("refine must be >= 1")
    grid = f.grid
    n = grid.n
    L = grid.exactness_degree // 2 if L is None else L
    rule = build_radial_rule(n, m)
    coeffs = analyze_values(grid, f.values, L)
    fine = build_sphere_grid(n, refine * grid.resolution) if refine > 1 else grid
    if align:
        start = grid.nodes[np.argmax(f.values)]
        axis = _peak_direction(n, L, coeffs, start)
        vals = basis_at(n, L, fine.nodes @ _rotation_to(axis).T) @ coeffs
    else:
        vals = synthesize_values(fine, coeffs, L)
    work = BoundaryField(fine, vals)
    star = symmetric_rearrangement(work).grid_field
    L_star = max(L, fine.exactness_degree // 2)
    return (
        extension_lq_norm(extend(work, L, rule), q),
        extension_lq_norm(extend(star, L_star, rule), q),
    )
