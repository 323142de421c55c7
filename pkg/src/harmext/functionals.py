"""The extremal functional Q_p on the unit ball and its closed-form constants.

Q_p(f) = |Pf|_{L^q(B_1)} / |f|_{L^p(S^{n-1})} with q = n p / (n - 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import ceil

import numpy as np

from .carleman import CarlemanSeries, carleman_sides
from .poisson import extend, extension_lq_norm
from .sht import coefficient_count, synthesize_values, with_spectrum
from .sphere import (
    BoundaryField,
    DomainError,
    RadialRule,
    SphereGrid,
    ball_volume,
    build_radial_rule,
    build_sphere_grid,
    lp_norm_boundary,
)

__all__ = [
    "FunctionalConfig",
    "critical_exponent",
    "sharp_constant_critical",
    "theta_ratio",
    "supercritical_constant",
    "q_functional",
    "extremal_family",
    "extremal_degree",
    "weighted_iso_ratio",
    "carleman_check",
    "second_order_coefficient",
    "second_order_fit",
    "random_positive_field",
]


def _need_n3(n):
    if int(n) != n or n < 3:
        raise DomainError(f"n must be an integer >= 3, got {n}")


def critical_exponent(n: int) -> float:
    """2(n - 1)/(n - 2)."""
    _need_n3(n)
    return 2 * (n - 1) / (n - 2)


def sharp_constant_critical(n: int) -> float:
    """n^{-(n-2)/(2(n-1))} omega_n^{-(n-2)/(2n(n-1))}."""
    _need_n3(n)
    w = ball_volume(n)
    return n ** (-(n - 2) / (2 * (n - 1))) * w ** (-(n - 2) / (2 * n * (n - 1)))


def theta_ratio(n: int) -> float:
    """Isoperimetric ratio of the unit ball, n^{-1/(n-1)} omega_n^{-1/(n(n-1))}."""
    _need_n3(n)
    return n ** (-1 / (n - 1)) * ball_volume(n) ** (-1 / (n * (n - 1)))


def supercritical_constant(n: int, p: float) -> float:
    """n^{-1/p} omega_n^{-1/(np)} for p > 2(n-1)/(n-2); tends to 1 as p -> infinity."""
    _need_n3(n)
    if not p > critical_exponent(n):
        raise DomainError(f"p = {p} is not above the critical exponent {critical_exponent(n)}")
    if np.isinf(p):
        return 1.0
    return n ** (-1 / p) * ball_volume(n) ** (-1 / (n * p))


@dataclass(frozen=True)
class FunctionalConfig:
    n: int
    p: float
    L: int = 20
    m: int = 40

    def __post_init__(self):
        _need_n3(self.n)
        if not self.p > 1:
            raise DomainError(f"p must exceed 1, got {self.p}")
        if self.L < 0 or self.m < 1:
            raise DomainError("need L >= 0 and at least one radial node")

    @property
    def q(self) -> float:
        return self.n * self.p / (self.n - 1)

    @property
    def is_critical(self) -> bool:
        return abs(self.p - critical_exponent(self.n)) < 1e-12

    def radial_rule(self) -> RadialRule:
        return _radial(self.n, self.m)

    def grid(self, oversample: int = 0) -> SphereGrid:
        """A grid that can analyze to degree L, plus ``oversample`` extra resolution."""
        return build_sphere_grid(self.n, max(self.L, 1) + oversample)


@lru_cache(maxsize=64)
def _radial(n, m):
    return build_radial_rule(n, m)


def _is_integer(x: float) -> bool:
    return abs(x - round(x)) < 1e-12


def q_functional(f: BoundaryField, cfg: FunctionalConfig) -> float:
    """|Pf|_{L^q(B)} / |f|_{L^p(S)} with Pf truncated at degree cfg.L."""
    if f.grid.n != cfg.n:
        raise ValueError("field dimension does not match the configuration")
    den = lp_norm_boundary(f, cfg.p)
    if den == 0:
        raise DomainError("Q_p is undefined for the zero field")
    if not _is_integer(cfg.q) and np.any(f.values < 0):
        raise DomainError("sign-changing fields are only accepted for integer q")
    u = extend(f, cfg.L, cfg.radial_rule())
    return extension_lq_norm(u, cfg.q) / den


def extremal_family(grid: SphereGrid, lam: float, zeta=None, c: float = 1.0) -> BoundaryField:
    """c (1 + lam xi . zeta)^{-(n-2)/2}, the equality cases at the critical exponent."""
    n = grid.n
    if not 0 <= lam < 1:
        raise DomainError(f"lambda must lie in [0, 1), got {lam}")
    if c <= 0:
        raise DomainError("scale c must be positive")
    if zeta is None:
        zeta = np.eye(n)[-1]
    zeta = np.asarray(zeta, dtype=float)
    zeta = zeta / np.linalg.norm(zeta)
    return BoundaryField(grid, c * (1.0 + lam * grid.nodes @ zeta) ** (-(n - 2) / 2))


def extremal_degree(lam: float) -> int:
    """Truncation degree used for extremal_family(lam): ceil(10 / (1 - lam))."""
    return int(ceil(10 / (1 - lam)))


def weighted_iso_ratio(f: BoundaryField, K: BoundaryField, n: int, L: int = 20, m: int = 40) -> float:
    """(int_B (Pf)^{2n/(n-2)})^{1/n} / (int_S K f^{2(n-1)/(n-2)})^{1/(n-1)}."""
    _need_n3(n)
    if K.grid is not f.grid:
        raise ValueError("f and K live on different grids")
    if np.any(K.values <= 0) or np.any(f.values <= 0):
        raise DomainError("weighted isoperimetric ratio needs K > 0 and f > 0")
    u = extend(f, L, _radial(n, m))
    q = 2 * n / (n - 2)
    vol = extension_lq_norm(u, q) ** q
    area = f.grid.integrate(K.values * f.values ** (2 * (n - 1) / (n - 2)))
    return vol ** (1 / n) / area ** (1 / (n - 1))


def carleman_check(u: CarlemanSeries, radial: int = 64, angular: int = 256) -> tuple[float, float]:
    return carleman_sides(u, radial, angular)


def second_order_coefficient(n: int, p: float) -> float:
    """Predicted eps^2 coefficient of Q_p(1 + eps xi_1) / Q_p(1)."""
    _need_n3(n)
    return (n - 2) / (2 * n * (n - 1) * (n + 2)) * (critical_exponent(n) - p)


def second_order_fit(cfg: FunctionalConfig, eps=(0.02, 0.04, 0.06, 0.08, 0.10), grid: SphereGrid | None = None):
    """Least-squares fit of Q_p(1 + eps xi_1)/Q_p(1) - 1 = c2 eps^2 + c4 eps^4.

    Returns (c2, c4, ratios).
    """
    grid = grid or build_sphere_grid(cfg.n, max(cfg.L, 8))
    one = with_spectrum(BoundaryField(grid, np.ones(grid.size)), cfg.L)
    base = q_functional(one, cfg)
    eps = np.asarray(eps, dtype=float)
    ratios = np.array(
        [q_functional(BoundaryField(grid, 1 + e * grid.nodes[:, 0]), cfg) / base for e in eps]
    )
    A = np.column_stack([eps**2, eps**4])
    (c2, c4), *_ = np.linalg.lstsq(A, ratios - 1, rcond=None)
    return float(c2), float(c4), ratios


def random_positive_field(grid: SphereGrid, degree: int, rng: np.random.Generator, spread: float = 0.8) -> BoundaryField:
    """1 + spread * g / max|g| for a random band-limited g of the given degree; min value 1 - spread."""
    if not 0 <= spread < 1:
        raise DomainError("spread must lie in [0, 1)")
    c = rng.standard_normal(coefficient_count(grid.n, degree))
    c[0] = 0.0
    g = synthesize_values(grid, c, degree)
    scale = np.max(np.abs(g))
    if scale == 0:
        return BoundaryField(grid, np.ones(grid.size))
    return BoundaryField(grid, 1.0 + spread * g / scale)
