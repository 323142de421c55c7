"""Real orthonormal spherical harmonics on S^{n-1} for any n >= 2.

The basis is built along the same polar chain as the quadrature grids:

    Y_{l,(k,mu)}(theta) = (1 - z^2)^{k/2} p_{l-k}^{(a)}(z) Y_{k,mu}(omega),
    a = k + (n - 3) / 2,

where ``p^{(a)}`` are the orthonormal Gegenbauer polynomials for the weight
(1 - z^2)^a and ``Y_{k,mu}`` is the basis one dimension down.  On the circle
the basis is 1/sqrt(2 pi), cos(k phi)/sqrt(pi), sin(k phi)/sqrt(pi).

Coefficients are stored flat, ordered by degree ``l``; inside a degree the
index ``m`` runs over ``(k, mu)`` lexicographically.  Each harmonic
normalizes to ``int Y^2 dS = 1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from math import comb, pi, sqrt

import numpy as np
from scipy.special import gammaln

from .sphere import BoundaryField, DomainError, SphereGrid

__all__ = [
    "SpectralField",
    "harmonic_dimension",
    "coefficient_count",
    "degrees",
    "analyze",
    "analyze_values",
    "synthesize_values",
    "basis_at",
    "tangential_gradient_pairing",
    "tangential_gradient",
]


def harmonic_dimension(n: int, l: int) -> int:
    """Dimension of the degree-l spherical harmonics on S^{n-1}."""
    if l < 0:
        return 0
    if n == 2:
        return 1 if l == 0 else 2
    return comb(l + n - 1, n - 1) - comb(l + n - 3, n - 1)


@lru_cache(maxsize=None)
def _offsets(n: int, L: int) -> np.ndarray:
    dims = [harmonic_dimension(n, l) for l in range(L + 1)]
    return np.concatenate([[0], np.cumsum(dims)]).astype(int)


def coefficient_count(n: int, L: int) -> int:
    return int(_offsets(n, L)[-1])


@lru_cache(maxsize=None)
def degrees(n: int, L: int) -> np.ndarray:
    """Degree l of every flat coefficient index."""
    off = _offsets(n, L)
    out = np.repeat(np.arange(L + 1), np.diff(off))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _block_index(n: int, L: int, k: int) -> np.ndarray:
    """Flat indices of (l = k + j, k, mu) as a (L - k + 1, dim_{n-1}(k)) table."""
    off = _offsets(n, L)
    sub_off = _offsets(n - 1, L)
    dk = harmonic_dimension(n - 1, k)
    rows = off[k : L + 1][:, None] + sub_off[k] + np.arange(dk)[None, :]
    return rows


def _gegenbauer_table(z: np.ndarray, k: int, jmax: int, n: int) -> np.ndarray:
    """(1 - z^2)^{k/2} p_j^{(a)}(z) for j = 0..jmax, shape (len(z), jmax + 1)."""
    a = k + (n - 3) / 2
    z = np.asarray(z, dtype=float)
    out = np.empty((z.size, jmax + 1))
    lognorm = 0.5 * np.log(pi) + gammaln(a + 1) - gammaln(a + 1.5)
    s2 = np.clip(1.0 - z**2, 0.0, None)
    prev = np.zeros_like(z)
    cur = s2 ** (k / 2) * np.exp(-0.5 * lognorm)
    out[:, 0] = cur
    sb_prev = 0.0
    for j in range(jmax):
        jj = j + 1
        beta = jj * (jj + 2 * a) / ((2 * jj + 2 * a - 1) * (2 * jj + 2 * a + 1))
        sb = sqrt(beta)
        nxt = (z * cur - sb_prev * prev) / sb
        prev, cur, sb_prev = cur, nxt, sb
        out[:, jj] = cur
    return out


def _circle_basis(phi: np.ndarray, L: int) -> np.ndarray:
    out = np.empty((phi.size, 2 * L + 1))
    out[:, 0] = 1 / sqrt(2 * pi)
    for k in range(1, L + 1):
        out[:, 2 * k - 1] = np.cos(k * phi) / sqrt(pi)
        out[:, 2 * k] = np.sin(k * phi) / sqrt(pi)
    return out


def _plan(grid: SphereGrid, L: int):
    key = ("sht", L)
    plan = grid._cache.get(key)
    if plan is None:
        if grid.n == 2:
            plan = _circle_basis(grid.angles, L)
        else:
            plan = [_gegenbauer_table(grid.z, k, L - k, grid.n) for k in range(L + 1)]
        grid._cache[key] = plan
    return plan


def _analyze(grid: SphereGrid, L: int, F: np.ndarray) -> np.ndarray:
    plan = _plan(grid, L)
    if grid.n == 2:
        return (F * grid.weights) @ plan
    n, nz, ns = grid.n, grid.z.size, grid.sub.size
    batch = F.shape[0]
    A = _analyze(grid.sub, L, F.reshape(batch * nz, ns)).reshape(batch, nz, -1)
    sub_off = _offsets(n - 1, L)
    out = np.empty((batch, coefficient_count(n, L)))
    for k in range(L + 1):
        Gw = plan[k] * grid.z_weights[:, None]
        blk = A[:, :, sub_off[k] : sub_off[k + 1]]
        out[:, _block_index(n, L, k)] = np.einsum("zj,bzu->bju", Gw, blk)
    return out


def _synthesize(grid: SphereGrid, L: int, C: np.ndarray) -> np.ndarray:
    plan = _plan(grid, L)
    if grid.n == 2:
        return C @ plan.T
    n, nz = grid.n, grid.z.size
    batch = C.shape[0]
    sub_off = _offsets(n - 1, L)
    A = np.empty((batch, nz, coefficient_count(n - 1, L)))
    for k in range(L + 1):
        A[:, :, sub_off[k] : sub_off[k + 1]] = np.einsum(
            "zj,bju->bzu", plan[k], C[:, _block_index(n, L, k)]
        )
    vals = _synthesize(grid.sub, L, A.reshape(batch * nz, -1))
    return vals.reshape(batch, grid.size)


def _require_exact(grid: SphereGrid, L: int) -> None:
    if L < 0:
        raise DomainError("degree must be nonnegative")
    if grid.exactness_degree < 2 * L:
        raise DomainError(
            f"grid exactness {grid.exactness_degree} is insufficient for degree {L} "
            f"(needs {2 * L})"
        )


def analyze_values(grid: SphereGrid, values, L: int) -> np.ndarray:
    """Harmonic coefficients of one field (shape (N,)) or a batch (shape (B, N))."""
    _require_exact(grid, L)
    values = np.asarray(values, dtype=float)
    flat = values.reshape(-1, grid.size)
    out = _analyze(grid, L, flat)
    return out.reshape(values.shape[:-1] + (out.shape[-1],))


def synthesize_values(grid: SphereGrid, coeffs, L: int) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    flat = coeffs.reshape(-1, coefficient_count(grid.n, L))
    out = _synthesize(grid, L, flat)
    return out.reshape(coeffs.shape[:-1] + (grid.size,))


def basis_at(n: int, L: int, points) -> np.ndarray:
    """Matrix of all harmonics of degree <= L at arbitrary unit vectors, shape (P, ncoef)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != n:
        raise ValueError(f"points must have {n} coordinates")
    if n == 2:
        return _circle_basis(np.arctan2(pts[:, 1], pts[:, 0]), L)
    z = np.clip(pts[:, -1], -1.0, 1.0)
    s = np.sqrt(np.clip(1.0 - z**2, 0.0, None))
    omega = np.zeros((len(pts), n - 1))
    pole = s < 1e-300
    omega[~pole] = pts[~pole, :-1] / s[~pole, None]
    omega[pole, 0] = 1.0
    sub = basis_at(n - 1, L, omega)
    sub_off = _offsets(n - 1, L)
    out = np.empty((len(pts), coefficient_count(n, L)))
    for k in range(L + 1):
        G = _gegenbauer_table(z, k, L - k, n)
        idx = _block_index(n, L, k)
        out[:, idx] = G[:, :, None] * sub[:, None, sub_off[k] : sub_off[k + 1]]
    return out


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Truncated expansion sum_{l <= L} sum_m c_{l,m} Y_{l,m} on S^{n-1}."""

    n: int
    L: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (coefficient_count(self.n, self.L),):
            raise ValueError("coefficient table has the wrong length for (n, L)")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degrees(self) -> np.ndarray:
        return degrees(self.n, self.L)

    def triples(self):
        """(l, m, c) triples, m being the index within degree l."""
        off = _offsets(self.n, self.L)
        return [
            (int(l), int(i - off[l]), float(c))
            for i, (l, c) in enumerate(zip(self.degrees, self.coeffs))
        ]

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "L": self.L, "coefficients": [{"l": l, "m": m, "c": c} for l, m, c in self.triples()]}
        )

    @classmethod
    def from_json(cls, text: str) -> "SpectralField":
        data = json.loads(text)
        n, L = data["n"], data["L"]
        off = _offsets(n, L)
        c = np.zeros(coefficient_count(n, L))
        for entry in data["coefficients"]:
            c[off[entry["l"]] + entry["m"]] = entry["c"]
        return cls(n, L, c)

    def synthesize(self, grid: SphereGrid) -> BoundaryField:
        if grid.n != self.n:
            raise ValueError("dimension mismatch")
        vals = synthesize_values(grid, self.coeffs, self.L)
        return BoundaryField(grid, vals, spectral=self)

    def evaluate(self, points) -> np.ndarray:
        return basis_at(self.n, self.L, points) @ self.coeffs

    def laplacian(self) -> "SpectralField":
        l = self.degrees
        return SpectralField(self.n, self.L, -l * (l + self.n - 2) * self.coeffs)

    def scaled_by_degree(self, factors) -> "SpectralField":
        """Multiply the degree-l block by ``factors[l]``."""
        return SpectralField(self.n, self.L, np.asarray(factors)[self.degrees] * self.coeffs)

    def degree_energy(self) -> np.ndarray:
        """Sum of squared coefficients per degree (spectral decay diagnostic)."""
        return np.bincount(self.degrees, weights=self.coeffs**2, minlength=self.L + 1)


def analyze(f: BoundaryField, L: int) -> SpectralField:
    """Project a boundary field onto harmonics of degree <= L by grid quadrature."""
    coeffs = analyze_values(f.grid, f.values, L)
    return SpectralField(f.grid.n, L, coeffs)


def with_spectrum(f: BoundaryField, L: int) -> BoundaryField:
    """Copy of ``f`` carrying its degree-L analysis."""
    return BoundaryField(f.grid, f.values, spectral=analyze(f, L))


def tangential_gradient(K: BoundaryField) -> np.ndarray:
    """Tangential gradient of K at the grid nodes as an ambient vector, shape (N, n).

    Uses <grad K, grad x_i> = (Delta(K x_i) + (n - 1) K x_i - x_i Delta K) / 2,
    which equals the i-th ambient component of grad K.  K's spectral
    representation is used, and K x_i (degree L + 1) is analyzed exactly.
    """
    spec = K.spectral
    if not isinstance(spec, SpectralField):
        raise ValueError("K needs a spectral representation for its gradient")
    grid = K.grid
    n, L = grid.n, spec.L
    _require_exact(grid, L + 1)
    k_vals = synthesize_values(grid, spec.coeffs, L)
    lap_k = synthesize_values(grid, spec.laplacian().coeffs, L)
    prod = k_vals[None, :] * grid.nodes.T
    pc = analyze_values(grid, prod, L + 1)
    l = degrees(n, L + 1)
    lap_prod = synthesize_values(grid, -l * (l + n - 2) * pc, L + 1)
    grads = 0.5 * (lap_prod + (n - 1) * prod - grid.nodes.T * lap_k[None, :])
    return grads.T


def tangential_gradient_pairing(K: BoundaryField, f: BoundaryField, i: int) -> float:
    """int <grad K, grad xi_i> f^{2(n-1)/(n-2)} dS, with 1 <= i <= n."""
    if f.grid is not K.grid:
        raise ValueError("K and f live on different grids")
    n = f.grid.n
    if n < 3:
        raise DomainError("the pairing weight f^{2(n-1)/(n-2)} needs n >= 3")
    if not 1 <= i <= n:
        raise DomainError(f"coordinate index must lie in 1..{n}")
    if np.any(f.values < 0):
        raise DomainError("f must be nonnegative (non-integer power)")
    grads = tangential_gradient(K)
    weight = f.values ** (2 * (n - 1) / (n - 2))
    return f.grid.integrate(grads[:, i - 1] * weight)
