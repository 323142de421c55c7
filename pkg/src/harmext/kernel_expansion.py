"""Leading terms of the Poisson kernel near a boundary point in Fermi coordinates.

Writing x = r theta with theta in the upper half sphere S_+^{n-1} (theta_n is
the inward normal direction),

    P(x, 0) = 2/(n omega_n) r^{1-n} (a_0(theta) + r a_1(theta) + ...),

with a_0 = theta_n and a_1 the solution of the hemisphere Dirichlet problem

    -Delta a_1 = -H - n H theta_n^2 + 2n(n+2) h_ij theta_i theta_j theta_n^2,
    a_1 = 0 on the equator.

``solve_a1`` splits off the equator value -H of the right-hand side with an
exact axisymmetric solution ``lift_profile`` (-Delta w = 1, w = 0 on the
equator) and expands the rest, which vanishes on the equator, in harmonics odd
under theta_n -> -theta_n.  Without the split the odd extension of the
right-hand side jumps across the equator and the expansion converges like
L^{-1/2} in L^2.

The higher coefficients a_k, k >= 2, solve
-Delta a_k + (k-1)(n-k-1) a_k = b_{k-1} with b_{k-1} built from the metric
Taylor data (curvature of the boundary and of the ambient metric, derivatives
of h); they are not computed here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import beta as beta_fn
from scipy.special import betainc, roots_jacobi

from .sht import basis_at, coefficient_count, degrees, _offsets
from .sphere import DomainError, build_sphere_grid

__all__ = [
    "GeometryData",
    "HemisphereField",
    "rhs_b0",
    "a0",
    "lift_profile",
    "solve_a1",
    "ball_kernel_fermi_oracle",
    "ball_a1_closed_form",
    "hemisphere_rule",
]


@dataclass(frozen=True, eq=False)
class GeometryData:
    """Mean curvature H0 and second fundamental form h0 (inner normal) at the base point."""

    n: int
    H0: float
    h0: np.ndarray

    def __post_init__(self):
        h = np.array(self.h0, dtype=float)
        if h.shape != (self.n - 1, self.n - 1):
            raise ValueError(f"h0 must be ({self.n - 1}, {self.n - 1})")
        if not np.allclose(h, h.T, atol=1e-14):
            raise ValueError("h0 must be symmetric")
        if abs(np.trace(h) - self.H0) > 1e-12:
            raise ValueError("trace(h0) must equal H0")
        object.__setattr__(self, "h0", h)

    @classmethod
    def from_h(cls, n: int, h0) -> "GeometryData":
        h = np.asarray(h0, dtype=float)
        return cls(n, float(np.trace(h)), h)

    @classmethod
    def flat(cls, n: int) -> "GeometryData":
        return cls(n, 0.0, np.zeros((n - 1, n - 1)))

    @classmethod
    def unit_ball(cls, n: int) -> "GeometryData":
        # h = +identity for the inner normal: the sign under which the
        # explicit ball kernel reproduces solve_a1
        return cls(n, float(n - 1), np.eye(n - 1))

    def __add__(self, other: "GeometryData") -> "GeometryData":
        return GeometryData(self.n, self.H0 + other.H0, self.h0 + other.h0)


def rhs_b0(geom: GeometryData, points) -> np.ndarray:
    """-H - n H theta_n^2 + 2n(n+2) h_ij theta_i theta_j theta_n^2."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = geom.n
    tn2 = pts[:, -1] ** 2
    quad = np.einsum("pi,ij,pj->p", pts[:, :-1], geom.h0, pts[:, :-1])
    return -geom.H0 - n * geom.H0 * tn2 + 2 * n * (n + 2) * quad * tn2


def a0(points) -> np.ndarray:
    return np.atleast_2d(np.asarray(points, dtype=float))[:, -1]


def lift_profile(n: int, z) -> np.ndarray:
    """w(z) with -Delta_{S^{n-1}} w = 1 on the upper half sphere, w = 0 on the equator.

    w(z) = int_0^z (1-s^2)^{-(n-1)/2} int_s^1 (1-u^2)^{(n-3)/2} du ds;
    for n = 3 this is log(1 + z).
    """
    z = np.asarray(z, dtype=float)
    a = (n - 3) / 2
    x, w = leggauss(64)
    s = 0.5 * z[..., None] * (x + 1)
    s2 = s**2
    inner = 0.5 * beta_fn(0.5, a + 1) * betainc(a + 1, 0.5, 1 - s2)
    slope = inner / (1 - s2) ** (a + 1)
    return 0.5 * z * (slope @ w)


def hemisphere_rule(n: int, degree: int):
    """Nodes and weights on the upper half of S^{n-1}, accurate for polynomials of ``degree``."""
    a = (n - 3) / 2
    nz = degree // 2 + 8
    x, wx = roots_jacobi(nz, a, 0.0)
    z = (1 + x) / 2
    wz = wx * ((3 + x) / 2) ** a / 2 ** (a + 1)
    sub = build_sphere_grid(n - 1, max(degree // 2 + 1, 1))
    s = np.sqrt(1 - z**2)
    nodes = np.concatenate(
        [(s[:, None, None] * sub.nodes[None]).reshape(-1, n - 1), np.repeat(z, sub.size)[:, None]],
        axis=1,
    )
    return nodes, np.outer(wz, sub.weights).ravel()


def _odd_mask(n: int, L: int) -> np.ndarray:
    """Harmonics odd under theta_n -> -theta_n (l - k odd in the chain basis)."""
    off = _offsets(n, L)
    sub_off = _offsets(n - 1, L)
    mask = np.zeros(coefficient_count(n, L), dtype=bool)
    for l in range(L + 1):
        for k in range(l + 1):
            if (l - k) % 2 == 1:
                start = off[l] + sub_off[k]
                mask[start : start + (sub_off[k + 1] - sub_off[k])] = True
    return mask


@dataclass(frozen=True, eq=False)
class HemisphereField:
    """a(theta) = sum c Y (odd harmonics) + lift * w(theta_n) on the upper half sphere."""

    n: int
    L: int
    coeffs: np.ndarray
    lift: float = 0.0
    residual: float = float("nan")
    info: dict = field(default_factory=dict)

    def evaluate(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = basis_at(self.n, self.L, pts) @ self.coeffs
        if self.lift:
            out = out + self.lift * lift_profile(self.n, pts[:, -1])
        return out

    def triples(self):
        off = _offsets(self.n, self.L)
        l = degrees(self.n, self.L)
        return [(int(l[i]), int(i - off[l[i]]), float(c)) for i, c in enumerate(self.coeffs) if c != 0.0]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "L": self.L,
            "lift_coefficient": self.lift,
            "coefficients": [{"l": l, "m": m, "c": c} for l, m, c in self.triples()],
            "residual_l2": self.residual,
            **self.info,
        }


def solve_a1(geom: GeometryData, L: int = 24) -> HemisphereField:
    """Solve -Delta a_1 = b_0 on S_+^{n-1}, a_1 = 0 on the equator, to degree L."""
    n = geom.n
    if n < 3:
        raise DomainError("hemisphere solve implemented for n >= 3")
    if L < 4:
        raise DomainError("a_1 needs degree L >= 4")
    nodes, weights = hemisphere_rule(n, 2 * L + 8)
    rem = rhs_b0(geom, nodes) + geom.H0
    B = basis_at(n, L, nodes)
    mask = _odd_mask(n, L)
    c = np.zeros(B.shape[1])
    c[mask] = 2 * (B[:, mask].T @ (weights * rem))
    l = degrees(n, L)
    sol = np.zeros_like(c)
    sol[mask] = c[mask] / (l[mask] * (l[mask] + n - 2))
    res = rem - B @ c
    residual = float(np.sqrt(weights @ res**2))
    return HemisphereField(
        n=n,
        L=L,
        coeffs=sol,
        lift=-geom.H0,
        residual=residual,
        info={"H0": geom.H0, "h0": geom.h0.tolist()},
    )


def ball_a1_closed_form(n: int, points) -> np.ndarray:
    """a_1 for the unit ball from the Taylor expansion of its explicit kernel."""
    tn2 = np.atleast_2d(np.asarray(points, dtype=float))[:, -1] ** 2
    return -tn2 / 2 + n / 2 * tn2 * (1 - tn2)


def _fermi_to_ambient(n: int, tau: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Ball point at inner distance t above exp_{e_n}(tau); tau tangent at e_n."""
    s = np.linalg.norm(tau, axis=-1)
    direction = np.zeros_like(tau)
    nz = s > 0
    direction[nz] = tau[nz] / s[nz, None]
    sphere_pt = np.concatenate([np.sin(s)[..., None] * direction, np.cos(s)[..., None]], axis=-1)
    return (1 - t)[..., None] * sphere_pt


def ball_kernel_fermi_oracle(n: int, directions, radii=None, degree: int = 6):
    """Fit (n omega_n / 2) r^{n-1} P_ball(x(r, theta), e_n) by a polynomial in r.

    Returns a dict with c0 and c1 per direction plus fit diagnostics.  A
    polynomial of ``degree`` absorbs the r^2 and higher terms that would bias
    a straight-line fit at radii up to 1e-1.
    """
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    if np.any(dirs[:, -1] < -1e-15):
        raise DomainError("directions must lie in the closed upper half sphere")
    if radii is None:
        k = np.arange(32)
        radii = 0.0505 - 0.0495 * np.cos(np.pi * (k + 0.5) / 32)
    radii = np.asarray(radii, dtype=float)
    if radii.min() <= 0 or radii.max() > 0.2:
        raise DomainError("radii must lie in (0, 0.2]")
    scale = radii.max()
    V = np.vander(radii / scale, degree + 1, increasing=True)
    cond = float(np.linalg.cond(V))
    pole = np.eye(n)[-1]
    x = radii[None, :, None] * dirs[:, None, :]
    t = x[..., -1]
    X = _fermi_to_ambient(n, x[..., :-1], t)
    # 1 - |X|^2 = t (2 - t) exactly; this also covers t = 0, where the kernel vanishes
    dist = np.linalg.norm(X - pole, axis=-1)
    F = radii[None, :] ** (n - 1) * t * (2 - t) / (2 * dist**n)
    coef, res, *_ = np.linalg.lstsq(V, F.T, rcond=None)
    fit_err = np.max(np.abs(V @ coef - F.T), axis=0)
    return {
        "c0": coef[0],
        "c1": coef[1] / scale,
        "fit_residual": fit_err,
        "condition": cond,
        "ill_conditioned": cond > 1e10,
    }
