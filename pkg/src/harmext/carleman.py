"""Harmonic functions on the unit disk given by truncated Fourier series."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi

import numpy as np

from .sphere import DomainError, build_radial_rule

__all__ = ["CarlemanSeries", "DiskPoint", "disk_harmonic_eval", "carleman_sides"]


@dataclass(frozen=True)
class DiskPoint:
    r: float
    theta: float

    def __post_init__(self):
        if not 0 <= self.r < 1:
            raise DomainError(f"disk point needs 0 <= r < 1, got {self.r}")


@dataclass(frozen=True, eq=False)
class CarlemanSeries:
    """u(r, t) = a0 + sum_k r^k (a_k cos kt + b_k sin kt), k = 1..K."""

    a0: float
    a: np.ndarray = field(default_factory=lambda: np.zeros(0))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        a = np.array(self.a, dtype=float).ravel()
        b = np.array(self.b, dtype=float).ravel()
        if a.shape != b.shape:
            raise ValueError("cosine and sine coefficient lists differ in length")
        if not (np.isfinite(self.a0) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("series coefficients must be finite")
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def order(self) -> int:
        return len(self.a)

    def __call__(self, r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        out = np.full(np.broadcast(r, theta).shape, self.a0)
        for k in range(1, self.order + 1):
            out = out + r**k * (self.a[k - 1] * np.cos(k * theta) + self.b[k - 1] * np.sin(k * theta))
        return out

    def to_dict(self) -> dict:
        return {"a0": self.a0, "a": self.a.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "CarlemanSeries":
        return cls(data.get("a0", 0.0), data.get("a", []), data.get("b", []))

    @classmethod
    def random(cls, rng: np.random.Generator, order: int, scale: float = 1.0) -> "CarlemanSeries":
        return cls(
            rng.uniform(-scale, scale),
            rng.uniform(-scale, scale, order),
            rng.uniform(-scale, scale, order),
        )


def disk_harmonic_eval(u: CarlemanSeries, pt: DiskPoint) -> float:
    if not pt.r < 1:
        raise DomainError("evaluation point must lie inside the disk")
    return float(u(pt.r, pt.theta))


def carleman_sides(u: CarlemanSeries, radial: int = 64, angular: int = 256) -> tuple[float, float]:
    """Both sides of int_D e^{2u} dx <= (1/4pi) (int_{S^1} e^u dt)^2 by quadrature."""
    rule = build_radial_rule(2, radial)
    t = 2 * pi * np.arange(angular) / angular
    dt = 2 * pi / angular
    inner = np.exp(2 * u(rule.nodes[:, None], t[None, :])).sum(axis=1) * dt
    lhs = float(rule.weights @ inner)
    boundary = float(np.exp(u(1.0, t)).sum() * dt)
    return lhs, boundary**2 / (4 * pi)
