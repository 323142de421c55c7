"""Euler-Lagrange equation of Q_p, the Kazdan-Warner check and concentration.

A normalized positive maximizer of Q_p solves

    T((Pf)^{q-1}) = Q_p(f)^q f^{p-1},    q = n p / (n - 1),

which is iterated as a damped fixed point f <- (1-d) f + d [T((Pf)^{q-1})]^{1/(p-1)},
renormalized to |f|_{L^p} = 1 after every step.

Near the constant the map multiplies the degree-l part of a perturbation by
mu_l = (q-1) n / ((p-1)(2l+n)).  Above the critical exponent every mu_l < 1
but mu_1 is close to 1 (0.975 for n = 3, p = 5), so plain iteration crawls.
With ``precondition`` set the degree-l part of each step is scaled by
1/(1 - mu_l) there, which makes the constant a superlinearly attracting fixed
point.  The scaled step is taken only when its size is below ``trust``;
further out the plain damped step is used.  At or below the critical exponent mu_1 >= 1 and the step is left alone.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .functionals import FunctionalConfig, critical_exponent
from .poisson import BallSample, apply_T, extend, extension_lq_norm
from .sht import analyze, analyze_values, degrees, synthesize_values, tangential_gradient
from .sphere import BoundaryField, DomainError, lp_norm_boundary

log = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "SolverReport",
    "KWWeight",
    "solve_el",
    "el_residual",
    "manufacture_weight",
    "kw_defect",
    "concentration_profile",
    "cap_fraction_extremal",
    "mode_factors",
]


@dataclass(frozen=True)
class SolverConfig:
    functional: FunctionalConfig
    max_iterations: int = 500
    tol: float = 1e-8
    damping: float = 0.8
    seed: int = 0
    stop_on: str | None = None  # "iterate" | "functional"; None picks by exponent
    precondition: bool = True
    trust: float = 0.02

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("tolerance must be positive")
        if not 0 < self.damping <= 1:
            raise DomainError("damping must lie in (0, 1]")
        if self.max_iterations < 1:
            raise DomainError("need at least one iteration")
        if self.stop_on not in (None, "iterate", "functional"):
            raise DomainError(f"unknown stopping rule {self.stop_on!r}")

    @property
    def stopping(self) -> str:
        if self.stop_on:
            return self.stop_on
        return "functional" if self.functional.is_critical else "iterate"


@dataclass(frozen=True, eq=False)
class SolverReport:
    iterations: int
    final: BoundaryField
    q_history: list
    residual: float
    kw_defect: np.ndarray
    converged: bool
    step_history: list = field(default_factory=list)
    message: str = ""
    degree_energy: np.ndarray | None = None
    max_radius: float = 0.0

    @property
    def q_final(self) -> float:
        return self.q_history[-1]

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "q_final": self.q_final,
            "q_history": list(self.q_history),
            "step_history": list(self.step_history),
            "el_residual": self.residual,
            "kw_defect": [float(x) for x in self.kw_defect],
            "message": self.message,
            "degree_energy": None if self.degree_energy is None else self.degree_energy.tolist(),
            "max_radial_node": self.max_radius,
            "final_values_min": float(self.final.values.min()),
            "final_values_max": float(self.final.values.max()),
        }


@dataclass(frozen=True, eq=False)
class KWWeight:
    """Positive weight K for which f solves the weighted critical EL equation."""

    field: BoundaryField

    def __post_init__(self):
        if np.any(self.field.values <= 0):
            raise DomainError("manufactured weight is not positive")


def _normalize(values: np.ndarray, f: BoundaryField, p: float) -> np.ndarray:
    norm = lp_norm_boundary(BoundaryField(f.grid, values), p)
    return values / norm


def _el_image(f: BoundaryField, cfg: FunctionalConfig, power: float):
    """(T((Pf)^power), Pf) with Pf truncated at cfg.L."""
    u = extend(f, cfg.L, cfg.radial_rule())
    h = BallSample(u.rule, u.grid, np.clip(u.values, 0.0, None) ** power)
    return apply_T(h, cfg.L), u


def _positive(f: BoundaryField, what: str = "f"):
    if np.any(f.values <= 0):
        raise DomainError(f"{what} must be strictly positive")


def el_residual(f: BoundaryField, cfg: FunctionalConfig) -> float:
    """sup |T((Pf)^{q-1}) - Q^q f^{p-1}| / Q^q for f normalized in L^p."""
    _positive(f)
    p, q = cfg.p, cfg.q
    f = BoundaryField(f.grid, _normalize(f.values, f, p))
    Tf, u = _el_image(f, cfg, q - 1)
    Qq = extension_lq_norm(u, q) ** q
    return float(np.max(np.abs(Tf.values - Qq * f.values ** (p - 1))) / Qq)


def _kw_degree(f: BoundaryField, L: int) -> int:
    return max(0, min(L, (f.grid.exactness_degree - 2) // 2))


def manufacture_weight(f: BoundaryField, cfg: FunctionalConfig) -> KWWeight:
    """K = T((Pf)^{(n+2)/(n-2)}) / f^{n/(n-2)}, carrying its spectral expansion."""
    _positive(f)
    n = cfg.n
    if not cfg.is_critical:
        raise DomainError("the weighted EL equation is posed at the critical exponent")
    Tf, _ = _el_image(f, cfg, (n + 2) / (n - 2))
    values = Tf.values / f.values ** (n / (n - 2))
    K = BoundaryField(f.grid, values)
    spec = analyze(K, _kw_degree(f, cfg.L))
    return KWWeight(BoundaryField(f.grid, values, spectral=spec))


def kw_defect(f: BoundaryField, K: KWWeight) -> np.ndarray:
    """Components int <grad K, grad xi_i> f^{2(n-1)/(n-2)} dS, i = 1..n."""
    Kf = K.field
    if Kf.grid is not f.grid:
        raise ValueError("f and K live on different grids")
    _positive(f)
    n = f.grid.n
    if np.ptp(Kf.values) == 0:
        return np.zeros(n)
    grads = tangential_gradient(Kf)
    weight = f.values ** (2 * (n - 1) / (n - 2))
    return (grads * (weight * f.grid.weights)[:, None]).sum(axis=0)


def mode_factors(fc: FunctionalConfig, L: int) -> np.ndarray:
    """mu_l for l = 0..L; mu_0 is reported as 0 since normalization removes it."""
    l = np.arange(L + 1)
    mu = (fc.q - 1) * fc.n / ((fc.p - 1) * (2 * l + fc.n))
    mu[0] = 0.0
    return mu


def _preconditioner(grid, fc: FunctionalConfig):
    L = grid.exactness_degree // 2
    gain = 1.0 / (1.0 - mode_factors(fc, L))[degrees(grid.n, L)]

    def apply(step: np.ndarray) -> np.ndarray:
        c = analyze_values(grid, step, L)
        low = synthesize_values(grid, c, L)
        return step - low + synthesize_values(grid, gain * c, L)

    return apply


def solve_el(init: BoundaryField, cfg: SolverConfig) -> SolverReport:
    """Damped, normalized fixed-point iteration for the EL equation of Q_p."""
    _positive(init, "initial field")
    fc = cfg.functional
    p, q, d = fc.p, fc.q, cfg.damping
    grid = init.grid
    f = _normalize(init.values, init, p)
    q_hist, steps = [], []
    precond = _preconditioner(grid, fc) if cfg.precondition and p > critical_exponent(fc.n) else None
    converged, message = False, "iteration limit reached"
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        field_k = BoundaryField(grid, f)
        with np.errstate(over="raise", invalid="raise"):
            try:
                Tf, u = _el_image(field_k, fc, q - 1)
            except FloatingPointError:
                message = "overflow while applying T"
                break
        q_hist.append(extension_lq_norm(u, q))
        if not np.all(np.isfinite(Tf.values)) or np.any(Tf.values <= 0):
            message = "non-positive or non-finite update"
            break
        upd = _normalize(Tf.values ** (1 / (p - 1)), field_k, p)
        new = (1 - d) * f + d * upd
        if precond is not None:
            jump = precond(upd - f)
            # trust the linearization only near the fixed point
            if lp_norm_boundary(BoundaryField(grid, jump), p) < cfg.trust and np.all(f + d * jump > 0):
                new = f + d * jump
        new = _normalize(new, field_k, p)
        step = lp_norm_boundary(BoundaryField(grid, new - f), p)
        steps.append(step)
        f = new
        if cfg.stopping == "iterate" and step < cfg.tol:
            converged, message = True, "iterate stationary"
            break
        if (
            cfg.stopping == "functional"
            and len(q_hist) > 1
            and abs(q_hist[-1] - q_hist[-2]) < cfg.tol * q_hist[-1]
        ):
            converged, message = True, "functional stationary"
            break
        log.debug("iteration %d: Q=%.15g step=%.3e", it, q_hist[-1], step)
    final = BoundaryField(grid, f)
    if np.all(np.isfinite(f)) and np.all(f > 0):
        u = extend(final, fc.L, fc.radial_rule())
        q_hist.append(extension_lq_norm(u, q))
        residual = el_residual(final, fc)
        crit = replace(fc, p=critical_exponent(fc.n))
        try:
            kw = kw_defect(final, manufacture_weight(final, crit))
        except DomainError as exc:
            log.info("Kazdan-Warner diagnostic skipped: %s", exc)
            kw = np.full(grid.n, np.nan)
        energy = analyze(final, fc.L).degree_energy()
    else:
        converged = False
        residual, kw, energy = float("nan"), np.full(grid.n, np.nan), None
    return SolverReport(
        iterations=it,
        final=final,
        q_history=[float(x) for x in q_hist],
        residual=float(residual),
        kw_defect=np.asarray(kw),
        converged=converged,
        step_history=[float(s) for s in steps],
        message=message,
        degree_energy=energy,
        max_radius=fc.radial_rule().max_radius,
    )


def _mass_pole(f: BoundaryField, p: float) -> np.ndarray:
    mass = f.grid.weights * np.abs(f.values) ** p
    center = f.grid.nodes.T @ mass
    norm = np.linalg.norm(center)
    if norm > 1e-8 * mass.sum():
        return center / norm
    return f.grid.nodes[np.argmax(f.values)]


def concentration_profile(f: BoundaryField, cap_angles, p: float | None = None, pole=None):
    """Fraction of int |f|^p dS inside geodesic caps of the given half-angles.

    The cap is centred at ``pole`` or, by default, at the |f|^p centre of mass
    direction.  ``p`` defaults to the critical exponent.  Nodes lying on the
    cap boundary count with half their weight.  Returns a list of
    (angle, fraction) pairs.
    """
    n = f.grid.n
    p = critical_exponent(n) if p is None else p
    pole = _mass_pole(f, p) if pole is None else np.asarray(pole, float) / np.linalg.norm(pole)
    mass = f.grid.weights * np.abs(f.values) ** p
    total = mass.sum()
    cosines = f.grid.nodes @ pole
    rows = []
    for alpha in cap_angles:
        c = np.cos(alpha)
        on_edge = np.abs(cosines - c) <= 1e-12
        inside = (cosines > c) & ~on_edge
        rows.append((float(alpha), float((mass[inside].sum() + 0.5 * mass[on_edge].sum()) / total)))
    return rows


def cap_fraction_extremal(lam: float, alpha: float) -> float:
    """Closed-form cap fraction of f^4 dS for the n = 3 extremal (1 + lam xi_3)^{-1/2}."""
    if lam == 0:
        return (1 - np.cos(alpha)) / 2
    c = np.cos(alpha)
    return (1 + lam) / (2 * lam) * (1 - (1 - lam) / (1 - lam * c))
