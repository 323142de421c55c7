from dataclasses import replace
from math import pi

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmext import (
    BoundaryField,
    DomainError,
    FunctionalConfig,
    SolverConfig,
    build_sphere_grid,
    concentration_profile,
    el_residual,
    extremal_family,
    kw_defect,
    lp_norm_boundary,
    manufacture_weight,
    random_positive_field,
    sharp_constant_critical,
    solve_el,
    supercritical_constant,
)
from harmext.rearrangement import cap_area
from harmext.solver import KWWeight, cap_fraction_extremal, mode_factors


@pytest.fixture(scope="module")
def g24():
    return build_sphere_grid(3, 24)


@pytest.fixture(scope="module")
def g42():
    return build_sphere_grid(3, 42)


def test_config_validation():
    fc = FunctionalConfig(3, 5)
    with pytest.raises(DomainError):
        SolverConfig(fc, tol=0)
    with pytest.raises(DomainError):
        SolverConfig(fc, damping=1.5)
    assert SolverConfig(fc).stopping == "iterate"
    assert SolverConfig(FunctionalConfig(3, 4)).stopping == "functional"


def test_mode_factors_match_linearization(g24):
    from harmext.solver import _el_image, _normalize

    fc = FunctionalConfig(3, 5, 16, 24)
    mu = mode_factors(fc, 2)
    assert abs(mu[1] - 0.975) < 1e-15
    one = BoundaryField(g24, np.ones(g24.size))
    for l, Y in ((1, g24.nodes[:, 0]), (2, g24.nodes[:, 0] * g24.nodes[:, 1])):
        f = BoundaryField(g24, _normalize(1 + 1e-6 * Y, one, 5))
        Tf, _ = _el_image(f, fc, fc.q - 1)
        upd = _normalize(Tf.values ** (1 / 4), f, 5)
        c = f.values.mean()
        slope = np.polyfit(Y, upd / c, 1)[0] / 1e-6
        assert abs(slope - mu[l]) < 1e-5


def test_supercritical_converges_to_constant(g24):
    fc = FunctionalConfig(3, 5, 16, 24)
    init = BoundaryField(g24, 1 + 0.3 * g24.nodes[:, 0])
    rep = solve_el(init, SolverConfig(fc))
    assert rep.converged
    assert abs(rep.q_final - supercritical_constant(3, 5)) < 1e-4
    assert rep.residual <= 10 * 1e-8
    assert np.ptp(rep.final.values) < 1e-6
    assert np.all(np.isfinite(rep.q_history))
    assert rep.max_radius < 1


def test_plain_damped_iteration_also_converges(g24):
    fc = FunctionalConfig(3, 5, 12, 24)
    init = BoundaryField(g24, 1 + 0.1 * g24.nodes[:, 2])
    rep = solve_el(init, SolverConfig(fc, precondition=False, damping=1.0, max_iterations=2000, tol=1e-9))
    assert rep.converged and abs(rep.q_final - supercritical_constant(3, 5)) < 1e-8


def test_critical_extremal_stays_on_family(g42):
    fc = FunctionalConfig(3, 4, 40, 40)
    rep = solve_el(extremal_family(g42, 0.5), SolverConfig(fc, max_iterations=50, tol=1e-14))
    assert np.max(np.abs(np.array(rep.q_history) - sharp_constant_critical(3))) < 5e-5


@pytest.mark.parametrize("p", [2.0, 4.0, 5.0])
def test_constant_is_fixed_point(g24, p):
    fc = FunctionalConfig(3, p, 16, 24)
    one = BoundaryField(g24, np.ones(g24.size))
    rep = solve_el(one, SolverConfig(fc, max_iterations=5))
    assert rep.residual < 1e-9
    assert rep.step_history[0] < 1e-12


def test_iterates_stay_normalized_and_positive(g24):
    fc = FunctionalConfig(3, 5, 12, 24)
    init = random_positive_field(g24, 4, np.random.default_rng(3))
    rep = solve_el(init, SolverConfig(fc, max_iterations=5))
    assert abs(lp_norm_boundary(rep.final, 5) - 1) < 1e-12
    assert np.all(rep.final.values > 0)


def test_subcritical_runs_without_contract(g24):
    fc = FunctionalConfig(3, 2, 10, 24)
    rep = solve_el(BoundaryField(g24, 1 + 0.2 * g24.nodes[:, 0]), SolverConfig(fc, max_iterations=20))
    assert np.all(np.isfinite(rep.q_history))


def test_solver_rejects_nonpositive(g24):
    with pytest.raises(DomainError):
        solve_el(BoundaryField(g24, g24.nodes[:, 0]), SolverConfig(FunctionalConfig(3, 5)))


def test_el_residual_examples(g42):
    fc = FunctionalConfig(3, 4, 40, 40)
    assert el_residual(BoundaryField(g42, np.ones(g42.size)), fc) < 1e-9
    assert el_residual(extremal_family(g42, 0.3), fc) < 1e-6
    assert el_residual(BoundaryField(g42, 1 + 0.5 * g42.nodes[:, 0]), fc) > 1e-3


def test_manufacture_weight(g42):
    fc = FunctionalConfig(3, 4, 40, 40)
    K = manufacture_weight(BoundaryField(g42, np.ones(g42.size)), fc)
    assert np.max(np.abs(K.field.values - 1 / 3)) < 1e-12
    K = manufacture_weight(extremal_family(g42, 0.4), fc)
    assert np.ptp(K.field.values) < 1e-5
    K = manufacture_weight(BoundaryField(g42, 1 + 0.3 * g42.nodes[:, 0]), fc)
    assert np.ptp(K.field.values) > 1e-3
    with pytest.raises(DomainError):
        manufacture_weight(BoundaryField(g42, np.ones(g42.size)), FunctionalConfig(3, 5))
    with pytest.raises(DomainError):
        KWWeight(BoundaryField(g42, -np.ones(g42.size)))


def test_kw_defect_examples(g42):
    fc = FunctionalConfig(3, 4, 40, 40)
    f = BoundaryField(g42, np.ones(g42.size))
    K = KWWeight(BoundaryField(g42, np.full(g42.size, 2.0)))
    assert np.array_equal(kw_defect(f, K), np.zeros(3))
    x = g42.nodes
    for vals in (1 + 0.3 * x[:, 0], 1 + 0.2 * x[:, 1] + 0.1 * x[:, 2]):
        f = BoundaryField(g42, vals)
        assert np.max(np.abs(kw_defect(f, manufacture_weight(f, fc)))) < 1e-6
    other = build_sphere_grid(3, 42)
    with pytest.raises(ValueError):
        kw_defect(BoundaryField(other, np.ones(other.size)), manufacture_weight(f, fc))


@settings(max_examples=5)
@given(seed=st.integers(0, 2**20))
def test_kw_random(seed, g42):
    fc = FunctionalConfig(3, 4, 40, 40)
    f = random_positive_field(g42, 4, np.random.default_rng(seed), spread=0.5)
    assert np.max(np.abs(kw_defect(f, manufacture_weight(f, fc)))) < 1e-5


def test_concentration_examples(g42):
    one = BoundaryField(g42, np.ones(g42.size))
    (_, frac), = concentration_profile(one, [pi / 2], pole=[0, 0, 1])
    assert abs(frac - 0.5) < 1e-12
    lam0 = extremal_family(g42, 0.0)
    for a, frac in concentration_profile(lam0, [pi / 5, pi / 3], pole=[0, 0, 1]):
        # grid caps are unions of rings; compare with the weight of the included rings
        inside = g42.nodes[:, 2] > np.cos(a)
        assert abs(frac - g42.weights[inside].sum() / (4 * pi)) < 1e-12
        assert abs(frac - cap_area(3, a) / (4 * pi)) < 0.05
    g = build_sphere_grid(3, 100)
    f5 = concentration_profile(extremal_family(g, 0.5, zeta=[0, 0, -1]), [pi / 4])[0][1]
    f9 = concentration_profile(extremal_family(g, 0.9, zeta=[0, 0, -1]), [pi / 4])[0][1]
    assert f9 > f5


def test_cap_fraction_closed_form():
    from scipy.integrate import quad

    for lam, a in ((0.5, 0.7), (0.9, np.pi / 8), (0.0, 1.0)):
        num, _ = quad(lambda t: np.sin(t) / (1 + lam * np.cos(t)) ** 2, np.pi - a, np.pi)
        den, _ = quad(lambda t: np.sin(t) / (1 + lam * np.cos(t)) ** 2, 0, np.pi)
        assert abs(cap_fraction_extremal(lam, a) - num / den) < 1e-12


def test_report_dict(g24):
    rep = solve_el(BoundaryField(g24, np.ones(g24.size)), SolverConfig(FunctionalConfig(3, 5, 8, 24), max_iterations=2))
    d = rep.to_dict()
    assert {"iterations", "converged", "q_history", "el_residual", "kw_defect", "max_radial_node"} <= set(d)
