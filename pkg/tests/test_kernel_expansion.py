import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmext import (
    DomainError,
    GeometryData,
    a0,
    ball_a1_closed_form,
    ball_kernel_fermi_oracle,
    rhs_b0,
    solve_a1,
)
from harmext.kernel_expansion import hemisphere_rule, lift_profile


def _directions(n, k, seed=0):
    d = np.random.default_rng(seed).normal(size=(k, n))
    d /= np.linalg.norm(d, axis=1)[:, None]
    d[:, -1] = np.abs(d[:, -1])
    return d


def test_geometry_validation():
    with pytest.raises(ValueError):
        GeometryData(3, 1.0, np.eye(2))
    with pytest.raises(ValueError):
        GeometryData(3, 1.0, [[1.0, 1.0], [0.0, 0.0]])
    assert GeometryData.from_h(3, np.diag([1.0, 2.0])).H0 == 3.0


def test_rhs_examples():
    flat = GeometryData.flat(3)
    pts = _directions(3, 20)
    assert np.all(rhs_b0(flat, pts) == 0)
    ball = GeometryData.unit_ball(3)
    assert rhs_b0(ball, [[0, 0, 1.0]])[0] == -8
    assert rhs_b0(ball, [[1.0, 0, 0]])[0] == -2


def test_a0_is_normal_component():
    pts = _directions(4, 10)
    assert np.array_equal(a0(pts), pts[:, -1])


@pytest.mark.parametrize("n", [3, 4, 5])
def test_lift_profile(n):
    z = np.linspace(0, 0.999, 50)
    w = lift_profile(n, z)
    if n == 3:
        assert np.max(np.abs(w - np.log1p(z))) < 1e-13
    # -Delta w = 1 for axisymmetric w: -(1-z^2)^{-(n-3)/2} d/dz[(1-z^2)^{(n-1)/2} w'] = 1
    h = 1e-4
    zz = np.linspace(0.05, 0.9, 7)
    flux = lambda s: (1 - s**2) ** ((n - 1) / 2) * (lift_profile(n, s + h) - lift_profile(n, s - h)) / (2 * h)
    lap = (flux(zz + h) - flux(zz - h)) / (2 * h) / (1 - zz**2) ** ((n - 3) / 2)
    assert np.max(np.abs(lap + 1)) < 1e-5
    assert w[0] == 0


@pytest.mark.parametrize("n", [3, 4])
def test_hemisphere_rule(n):
    nodes, w = hemisphere_rule(n, 12)
    assert np.all(nodes[:, -1] > 0)
    area = n * np.pi ** (n / 2) / __import__("math").gamma(n / 2 + 1) / 2
    assert abs(w.sum() - area) < 1e-12
    assert abs(w @ nodes[:, -1] ** 2 - area / n) < 1e-12


def test_flat_gives_zero():
    a = solve_a1(GeometryData.flat(3), 12)
    assert np.all(a.coeffs == 0) and a.lift == 0
    assert np.all(a.evaluate(_directions(3, 10)) == 0)


def test_ball_matches_closed_form_and_oracle():
    a = solve_a1(GeometryData.unit_ball(3), 24)
    d = _directions(3, 200)
    assert np.max(np.abs(a.evaluate(d) - ball_a1_closed_form(3, d))) < 1e-4
    o = ball_kernel_fermi_oracle(3, d)
    assert np.max(np.abs(o["c0"] - d[:, -1])) < 1e-6
    assert np.max(np.abs(a.evaluate(d) - o["c1"])) < 1e-4
    assert not o["ill_conditioned"]


def test_oracle_matches_closed_form_n4():
    d = _directions(4, 30)
    o = ball_kernel_fermi_oracle(4, d)
    assert np.max(np.abs(o["c1"] - ball_a1_closed_form(4, d))) < 1e-8


def test_closed_form_solves_the_problem():
    # -Delta a1 = b0 for a1 = -z^2/2 + (n/2) z^2 (1 - z^2), applied to the axisymmetric profile
    for n in (3, 4, 5):
        z = np.linspace(-0.9, 0.9, 11)
        a = lambda s: -s**2 / 2 + n / 2 * s**2 * (1 - s**2)
        h = 1e-4
        d1 = lambda s: (a(s + h) - a(s - h)) / (2 * h)
        lap = (1 - z**2) * (d1(z + h) - d1(z - h)) / (2 * h) - (n - 1) * z * d1(z)
        pts = np.column_stack([np.sqrt(1 - z**2), np.zeros((len(z), n - 2)), z])
        assert np.max(np.abs(-lap - rhs_b0(GeometryData.unit_ball(n), pts))) < 1e-5


def test_equator_trace():
    a = solve_a1(GeometryData.unit_ball(3), 24)
    t = np.linspace(0, 2 * np.pi, 100)
    eq = np.column_stack([np.cos(t), np.sin(t), np.zeros_like(t)])
    assert np.max(np.abs(a.evaluate(eq))) <= 1e-6


def _random_geometry(rng, n=3):
    A = rng.normal(size=(n - 1, n - 1))
    return GeometryData.from_h(n, (A + A.T) / 2)


@settings(max_examples=8)
@given(seed=st.integers(0, 2**20))
def test_residual_halves(seed):
    geom = _random_geometry(np.random.default_rng(seed))
    r12, r24 = solve_a1(geom, 12).residual, solve_a1(geom, 24).residual
    assert r24 <= 0.5 * r12


@settings(max_examples=8)
@given(seed=st.integers(0, 2**20))
def test_linearity(seed):
    rng = np.random.default_rng(seed)
    g1, g2 = _random_geometry(rng), _random_geometry(rng)
    d = _directions(3, 40, seed)
    s = solve_a1(g1 + g2, 16).evaluate(d)
    parts = solve_a1(g1, 16).evaluate(d) + solve_a1(g2, 16).evaluate(d)
    assert np.max(np.abs(s - parts)) < 1e-10


def test_solve_a1_errors():
    with pytest.raises(DomainError):
        solve_a1(GeometryData.unit_ball(3), 3)
    with pytest.raises(DomainError):
        ball_kernel_fermi_oracle(3, [[0, 0, -1.0]])
    with pytest.raises(DomainError):
        ball_kernel_fermi_oracle(3, [[0, 0, 1.0]], radii=[0.5])


def test_oracle_conditioning_flag():
    o = ball_kernel_fermi_oracle(3, [[0, 0, 1.0]], radii=np.linspace(1e-3, 2e-3, 20), degree=12)
    assert o["ill_conditioned"]


def test_to_dict_lists_triples():
    d = solve_a1(GeometryData.unit_ball(3), 8).to_dict()
    assert d["coefficients"] and {"l", "m", "c"} == set(d["coefficients"][0])
    assert all((c["l"] >= 1) for c in d["coefficients"])
