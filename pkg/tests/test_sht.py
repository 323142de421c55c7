from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from harmext import BoundaryField, SpectralField, analyze, build_sphere_grid, tangential_gradient_pairing, with_spectrum
from harmext.sht import coefficient_count, harmonic_dimension, synthesize_values
from harmext.sphere import DomainError, sphere_area


def test_constant_has_only_degree_zero(grid3):
    s = analyze(BoundaryField(grid3, np.ones(grid3.size)), 6)
    assert abs(s.coeffs[0] - sqrt(4 * pi)) < 1e-12
    assert np.max(np.abs(s.coeffs[1:])) < 1e-12


def test_xi1_single_coefficient(grid3):
    s = analyze(BoundaryField.from_function(grid3, lambda x: x[:, 0]), 6)
    nz = np.flatnonzero(np.abs(s.coeffs) > 1e-12)
    assert len(nz) == 1 and s.degrees[nz[0]] == 1
    assert abs(abs(s.coeffs[nz[0]]) - sqrt(4 * pi / 3)) < 1e-12


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_harmonic_dimensions(n):
    L = 6
    assert coefficient_count(n, L) == sum(harmonic_dimension(n, l) for l in range(L + 1))
    if n == 3:
        assert [harmonic_dimension(3, l) for l in range(4)] == [1, 3, 5, 7]


@given(n=st.integers(3, 5), L=st.integers(0, 8), seed=st.integers(0, 2**16))
def test_roundtrip_and_parseval(n, L, seed):
    g = build_sphere_grid(n, max(L, 1))
    c = np.random.default_rng(seed).normal(size=coefficient_count(n, L))
    spec = SpectralField(n, L, c)
    f = spec.synthesize(g)
    back = analyze(f, L)
    assert np.max(np.abs(back.coeffs - c)) < 1e-12 * max(1, np.abs(c).max()) * 10
    assert abs(g.integrate(f.values**2) - np.sum(c**2)) < 1e-10 * max(1.0, np.sum(c**2))


def test_analyze_needs_exactness():
    g = build_sphere_grid(3, 4)
    with pytest.raises(DomainError):
        analyze(BoundaryField(g, np.ones(g.size)), 6)


def test_laplacian_eigenvalues(grid3, rng):
    c = rng.normal(size=coefficient_count(3, 5))
    lap = SpectralField(3, 5, c).laplacian()
    l = SpectralField(3, 5, c).degrees
    assert np.allclose(lap.coeffs, -l * (l + 1) * c)


def test_spectral_json_roundtrip(rng):
    s = SpectralField(3, 4, rng.normal(size=coefficient_count(3, 4)))
    t = SpectralField.from_json(s.to_json())
    assert np.array_equal(s.coeffs, t.coeffs)


def test_evaluate_matches_synthesis(grid3, rng):
    s = SpectralField(3, 7, rng.normal(size=coefficient_count(3, 7)))
    assert np.allclose(s.evaluate(grid3.nodes[:50]), s.synthesize(grid3).values[:50], atol=1e-12)


def test_pairing_examples(grid3):
    f = BoundaryField(grid3, np.ones(grid3.size))
    K1 = with_spectrum(BoundaryField(grid3, np.ones(grid3.size)), 6)
    assert abs(tangential_gradient_pairing(K1, f, 1)) < 1e-12
    Kx = with_spectrum(BoundaryField.from_function(grid3, lambda x: x[:, 0]), 6)
    assert abs(tangential_gradient_pairing(Kx, f, 1) - 8 * pi / 3) < 1e-10
    assert abs(tangential_gradient_pairing(Kx, f, 2)) < 1e-12


def test_pairing_errors(grid3):
    f = BoundaryField(grid3, np.ones(grid3.size))
    with pytest.raises(ValueError):
        tangential_gradient_pairing(BoundaryField(grid3, np.ones(grid3.size)), f, 1)
    K = with_spectrum(f, 4)
    with pytest.raises(DomainError):
        tangential_gradient_pairing(K, BoundaryField(grid3, -np.ones(grid3.size)), 1)
    with pytest.raises(DomainError):
        tangential_gradient_pairing(K, f, 4)


@given(seed=st.integers(0, 2**16), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_pairing_bilinear_in_K(seed, a, b):
    g = build_sphere_grid(3, 10)
    rng = np.random.default_rng(seed)
    L = 6
    c1, c2 = rng.normal(size=(2, coefficient_count(3, L)))
    f = BoundaryField(g, 1 + 0.3 * g.nodes[:, 2])
    K1 = SpectralField(3, L, c1).synthesize(g)
    K2 = SpectralField(3, L, c2).synthesize(g)
    Ks = SpectralField(3, L, a * c1 + b * c2).synthesize(g)
    for i in (1, 2, 3):
        lhs = tangential_gradient_pairing(Ks, f, i)
        rhs = a * tangential_gradient_pairing(K1, f, i) + b * tangential_gradient_pairing(K2, f, i)
        assert abs(lhs - rhs) < 1e-11 * (1 + abs(lhs))


def test_gradient_matches_ambient_projection(grid3):
    # K = x1 x2 + x3^3 extended as a polynomial; grad_S K = grad K - (x . grad K) x
    x = grid3.nodes
    K = with_spectrum(BoundaryField(grid3, x[:, 0] * x[:, 1] + x[:, 2] ** 3), 3)
    from harmext import tangential_gradient

    amb = np.column_stack([x[:, 1], x[:, 0], 3 * x[:, 2] ** 2])
    proj = amb - np.sum(amb * x, axis=1)[:, None] * x
    assert np.max(np.abs(tangential_gradient(K) - proj)) < 1e-11
