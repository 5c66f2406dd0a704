import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slabgreen import big_phi, bracket_maps, g_kernel, phi_asymptotic, sigma_weight, v_continuum
from slabgreen.spectral import (
    KernelEvaluator,
    PoleProximityError,
    g_asymptotic,
    kernel_coefficients,
    sigma_from_big_phi,
)
from slabgreen.verify import asymptotic_ratios

TOL = {"abs_tol": 1e-12, "rel_tol": 1e-12}


@pytest.mark.parametrize("x, outer, inner", [(0.5, 0.0, 0.5), (3.0, 2.0, 1.0), (-3.0, -2.0, -1.0), (1.0, 0.0, 1.0)])
def test_bracket_maps(x, outer, inner):
    assert bracket_maps(x, 1.0) == (outer, inner)


@settings(max_examples=100, deadline=None)
@given(x=st.floats(-1e3, 1e3), h=st.floats(0.01, 10.0))
def test_bracket_maps_split(x, h):
    outer, inner = bracket_maps(x, h)
    assert outer + inner == pytest.approx(x, abs=1e-12 * max(1.0, abs(x)))
    assert abs(inner) <= h
    assert outer == 0 or np.sign(outer) == np.sign(x)


def test_v_continuum_closed_forms(p0, p_free):
    assert v_continuum(p0, "s", 2.25, 1.0, **TOL) == pytest.approx(np.cos(1.5), abs=1e-10)
    assert v_continuum(p0, "s", 2.25, 1.0 + np.pi / 2, **TOL) == pytest.approx(-1.5 * np.sin(1.5), abs=1e-10)
    assert v_continuum(p_free, "s", 4.0, 7.0, **TOL) == pytest.approx(np.cos(14.0), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(lam=st.floats(1.3, 80.0), x=st.floats(-20.0, 20.0))
def test_v_continuum_two_forms(p0, lam, x):
    """Cladding form matches the exact step-slab solution continued across x = h."""
    k, Q = np.sqrt(lam), np.sqrt(lam - 1.25)
    ax = abs(x)
    exact = np.cos(k * ax) if ax <= 1 else np.cos(k) * np.cos(Q * (ax - 1)) - k * np.sin(k) / Q * np.sin(Q * (ax - 1))
    assert v_continuum(p0, "s", lam, x, **TOL) == pytest.approx(exact, abs=1e-9)


def test_sigma_closed_forms(p0, p_free):
    assert sigma_weight(p0, "s", 2.25, **TOL) == pytest.approx(1 / (np.cos(1.5) ** 2 + 2.25 * np.sin(1.5) ** 2), rel=1e-10)
    assert sigma_weight(p_free, "s", 4.0, **TOL) == pytest.approx(1.0, rel=1e-12)


def test_sigma_vanishes_linearly_at_band_edge(p0):
    eps = np.array([1e-4, 2e-4])
    s = sigma_weight(p0, "s", p0.d2 + eps, **TOL)
    assert s[1] / s[0] == pytest.approx(2.0, rel=1e-3)


@settings(max_examples=20, deadline=None)
@given(tau=st.floats(0.05, 60.0), parity=st.sampled_from(["s", "a"]))
def test_sigma_two_formulas(graded, tau, parity):
    a = sigma_weight(graded, parity, graded.d2 + tau**2, **TOL)
    b = sigma_from_big_phi(graded, parity, tau, **TOL)
    assert abs(b - a) <= 1e-8 * a
    assert abs(b.imag) <= 1e-8 * a


def test_big_phi_free_profile(p_free):
    assert big_phi(p_free, "s", 0.7, 3.0, **TOL) == pytest.approx(np.exp(2.1j), abs=1e-10)
    assert big_phi(p_free, "a", 0.7, 3.0, **TOL) == pytest.approx(-1j * np.exp(2.1j), abs=1e-10)
    assert phi_asymptotic(p_free, "s", 0.7, 3.0) == pytest.approx(np.exp(2.1j), abs=1e-14)


def test_big_phi_rejects_zero_tau(p0):
    with pytest.raises(ValueError):
        big_phi(p0, "s", 0.5, 0.0)


def test_asymptotic_form_at_large_tau(p0):
    approx = phi_asymptotic(p0, "s", 1.0, 50.0)
    assert approx == pytest.approx((1 + 0.625j / 50) * np.exp(50j), abs=1e-14)
    exact = big_phi(p0, "s", 1.0, 50.0, **TOL)
    assert abs(exact - approx) <= 2.0 / 50**2
    a_form = phi_asymptotic(p0, "a", 1.0, 50.0)
    assert a_form == pytest.approx(approx * np.sqrt(2501.25) / 50j, rel=1e-14)


@pytest.mark.parametrize("name", ["p0", "graded"])
def test_asymptotic_second_order(request, name):
    ratios = asymptotic_ratios(request.getfixturevalue(name))
    for r in ratios.values():
        assert 3.4 <= r <= 4.6


def test_kernel_free_profile(p_free):
    t = np.linspace(0.1, 1.4, 7)
    g = g_kernel(p_free, 2.0, 0.3, t, **TOL)
    assert np.allclose(g, np.exp(1j * (1.0 - 0.3) * np.sin(t)) / (4j * np.pi), atol=1e-12)
    assert np.allclose(g_asymptotic(p_free, 2.0, 0.3, t), g, atol=1e-12)


def test_kernel_constant_outside_core(p0):
    t = np.array([0.2, 0.9 + 0.3j, -0.5 - 1.0j])
    assert np.allclose(g_kernel(p0, 2.0, 0.0, t, **TOL), g_kernel(p0, 5.0, 0.0, t, **TOL), rtol=1e-14)


def test_kernel_coefficients_rebuild_kernel(p0):
    t = np.array([0.4, 1.0 + 0.3j])
    coeffs = kernel_coefficients(p0, 0.3, 0.6, t, **TOL)
    g = sum(a + b for a, b in coeffs.values())  # [xi]_h = 0 inside the core
    assert np.allclose(g, g_kernel(p0, 0.3, 0.6, t, **TOL), rtol=1e-12)


def test_kernel_x_derivative(p0):
    ev = KernelEvaluator(p0, **TOL)
    taus = p0.beta0 * np.sin(np.array([0.3, 1.2 + 0.4j]))
    _, dg = ev.g(taus, 0.3, [0.1], derivative=True)
    step = 1e-5
    fd = (ev.g(taus, 0.3 + step, [0.1]) - ev.g(taus, 0.3 - step, [0.1])) / (2 * step)
    assert np.allclose(dg, fd, rtol=1e-7, atol=1e-10)


def test_pole_proximity_detected(p0, p0_modes):
    # tau = i kappa_1 is the guided pole
    tau = 1j * p0_modes.kappas[0]
    with pytest.raises(PoleProximityError):
        KernelEvaluator(p0, **TOL).g(np.array([tau]), 0.0, [0.0])
