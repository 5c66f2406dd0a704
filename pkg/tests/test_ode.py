import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slabgreen import solve_phi, solve_phi_volterra
from slabgreen.ode import phi_batch


def test_step_core_symmetric_closed_form(p0):
    sol = solve_phi(p0, "s", 1.0, [1.0])
    assert sol.phi[0] == pytest.approx(np.cos(1.0), abs=1e-10)
    assert sol.dphi[0] == pytest.approx(-np.sin(1.0), abs=1e-10)


def test_step_core_antisymmetric_closed_form(p0):
    sol = solve_phi(p0, "a", 1.0, [1.0])
    assert sol.phi[0] == pytest.approx(np.sin(1.0), abs=1e-10)


def test_imaginary_tau_maps_to_real_lambda(p0):
    # tau = i gives lambda = d^2 - 1 = 0.25
    sol = solve_phi(p0, "s", 0.25, [1.0])
    assert sol.phi[0] == pytest.approx(np.cos(0.5), abs=1e-10)


def test_complex_lambda_closed_form(p0):
    lam = 2.0 + 3.0j
    sol = solve_phi(p0, "s", lam, [-0.4, 0.7, 1.0])
    assert np.allclose(sol.phi, np.cos(np.sqrt(lam) * sol.x_values), rtol=1e-10, atol=1e-12)


def test_phi2_integral(p0):
    lam = 1.7
    sol = solve_phi(p0, "s", lam, [1.0])
    k = np.sqrt(lam)
    exact = 0.5 + np.sin(2 * k) / (4 * k)
    assert sol.phi2_integral[0].real == pytest.approx(exact, rel=1e-10)


def test_degenerate_antisymmetric_at_zero(p0):
    sol = solve_phi(p0, "a", 0.0, [0.5])
    assert sol.degenerate and sol.phi[0] == 0


def test_targets_outside_core_rejected(p0):
    with pytest.raises(ValueError):
        phi_batch(p0, "s", [1.0], [1.5])


def test_volterra_oracle_agrees(p0):
    lam = 2.25
    phi_o, dphi_o = solve_phi_volterra(p0, "s", lam, 1.0)
    sol = solve_phi(p0, "s", lam, [1.0])
    assert abs(sol.phi[0] - phi_o) <= 1e-10
    assert abs(sol.dphi[0] - dphi_o) <= 1e-10


def test_volterra_free_profile_is_exact(p_free):
    lam = 3.3
    phi_o, _ = solve_phi_volterra(p_free, "s", lam, 0.7)
    assert phi_o == pytest.approx(np.cos(np.sqrt(lam) * 0.7), abs=1e-14)


@settings(max_examples=15, deadline=None)
@given(
    re=st.floats(-5.0, 60.0),
    im=st.floats(-20.0, 20.0),
    x=st.floats(-1.0, 1.0),
    parity=st.sampled_from(["s", "a"]),
)
def test_volterra_matches_solver_on_graded_core(graded, re, im, x, parity):
    lam = complex(re, im)
    if abs(lam - graded.d2) < 1e-3:
        return
    phi_o, dphi_o = solve_phi_volterra(graded, parity, lam, x)
    sol = solve_phi(graded, parity, lam, [x])
    scale = 1 + abs(phi_o) + abs(dphi_o)
    assert abs(sol.phi[0] - phi_o) <= 1e-8 * scale
    assert abs(sol.dphi[0] - dphi_o) <= 1e-8 * scale


@settings(max_examples=20, deadline=None)
@given(lam=st.floats(0.01, 200.0), x=st.floats(-1.0, 1.0))
def test_wronskian_is_sqrt_lambda(graded, lam, x):
    s = solve_phi(graded, "s", lam, [x])
    a = solve_phi(graded, "a", lam, [x])
    w = s.phi[0] * a.dphi[0] - s.dphi[0] * a.phi[0]
    assert abs(w - np.sqrt(lam)) <= 1e-8 * np.sqrt(lam)


@settings(max_examples=20, deadline=None)
@given(lam=st.floats(0.01, 100.0), x=st.floats(0.0, 1.0))
def test_parity_of_solutions(graded, lam, x):
    phi, dphi = phi_batch(graded, "s", [lam], [x, -x])
    assert abs(phi[0, 0] - phi[0, 1]) <= 1e-9 * (1 + abs(phi[0, 0]))
    assert abs(dphi[0, 0] + dphi[0, 1]) <= 1e-9 * (1 + abs(dphi[0, 0]))
    phi, dphi = phi_batch(graded, "a", [lam], [x, -x])
    assert abs(phi[0, 0] + phi[0, 1]) <= 1e-9 * (1 + abs(phi[0, 0]))
    assert abs(dphi[0, 0] - dphi[0, 1]) <= 1e-9 * (1 + abs(dphi[0, 0]))


def test_real_tau_growth_bound(p0):
    taus = np.linspace(p0.d, 50.0, 40)
    xs = np.linspace(-1.0, 1.0, 41)
    bound = np.sqrt(2) * np.exp(p0.d * p0.h)
    for parity in ("s", "a"):
        phi, _ = phi_batch(p0, parity, p0.d2 + taus**2, xs)
        # phi_a carries the extra factor sqrt(lambda)/tau from its initial slope
        scale = 1.0 if parity == "s" else (np.sqrt(p0.d2 + taus**2) / taus)[:, None]
        assert np.all(np.abs(phi) <= bound * scale)
