import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import hankel1

from slabgreen import build_contour, decay_slope, g_kernel, green, green_guided, green_rad_contour, green_rad_real, mode_shape
from slabgreen.green import CoincidentPointError

# sup |g(0, 0; t)| over the level-1 nodes of C_{pi/4} for the step slab
K_PI4 = 0.09589201675521912
# real-route value at (x, z) = (0.3, 5) for a source at the origin, cross-checked by the contour route
G_RAD_P0 = -5.5088565578704914e-05 + 0.011796904806480239j


def test_free_space_reduction(p_free, p_free_modes):
    G = green(p_free, p_free_modes, 3.0, 4.0, 0.0, 0.0)
    assert G.guided == []
    assert abs(G.total - hankel1(0, 5.0) / 4j) <= 1e-10


def test_free_space_real_route(p_free, p_free_modes):
    val = green_rad_real(p_free, p_free_modes, 0.0, 1.0, 0.0, 0.0)
    assert abs(val - hankel1(0, 1.0) / 4j) <= 1e-10


def test_guided_part_closed_form(p0, p0_modes):
    e0, _ = mode_shape(p0, p0_modes, 0, 0.0)
    beta = p0_modes.betas[0]
    (g,) = green_guided(p0, p0_modes, 0.0, 0.0, 0.0, 0.0)
    assert g == pytest.approx(e0**2 / (2j * beta), rel=1e-14)
    assert g.imag < 0 and g.real == 0
    (g2,) = green_guided(p0, p0_modes, 0.0, 2 * np.pi / beta, 0.0, 0.0)
    assert g2 == pytest.approx(g, rel=1e-12)


def test_regression_value(p0, p0_modes):
    assert abs(green_rad_real(p0, p0_modes, 0.3, 5.0, 0.0, 0.0) - G_RAD_P0) <= 1e-15
    v, _ = green_rad_contour(p0, p0_modes, 0.3, 5.0, 0.0, 0.0, grad=False)
    assert abs(v - G_RAD_P0) <= 1e-7 * abs(G_RAD_P0)


@pytest.mark.parametrize("x, z, xi, zeta", [(0.0, 10.0, 0.0, 0.0), (0.0, 25.0, 0.0, 0.0), (-4.0, 3.0, 0.5, 1.0), (7.5, -2.0, -0.3, 0.0)])
def test_routes_agree(p0, p0_modes, x, z, xi, zeta):
    a = green_rad_real(p0, p0_modes, x, z, xi, zeta)
    b, _ = green_rad_contour(p0, p0_modes, x, z, xi, zeta, grad=False)
    assert abs(a - b) <= 1e-7 * abs(b)


@settings(max_examples=6, deadline=None)
@given(
    x=st.floats(-1.0, 1.0),
    xi=st.floats(-1.0, 1.0),
    z=st.floats(0.5, 20.0),
)
def test_reciprocity(p0, p0_modes, x, xi, z):
    a, _ = green_rad_contour(p0, p0_modes, x, z, xi, 0.0, grad=False)
    b, _ = green_rad_contour(p0, p0_modes, xi, 0.0, x, z, grad=False)
    assert abs(a - b) <= 1e-8 * abs(a)


@pytest.mark.parametrize("x, z", [(0.4, 3.0), (2.5, 1.5), (-6.0, 4.0)])
def test_gradient_matches_finite_differences(p0, p0_modes, x, z):
    _, grad = green_rad_contour(p0, p0_modes, x, z, 0.1, 0.0)
    step = 1e-4

    def val(a, b):
        return green_rad_contour(p0, p0_modes, a, b, 0.1, 0.0, grad=False)[0]

    fx = (val(x + step, z) - val(x - step, z)) / (2 * step)
    fz = (val(x, z + step) - val(x, z - step)) / (2 * step)
    assert abs(grad[0] - fx) <= 1e-7
    assert abs(grad[1] - fz) <= 1e-7
    _, dx, dz = green_rad_real(p0, p0_modes, x, z, 0.1, 0.0, grad=True)
    assert abs(dx - grad[0]) <= 1e-9 and abs(dz - grad[1]) <= 1e-9


def test_kernel_bound_regression(p0, p0_modes):
    t, _ = build_contour(p0, p0_modes, np.pi / 4).nodes(1)
    assert np.max(np.abs(g_kernel(p0, 0.0, 0.0, t))) == pytest.approx(K_PI4, rel=1e-8)


def test_residual_below_kernel_bound(p0, p0_modes):
    R, th = 50.0, np.pi / 4
    x, z = p0.h + R * np.sin(th), R * np.cos(th)
    v, (gx, gz) = green_rad_contour(p0, p0_modes, x, z, 0.0, 0.0)
    res = abs(gx * np.sin(th) + gz * np.cos(th) - 1j * p0.beta0 * v)
    assert res <= K_PI4 * np.sqrt(np.pi / (2 * p0.beta0)) * R**-1.5


def test_oblique_cylindrical_spreading(p0, p0_modes):
    R = np.geomspace(25, 200, 6)
    vals = [abs(green_rad_contour(p0, p0_modes, p0.h + r / np.sqrt(2), r / np.sqrt(2), 0.0, 0.0, grad=False)[0]) for r in R]
    assert decay_slope(R, vals)[0] == pytest.approx(-0.5, abs=0.05)


def test_on_axis_decay_is_faster(p0, p0_modes):
    """Along the core axis the radiating part loses its leading R^(-1/2) term."""
    Z = np.geomspace(25, 200, 6)
    vals = [abs(green_rad_real(p0, p0_modes, 0.0, z, 0.0, 0.0)) for z in Z]
    assert decay_slope(Z, vals)[0] == pytest.approx(-1.5, abs=0.1)


def test_error_paths(p0, p0_modes):
    with pytest.raises(CoincidentPointError):
        green_rad_contour(p0, p0_modes, 0.2, 1e-5, 0.2, 0.0)
    with pytest.raises(ValueError):
        green_rad_contour(p0, p0_modes, 3.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        green_rad_real(p0, p0_modes, 3.0, 0.05, 0.0, 0.0)
    with pytest.raises(ValueError):
        green(p0, p0_modes, 0.0, 1.0, 0.0, 0.0, route="nope")


def test_weighted_sources_are_linear(p0, p0_modes):
    xis, w = np.array([-0.3, 0.2, 0.8]), np.array([1.0, -0.5j, 2.0])
    combo = green_rad_real(p0, p0_modes, 1.7, 4.0, xis, 0.0, w)
    single = sum(wi * green_rad_real(p0, p0_modes, 1.7, 4.0, xi, 0.0) for xi, wi in zip(xis, w))
    assert abs(combo - single) <= 1e-12
    c2, _ = green_rad_contour(p0, p0_modes, 1.7, 4.0, xis, 0.0, w, grad=False)
    assert abs(c2 - combo) <= 1e-7 * abs(combo)


def test_green_parts_gradient(p0, p0_modes):
    G = green(p0, p0_modes, 0.5, 3.0, 0.0, 0.0, grad=True)
    assert G.grad.shape == (2,)
    R = green(p0, p0_modes, 0.5, 3.0, 0.0, 0.0, route="real", grad=True)
    assert abs(G.total - R.total) <= 1e-7 * abs(G.total)
    assert np.allclose(G.grad, R.grad, atol=1e-9)
