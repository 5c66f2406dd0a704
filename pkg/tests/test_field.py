import numpy as np
import pytest
from scipy.special import hankel1

from slabgreen import (
    FieldEvaluator,
    FieldGrid,
    SourceSpec,
    green_rad_contour,
    guided_component,
    modal_projection,
    mode_shape,
    pde_residual,
    remainder_component,
    synthesize_field,
)
from slabgreen.green import CoincidentPointError
from slabgreen.special import free_space_green


def odd_source():
    return SourceSpec.density(lambda x, z: x, (-0.5, 0.5), (-0.5, 0.5), 8, 8)


def test_free_space_field(p_free, p_free_modes):
    F = synthesize_field(p_free, p_free_modes, SourceSpec.point(), [3.0], [4.0])
    assert abs(F.u[0, 0] - hankel1(0, 5.0) / 4j) <= 1e-10
    assert np.array_equal(remainder_component(F), F.u)


def test_guided_amplitude_is_constant(p0, p0_modes):
    ev = FieldEvaluator(p0, p0_modes, SourceSpec.point())
    e0, _ = mode_shape(p0, p0_modes, 0, 0.0)
    for z in (5.0, 20.0, 80.0):
        u1, _, _ = ev.guided(0, 0.0, z)
        assert abs(u1) == pytest.approx(e0**2 / (2 * p0_modes.betas[0]), rel=1e-13)


def test_remainder_decays(p0, p0_modes):
    F = synthesize_field(p0, p0_modes, SourceSpec.point(), [0.0], [20.0])
    ref, _ = green_rad_contour(p0, p0_modes, 0.0, 20.0, 0.0, 0.0, grad=False)
    u0 = remainder_component(F)[0, 0]
    assert abs(u0 - ref) <= 1e-6 * abs(ref)
    assert abs(u0) <= 20**-0.5


def test_odd_source_excites_no_symmetric_mode(p0, p0_modes):
    src = odd_source()
    U, _ = guided_component(p0, p0_modes, 0, src, 3.0)
    assert abs(U) <= 1e-15
    F = synthesize_field(p0, p0_modes, src, [0.2], [2.0])
    assert np.max(np.abs(F.u_guided)) <= 1e-15


def test_route_b_closed_form(p0, p0_modes):
    U, u = guided_component(p0, p0_modes, 0, SourceSpec.point(), 10.0, x=[0.0, 2.0])
    e0, _ = mode_shape(p0, p0_modes, 0, 0.0)
    beta = p0_modes.betas[0]
    assert U == pytest.approx(e0 * np.exp(10j * beta) / (2j * beta), rel=1e-14)
    assert u[0] == pytest.approx(e0 * U, rel=1e-14)


def test_route_a_matches_route_b(p0, p0_modes):
    src = SourceSpec.point_set([(0.0, 0.0), (0.4, -0.3)], [1.0, 0.5j])
    for z in (2.0, 15.0):
        a, _ = guided_component(p0, p0_modes, 0, src, z, route="A")
        b, _ = guided_component(p0, p0_modes, 0, src, z, route="B")
        assert abs(a - b) <= 1e-6 * abs(b)


def test_projection_removes_single_mode(p0, p0_modes):
    U = 0.3 - 2.0j
    got = modal_projection(p0, p0_modes, 0, lambda x: U * mode_shape(p0, p0_modes, 0, x)[0])
    xs = np.linspace(-5, 5, 11)
    e, _ = mode_shape(p0, p0_modes, 0, xs)
    assert np.max(np.abs(U * e - got * e)) <= 1e-8


def test_no_modes_error(p_free, p_free_modes):
    with pytest.raises(ValueError):
        guided_component(p_free, p_free_modes, 0, SourceSpec.point(), 1.0)


def test_coincident_grid_node(p0, p0_modes):
    with pytest.raises(CoincidentPointError, match=r"\(0, 2\)"):
        synthesize_field(p0, p0_modes, SourceSpec.point(0.0, 2.0), [-0.5, 0.0, 0.5], [2.0, 3.0])


def test_density_source_validation():
    with pytest.raises(ValueError):
        SourceSpec.density(lambda x, z: x, (0.0, np.inf), (0.0, 1.0), 4, 4)
    with pytest.raises(ValueError):
        SourceSpec.point_set([(0.0, np.nan)], [1.0])


def test_routes_agree_on_grid(p0, p0_modes):
    xs, zs = np.array([-2.0, 0.3, 1.5]), np.array([1.0, 4.0])
    a = synthesize_field(p0, p0_modes, SourceSpec.point(), xs, zs, route="real")
    b = synthesize_field(p0, p0_modes, SourceSpec.point(), xs, zs, route="contour")
    assert np.max(np.abs(a.u - b.u)) <= 1e-7 * np.max(np.abs(a.u))
    assert np.max(np.abs(a.u - (a.u_guided.sum(axis=0) + remainder_component(a)))) == 0


def test_pde_residual_step_slab(p0, p0_modes):
    xs = 0.2 + 0.01 * np.arange(21)
    zs = 3.0 + 0.01 * np.arange(21)
    F = synthesize_field(p0, p0_modes, SourceSpec.point(), xs, zs)
    r = pde_residual(p0, F)
    assert r.n_nodes > 0
    assert r.max_residual <= 5e-3 * r.scale


def test_pde_residual_free_space(p_free):
    xs = 2.0 + 0.01 * np.arange(21)
    zs = 1.0 + 0.01 * np.arange(21)
    X, Z = np.meshgrid(xs, zs, indexing="ij")
    u = free_space_green(1.0, X, Z)[0]
    F = FieldGrid(xs, zs, u, np.zeros((0,) + u.shape), u, SourceSpec.point())
    r = pde_residual(p_free, F)
    assert r.max_residual <= 5e-3 * r.scale


def test_pde_residual_zero_field(p0):
    xs = zs = 0.01 * np.arange(11)
    z0 = np.zeros((11, 11), complex)
    r = pde_residual(p0, FieldGrid(xs, zs + 5, z0, np.zeros((1, 11, 11)), z0))
    assert r.max_residual == 0


def test_pde_residual_rejects_coarse_grid(p0):
    xs = np.linspace(0, 1, 11)
    z0 = np.zeros((11, 11), complex)
    with pytest.raises(ValueError):
        pde_residual(p0, FieldGrid(xs, xs, z0, np.zeros((1, 11, 11)), z0))
