import numpy as np
import pytest

from slabgreen import build_contour
from slabgreen.contour import QuadratureError, corner_parameters, deformed_path
from slabgreen.spectral import contour_diagnostics

THETAS = [0.0, np.pi / 8, np.pi / 4, 3 * np.pi / 8, np.pi / 2]


def test_corner_parameters_step_slab(p0, p0_modes):
    kap2 = p0.d2 - p0_modes.gammas[0]
    d1, d2, c = corner_parameters(p0.d2, p0_modes.gammas[0], p0.beta0)
    assert d1 == pytest.approx(np.arccos(2 / np.sqrt(4 + kap2)), abs=1e-14)
    assert d2 == pytest.approx(np.arcsinh(np.sqrt(kap2) / 2), abs=1e-14)
    assert np.cos(d1) * np.cosh(d2) == pytest.approx(1.0, abs=1e-12)
    assert c == pytest.approx(np.sqrt(kap2 / (4 + kap2)) * min(1.0, np.sqrt(kap2) / 2), abs=1e-14)


@pytest.mark.parametrize("theta", THETAS)
def test_contour_geometry(p0, p0_modes, theta):
    path = build_contour(p0, p0_modes, theta)
    for level in (0, 1):
        d = contour_diagnostics(path, level)
        assert d["g3_re_dev"] <= 1e-12
        assert d["g3_im_min"] >= 0
        assert d["other_im_min"] >= d["c"] * (1 - 1e-12)
        assert d["im_sin_max"] <= d["im_sin_bound"] * (1 + 1e-12)


def test_segments_present(p0, p0_modes):
    names = [s.name for s in build_contour(p0, p0_modes, np.pi / 2).segments]
    assert names == ["G1", "G2", "G3-", "G3+", "G4", "G5"]
    g2 = build_contour(p0, p0_modes, np.pi / 2).segments[1]
    t, _ = g2.nodes(3)
    assert np.ptp(t.real) == pytest.approx(np.pi / 2, rel=1e-2)
    assert np.allclose(t.imag, t.imag[0])


def test_no_turning_segment_at_zero_angle(p0, p0_modes):
    names = [s.name for s in build_contour(p0, p0_modes, 0.0).segments]
    assert "G2" not in names


def test_integrates_smooth_function(p0, p0_modes):
    # a path integral of an entire function depends only on the endpoints
    path = build_contour(p0, p0_modes, np.pi / 4)
    t, _ = path.nodes(0)
    val = path.integrate(lambda s: np.cos(s)[None, :] * np.exp(1j * 5 * np.cos(s - np.pi / 4))[None, :])
    assert np.isfinite(val).all()


def test_nonconvergence_raises():
    path = deformed_path(1.25, 0.62, 1.0, 0.3)
    with pytest.raises(QuadratureError):
        path.integrate(lambda t: np.exp(1e4j * t.real)[None, :] * 0 + np.random.default_rng(0).random(t.size), max_level=2)
