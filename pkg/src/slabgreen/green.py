"""Green's function of the open slab: guided part plus two routes to the radiating part.

* real route: the continuous-spectrum integral over real ``tau``; the
  propagating range is mapped by ``tau = beta0 sin t`` and the evanescent
  range by ``t = pi/2 - i s``, which removes the inverse square-root endpoint
  singularity and makes ``exp(i |Z| sqrt(beta0^2 - tau^2))`` decay.
* contour route: the kernel ``g`` integrated along the deformed path
  ``C_theta`` chosen from the observation angle.

Source points sharing one ``zeta`` may be passed together (``xi`` array with
``weights``); the kernel is linear in the source so they share a contour.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contour import ContourPath, Segment, deformed_path
from .modes import ModeTable, mode_shape
from .ode import PARITIES, phi_batch
from .profile import WaveguideProfile
from .spectral import KernelEvaluator, bracket_maps

#: exp(-TAIL_LOG) bounds the discarded evanescent tail
TAIL_LOG = 36.0
#: source/observation separation (in units of 1/k) below which evaluation is refused
COINCIDENCE_RADIUS = 1e-3

QUAD_RTOL = 1e-11
QUAD_ATOL = 1e-14
ODE_TOL = {"abs_tol": 1e-12, "rel_tol": 1e-12}


class CoincidentPointError(ValueError):
    """Observation point (numerically) on top of a source point."""


@dataclass
class GreenParts:
    guided: list
    radiative: complex
    grad_guided: list = field(default_factory=list)
    grad_radiative: np.ndarray | None = None

    @property
    def total(self) -> complex:
        return complex(sum(self.guided) + self.radiative)

    @property
    def grad(self) -> np.ndarray | None:
        if self.grad_radiative is None:
            return None
        return self.grad_radiative + sum(self.grad_guided, np.zeros(2, complex))


def _sources(xi, weights):
    xis = np.atleast_1d(np.asarray(xi, dtype=float))
    w = np.ones(xis.size) if weights is None else np.atleast_1d(np.asarray(weights, dtype=complex))
    if w.shape != xis.shape:
        raise ValueError("weights must match xi")
    return xis, w


def _check_separation(profile, x, z, xis, zeta):
    dist = np.min(np.hypot(np.asarray(x, float)[..., None] - xis, z - zeta))
    if dist < COINCIDENCE_RADIUS / profile.k:
        raise CoincidentPointError(f"observation point ({x}, {z}) coincides with a source point")


def green_guided(profile: WaveguideProfile, modes: ModeTable, x, z, xi, zeta, weights=None, grad=False):
    """Per-mode guided contributions ``exp(i beta |Z|)/(2i beta) e(x) e(xi)``.

    With ``grad`` return ``(values, gradients)`` where each gradient is ``(d/dx, d/dz)``.
    """
    xis, w = _sources(xi, weights)
    Z = float(z) - float(zeta)
    sgn = float(np.sign(Z))
    vals, grads = [], []
    for l in range(modes.M):
        beta = modes.betas[l]
        ex, dex = mode_shape(profile, modes, l, float(x))
        exi, _ = mode_shape(profile, modes, l, xis)
        amp = np.dot(w, exi) * np.exp(1j * beta * abs(Z)) / (2j * beta)
        vals.append(complex(amp * ex))
        grads.append(np.array([amp * dex, 1j * beta * sgn * amp * ex], dtype=complex))
    return (vals, grads) if grad else vals


def _real_path(beta0, aZ, width):
    """Propagating segment ``t in [0, pi/2]`` followed by the evanescent ray ``t = pi/2 - i s``."""
    s_max = float(np.arcsinh(TAIL_LOG / (beta0 * aZ)))
    phase_prop = beta0 * (aZ + width)
    phase_evan = beta0 * np.sinh(s_max) * width + TAIL_LOG
    segs = (
        Segment("prop", 0.0, np.pi / 2, lambda u: u + 0j, lambda u: np.ones_like(u, dtype=complex),
                max(2, int(np.ceil(phase_prop / 10.0)))),
        Segment("evan", 0.0, s_max, lambda s: np.pi / 2 - 1j * s, lambda s: np.full(s.shape, -1j),
                max(2, int(np.ceil(phase_evan / 10.0)))),
    )
    return ContourPath(segs, 0.0, 0.0, 0.0, s_max, 0.0)


def green_rad_real(
    profile: WaveguideProfile,
    modes: ModeTable | None,
    x,
    z: float,
    xi,
    zeta: float,
    weights=None,
    grad: bool = False,
    rtol: float = QUAD_RTOL,
    atol: float = QUAD_ATOL,
):
    """Radiating part from the real-axis spectral integral.

    ``x`` may be an array of observation abscissae sharing the same ``z``.
    Returns the value (array if ``x`` is one), or ``(value, d/dx, d/dz)``
    with ``grad``.  ``modes`` is accepted for signature symmetry only.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    xis, w = _sources(xi, weights)
    Z = float(z) - float(zeta)
    b0 = profile.beta0
    if abs(Z) < 0.1 / b0:
        raise ValueError("the real-axis route needs |z - zeta| >= 0.1/beta0")
    _check_separation(profile, xs, float(z), xis, float(zeta))
    h = profile.h
    X, xin = (np.atleast_1d(a) for a in bracket_maps(xs, h))
    Xi, xiin = (np.atleast_1d(a) for a in bracket_maps(xis, h))
    width = float(np.max(np.abs(X)) + np.max(np.abs(Xi)) + 2 * h * profile.n_star / profile.n_cl)
    path = _real_path(b0, abs(Z), width)
    pos = np.concatenate([xin, xiin, [h]])
    nx = xs.size
    sgn = np.sign(Z)

    def integrand(t):
        tau = (b0 * np.sin(t)).real
        lams = profile.d2 + tau**2
        Q = tau[:, None]
        S = np.zeros((tau.size, nx))
        dS = np.zeros((tau.size, nx))
        for parity in PARITIES:
            phi, dphi = phi_batch(profile, parity, lams, pos, **ODE_TOL)
            phi, dphi = phi.real, dphi.real
            ph, dph = phi[:, -1], dphi[:, -1]
            sigma = tau**2 / (tau**2 * ph**2 + dph**2)
            cx, sx = np.cos(Q * X), np.sin(Q * X)
            vx = phi[:, :nx] * cx + dphi[:, :nx] * sx / Q
            dvx = -Q * phi[:, :nx] * sx + dphi[:, :nx] * cx
            pxi = phi[:, nx:-1]
            vxi = pxi * np.cos(Q * Xi) + dphi[:, nx:-1] * np.sin(Q * Xi) / Q
            src = sigma * (vxi @ w)
            S = S + src[:, None] * vx
            dS = dS + src[:, None] * dvx
        ez = np.exp(1j * b0 * abs(Z) * np.cos(t))[:, None]
        out = [S * ez]
        if grad:
            out += [dS * ez, S * ez * (1j * b0 * sgn * np.cos(t))[:, None]]
        return np.concatenate(out, axis=1).T

    res = path.integrate(integrand, rtol=rtol, atol=atol) / (2j * np.pi)
    val = res[:nx]
    if grad:
        dx, dz = res[nx : 2 * nx], res[2 * nx :]
        if np.ndim(x) == 0:
            return complex(val[0]), complex(dx[0]), complex(dz[0])
        return val, dx, dz
    return complex(val[0]) if np.ndim(x) == 0 else val


def observation_angle(profile: WaveguideProfile, x: float, z: float, zeta: float):
    """``(theta, R, side)`` with ``[x]_h = side R sin theta`` and ``|z - zeta| = R cos theta``."""
    X, _ = bracket_maps(float(x), profile.h)
    Z = abs(float(z) - float(zeta))
    side = -1.0 if X < 0 else 1.0
    return float(np.arctan2(abs(X), Z)), float(np.hypot(X, Z)), side


def green_rad_contour(
    profile: WaveguideProfile,
    modes: ModeTable,
    x: float,
    z: float,
    xi,
    zeta: float,
    weights=None,
    grad: bool = True,
    rtol: float = QUAD_RTOL,
    atol: float = QUAD_ATOL,
    kernel: KernelEvaluator | None = None,
    theta_hint: float | None = None,
):
    """Radiating part by integrating ``g`` along ``C_theta``.

    Returns ``(value, gradient)`` (gradient ``None`` unless ``grad``).  Points
    with ``x < -h`` use the reflection ``t -> -t``.  Inside the core the
    x-derivative differentiates the kernel itself.
    """
    x, z, zeta = float(x), float(z), float(zeta)
    xis, w = _sources(xi, weights)
    if z == zeta:
        raise ValueError("the contour representation needs z != zeta")
    _check_separation(profile, np.array(x), z, xis, zeta)
    theta, R, side = observation_angle(profile, x, z, zeta)
    if theta_hint is not None:
        theta = float(np.clip(theta_hint, 0.0, np.pi / 2))
    gamma_max = modes.gamma_star if modes is not None else None
    path = deformed_path(profile.d2, gamma_max, profile.beta0, min(theta, np.pi / 2), R_min=R)
    kernel = kernel or KernelEvaluator(profile, **ODE_TOL)
    b0 = profile.beta0
    X, _ = bracket_maps(x, profile.h)
    aX, aZ = abs(X), abs(z - zeta)
    sgn_z = np.sign(z - zeta)
    inside = abs(x) < profile.h

    def integrand(t):
        st = np.sin(t)
        taus = side * b0 * st
        E = np.exp(1j * b0 * (aX * st + aZ * np.cos(t)))
        if not grad:
            return (kernel.g(taus, x, xis, w) * E)[None, :]
        g, dg = kernel.g(taus, x, xis, w, derivative=True)
        gx = dg * E if inside else 1j * b0 * side * st * g * E
        return np.stack([g * E, gx, 1j * b0 * sgn_z * np.cos(t) * g * E])

    res = path.integrate(integrand, rtol=rtol, atol=atol)
    if grad:
        return complex(res[0]), np.array(res[1:], dtype=complex)
    return complex(res[0]), None


def green(
    profile: WaveguideProfile,
    modes: ModeTable,
    x: float,
    z: float,
    xi,
    zeta: float,
    weights=None,
    route: str = "contour",
    grad: bool = False,
) -> GreenParts:
    """Full Green's function (or its action on point sources sharing ``zeta``)."""
    guided, gguided = green_guided(profile, modes, x, z, xi, zeta, weights, grad=True)
    if route == "contour":
        rad, grad_rad = green_rad_contour(profile, modes, x, z, xi, zeta, weights, grad=grad)
    elif route == "real":
        if grad:
            v, dx, dz = green_rad_real(profile, modes, x, z, xi, zeta, weights, grad=True)
            rad, grad_rad = v, np.array([dx, dz])
        else:
            rad, grad_rad = green_rad_real(profile, modes, x, z, xi, zeta, weights), None
    else:
        raise ValueError(f"unknown route {route!r}")
    return GreenParts(guided, rad, gguided if grad else [], grad_rad)
