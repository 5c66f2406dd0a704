"""Continuous-spectrum quantities.

Conventions: ``lambda = d^2 + tau^2``; for a point ``x`` the split
``x = [x]_h + {x}_h`` separates the cladding offset from the clamped core
coordinate.  The boundary functions

    Phi_j(x, tau) = phi_j({x}_h) + phi_j'({x}_h) / (i tau)

are evaluated through ``P = i tau phi + phi'`` and ``N = phi' - i tau phi``
(``Phi(x, tau) = P / (i tau)`` and ``Phi(x, -tau) = -N / (i tau)``), which keeps
every ratio finite as ``tau -> 0``.
"""

from __future__ import annotations

import numpy as np

from .contour import ContourPath, deformed_path
from .ode import PARITIES, phi_batch
from .profile import WaveguideProfile


class PoleProximityError(RuntimeError):
    """A contour node came too close to a pole of the spectral weight."""


def bracket_maps(x, h: float):
    """Return ``([x]_h, {x}_h)``."""
    x = np.asarray(x, dtype=float)
    inner = np.clip(x, -h, h)
    outer = x - inner
    if outer.ndim == 0:
        return float(outer), float(inner)
    return outer, inner


def _phi_at(profile, parity, taus, xs, tol):
    lams = profile.d2 + np.asarray(taus, dtype=complex) ** 2
    return phi_batch(profile, parity, lams, xs, **tol)


def v_continuum(profile: WaveguideProfile, parity: str, lam, x, **tol):
    """Generalised eigenfunction ``v_j(x, lam)`` for ``lam > d^2``; shape (n_lam, n_x)."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr <= profile.d2):
        raise ValueError("v_continuum needs lambda > d^2")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    out, inner = bracket_maps(x_arr, profile.h)
    out = np.atleast_1d(out)
    inner = np.atleast_1d(inner)
    phi, dphi = phi_batch(profile, parity, lam_arr, inner, **tol)
    phi, dphi = phi.real, dphi.real
    Q = np.sqrt(lam_arr - profile.d2)[:, None]
    v = phi * np.cos(Q * out) + dphi / Q * np.sin(Q * out)
    if np.ndim(lam) == 0 and np.ndim(x) == 0:
        return float(v[0, 0])
    return v


def sigma_weight(profile: WaveguideProfile, parity: str, lam, **tol):
    """Spectral density ``(lam - d^2) / ((lam - d^2) phi(h)^2 + phi'(h)^2)``."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr <= profile.d2):
        raise ValueError("sigma_weight needs lambda > d^2")
    phi, dphi = phi_batch(profile, parity, lam_arr, [profile.h], **tol)
    a = lam_arr - profile.d2
    den = a * phi[:, 0].real ** 2 + dphi[:, 0].real ** 2
    if np.any(den == 0):
        raise ZeroDivisionError("sigma denominator vanished")
    s = a / den
    return float(s[0]) if np.ndim(lam) == 0 else s


def sigma_from_big_phi(profile: WaveguideProfile, parity: str, tau, **tol):
    """Same density written as ``1 / (Phi(h, tau) Phi(h, -tau))``."""
    return 1.0 / (big_phi(profile, parity, profile.h, tau, **tol) * big_phi(profile, parity, profile.h, -np.asarray(tau), **tol))


def big_phi(profile: WaveguideProfile, parity: str, x, tau, **tol):
    """``Phi_j(x, tau)``; broadcast over ``tau`` (axis 0) and ``x`` (axis 1)."""
    taus = np.atleast_1d(np.asarray(tau, dtype=complex))
    if np.any(taus == 0):
        raise ValueError("Phi_j is undefined at tau = 0")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    _, inner = bracket_maps(xs, profile.h)
    phi, dphi = _phi_at(profile, parity, taus, np.atleast_1d(inner), tol)
    val = phi + dphi / (1j * taus[:, None])
    if np.ndim(tau) == 0 and np.ndim(x) == 0:
        return complex(val[0, 0])
    if np.ndim(x) == 0:
        return val[:, 0]
    return val


def phi_asymptotic(profile: WaveguideProfile, parity: str, x, tau):
    """Leading large-``|tau|`` form ``[1 + i/(2 tau) int_0^{x} p] e^{i tau x}`` at ``x = {x}_h``.

    For the antisymmetric parity the bracket is multiplied by
    ``sqrt(tau^2 + d^2) / (i tau)``.
    """
    _, inner = bracket_maps(x, profile.h)
    tau = np.asarray(tau, dtype=complex)
    integral = profile.p_integral(0.0, float(inner))
    val = (1.0 + 1j * integral / (2.0 * tau)) * np.exp(1j * tau * inner)
    if parity == "a":
        val = val * np.sqrt(tau**2 + profile.d2) / (1j * tau)
    return val


class KernelEvaluator:
    """Evaluate the contour kernel ``g(x, xi; t)`` for arrays of ``tau = beta0 sin t``.

    One ODE solve per parity serves every requested position, so the cost is
    dominated by the number of distinct ``tau`` values.
    """

    def __init__(self, profile: WaveguideProfile, pole_threshold: float = 1e-9, **tol):
        self.profile = profile
        self.pole_threshold = pole_threshold
        self.tol = tol

    def boundary_data(self, taus, xs):
        """Per parity: ``(P, N, dP)`` at each position in ``xs`` and at ``+h``.

        Arrays have shape ``(n_tau, len(xs) + 1)``; the last column is ``x = h``.
        """
        prof = self.profile
        taus = np.asarray(taus, dtype=complex)
        _, inner = bracket_maps(np.asarray(xs, dtype=float), prof.h)
        pos = np.append(np.atleast_1d(inner), prof.h)
        lams = prof.d2 + taus**2
        qpos = prof.q(pos)
        data = {}
        for parity in PARITIES:
            phi, dphi = phi_batch(prof, parity, lams, pos, **self.tol)
            it = 1j * taus[:, None]
            P = it * phi + dphi
            N = dphi - it * phi
            # d/dx of P:  i tau phi' + phi'' with phi'' = (q - lambda) phi
            dP = it * dphi + (qpos[None, :] - lams[:, None]) * phi
            data[parity] = (P, N, dP)
        return data

    def g(self, taus, x: float, xis, weights=None, derivative: bool = False):
        """Kernel summed over source points ``xis`` with ``weights``.

        With ``derivative`` also return ``d g / d x`` (zero outside the core).
        """
        prof = self.profile
        taus = np.asarray(taus, dtype=complex)
        xis = np.atleast_1d(np.asarray(xis, dtype=float))
        w = np.ones(xis.size) if weights is None else np.asarray(weights)
        data = self.boundary_data(taus, np.append(x, xis))
        outer_xi, _ = bracket_maps(xis, prof.h)
        outer_xi = np.atleast_1d(outer_xi)
        phase = np.exp(1j * taus[:, None] * outer_xi[None, :])
        inside = abs(x) < prof.h
        g = np.zeros(taus.shape, dtype=complex)
        dg = np.zeros(taus.shape, dtype=complex)
        for parity in PARITIES:
            P, N, dP = data[parity]
            den = P[:, -1] * N[:, -1]
            scale = np.abs(P[:, -1]) * np.abs(N[:, -1]) + np.abs(taus) ** 2
            if np.any(np.abs(den) < self.pole_threshold * np.maximum(scale, 1e-300)):
                k = int(np.argmin(np.abs(den) / scale))
                raise PoleProximityError(f"tau={taus[k]:.6g} is too close to a pole (parity {parity})")
            src = (N[:, 1:-1] / phase - P[:, 1:-1] * phase) @ w
            g += P[:, 0] * src / den
            if derivative and inside:
                dg += dP[:, 0] * src / den
        g /= 8j * np.pi
        dg /= 8j * np.pi
        if derivative:
            return g, dg
        return g


def g_kernel(profile: WaveguideProfile, x: float, xi: float, t, **tol):
    """``g(x, xi; t)`` at contour parameters ``t`` (``tau = beta0 sin t``)."""
    t = np.asarray(t, dtype=complex)
    taus = profile.beta0 * np.sin(np.atleast_1d(t))
    val = KernelEvaluator(profile, **tol).g(taus, x, [xi])
    return complex(val[0]) if t.ndim == 0 else val


def g_asymptotic(profile: WaveguideProfile, x: float, xi: float, t):
    """Large-``|sin t|`` form of the kernel for a source inside the core."""
    t = np.asarray(t, dtype=complex)
    b0 = profile.beta0
    _, xin = bracket_maps(x, profile.h)
    s = np.sin(t)
    integral = profile.p_integral(xi, xin)
    return np.exp(1j * b0 * (xin - xi) * s) * (1 + 1j * integral / (2 * b0 * s)) / (4j * np.pi)


def kernel_coefficients(profile: WaveguideProfile, x: float, xi: float, t, **tol):
    """Per-parity ``(A_plus, A_minus)`` with ``g = sum_j A+ e^{i tau [xi]_h} + A- e^{-i tau [xi]_h}``."""
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    taus = profile.beta0 * np.sin(t)
    data = KernelEvaluator(profile, **tol).boundary_data(taus, [x, xi])
    out = {}
    for parity, (P, N, _) in data.items():
        den = 8j * np.pi * P[:, 2] * N[:, 2]
        out[parity] = (-P[:, 0] * P[:, 1] / den, P[:, 0] * N[:, 1] / den)
    return out


def build_contour(
    profile: WaveguideProfile,
    modes,
    theta: float,
    truncation_eps: float = 1e-16,
    R_min: float = 1.0,
) -> ContourPath:
    """Deformed path ``C_theta`` for this waveguide (``gamma_max`` from ``modes``)."""
    gamma_max = modes.gamma_star if modes is not None else None
    return deformed_path(profile.d2, gamma_max, profile.beta0, theta, R_min, truncation_eps)


def contour_diagnostics(path: ContourPath, level: int = 0) -> dict:
    """Geometric quantities checked at every node of a deformed path.

    ``g3_re_dev``: max ``|Re cos(t - theta) - 1|`` on the steepest-descent piece;
    ``g3_im_min``: min ``Im cos(t - theta)`` there; ``other_im_min``: min over the
    remaining pieces; ``im_sin_max``: max ``|Im sin t|`` with its bound.
    """
    theta = path.theta
    nodes = path.segment_nodes(level)
    g3 = np.concatenate([t for name, (t, _) in nodes.items() if name.startswith("G3")])
    rest = [t for name, (t, _) in nodes.items() if not name.startswith("G3")]
    rest = np.concatenate(rest) if rest else np.zeros(0, complex)
    allt = np.concatenate([g3, rest])
    return {
        "g3_re_dev": float(np.max(np.abs(np.cos(g3 - theta).real - 1))),
        "g3_im_min": float(np.min(np.cos(g3 - theta).imag)),
        "other_im_min": float(np.min(np.cos(rest - theta).imag)) if rest.size else float("inf"),
        "c": path.c_bound,
        "im_sin_max": float(np.max(np.abs(np.sin(allt).imag))),
        "im_sin_bound": float(max(1.0, np.sinh(path.delta2))),
        "corner_identity": float(np.cos(path.delta1) * np.cosh(path.delta2)),
    }
