"""Guided modes: eigenvalues in (0, d^2), propagation constants, mode shapes."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .ode import PARITIES, phi_batch
from .profile import WaveguideProfile

log = logging.getLogger(__name__)

#: roots closer than this to 0 or d^2 are treated as cutoff-degenerate
ENDPOINT_GUARD = 1e-10


@dataclass(frozen=True)
class ModeTable:
    """Guided eigenvalues sorted increasingly, with per-mode data.

    ``norms`` holds the normalisation constants ``r = 1 / int v^2 dx``.
    """

    gammas: np.ndarray
    parities: tuple
    betas: np.ndarray
    norms: np.ndarray
    #: boundary data of the unnormalised core solution at x = h
    phi_h: np.ndarray = field(repr=False)
    dphi_h: np.ndarray = field(repr=False)
    #: the same quantity as ``norms`` computed by direct quadrature
    norms_quadrature: np.ndarray = field(repr=False)
    d2: float = 0.0

    @property
    def M(self) -> int:
        return int(self.gammas.size)

    @property
    def M_s(self) -> int:
        return sum(p == "s" for p in self.parities)

    @property
    def M_a(self) -> int:
        return sum(p == "a" for p in self.parities)

    @property
    def gamma_star(self) -> float | None:
        return float(self.gammas.max()) if self.M else None

    @property
    def kappas(self) -> np.ndarray:
        """Exponential decay rates sqrt(d^2 - gamma) of the mode tails."""
        return np.sqrt(self.d2 - self.gammas)

    def to_dict(self) -> dict:
        return {
            "gammas": [float(g) for g in self.gammas],
            "parities": list(self.parities),
            "betas": [float(b) for b in self.betas],
            "norms": [float(r) for r in self.norms],
            "M": self.M,
        }


def dispersion_value(profile: WaveguideProfile, parity: str, lam, **tol):
    """``sqrt(d^2 - lam) phi_j(h, lam) + phi_j'(h, lam)`` for ``0 < lam < d^2``."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr <= 0) or np.any(lam_arr >= profile.d2):
        raise ValueError("lambda must lie in (0, d^2)")
    phi, dphi = phi_batch(profile, parity, lam_arr, [profile.h], **tol)
    F = np.sqrt(profile.d2 - lam_arr) * phi[:, 0].real + dphi[:, 0].real
    return float(F[0]) if np.ndim(lam) == 0 else F


def _sign_brackets(profile, parity, grid, **tol):
    F = dispersion_value(profile, parity, grid, **tol)
    idx = np.nonzero(np.sign(F[:-1]) * np.sign(F[1:]) < 0)[0]
    exact = [float(grid[i]) for i in np.nonzero(F == 0)[0]]
    return [(float(grid[i]), float(grid[i + 1])) for i in idx], exact


def find_guided_modes(
    profile: WaveguideProfile,
    scan_points: int = 512,
    root_tol: float = 1e-14,
    abs_tol: float = 1e-12,
    rel_tol: float = 1e-12,
) -> ModeTable:
    """Bracket sign changes of the dispersion functions and bisect each root."""
    if scan_points < 64:
        raise ValueError("scan_points must be at least 64")
    tol = {"abs_tol": abs_tol, "rel_tol": rel_tol}
    d2 = profile.d2
    found = []
    if d2 > 0:
        if not profile.is_even:
            raise ValueError("guided-mode search needs an even core profile")
        eps = ENDPOINT_GUARD * max(d2, 1.0)
        for parity in PARITIES:
            grid = np.linspace(eps, d2 - eps, scan_points)
            brackets, exact = _sign_brackets(profile, parity, grid, **tol)
            # refinement pass: a denser scan must not reveal extra roots
            dense = np.linspace(eps, d2 - eps, 4 * scan_points)
            dense_brackets, dense_exact = _sign_brackets(profile, parity, dense, **tol)
            if len(dense_brackets) + len(dense_exact) != len(brackets) + len(exact):
                log.warning("parity %s: refinement found extra roots; using denser scan", parity)
                brackets, exact = dense_brackets, dense_exact

            def F(lam, parity=parity):
                return dispersion_value(profile, parity, lam, **tol)

            roots = exact + [bisect(F, a, b, xtol=root_tol, rtol=4 * np.finfo(float).eps) for a, b in brackets]
            for g in roots:
                if g < eps or g > d2 - eps:
                    log.warning("rejecting cutoff-degenerate root %.17g", g)
                    continue
                found.append((g, parity))
    found.sort()
    gammas = np.array([g for g, _ in found], dtype=float)
    parities = tuple(p for _, p in found)
    betas = np.sqrt(profile.k**2 * profile.n_star**2 - gammas)

    phi_h = np.empty(gammas.size)
    dphi_h = np.empty(gammas.size)
    norms = np.empty(gammas.size)
    norms_quad = np.empty(gammas.size)
    for i, (g, parity) in enumerate(found):
        phi, dphi, i2 = phi_batch(profile, parity, [g], [-profile.h, profile.h], with_phi2=True, **tol)
        phi_h[i], dphi_h[i] = phi[0, 1].real, dphi[0, 1].real
        kappa = np.sqrt(d2 - g)
        core = (i2[0, 1] - i2[0, 0]).real
        norms[i] = kappa / (kappa * core + phi_h[i] ** 2)
        norms_quad[i] = 1.0 / brute_force_norm2(profile, parity, g, phi[0, 0].real, phi_h[i], **tol)

    return ModeTable(gammas, parities, betas, norms, phi_h, dphi_h, norms_quad, d2)


def brute_force_norm2(profile, parity, gamma, phi_minus_h, phi_plus_h, n=64, **tol) -> float:
    """``int v^2 dx``: Gauss-Legendre over the core plus exact exponential tails."""
    cuts = [-profile.h, *[b for b in profile.breakpoints], profile.h]
    s, w = np.polynomial.legendre.leggauss(n)
    core = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        xs = 0.5 * (b - a) * s + 0.5 * (a + b)
        phi, _ = phi_batch(profile, parity, [gamma], xs, **tol)
        core += 0.5 * (b - a) * float(np.dot(w, phi[0].real ** 2))
    kappa = np.sqrt(profile.d2 - gamma)
    return core + (phi_minus_h**2 + phi_plus_h**2) / (2.0 * kappa)


def mode_shape(profile: WaveguideProfile, modes: ModeTable, index: int, x, **tol):
    """Normalised mode ``e(x, gamma_index)`` and its derivative, anywhere on the line.

    ``index`` is zero-based.  Symmetric modes have ``e(0) > 0`` and
    antisymmetric modes ``e'(0) > 0``.
    """
    if not 0 <= index < modes.M:
        raise IndexError(f"mode index {index} out of range (M={modes.M})")
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    h = profile.h
    g = modes.gammas[index]
    parity = modes.parities[index]
    scale = np.sqrt(modes.norms[index])
    kappa = np.sqrt(profile.d2 - g)

    e = np.empty(flat.shape)
    de = np.empty(flat.shape)
    core = np.abs(flat) <= h
    if np.any(core):
        phi, dphi = phi_batch(profile, parity, [g], flat[core], **tol)
        e[core] = phi[0].real
        de[core] = dphi[0].real
    sgn = 1.0 if parity == "s" else -1.0
    right = flat > h
    left = flat < -h
    decay_r = np.exp(-kappa * (flat[right] - h))
    e[right] = modes.phi_h[index] * decay_r
    de[right] = -kappa * e[right]
    decay_l = np.exp(kappa * (flat[left] + h))
    e[left] = sgn * modes.phi_h[index] * decay_l
    de[left] = kappa * e[left]
    e *= scale
    de *= scale
    if x.ndim == 0:
        return float(e[0]), float(de[0])
    return e.reshape(x.shape), de.reshape(x.shape)
