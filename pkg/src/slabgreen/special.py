"""Outgoing Hankel functions of order 0 and 1 for the free-space reference.

Power series up to ``SERIES_LIMIT``; the large-argument Hankel expansion,
summed to its smallest term, beyond.
"""

from __future__ import annotations

import math

import numpy as np

SERIES_LIMIT = 12.0
_EULER_GAMMA = 0.57721566490153286061


def _series(rho: float):
    """``(J0, Y0, J1, Y1)`` from the ascending series."""
    x2 = 0.25 * rho * rho
    half = 0.5 * rho
    log_term = math.log(half) + _EULER_GAMMA

    j0_terms, y0_terms, j1_terms, y1_terms = [], [], [], []
    term0 = 1.0  # (x^2/4)^k / (k!)^2 with sign
    term1 = half  # (x/2)^(2k+1) / (k!(k+1)!) with sign
    harmonic = 0.0  # H_k
    k = 0
    while True:
        j0_terms.append(term0)
        if k:
            y0_terms.append(-term0 * harmonic)
        j1_terms.append(term1)
        # psi(k+1) + psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma
        y1_terms.append(term1 * (2 * harmonic + 1.0 / (k + 1) - 2 * _EULER_GAMMA))
        k += 1
        harmonic += 1.0 / k
        term0 *= -x2 / (k * k)
        term1 *= -x2 / (k * (k + 1))
        if k > 5 and abs(term0) < 1e-18 and abs(term1) < 1e-18:
            break
    j0 = math.fsum(j0_terms)
    j1 = math.fsum(j1_terms)
    y0 = (2 / math.pi) * (log_term * j0 + math.fsum(y0_terms))
    y1 = (2 / math.pi) * math.log(half) * j1 - 2 / (math.pi * rho) - math.fsum(y1_terms) / math.pi
    return j0, y0, j1, y1


def _asymptotic(rho: float, order: int) -> complex:
    mu = 4.0 * order * order
    total = 1.0 + 0j
    term = 1.0 + 0j
    k = 1
    while k < 200:
        new = term * 1j * (mu - (2 * k - 1) ** 2) / (k * 8.0 * rho)
        if abs(new) >= abs(term):
            break
        term = new
        total += term
        if abs(term) < 1e-17:
            break
        k += 1
    phase = rho - order * math.pi / 2 - math.pi / 4
    return math.sqrt(2 / (math.pi * rho)) * complex(math.cos(phase), math.sin(phase)) * total


def _check(rho):
    rho = float(rho)
    if not rho > 0 or not math.isfinite(rho):
        raise ValueError(f"rho must be positive and finite, got {rho!r}")
    return rho


def hankel_h0(rho) -> complex:
    """``H_0^(1)(rho) = J_0 + i Y_0``; vectorises over array input."""
    if np.ndim(rho):
        return np.vectorize(hankel_h0, otypes=[complex])(rho)
    rho = _check(rho)
    if rho <= SERIES_LIMIT:
        j0, y0, _, _ = _series(rho)
        return complex(j0, y0)
    return _asymptotic(rho, 0)


def hankel_h1(rho) -> complex:
    """``H_1^(1)(rho) = J_1 + i Y_1``; note ``d/drho H_0 = -H_1``."""
    if np.ndim(rho):
        return np.vectorize(hankel_h1, otypes=[complex])(rho)
    rho = _check(rho)
    if rho <= SERIES_LIMIT:
        _, _, j1, y1 = _series(rho)
        return complex(j1, y1)
    return _asymptotic(rho, 1)


def free_space_green(k: float, x, z, xi: float = 0.0, zeta: float = 0.0):
    """Outgoing free-space Green's function ``H_0(k rho) / (4i)`` and its gradient."""
    dx = np.asarray(x, dtype=float) - xi
    dz = np.asarray(z, dtype=float) - zeta
    rho = np.hypot(dx, dz)
    g = hankel_h0(k * rho) / 4j
    dg = -k * hankel_h1(k * rho) / 4j
    return g, dg * dx / rho, dg * dz / rho
