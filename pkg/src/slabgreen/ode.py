"""Core solutions of ``v'' + (lambda - q(x)) v = 0`` on ``[-h, h]``.

``phi_s`` starts from ``(1, 0)`` at ``x = 0`` and ``phi_a`` from
``(0, sqrt(lambda))`` (principal branch).  Two independent evaluators are
provided: an adaptive Runge-Kutta integration that is vectorised over many
spectral parameters at once, and a Volterra successive-substitution solver
used as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as L
from scipy.integrate import solve_ivp

from .profile import WaveguideProfile

PARITIES = ("s", "a")

DEFAULT_ABS_TOL = 1e-10
DEFAULT_REL_TOL = 1e-10


class ODEError(RuntimeError):
    """Integration failure; ``x`` records where it happened."""

    def __init__(self, message: str, x: float | None = None):
        super().__init__(message if x is None else f"{message} (at x={x:.17g})")
        self.x = x


@dataclass(frozen=True)
class PhiSolution:
    parity: str
    lam: complex
    x_values: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    #: set for the antisymmetric solution at lambda = 0, which vanishes identically
    degenerate: bool = False
    #: integral of phi^2 from 0 to each x, when requested
    phi2_integral: np.ndarray | None = field(default=None, repr=False)


def initial_data(parity: str, lams):
    lams = np.asarray(lams, dtype=complex)
    if parity == "s":
        return np.ones_like(lams), np.zeros_like(lams)
    if parity == "a":
        return np.zeros_like(lams), np.sqrt(lams)
    raise ValueError(f"parity must be 's' or 'a', got {parity!r}")


def _scalar_q(profile: WaveguideProfile):
    if profile.constant_core:
        value = float(profile.q(0.0))
        return lambda x: value
    return lambda x: float(profile.q(x))


def _integrate_direction(profile, lams, y0, targets, sign, rtol, atol, with_phi2):
    """Integrate from 0 to ``sign * max(targets)``, stopping at table breakpoints."""
    n = lams.size
    qf = _scalar_q(profile)
    width = 3 if with_phi2 else 2

    def rhs(x, y):
        phi = y[:n]
        out = np.empty_like(y)
        out[:n] = y[n : 2 * n]
        out[n : 2 * n] = (qf(x) - lams) * phi
        if with_phi2:
            out[2 * n :] = phi * phi
        return out

    results = np.empty((targets.size, width * n), dtype=complex)
    if targets.size == 0:
        return results
    end = float(sign * targets.max())
    cuts = [0.0]
    cuts += sorted((b for b in profile.breakpoints if 0 < sign * b < sign * end), key=abs)
    cuts.append(end)

    y = y0
    done = 0
    for a, b in zip(cuts[:-1], cuts[1:]):
        m = int(np.count_nonzero(targets[done:] <= abs(b)))
        t_eval = sign * targets[done : done + m]
        if m == 0 or t_eval[-1] != b:
            t_eval = np.append(t_eval, b)
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval)
        if sol.status < 0:
            raise ODEError(f"integration failed: {sol.message}", float(sol.t[-1] if sol.t.size else a))
        results[done : done + m] = sol.y.T[:m]
        done += m
        y = sol.y[:, -1]
    return results


def phi_batch(
    profile: WaveguideProfile,
    parity: str,
    lams,
    x_targets,
    abs_tol: float = DEFAULT_ABS_TOL,
    rel_tol: float = DEFAULT_REL_TOL,
    with_phi2: bool = False,
):
    """Evaluate ``phi_j`` and ``phi_j'`` for many ``lambda`` at once.

    Returns arrays of shape ``(len(lams), len(x_targets))``; with
    ``with_phi2`` a third array holds ``int_0^x phi^2``.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    x = np.atleast_1d(np.asarray(x_targets, dtype=float))
    h = profile.h
    if np.any(np.abs(x) > h * (1 + 1e-14)):
        raise ValueError("x targets must lie in [-h, h]")
    x_all = np.clip(x, -h, h)
    x, inverse = np.unique(x_all, return_inverse=True)
    n = lams.size
    phi0, dphi0 = initial_data(parity, lams)
    y0 = np.concatenate([phi0, dphi0] + ([np.zeros(n, complex)] if with_phi2 else []))
    width = 3 if with_phi2 else 2

    out = np.empty((x.size, width * n), dtype=complex)
    for sign in (1.0, -1.0):
        sel = np.nonzero(sign * x > 0)[0]
        order = sel[np.argsort(sign * x[sel])]
        if order.size:
            out[order] = _integrate_direction(
                profile, lams, y0, sign * x[order], sign, rel_tol, abs_tol, with_phi2
            )
    zero = np.nonzero(x == 0)[0]
    if zero.size:
        out[zero] = y0
    out = out[inverse.ravel()]
    phi = out[:, :n].T
    dphi = out[:, n : 2 * n].T
    if with_phi2:
        return phi, dphi, out[:, 2 * n :].T
    return phi, dphi


def solve_phi(
    profile: WaveguideProfile,
    parity: str,
    lam: complex,
    x_targets,
    abs_tol: float = DEFAULT_ABS_TOL,
    rel_tol: float = DEFAULT_REL_TOL,
) -> PhiSolution:
    """Solve for ``phi_parity(x, lam)`` at the requested points of ``[-h, h]``."""
    if not np.isfinite(lam):
        raise ValueError("lambda must be finite")
    x = np.atleast_1d(np.asarray(x_targets, dtype=float))
    if parity == "a" and lam == 0:
        zeros = np.zeros(x.shape, complex)
        return PhiSolution(parity, complex(lam), x, zeros, zeros.copy(), degenerate=True)
    phi, dphi, i2 = phi_batch(profile, parity, [lam], x, abs_tol, rel_tol, with_phi2=True)
    return PhiSolution(parity, complex(lam), x, phi[0], dphi[0], phi2_integral=i2[0])


# ---------------------------------------------------------------------------
# Volterra oracle


def _partial_integration_matrix(order: int):
    """S[i, j] = integral over [-1, s_i] of the j-th Lagrange basis polynomial."""
    s, w = L.leggauss(order)
    V = L.legvander(s, order - 1)
    coeffs = np.linalg.inv(V)  # column j: Legendre coefficients of l_j
    S = np.empty((order, order))
    for j in range(order):
        S[:, j] = L.legval(s, L.legint(coeffs[:, j], lbnd=-1))
    return s, w, S


_PANEL_ORDER = 16
_S_NODES, _S_WEIGHTS, _S_MATRIX = _partial_integration_matrix(_PANEL_ORDER)


def solve_phi_volterra(
    profile: WaveguideProfile,
    parity: str,
    lam: complex,
    x: float,
    max_iter: int = 500,
    tol: float = 1e-14,
    panels: int | None = None,
):
    """Successive substitution for the integral equation

        phi(x) = phi'(0) sin(tau x)/tau + phi(0) cos(tau x)
                 - (1/tau) int_0^x p(y) sin(tau (x - y)) phi(y) dy,

    with ``tau^2 = lam - d^2``.  Returns ``(phi(x), phi'(x))``.
    """
    h = profile.h
    if abs(x) > h * (1 + 1e-14):
        raise ValueError("x must lie in [-h, h]")
    tau = np.sqrt(complex(lam) - profile.d2)
    if tau == 0:
        raise ValueError("tau = 0: the Volterra kernel is singular")
    phi0, dphi0 = (complex(v[0]) for v in initial_data(parity, [lam]))
    if x == 0:
        return phi0, dphi0

    def free(y):
        return dphi0 * np.sin(tau * y) / tau + phi0 * np.cos(tau * y)

    def dfree(y):
        return dphi0 * np.cos(tau * y) - tau * phi0 * np.sin(tau * y)

    # panel edges from 0 to x, aligned to breakpoints
    cuts = [0.0] + sorted((b for b in profile.breakpoints if 0 < b / x < 1), key=abs) + [float(x)]
    if panels is None:
        panels = max(2, int(np.ceil(abs(tau) * abs(x) / 2.0)))
    edges = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        edges.extend(np.linspace(a, b, panels + 1)[:-1])
    edges.append(float(x))
    edges = np.asarray(edges)

    m = _PANEL_ORDER
    npan = edges.size - 1
    nodes = np.empty(npan * m)
    weights = np.empty(npan * m)
    # cumulative integration matrix: int_0^{y_i} F dy = sum_k C[i, k] F(y_k)
    C = np.zeros((npan * m, npan * m))
    for k in range(npan):
        a, b = edges[k], edges[k + 1]
        half = 0.5 * (b - a)
        sl = slice(k * m, (k + 1) * m)
        nodes[sl] = a + half * (_S_NODES + 1)
        weights[sl] = half * _S_WEIGHTS
        C[sl, : k * m] = weights[: k * m]
        C[sl, sl] = half * _S_MATRIX
    pk = profile.p(nodes)
    K = C * (pk[None, :] * np.sin(tau * (nodes[:, None] - nodes[None, :])) / tau)
    f = free(nodes)

    phi = f.copy()
    for _ in range(max_iter):
        new = f - K @ phi
        delta = np.max(np.abs(new - phi))
        phi = new
        if delta <= tol * max(1.0, np.max(np.abs(phi))):
            break
    else:
        raise ODEError(f"Volterra iteration did not converge in {max_iter} steps", float(x))

    src = weights * pk * phi
    phi_x = free(x) - np.sum(src * np.sin(tau * (x - nodes))) / tau
    dphi_x = dfree(x) - np.sum(src * np.cos(tau * (x - nodes)))
    return complex(phi_x), complex(dphi_x)
