"""Integration paths in the complex ``t`` plane and panel quadrature along them.

The deformed path ``C_theta`` is made of five pieces joined at the corners
``-delta1 + i delta2``, ``theta - delta1 + i delta2``, ``theta + delta1 - i delta2``
and ``pi - delta1 - i delta2``:

* ``G1``: ``t = -arccos(sech s) + i s`` for ``s`` from the cut-off down to ``delta2``
  (``cos t = 1 + i tanh s sinh s``),
* ``G2``: horizontal, ``Im t = delta2``,
* ``G3``: ``cos(t - theta) = 1 + i y^2`` (steepest descent through ``t = theta``),
* ``G4``: horizontal, ``Im t = -delta2``,
* ``G5``: ``t = pi - arccos(sech s) - i s`` for ``s`` from ``delta2`` to the cut-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

PANEL_ORDER = 16
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(PANEL_ORDER)

#: phase budget (radians) allowed on a tail segment before it is cut short
MAX_TAIL_PHASE = 600.0


class QuadratureError(RuntimeError):
    """Panel doubling did not converge."""


@dataclass(frozen=True)
class Segment:
    """A smooth piece ``t(u)`` for ``u`` in ``[a, b]``."""

    name: str
    a: float
    b: float
    t_of: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    dt_of: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    panels: int = 1

    def nodes(self, level: int = 0):
        """Gauss-Legendre nodes ``t`` and complex weights ``w dt/du``."""
        n = self.panels * 2**level
        edges = np.linspace(self.a, self.b, n + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        u = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
        return self.t_of(u), w * self.dt_of(u)


@dataclass(frozen=True)
class ContourPath:
    segments: tuple
    theta: float
    delta1: float
    delta2: float
    #: largest |Im t| kept on the tail segments
    truncation: float
    c_bound: float

    def nodes(self, level: int = 0):
        ts, ws = zip(*(seg.nodes(level) for seg in self.segments))
        return np.concatenate(ts), np.concatenate(ws)

    def segment_nodes(self, level: int = 0):
        return {seg.name: seg.nodes(level) for seg in self.segments}

    def integrate(self, integrand, rtol: float = 1e-10, atol: float = 1e-13, max_level: int = 8):
        """Integrate ``integrand(t) -> array (..., n_nodes)`` with panel doubling.

        Stops when two successive levels differ by at most ``atol + rtol*|I|``
        in every component.
        """
        prev = None
        for level in range(max_level + 1):
            t, w = self.nodes(level)
            vals = np.asarray(integrand(t))
            cur = vals @ w
            if prev is not None:
                diff = np.abs(cur - prev)
                if np.all(diff <= atol + rtol * np.abs(cur)):
                    return cur
            prev = cur
        raise QuadratureError(f"contour quadrature not converged after {max_level} doublings")


def corner_parameters(d2: float, gamma_max: float | None, beta0: float):
    """Return ``(delta1, delta2, c)`` for the deformed path.

    Without guided modes ``gamma_max`` is taken as 0; for ``d2 == 0`` the
    corner defaults to ``sinh(delta2) = 1``.
    """
    gm = 0.0 if gamma_max is None else float(gamma_max)
    gap = d2 - gm
    if gap < 0:
        raise ValueError("d^2 must exceed the largest guided eigenvalue")
    if gap == 0:
        delta2 = float(np.arcsinh(1.0))
        delta1 = float(np.arccos(1.0 / np.cosh(delta2)))
    else:
        delta1 = float(np.arccos(2 * beta0 / np.sqrt(4 * beta0**2 + gap)))
        delta2 = float(np.arcsinh(np.sqrt(gap) / (2 * beta0)))
    c = float(np.tanh(delta2) * min(1.0, np.sinh(delta2)))
    return delta1, delta2, c


def im_cos_tail(s, theta):
    """``Im cos(t - theta)`` on the tail segments as a function of ``s``."""
    return np.cos(theta) * np.tanh(s) * np.sinh(s) + np.sin(theta) * np.tanh(s)


def _tail_cutoff(beta0, R, theta, delta2, eps):
    """Smallest ``s`` beyond which the damping (with a cosh s growth allowance) is below eps."""
    L = -np.log(eps)

    def excess(s):
        return beta0 * R * im_cos_tail(s, theta) - np.log(np.cosh(s)) - L

    # oscillation budget caps the tail when theta is close to pi/2
    s_cap = float(np.arcsinh(max(MAX_TAIL_PHASE / max(beta0 * R, 1e-12), 1.0)))
    s_cap = max(s_cap, delta2 + 1.0)
    if excess(delta2) >= 0:
        return delta2
    if excess(s_cap) < 0:
        return s_cap
    lo, hi = delta2, s_cap
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) >= 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-12:
            break
    return hi


def deformed_path(
    d2: float,
    gamma_max: float | None,
    beta0: float,
    theta: float,
    R_min: float = 1.0,
    truncation_eps: float = 1e-16,
) -> ContourPath:
    """Deformed path ``C_theta`` cut off for observation radii ``R >= R_min``."""
    if not 0.0 <= theta <= np.pi / 2:
        raise ValueError("theta must lie in [0, pi/2]")
    if R_min <= 0:
        raise ValueError("R_min must be positive")
    delta1, delta2, c = corner_parameters(d2, gamma_max, beta0)
    s_max = _tail_cutoff(beta0, R_min, theta, delta2, truncation_eps)
    bR = beta0 * R_min
    segs = []

    def tail_panels(length):
        phase = bR * (np.sinh(s_max) - np.sinh(delta2)) * (np.sin(theta) + np.cos(theta))
        return max(2, int(np.ceil(length / 0.5)), int(np.ceil(phase / 12.0)))

    if s_max > delta2:
        segs.append(
            Segment(
                "G1",
                s_max,
                delta2,
                lambda s: -np.arccos(1.0 / np.cosh(s)) + 1j * s,
                lambda s: -1.0 / np.cosh(s) + 1j,
                tail_panels(s_max - delta2),
            )
        )
    if theta > 0:
        segs.append(
            Segment(
                "G2",
                -delta1,
                -delta1 + theta,
                lambda u: u + 1j * delta2,
                lambda u: np.ones_like(u, dtype=complex),
                max(1, int(np.ceil(bR * np.cosh(delta2) * theta / 12.0))),
            )
        )
    y0 = float(np.sqrt(np.sin(delta1) * np.sinh(delta2)))
    half_panels = max(1, int(np.ceil(y0 * np.sqrt(bR) / 2.0)))

    def w_of(y):
        y = np.asarray(y, dtype=float)
        return np.sign(y) * np.arccos(1 + 1j * y**2)

    def dw_of(y):
        return -2j / np.sqrt(np.asarray(y, dtype=float) ** 2 - 2j)

    segs.append(Segment("G3-", -y0, 0.0, lambda y: theta + w_of(y), dw_of, half_panels))
    segs.append(Segment("G3+", 0.0, y0, lambda y: theta + w_of(y), dw_of, half_panels))
    length4 = np.pi - 2 * delta1 - theta
    if length4 > 0:
        segs.append(
            Segment(
                "G4",
                theta + delta1,
                np.pi - delta1,
                lambda u: u - 1j * delta2,
                lambda u: np.ones_like(u, dtype=complex),
                max(1, int(np.ceil(bR * np.cosh(delta2) * length4 / 12.0))),
            )
        )
    if s_max > delta2:
        segs.append(
            Segment(
                "G5",
                delta2,
                s_max,
                lambda s: np.pi - np.arccos(1.0 / np.cosh(s)) - 1j * s,
                lambda s: -1.0 / np.cosh(s) - 1j,
                tail_panels(s_max - delta2),
            )
        )
    return ContourPath(tuple(segs), float(theta), delta1, delta2, float(s_max), c)


def build_undeformed(beta0: float, R_min: float = 1.0, truncation_eps: float = 1e-16, panels: int = 4) -> ContourPath:
    """The path ``-pi/2 + i inf -> -pi/2 -> pi/2 -> pi/2 - i inf``.

    Only suitable for observation points with ``[x]_h = 0``; the vertical
    rays are cut where ``exp(-beta0 R sinh s)`` falls below ``truncation_eps``.
    """
    s_max = float(np.arcsinh(-np.log(truncation_eps) / (beta0 * R_min)))
    segs = (
        Segment("up", s_max, 0.0, lambda s: -np.pi / 2 + 1j * s, lambda s: np.full(s.shape, 1j), panels),
        Segment("real", -np.pi / 2, np.pi / 2, lambda u: u + 0j, lambda u: np.ones_like(u, dtype=complex), panels),
        Segment("down", 0.0, s_max, lambda s: np.pi / 2 - 1j * s, lambda s: np.full(s.shape, -1j), panels),
    )
    return ContourPath(segs, 0.0, 0.0, 0.0, s_max, 0.0)
