"""Radiation-condition diagnostics on level-set boundaries."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .modes import ModeTable, mode_shape
from .ode import phi_batch
from .profile import WaveguideProfile

FAMILIES = ("omega_stadium", "q_square")
_ORDER = 16

Evaluator = Callable[[np.ndarray], tuple]


@dataclass(frozen=True)
class BoundarySample:
    family: str
    R: float
    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray

    @property
    def length(self) -> float:
        return float(self.weights.sum())


def _panels(a, b, n):
    s, w = np.polynomial.legendre.leggauss(_ORDER)
    edges = np.linspace(a, b, n + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    return (mid + half * s).ravel(), (half * w).ravel()


def _even(n):
    n = max(2, int(n))
    return n + (n % 2)


def boundary_sample(family: str, R: float, h: float, n_points: int = 128) -> BoundarySample:
    """Gauss-Legendre nodes on ``dOmega_R`` (stadium) or ``dQ_R`` (square).

    Panel edges sit on ``z = 0`` and at the corners, so no node lies on the
    source line of a source placed at ``z = 0``.
    """
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    if not R > 0:
        raise ValueError("R must be positive")
    if n_points < 64:
        raise ValueError("n_points must be at least 64")
    pts, nrm, wts = [], [], []
    if family == "omega_stadium":
        total = 2 * np.pi * R + 4 * h
        arc_panels = _even(np.ceil(n_points * np.pi * R / total / _ORDER))
        flat_panels = max(1, int(np.ceil(n_points * 2 * h / total / _ORDER))) if h > 0 else 0
        phi, w = _panels(0.0, np.pi, arc_panels)
        for side in (1.0, -1.0):
            # arc centred at (side*h, 0), from the top (phi=0) round to the bottom
            px = side * (h + R * np.sin(phi))
            pz = side * R * np.cos(phi)
            pts.append(np.column_stack([px, pz]))
            nrm.append(np.column_stack([side * np.sin(phi), side * np.cos(phi)]))
            wts.append(R * w)
        if flat_panels:
            u, w = _panels(-h, h, flat_panels)
            for side in (1.0, -1.0):
                pts.append(np.column_stack([u, np.full(u.shape, side * R)]))
                nrm.append(np.column_stack([np.zeros(u.shape), np.full(u.shape, side)]))
                wts.append(w)
    else:
        face_panels = _even(np.ceil(n_points / 4 / _ORDER))
        u, w = _panels(-R, R, face_panels)
        for side in (1.0, -1.0):
            pts.append(np.column_stack([np.full(u.shape, side * R), u]))
            nrm.append(np.column_stack([np.full(u.shape, side), np.zeros(u.shape)]))
            wts.append(w)
            pts.append(np.column_stack([u, np.full(u.shape, side * R)]))
            nrm.append(np.column_stack([np.zeros(u.shape), np.full(u.shape, side)]))
            wts.append(w)
    return BoundarySample(family, float(R), np.vstack(pts), np.vstack(nrm), np.concatenate(wts))


def pointwise_residual(evaluator: Evaluator, beta: float, boundary: BoundarySample) -> np.ndarray:
    """``|d_nu u - i beta u|`` at every boundary node."""
    u, ux, uz = (np.asarray(a) for a in evaluator(boundary.points))
    dnu = ux * boundary.normals[:, 0] + uz * boundary.normals[:, 1]
    return np.abs(dnu - 1j * beta * u)


def radiation_residual(evaluator: Evaluator, beta: float, boundary: BoundarySample) -> float:
    """``int |d_nu u - i beta u|^2 dl`` over the boundary."""
    res = pointwise_residual(evaluator, beta, boundary)
    return float(np.dot(boundary.weights, res**2))


def decay_slope(R_values, values, mode: str = "power"):
    """Least-squares fit of ``log(value)`` against ``log R`` (``power``) or ``R`` (``exp``).

    Returns ``(slope, intercept, rms)``.
    """
    R = np.asarray(R_values, dtype=float)
    v = np.asarray(values, dtype=float)
    if R.size < 5 or R.shape != v.shape:
        raise ValueError("decay_slope needs at least 5 matching samples")
    if np.any(v <= 0):
        raise ValueError("values must be positive")
    if mode == "power":
        xs = np.log(R)
    elif mode == "exp":
        xs = R
    else:
        raise ValueError(f"mode must be 'power' or 'exp', got {mode!r}")
    ys = np.log(v)
    slope, intercept = np.polyfit(xs, ys, 1)
    rms = float(np.sqrt(np.mean((ys - (slope * xs + intercept)) ** 2)))
    return float(slope), float(intercept), rms


def boundary_flux(evaluator: Evaluator, boundary: BoundarySample) -> float:
    """``Im int conj(u) d_nu u dl``."""
    u, ux, uz = (np.asarray(a) for a in evaluator(boundary.points))
    dnu = ux * boundary.normals[:, 0] + uz * boundary.normals[:, 1]
    return float(np.dot(boundary.weights, np.conj(u) * dnu).imag)


def flux_balance(evaluator: Evaluator, inner: BoundarySample, outer: BoundarySample, source_box=None):
    """Flux through two nested boundaries and their relative difference."""
    if source_box is not None:
        x0, x1, z0, z1 = source_box
        for b in (inner, outer):
            p = b.points
            if np.any((p[:, 0] >= x0) & (p[:, 0] <= x1) & (p[:, 1] >= z0) & (p[:, 1] <= z1)):
                raise ValueError(f"boundary at R={b.R} intersects the source support")
    f1 = boundary_flux(evaluator, inner)
    f2 = boundary_flux(evaluator, outer)
    scale = max(abs(f1), abs(f2))
    return f1, f2, (abs(f1 - f2) / scale if scale > 0 else 0.0)


def orthogonality_defect(
    profile: WaveguideProfile,
    modes: ModeTable,
    l: int,
    lam: float,
    parity: str | None = None,
    panels_per_unit: float = 2.0,
) -> float:
    """``|int e(x, gamma_l) v_j(x, lam) dx|`` for ``lam > d^2``.

    Core part by Gauss-Legendre panels (refined with ``sqrt(lam)``), cladding
    part in closed form from the exponential-times-sinusoid antiderivatives.
    """
    if lam <= profile.d2:
        raise ValueError("lambda must exceed d^2")
    parity = modes.parities[l] if parity is None else parity
    h = profile.h
    cuts = sorted({-h, *profile.breakpoints, 0.0, h})
    n_per = max(1, int(np.ceil(panels_per_unit * np.sqrt(lam) * 2 * h / len(cuts))))
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        x, w = _panels(a, b, n_per)
        nodes.append(x)
        weights.append(w)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    e, _ = mode_shape(profile, modes, l, nodes)
    phi, _ = phi_batch(profile, parity, [lam], nodes, abs_tol=1e-13, rel_tol=1e-13)
    core = float(np.dot(weights, e * phi[0].real))

    pb, dpb = phi_batch(profile, parity, [lam], [-h, h], abs_tol=1e-13, rel_tol=1e-13)
    (pm, pp), (dpm, dpp) = pb[0].real, dpb[0].real
    e_m, _ = mode_shape(profile, modes, l, -h)
    e_p, _ = mode_shape(profile, modes, l, h)
    kappa = modes.kappas[l]
    Q2 = lam - profile.d2
    right = e_p * (kappa * pp + dpp) / (kappa**2 + Q2)
    left = e_m * (kappa * pm - dpm) / (kappa**2 + Q2)
    return abs(core + right + left)


@dataclass
class RellichReport:
    R_values: np.ndarray
    integrand: np.ndarray
    windows: list
    increments: np.ndarray
    cumulative: np.ndarray
    ratios: np.ndarray
    tail_estimate: float
    passed: bool
    reasons: list = field(default_factory=list)


def dyadic_windows(R0: float, R_max: float):
    edges = [R0]
    while edges[-1] * 2 < R_max * (1 - 1e-12):
        edges.append(edges[-1] * 2)
    edges.append(R_max)
    return list(zip(edges[:-1], edges[1:]))


def cumulative_residual(
    evaluator: Evaluator,
    beta: float,
    h: float,
    R0: float,
    R_max: float,
    family: str = "omega_stadium",
    n_points: int = 128,
    nodes_per_window: int = 8,
):
    """Increments of ``int_R int_{dOmega_R} |d_nu u - i beta u|^2 dl dR`` over dyadic windows.

    Returns ``(R_values, integrand, windows, increments)``.
    """
    s, w = np.polynomial.legendre.leggauss(nodes_per_window)
    windows = dyadic_windows(R0, R_max)
    Rs, vals, incs = [], [], []
    for a, b in windows:
        Rw = 0.5 * (b - a) * s + 0.5 * (a + b)
        vw = np.array([radiation_residual(evaluator, beta, boundary_sample(family, r, h, n_points)) for r in Rw])
        Rs.append(Rw)
        vals.append(vw)
        incs.append(0.5 * (b - a) * float(np.dot(w, vw)))
    return np.concatenate(Rs), np.concatenate(vals), windows, np.array(incs)


def rellich_reduction_check(
    profile: WaveguideProfile,
    modes: ModeTable,
    evaluator: Evaluator,
    R0: float | None = None,
    R_max: float | None = None,
    tol: float = 1e-6,
    max_ratio: float = 0.6,
    n_points: int = 128,
) -> RellichReport:
    """Cauchy test for the finiteness of the cumulative residual of ``u = u_0``.

    The condition passes when successive dyadic increments shrink by at least
    ``max_ratio`` and the geometric extrapolation of the remaining tail is below
    ``tol``.  Balls ``B_R`` (a stadium with zero flat part) are used.
    """
    if modes.M > 0:
        raise ValueError("the reduced condition applies only without guided modes")
    b0 = profile.beta0
    R0 = 10.0 / b0 if R0 is None else R0
    R_max = 200.0 / b0 if R_max is None else R_max
    Rs, vals, windows, incs = cumulative_residual(evaluator, b0, 0.0, R0, R_max, n_points=n_points)
    cumulative = np.cumsum(incs)
    reasons = []
    if np.all(incs == 0):
        return RellichReport(Rs, vals, windows, incs, cumulative, np.zeros(0), 0.0, True)
    full = [i for i, (a, b) in enumerate(windows) if abs(b - 2 * a) < 1e-9 * b]
    ratios = np.array([incs[j] / incs[i] for i, j in zip(full[:-1], full[1:]) if incs[i] > 0])
    if ratios.size == 0:
        reasons.append("need at least two full dyadic windows")
    elif np.any(ratios > max_ratio):
        reasons.append(f"increment ratio {ratios.max():.3g} exceeds {max_ratio}")
    r = float(ratios[-1]) if ratios.size else 1.0
    tail = float(incs[full[-1]] * r / (1 - r)) if r < 1 else float("inf")
    if not tail < tol:
        reasons.append(f"extrapolated tail {tail:.3g} is not below {tol:g}")
    return RellichReport(Rs, vals, windows, incs, cumulative, ratios, tail, not reasons, reasons)
