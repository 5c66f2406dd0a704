"""Fields radiated by compactly supported sources and their modal decomposition."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .green import (
    COINCIDENCE_RADIUS,
    CoincidentPointError,
    green_rad_contour,
    green_rad_real,
)
from .modes import ModeTable, mode_shape
from .profile import WaveguideProfile
from .spectral import KernelEvaluator

MODE_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class SourceSpec:
    """Weighted point sources; densities are reduced to cell midpoints.

    ``box`` is the closed support ``(x_min, x_max, z_min, z_max)``.
    """

    kind: str
    points: np.ndarray
    weights: np.ndarray
    box: tuple
    cell: tuple | None = None

    @classmethod
    def point(cls, x: float = 0.0, z: float = 0.0, weight: complex = 1.0) -> "SourceSpec":
        return cls.point_set([(x, z)], [weight])

    @classmethod
    def point_set(cls, points, weights) -> "SourceSpec":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        w = np.atleast_1d(np.asarray(weights, dtype=complex))
        if pts.shape[1] != 2 or w.shape != (pts.shape[0],):
            raise ValueError("points must be (n, 2) with one weight each")
        if not np.all(np.isfinite(pts)):
            raise ValueError("source points must be finite")
        box = (pts[:, 0].min(), pts[:, 0].max(), pts[:, 1].min(), pts[:, 1].max())
        return cls("point_set", pts, w, tuple(float(b) for b in box))

    @classmethod
    def density(cls, f, x_range, z_range, nx: int, nz: int) -> "SourceSpec":
        """Midpoint rule for ``f(xi, zeta)`` on the box ``x_range x z_range``."""
        (x0, x1), (z0, z1) = x_range, z_range
        if not (np.isfinite([x0, x1, z0, z1]).all() and x1 > x0 and z1 > z0):
            raise ValueError("density support must be a bounded box")
        dx, dz = (x1 - x0) / nx, (z1 - z0) / nz
        xc = x0 + dx * (np.arange(nx) + 0.5)
        zc = z0 + dz * (np.arange(nz) + 0.5)
        XX, ZZ = np.meshgrid(xc, zc, indexing="ij")
        vals = np.asarray(f(XX, ZZ), dtype=complex) * dx * dz
        pts = np.column_stack([XX.ravel(), ZZ.ravel()])
        keep = vals.ravel() != 0
        return cls("grid_density", pts[keep], vals.ravel()[keep], (x0, x1, z0, z1), (dx, dz))

    def rows(self):
        """Group source points by ``zeta``: list of ``(zeta, xis, weights)``."""
        zs = self.points[:, 1]
        out = []
        for zeta in np.unique(zs):
            sel = zs == zeta
            out.append((float(zeta), self.points[sel, 0], self.weights[sel]))
        return out

    def scaled(self, factor: complex) -> "SourceSpec":
        return SourceSpec(self.kind, self.points, self.weights * factor, self.box, self.cell)

    def combined(self, other: "SourceSpec") -> "SourceSpec":
        pts = np.vstack([self.points, other.points])
        w = np.concatenate([self.weights, other.weights])
        box = (
            min(self.box[0], other.box[0]),
            max(self.box[1], other.box[1]),
            min(self.box[2], other.box[2]),
            max(self.box[3], other.box[3]),
        )
        return SourceSpec("point_set", pts, w, box)


@dataclass
class FieldGrid:
    """Samples on the tensor grid ``x_nodes x z_nodes`` (arrays indexed ``[ix, iz]``)."""

    x_nodes: np.ndarray
    z_nodes: np.ndarray
    u: np.ndarray
    u_guided: np.ndarray
    u_rest: np.ndarray
    source: SourceSpec | None = field(default=None, repr=False)

    @property
    def spacing(self):
        return float(np.diff(self.x_nodes).mean()), float(np.diff(self.z_nodes).mean())


class FieldEvaluator:
    """Pointwise evaluation of ``u^rad``, ``u_l`` and their gradients for one source."""

    def __init__(self, profile: WaveguideProfile, modes: ModeTable, source: SourceSpec, route: str = "contour"):
        if route not in ("contour", "real"):
            raise ValueError(f"unknown route {route!r}")
        self.profile = profile
        self.modes = modes
        self.source = source
        self.route = route
        self.kernel = KernelEvaluator(profile, abs_tol=1e-12, rel_tol=1e-12)
        self._rows = source.rows()

    def radiative(self, x: float, z: float):
        """``(u0, d/dx u0, d/dz u0)`` at one point."""
        u = 0j
        g = np.zeros(2, complex)
        for zeta, xis, w in self._rows:
            if self.route == "contour":
                v, dv = green_rad_contour(self.profile, self.modes, x, z, xis, zeta, w, kernel=self.kernel)
            else:
                v, dx, dz = green_rad_real(self.profile, self.modes, x, z, xis, zeta, w, grad=True)
                dv = np.array([dx, dz])
            u += v
            g += dv
        return u, g[0], g[1]

    def guided(self, l: int, x, z):
        """Closed-form ``(u_l, d/dx u_l, d/dz u_l)``; vectorised over ``x`` and ``z``."""
        if not 0 <= l < self.modes.M:
            raise IndexError(f"mode index {l} out of range (M={self.modes.M})")
        x, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(z, float))
        beta = self.modes.betas[l]
        ex, dex = mode_shape(self.profile, self.modes, l, x)
        pts, w = self.source.points, self.source.weights
        exi, _ = mode_shape(self.profile, self.modes, l, pts[:, 0])
        Z = z[..., None] - pts[:, 1]
        ph = np.exp(1j * beta * np.abs(Z)) / (2j * beta) * (w * exi)
        U = ph.sum(axis=-1)
        dU = (ph * 1j * beta * np.sign(Z)).sum(axis=-1)
        return ex * U, dex * U, ex * dU

    def evaluate(self, points, components=None):
        """Dict of arrays keyed by component: 0 for ``u^rad`` and ``l + 1`` for mode ``l``.

        Each entry is ``(u, ux, uz)`` with one value per point.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        comps = range(self.modes.M + 1) if components is None else components
        out = {}
        for c in comps:
            if c == 0:
                vals = np.array([self.radiative(px, pz) for px, pz in pts], dtype=complex)
                out[0] = tuple(vals.T)
            else:
                out[c] = self.guided(c - 1, pts[:, 0], pts[:, 1])
        return out

    def total(self, points):
        parts = self.evaluate(points)
        return tuple(sum(p[i] for p in parts.values()) for i in range(3))


def _check_grid(source, x_nodes, z_nodes, k):
    X, Z = np.meshgrid(x_nodes, z_nodes, indexing="ij")
    for px, pz in source.points:
        d = np.hypot(X - px, Z - pz)
        if d.min() < COINCIDENCE_RADIUS / k:
            i, j = np.unravel_index(np.argmin(d), d.shape)
            raise CoincidentPointError(f"grid node ({X[i, j]:.17g}, {Z[i, j]:.17g}) coincides with a source point")


def synthesize_field(
    profile: WaveguideProfile,
    modes: ModeTable,
    source: SourceSpec,
    x_nodes,
    z_nodes,
    route: str = "auto",
) -> FieldGrid:
    """``u = int G f`` on a tensor grid, split into guided parts and ``u^rad``.

    ``route='auto'`` uses the real-axis route (one batched spectral integral
    per grid row and source row) when every row is at least ``0.1/beta0``
    from every source row, and the contour route otherwise.
    """
    xs = np.asarray(x_nodes, dtype=float)
    zs = np.asarray(z_nodes, dtype=float)
    _check_grid(source, xs, zs, profile.k)
    ev = FieldEvaluator(profile, modes, source, "contour")
    rows = source.rows()
    min_gap = min(abs(z - zeta) for z in zs for zeta, _, _ in rows)
    if route == "auto":
        route = "real" if min_gap >= 0.1 / profile.beta0 else "contour"

    u_rest = np.zeros((xs.size, zs.size), complex)
    if route == "real":
        for j, z in enumerate(zs):
            for zeta, xis, w in rows:
                u_rest[:, j] += green_rad_real(profile, modes, xs, z, xis, zeta, w)
    elif route == "contour":
        for i, x in enumerate(xs):
            for j, z in enumerate(zs):
                u_rest[i, j] = ev.radiative(x, z)[0]
    else:
        raise ValueError(f"unknown route {route!r}")

    XX, ZZ = np.meshgrid(xs, zs, indexing="ij")
    u_guided = np.array([ev.guided(l, XX, ZZ)[0] for l in range(modes.M)]).reshape(modes.M, xs.size, zs.size)
    u = u_rest + u_guided.sum(axis=0)
    return FieldGrid(xs, zs, u, u_guided, u_rest, source)


def remainder_component(field: FieldGrid) -> np.ndarray:
    """``u_0 = u - sum_l u_l``."""
    return field.u - field.u_guided.sum(axis=0)


def _overlap_nodes(profile, modes, l):
    """Quadrature nodes on the line covering the core and the tails of mode ``l``."""
    h = profile.h
    kappa = modes.kappas[l]
    e_h = abs(mode_shape(profile, modes, l, h)[0])
    # beyond L the tail integral e(h) exp(-kappa (L-h)) / kappa falls below MODE_TAIL_TOL
    L = h + max(0.0, np.log(max(e_h, 1e-300) / (kappa * MODE_TAIL_TOL)) / kappa)
    width = 2.0 / max(1.0, float(np.max(modes.betas)))
    s, wq = np.polynomial.legendre.leggauss(16)
    cuts = [-h, *profile.breakpoints, 0.0, h]
    core = sorted(set(cuts))
    clad = np.linspace(h, L, int(np.ceil((L - h) / width)) + 1)
    edges_right = list(clad)
    pieces = [(a, b) for a, b in zip(core[:-1], core[1:])]
    pieces += [(a, b) for a, b in zip(edges_right[:-1], edges_right[1:])]
    pieces += [(-b, -a) for a, b in zip(edges_right[:-1], edges_right[1:])]
    nodes = np.concatenate([0.5 * (b - a) * s + 0.5 * (a + b) for a, b in pieces])
    weights = np.concatenate([0.5 * (b - a) * wq for a, b in pieces])
    return nodes, weights, L


def modal_projection(profile: WaveguideProfile, modes: ModeTable, l: int, line_field) -> complex:
    """``int u(x) e(x, gamma_l) dx`` for a field given as a callable ``line_field(x) -> u``.

    The callable is sampled on Gauss-Legendre panels covering the core and the
    mode tails out to where they contribute less than ``MODE_TAIL_TOL``.
    """
    nodes, weights, _ = _overlap_nodes(profile, modes, l)
    e, _ = mode_shape(profile, modes, l, nodes)
    return complex(np.dot(weights, np.asarray(line_field(nodes)) * e))


def guided_component(
    profile: WaveguideProfile,
    modes: ModeTable,
    l: int,
    source: SourceSpec,
    z: float,
    x=None,
    route: str = "B",
):
    """Modal amplitude ``U(z)`` of mode ``l`` and ``u_l = e U`` at ``x``.

    Route ``B`` integrates the guided Green's function against the source.
    Route ``A`` projects the synthesised total field on the mode along the
    line ``z``; use it only on lines that miss the source support.
    """
    if modes.M == 0:
        raise ValueError("profile has no guided modes")
    if not 0 <= l < modes.M:
        raise IndexError(f"mode index {l} out of range (M={modes.M})")
    if route == "B":
        pts, w = source.points, source.weights
        exi, _ = mode_shape(profile, modes, l, pts[:, 0])
        beta = modes.betas[l]
        U = complex(np.sum(w * exi * np.exp(1j * beta * np.abs(z - pts[:, 1]))) / (2j * beta))
    elif route == "A":
        ev = FieldEvaluator(profile, modes, source)

        def line_field(nodes):
            u = np.zeros(nodes.size, complex)
            for zeta, xis, w in source.rows():
                u += green_rad_real(profile, modes, nodes, z, xis, zeta, w)
            for m in range(modes.M):
                u += ev.guided(m, nodes, np.full(nodes.shape, z))[0]
            return u

        U = modal_projection(profile, modes, l, line_field)
    else:
        raise ValueError(f"unknown route {route!r}")
    if x is None:
        return U, None
    e, _ = mode_shape(profile, modes, l, np.asarray(x, float))
    return U, e * U


@dataclass(frozen=True)
class PDEResidual:
    max_residual: float
    scale: float
    spacing: float
    n_nodes: int


def pde_residual(profile: WaveguideProfile, field: FieldGrid, source: SourceSpec | None = None) -> PDEResidual:
    """Five-point discrete Helmholtz residual at admissible interior nodes.

    Nodes within two cells of ``x = +-h`` or of the source support are
    excluded; ``scale`` is ``max|u| k^2``.
    """
    xs, zs = field.x_nodes, field.z_nodes
    dx, dz = np.diff(xs), np.diff(zs)
    hx, hz = float(dx.mean()), float(dz.mean())
    if not (np.allclose(dx, hx, rtol=1e-9) and np.allclose(dz, hz, rtol=1e-9)):
        raise ValueError("pde_residual needs a uniform grid")
    if max(hx, hz) > 0.02 / profile.k * (1 + 1e-12):
        raise ValueError("grid too coarse: spacing must be <= 0.02/k")
    u = field.u
    lap = (u[2:, 1:-1] - 2 * u[1:-1, 1:-1] + u[:-2, 1:-1]) / hx**2
    lap += (u[1:-1, 2:] - 2 * u[1:-1, 1:-1] + u[1:-1, :-2]) / hz**2
    X, Z = np.meshgrid(xs[1:-1], zs[1:-1], indexing="ij")
    res = np.abs(lap + profile.k**2 * profile.index(X) ** 2 * u[1:-1, 1:-1])
    ok = np.abs(np.abs(X) - profile.h) > 2 * hx
    source = source or field.source
    if source is not None:
        x0, x1, z0, z1 = source.box
        near = (X > x0 - 2 * hx) & (X < x1 + 2 * hx) & (Z > z0 - 2 * hz) & (Z < z1 + 2 * hz)
        ok &= ~near
    scale = float(np.max(np.abs(u))) * profile.k**2 if u.size else 0.0
    worst = float(res[ok].max()) if np.any(ok) else 0.0
    return PDEResidual(worst, scale, max(hx, hz), int(ok.sum()))
