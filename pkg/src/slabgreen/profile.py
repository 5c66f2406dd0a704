"""Index profile of a rectilinear open waveguide.

The refractive index is ``n_co(x)`` in the core ``|x| <= h`` and the constant
``n_cl`` in the cladding.  Everything downstream works with the potential

    q(x) = k^2 (n_*^2 - n(x)^2),      p(x) = d^2 - q(x),

where ``n_*`` is the largest index and ``d^2 = k^2 (n_*^2 - n_cl^2)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

log = logging.getLogger(__name__)

#: grid used to locate the maximum of a callable core profile
N_STAR_GRID = 10_000

CoreSpec = Union[float, Callable[[np.ndarray], np.ndarray], Sequence[Sequence[float]]]


@dataclass(frozen=True)
class WaveguideProfile:
    """Immutable description of the waveguide.

    Use :func:`build_profile` rather than the constructor; it validates the
    inputs and derives ``n_star`` and ``d2``.
    """

    k: float
    h: float
    n_cl: float
    n_co: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    n_star: float
    d2: float
    #: interior points where q is only piecewise smooth (table nodes)
    breakpoints: tuple = ()
    #: True when n_co is constant (the step-index slab)
    constant_core: bool = False
    #: True when n_co(x) == n_co(-x) on the sampling grid
    is_even: bool = True
    #: True when n_co < n_cl somewhere, so p can be negative
    below_cladding: bool = False

    @property
    def d(self) -> float:
        return float(np.sqrt(self.d2))

    @property
    def beta0(self) -> float:
        """Cladding wavenumber k * n_cl."""
        return self.k * self.n_cl

    def index(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= self.h
        xc = np.clip(x, -self.h, self.h)
        return np.where(inside, self.n_co(xc), self.n_cl)

    def q(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= self.h
        xc = np.clip(x, -self.h, self.h)
        q_core = self.k**2 * (self.n_star**2 - np.asarray(self.n_co(xc), dtype=float) ** 2)
        return np.where(inside, q_core, self.d2)

    def p(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= self.h, self.d2 - self.q(x), 0.0)

    def p_integral(self, a: float, b: float, n: int = 64) -> float:
        """Integral of p over [a, b] (Gauss-Legendre, split at breakpoints)."""
        if a == b:
            return 0.0
        sign = 1.0
        if b < a:
            a, b, sign = b, a, -1.0
        cuts = [a] + [c for c in (-self.h, *self.breakpoints, self.h) if a < c < b] + [b]
        s, w = np.polynomial.legendre.leggauss(n)
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            xs = 0.5 * (hi - lo) * s + 0.5 * (hi + lo)
            total += 0.5 * (hi - lo) * float(np.dot(w, self.p(xs)))
        return sign * total


def _as_core_callable(n_co: CoreSpec, h: float):
    """Return (callable, breakpoints, is_constant) for the supported core specs."""
    if np.isscalar(n_co):
        value = float(n_co)
        if not np.isfinite(value):
            raise ValueError("n_co must be finite")
        return (lambda x, v=value: np.full(np.shape(x), v)), (), True
    if callable(n_co):
        return n_co, (), False
    table = np.asarray(n_co, dtype=float)
    if table.ndim != 2 or table.shape[1] != 2:
        raise ValueError("n_co table must be a list of (x, n) pairs")
    if table.shape[0] < 2:
        raise ValueError("n_co table needs at least 2 points")
    order = np.argsort(table[:, 0])
    xs, ns = table[order, 0], table[order, 1]
    if np.any(np.diff(xs) <= 0):
        raise ValueError("n_co table abscissae must be distinct")
    if xs[0] > -h + 1e-12 or xs[-1] < h - 1e-12:
        raise ValueError("n_co table must cover the core [-h, h]")

    def interp(x, xs=xs, ns=ns):
        return np.interp(x, xs, ns)

    inner = tuple(float(v) for v in xs if -h < v < h and v != 0.0)
    return interp, inner, bool(np.all(ns == ns[0]))


def build_profile(k: float, h: float, n_cl: float, n_co: CoreSpec) -> WaveguideProfile:
    """Validate the physical parameters and derive ``n_star`` and ``d2``.

    ``n_co`` may be a constant, a vectorised callable on [-h, h], or a table
    of ``(x, n)`` pairs interpolated piecewise linearly.
    """
    for name, value in (("k", k), ("h", h), ("n_cl", n_cl)):
        if not np.isfinite(value) or value <= 0:
            raise ValueError(f"{name} must be positive, got {value!r}")
    func, breakpoints, constant = _as_core_callable(n_co, h)

    grid = np.union1d(np.linspace(-h, h, N_STAR_GRID), [0.0, *breakpoints])
    try:
        samples = np.asarray(func(grid), dtype=float)
    except Exception as exc:  # noqa: BLE001 - user callables may raise anything
        raise ValueError(f"n_co could not be evaluated: {exc}") from exc
    if samples.shape != grid.shape:
        samples = np.broadcast_to(samples, grid.shape).astype(float)
    if not np.all(np.isfinite(samples)):
        raise ValueError("n_co must be bounded (non-finite values found)")
    if np.any(samples <= 0):
        raise ValueError("n_co must be positive")

    n_star = max(float(n_cl), float(samples.max()))
    d2 = k**2 * (n_star**2 - n_cl**2)
    below = bool(np.any(samples < n_cl))
    if below:
        log.warning("core index drops below n_cl; p(x) may be negative")
    mirrored = np.asarray(func(-grid), dtype=float)
    is_even = bool(np.allclose(samples, np.broadcast_to(mirrored, grid.shape), rtol=0, atol=1e-13))

    return WaveguideProfile(
        k=float(k),
        h=float(h),
        n_cl=float(n_cl),
        n_co=func,
        n_star=n_star,
        d2=float(d2),
        breakpoints=tuple(sorted(breakpoints)),
        constant_core=constant,
        is_even=is_even,
        below_cladding=below,
    )


def potential_at(profile: WaveguideProfile, x):
    """Return ``(q, p)`` at ``x``; for ``|x| > h`` these are ``(d2, 0)`` exactly."""
    q = profile.q(x)
    p = np.where(np.abs(np.asarray(x, dtype=float)) <= profile.h, profile.d2 - q, 0.0)
    if np.ndim(q) == 0:
        return float(q), float(p)
    return q, p
