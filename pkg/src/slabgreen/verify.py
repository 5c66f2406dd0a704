"""Acceptance checks shared by the ``verify`` subcommand and the test suite.

Each check runs on fixed reference waveguides and returns a
:class:`CheckResult`; the thresholds are the contract values.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import bisect

from .field import FieldEvaluator, SourceSpec, guided_component, pde_residual, remainder_component, synthesize_field
from .green import green, green_rad_contour, green_rad_real
from .modes import find_guided_modes
from .profile import build_profile
from .radiation import (
    boundary_sample,
    decay_slope,
    orthogonality_defect,
    pointwise_residual,
    rellich_reduction_check,
)
from .special import free_space_green, hankel_h0
from .spectral import big_phi, build_contour, contour_diagnostics, phi_asymptotic


def reference_profiles():
    """``P0`` (step slab), ``P_free`` (homogeneous) and ``P0_h5`` (wide step slab)."""
    return {
        "P0": build_profile(1.0, 1.0, 1.0, 1.5),
        "P_free": build_profile(1.0, 1.0, 1.0, 1.0),
        "P0_h5": build_profile(1.0, 5.0, 1.0, 1.5),
    }


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool | None
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def status(self) -> str:
        if self.passed is None:
            return "SKIP"
        return "PASS" if self.passed else "FAIL"

    def line(self) -> str:
        info = ", ".join(f"{k}={_short(v)}" for k, v in self.detail.items())
        return f"[{self.status}] criterion {self.number:2d}: {self.name} ({self.seconds:.1f}s) {info}"


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)) and v and isinstance(v[0], float):
        return "[" + ", ".join(f"{x:.4g}" for x in v) + "]"
    return str(v)


# --- independent closed-form slab oracles --------------------------------------


def slab_relation(parity: str, lam, d2: float, h: float):
    """Step-core dispersion function with ``phi_s = cos(sqrt(lam) x)``, ``phi_a = sin(sqrt(lam) x)``."""
    k = np.sqrt(lam)
    kap = np.sqrt(d2 - lam)
    if parity == "s":
        return kap * np.cos(k * h) - k * np.sin(k * h)
    return kap * np.sin(k * h) + k * np.cos(k * h)


def slab_roots(d2: float, h: float, n_scan: int = 100_000):
    """All step-slab roots in ``(0, d2)`` from a dense sign scan refined by bisection."""
    eps = 1e-10 * max(d2, 1.0)
    grid = np.linspace(eps, d2 - eps, n_scan)
    roots = []
    for parity in ("s", "a"):
        F = slab_relation(parity, grid, d2, h)
        for i in np.nonzero(np.sign(F[:-1]) * np.sign(F[1:]) < 0)[0]:
            r = bisect(lambda t: slab_relation(parity, t, d2, h), grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
            roots.append((r, parity))
    return sorted(roots)


# --- criteria ------------------------------------------------------------------


def check_free_space(n_points: int = 20) -> CheckResult:
    prof = reference_profiles()["P_free"]
    modes = find_guided_modes(prof)
    rhos = np.geomspace(0.5, 50.0, n_points)
    angles = np.linspace(0.1, np.pi - 0.1, n_points)  # keeps z != 0
    errs = []
    for rho, a in zip(rhos, angles):
        x, z = rho * np.sin(a), rho * np.cos(a)
        G = green(prof, modes, x, z, 0.0, 0.0).total
        errs.append(abs(G - hankel_h0(prof.k * rho) / 4j))
    worst = float(max(errs))
    return CheckResult(1, "free-space reduction", worst <= 1e-6 and modes.M == 0, {"max_error": worst})


def check_mode_oracle() -> CheckResult:
    profs = reference_profiles()
    P0, P5 = profs["P0"], profs["P0_h5"]
    m0 = find_guided_modes(P0)
    oracle0 = slab_roots(P0.d2, P0.h)
    err0 = abs(m0.gammas[0] - oracle0[0][0]) if m0.M == 1 else float("inf")
    ok0 = m0.M == 1 and m0.parities == ("s",) and len(oracle0) == 1 and err0 <= 1e-9
    m5 = find_guided_modes(P5)
    oracle5 = slab_roots(P5.d2, P5.h)
    same = m5.M == len(oracle5) and m5.parities == tuple(p for _, p in oracle5)
    err5 = float(np.max(np.abs(m5.gammas - [r for r, _ in oracle5]))) if same else float("inf")
    ok = ok0 and same and err5 <= 1e-9
    return CheckResult(
        2, "guided-mode oracle", ok, {"gamma1": float(m0.gammas[0]), "err_P0": float(err0), "M_h5": m5.M, "err_h5": err5}
    )


def check_normalisation() -> CheckResult:
    profs = reference_profiles()
    worst = 0.0
    for key in ("P0", "P0_h5"):
        m = find_guided_modes(profs[key])
        worst = max(worst, float(np.max(np.abs(m.norms - m.norms_quadrature) / m.norms)))
    return CheckResult(3, "normalisation identity", worst <= 1e-8, {"max_rel_diff": worst})


def route_points(n: int = 50):
    zs = np.geomspace(1.0, 100.0, n)
    xs = np.resize([0.0, 0.6, -1.5, 3.0, -5.0, 0.95, 7.0, -0.3], n)
    xis = np.resize([0.0, 0.4, -0.7], n)
    return list(zip(xs, zs, xis))


def check_route_equivalence(n: int = 50) -> CheckResult:
    prof = reference_profiles()["P0"]
    modes = find_guided_modes(prof)
    worst = 0.0
    for x, z, xi in route_points(n):
        a = green_rad_real(prof, modes, x, z, xi, 0.0)
        b, _ = green_rad_contour(prof, modes, x, z, xi, 0.0, grad=False)
        worst = max(worst, abs(a - b) / abs(b))
    return CheckResult(4, "real vs contour route", worst <= 1e-7, {"max_rel_diff": worst, "points": n})


def check_contour_rate(R_values=None, n_points: int = 64) -> CheckResult:
    prof = reference_profiles()["P0"]
    modes = find_guided_modes(prof)
    R_values = np.geomspace(25.0, 200.0, 7) if R_values is None else np.asarray(R_values)
    ev = FieldEvaluator(prof, modes, SourceSpec.point())

    def rad(points):
        return ev.evaluate(points, [0])[0]

    sups = [float(pointwise_residual(rad, prof.beta0, boundary_sample("omega_stadium", R, prof.h, n_points)).max())
            for R in R_values]
    slope, _, rms = decay_slope(R_values, sups)
    return CheckResult(5, "radiating residual rate", abs(slope + 1.5) <= 0.15, {"slope": slope, "rms": rms})


def check_guided_rates(R_values=None) -> CheckResult:
    prof = reference_profiles()["P0"]
    modes = find_guided_modes(prof)
    ev = FieldEvaluator(prof, modes, SourceSpec.point())
    R_values = np.linspace(20.0, 80.0, 7) if R_values is None else np.asarray(R_values)
    beta = modes.betas[0]
    zface_rel = 0.0
    xface = []
    for R in R_values:
        b = boundary_sample("q_square", R, prof.h, 128)
        u, ux, uz = ev.guided(0, b.points[:, 0], b.points[:, 1])
        dnu = ux * b.normals[:, 0] + uz * b.normals[:, 1]
        res = np.abs(dnu - 1j * beta * u)
        zf = b.normals[:, 1] != 0
        scale = np.max(np.abs(dnu[zf]) + beta * np.abs(u[zf]))
        zface_rel = max(zface_rel, float(res[zf].max() / scale))
        xface.append(float(np.dot(b.weights[~zf], res[~zf] ** 2)))
    slope, _, _ = decay_slope(R_values, xface, mode="exp")
    target = -2 * float(modes.kappas[0])
    ok = zface_rel <= 1e-14 and abs(slope - target) <= 0.03 * abs(target)
    return CheckResult(6, "guided residual rates", ok, {"zface_rel": zface_rel, "slope": slope, "target": target})


def check_orthogonality(n: int = 20) -> CheckResult:
    prof = reference_profiles()["P0"]
    modes = find_guided_modes(prof)
    lams = prof.d2 + np.geomspace(0.01, 99.9, n)
    worst = max(orthogonality_defect(prof, modes, l, lam, parity)
                for l in range(modes.M) for lam in lams for parity in ("s", "a"))
    return CheckResult(7, "orthogonality defect", worst <= 1e-8, {"max_defect": float(worst)})


def asymptotic_ratios(profile, taus=(25.0, 50.0), n_x: int = 401):
    """Ratio of sup-over-core errors of the large-tau form at two magnitudes."""
    xs = np.linspace(-profile.h, profile.h, n_x)
    out = {}
    for parity in ("s", "a"):
        sups = []
        for tau in taus:
            exact = big_phi(profile, parity, xs, tau, abs_tol=1e-13, rel_tol=1e-13)[0]
            approx = np.array([phi_asymptotic(profile, parity, x, tau) for x in xs])
            sups.append(float(np.max(np.abs(exact - approx))))
        out[parity] = sups[0] / sups[1]
    return out


def check_asymptotics() -> CheckResult:
    prof = reference_profiles()["P0"]
    modes = find_guided_modes(prof)
    ratios = asymptotic_ratios(prof)
    ok = all(3.4 <= r <= 4.6 for r in ratios.values())
    worst_margin = np.inf
    for theta in np.linspace(0, np.pi / 2, 5):
        for level in (0, 1):
            d = contour_diagnostics(build_contour(prof, modes, theta), level)
            ok &= d["g3_re_dev"] <= 1e-12 and d["g3_im_min"] >= 0
            ok &= d["other_im_min"] >= d["c"] * (1 - 1e-12)
            ok &= d["im_sin_max"] <= d["im_sin_bound"] * (1 + 1e-12)
            worst_margin = min(worst_margin, d["other_im_min"] - d["c"])
    return CheckResult(8, "large-tau asymptotics and contour bounds", bool(ok),
                       {"ratio_s": ratios["s"], "ratio_a": ratios["a"], "min_margin_c": float(worst_margin)})


def pde_patches():
    base = 0.01 * np.arange(21)
    return [(0.2 + base, 3.0 + base), (2.0 + base, 3.0 + base)]


def check_pde_residual() -> CheckResult:
    prof = reference_profiles()["P0"]
    modes = find_guided_modes(prof)
    src = SourceSpec.point()
    worst = 0.0
    for xs, zs in pde_patches():
        F = synthesize_field(prof, modes, src, xs, zs)
        r = pde_residual(prof, F, src)
        worst = max(worst, r.max_residual / r.scale)
    return CheckResult(9, "discrete Helmholtz residual", worst <= 5e-3, {"max_rel_residual": worst})


def check_rellich() -> CheckResult:
    prof = reference_profiles()["P_free"]
    modes = find_guided_modes(prof)

    def outgoing(points):
        return free_space_green(prof.k, points[:, 0], points[:, 1])

    def incoming(points):
        return tuple(np.conj(a) for a in outgoing(points))

    out = rellich_reduction_check(prof, modes, outgoing)
    inc = rellich_reduction_check(prof, modes, incoming)
    nondecreasing = bool(np.all(np.diff(inc.increments[:-1]) >= 0))
    ok = out.passed and not inc.passed and nondecreasing
    return CheckResult(10, "radiation-condition discrimination", ok,
                       {"outgoing_tail": out.tail_estimate, "outgoing_ratio": float(out.ratios.max()),
                        "incoming_ratio": float(inc.ratios.min()), "outgoing_reasons": "; ".join(out.reasons) or "none"})


def check_decomposition() -> CheckResult:
    prof = reference_profiles()["P0"]
    modes = find_guided_modes(prof)
    src = SourceSpec.point()
    worst = 0.0
    for z in (5.0, 12.0, 40.0):
        UA, _ = guided_component(prof, modes, 0, src, z, route="A")
        UB, _ = guided_component(prof, modes, 0, src, z, route="B")
        worst = max(worst, abs(UA - UB) / abs(UB))
    F = synthesize_field(prof, modes, src, np.linspace(-3, 3, 7), np.linspace(2, 8, 4))
    u0 = remainder_component(F)
    closure = float(np.max(np.abs(F.u - (F.u_guided.sum(axis=0) + u0))) / np.max(np.abs(F.u)))
    rest = float(np.max(np.abs(u0 - F.u_rest)) / np.max(np.abs(F.u)))
    ok = worst <= 1e-6 and closure <= 1e-12 and rest <= 1e-6
    return CheckResult(11, "guided decomposition", ok, {"route_AB": worst, "closure": closure, "u0_vs_urad": rest})


#: (number, function, needs guided modes, runtime budget in seconds or None)
CHECKS: list[tuple[int, Callable[[], CheckResult], bool, float | None]] = [
    (1, check_free_space, False, 60.0),
    (2, check_mode_oracle, True, 10.0),
    (3, check_normalisation, True, None),
    (4, check_route_equivalence, True, 300.0),
    (5, check_contour_rate, True, None),
    (6, check_guided_rates, True, None),
    (7, check_orthogonality, True, None),
    (8, check_asymptotics, True, None),
    (9, check_pde_residual, True, None),
    (10, check_rellich, False, None),
    (11, check_decomposition, True, None),
]


def run_check(number: int) -> CheckResult:
    for num, fn, _, budget in CHECKS:
        if num == number:
            t0 = time.perf_counter()
            res = fn()
            res.seconds = time.perf_counter() - t0
            if budget is not None and res.seconds > budget:
                res.passed = False
                res.detail["over_budget_s"] = budget
            return res
    raise KeyError(number)


def run_all(guided_available: bool = True, only=None) -> list[CheckResult]:
    """Run every criterion; guided criteria are skipped when ``guided_available`` is false."""
    results = []
    for num, fn, needs_guided, _ in CHECKS:
        if only is not None and num not in only:
            continue
        if needs_guided and not guided_available:
            results.append(CheckResult(num, fn.__name__.removeprefix("check_").replace("_", " "), None,
                                       {"reason": "skipped (M=0)"}))
            continue
        results.append(run_check(num))
    return results
