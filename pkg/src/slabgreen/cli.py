"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 ``verify`` finished with failing criteria.
"""

from __future__ import annotations

import argparse
import io
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import DEFAULTS, ENV_VAR, ConfigError, RunConfig, load_config
from .contour import QuadratureError
from .field import FieldEvaluator, synthesize_field
from .green import CoincidentPointError, green_guided, green_rad_contour, green_rad_real
from .modes import find_guided_modes
from .ode import ODEError
from .radiation import boundary_sample, decay_slope, pointwise_residual
from .spectral import PoleProximityError, build_contour
from .verify import run_all

log = logging.getLogger("slabgreen")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3
NUMERICAL_ERRORS = (CoincidentPointError, PoleProximityError, QuadratureError, ODEError, FloatingPointError)


# --- output -----------------------------------------------------------------------


def fmt(v) -> str:
    """17 significant digits, so every float round-trips."""
    return f"{float(v):.17g}"


def to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON with 17-digit floats and complex numbers as ``{re, im}``."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}"{k}": {to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        return "[" + ", ".join(to_json(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return to_json({"re": obj.real, "im": obj.imag}, indent)
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if np.isfinite(obj) else f'"{obj}"'
    return '"' + str(obj).replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    _emit(path, buf.getvalue())


def _emit(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
        log.info("wrote %s", path)


def _modes(cfg: RunConfig):
    m = cfg.section("modes")
    return find_guided_modes(cfg.profile(), scan_points=int(m["scan_points"]), root_tol=m["root_tol"], **cfg.ode_tol)


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --- subcommands ------------------------------------------------------------------


def cmd_modes(cfg: RunConfig, args) -> int:
    modes = _modes(cfg)
    d = modes.to_dict()
    _emit(args.out, to_json({k: d[k] for k in ("gammas", "parities", "betas", "norms", "M")}) + "\n")
    return EXIT_OK


def cmd_green(cfg: RunConfig, args) -> int:
    prof = cfg.profile()
    modes = _modes(cfg)
    q = cfg.section("quadrature")
    guided = green_guided(prof, modes, args.x, args.z, args.xi, args.zeta)
    routes = ["real", "contour"] if args.route == "both" else [args.route]
    rad = {}
    for r in routes:
        if r == "real":
            rad[r] = green_rad_real(prof, modes, args.x, args.z, args.xi, args.zeta, rtol=q["rtol"], atol=q["atol"])
        else:
            rad[r] = green_rad_contour(prof, modes, args.x, args.z, args.xi, args.zeta, grad=False,
                                       rtol=q["rtol"], atol=q["atol"])[0]
    main = rad["contour" if "contour" in rad else "real"]
    total = sum(guided) + main
    out = {
        "guided": [{"re": g.real, "im": g.imag} for g in guided],
        "radiative_re": main.real,
        "radiative_im": main.imag,
        "total_re": total.real,
        "total_im": total.imag,
    }
    if args.route == "both":
        out["routes"] = {r: {"re": v.real, "im": v.imag} for r, v in rad.items()}
        out["route_rel_diff"] = abs(rad["real"] - rad["contour"]) / abs(rad["contour"])
    _emit(args.out, to_json(out) + "\n")
    return EXIT_OK


def cmd_field(cfg: RunConfig, args) -> int:
    prof = cfg.profile()
    modes = _modes(cfg)
    src = cfg.source()
    xs, zs = cfg.grid()
    route = cfg.section("grid")["route"]
    chunks = [c for c in np.array_split(zs, max(1, min(args.threads, zs.size))) if c.size]
    parts = _map(lambda c: synthesize_field(prof, modes, src, xs, c, route), chunks, args.threads)
    u = np.concatenate([p.u for p in parts], axis=1)
    u0 = np.concatenate([p.u_rest for p in parts], axis=1)
    ul = np.concatenate([p.u_guided for p in parts], axis=2)
    header = ["x", "z", "re_u", "im_u", "re_u0", "im_u0"]
    for l in range(modes.M):
        header += [f"re_u{l + 1}", f"im_u{l + 1}"]
    rows = []
    for i, x in enumerate(xs):
        for j, z in enumerate(zs):
            row = [x, z, u[i, j].real, u[i, j].imag, u0[i, j].real, u0[i, j].imag]
            for l in range(modes.M):
                row += [ul[l, i, j].real, ul[l, i, j].imag]
            rows.append(row)
    write_csv(args.out or cfg.output_path("field.csv"), header, rows)
    return EXIT_OK


def cmd_radcheck(cfg: RunConfig, args) -> int:
    """Residual integrals of ``u_0`` (on the configured family) and of each ``u_l`` (on ``Q_R``)."""
    prof = cfg.profile()
    modes = _modes(cfg)
    rc = cfg.section("radcheck")
    ev = FieldEvaluator(prof, modes, cfg.source())
    R = np.geomspace(rc["R_min"], rc["R_max"], int(rc["n_R"]))
    n_pts = int(rc["n_points"])
    guided_family = rc["family"] if rc["compact"] else "q_square"

    def row(r):
        b0 = boundary_sample(rc["family"], r, prof.h, n_pts)
        rad = pointwise_residual(lambda p: ev.evaluate(p, [0])[0], prof.beta0, b0)
        vals, sups, xface = [float(np.dot(b0.weights, rad**2))], [float(rad.max())], []
        bq = boundary_sample(guided_family, r, prof.h, n_pts)
        # z-faces carry only rounding noise for guided parts, so rates use the x-faces
        xsel = bq.normals[:, 0] != 0 if guided_family == "q_square" else np.ones(len(bq.weights), bool)
        for l in range(modes.M):
            res = pointwise_residual(lambda p, l=l: ev.guided(l, p[:, 0], p[:, 1]), modes.betas[l], bq)
            vals.append(float(np.dot(bq.weights, res**2)))
            sups.append(float(res.max()))
            xface.append(float(np.dot(bq.weights[xsel], res[xsel] ** 2)))
        return vals, sups, xface

    results = _map(row, R, args.threads)
    res = np.array([v for v, _, _ in results])
    sup = np.array([s for _, s, _ in results])
    xres = np.array([x for _, _, x in results]).reshape(R.size, modes.M)
    incs = 0.5 * (res[1:] + res[:-1]) * np.diff(R)[:, None]
    cum = np.vstack([np.zeros(modes.M + 1), np.cumsum(incs, axis=0)])
    header = ["R"] + [f"residual_{l}" for l in range(modes.M + 1)] + [f"cumulative_{l}" for l in range(modes.M + 1)]
    write_csv(args.out or cfg.output_path("radcheck.csv"), header,
              [[r, *res[i], *cum[i]] for i, r in enumerate(R)])

    summary = {"slopes": {}, "cauchy_ratios": {}, "criteria": {}}
    ratios = incs[1:] / incs[:-1]
    for l in range(modes.M + 1):
        summary["cauchy_ratios"][str(l)] = ratios[:, l]
    if R.size >= 5 and np.all(sup[:, 0] > 0):
        slope = decay_slope(R, sup[:, 0])[0]
        summary["slopes"]["0"] = slope
        summary["criteria"]["u0_sup_rate"] = bool(abs(slope + 1.5) <= 0.15)
    summary["criteria"]["u0_cauchy"] = bool(np.all(ratios[:, 0] < 1))
    for l in range(modes.M):
        target = -2 * float(modes.kappas[l])
        if R.size >= 5 and np.all(xres[:, l] > 0):
            slope = decay_slope(R, xres[:, l], mode="exp")[0]
            summary["slopes"][str(l + 1)] = slope
            summary["criteria"][f"u{l + 1}_exp_rate"] = bool(abs(slope - target) <= 0.03 * abs(target))
    summary["family"] = rc["family"]
    summary["compact"] = bool(rc["compact"])
    _emit(args.summary or cfg.output_path("radcheck.json"), to_json(summary) + "\n")
    return EXIT_OK


def cmd_verify(cfg: RunConfig | None, args) -> int:
    guided = True
    if cfg is not None:
        guided = _modes(cfg).M > 0
    only = set(args.only) if args.only else None
    failed = False
    for res in run_all(guided_available=guided, only=only):
        print(res.line(), flush=True)
        failed |= res.passed is False
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_debug_contour(cfg: RunConfig, args) -> int:
    prof = cfg.profile()
    modes = _modes(cfg)
    path = build_contour(prof, modes, args.theta, R_min=args.R)
    rows = []
    for name, (t, w) in path.segment_nodes(args.level).items():
        rows += [[ti.real, ti.imag, wi.real, wi.imag] for ti, wi in zip(t, w)]
    write_csv(args.out, ["re_t", "im_t", "re_weight", "im_weight"], rows)
    return EXIT_OK


# --- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    defaults = "\n".join(f"  {sec}: {', '.join(f'{k}={v}' for k, v in keys.items())}" for sec, keys in DEFAULTS.items())
    parser = argparse.ArgumentParser(
        prog="slabgreen",
        description="Green's function, field synthesis and radiation checks for open slab waveguides.",
        epilog=f"Config keys and defaults (None = required or unset):\n{defaults}\n"
        f"The config path defaults to ${ENV_VAR}.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", "-c", help=f"YAML or JSON config (default ${ENV_VAR})")
    parser.add_argument("--threads", type=int, default=1, help="worker cap for row-parallel work (default 1)")
    parser.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("modes", help="guided-mode table as JSON")
    p.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("green", help="one Green's function evaluation as JSON")
    for name in ("x", "z", "xi", "zeta"):
        p.add_argument(f"--{name}", type=float, required=name in ("x", "z"), default=0.0)
    p.add_argument("--route", choices=("real", "contour", "both"), default="contour")
    p.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("field", help="field of the configured source on the configured grid as CSV")
    p.add_argument("--out", help="output CSV (default <output.dir>/<output.prefix>_field.csv, '-' for stdout)")

    p = sub.add_parser("radcheck", help="radiation-condition residuals as CSV plus a JSON summary")
    p.add_argument("--out", help="output CSV (default <output.dir>/<output.prefix>_radcheck.csv)")
    p.add_argument("--summary", help="output JSON (default <output.dir>/<output.prefix>_radcheck.json)")

    p = sub.add_parser("verify", help="run the acceptance suite and print a pass/fail table")
    p.add_argument("--only", type=int, nargs="+", help="criterion numbers to run")

    p = sub.add_parser("debug-contour", help="nodes and weights of the deformed contour as CSV")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--R", type=float, default=1.0, help="smallest distance the tail truncation must serve")
    p.add_argument("--level", type=int, default=0, help="panel doubling level")
    p.add_argument("--out", help="output CSV (default stdout)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    handlers = {
        "modes": cmd_modes,
        "green": cmd_green,
        "field": cmd_field,
        "radcheck": cmd_radcheck,
        "verify": cmd_verify,
        "debug-contour": cmd_debug_contour,
    }
    try:
        if args.command == "verify" and not (args.config or os.environ.get(ENV_VAR)):
            cfg = None
        else:
            cfg = load_config(args.config)
        return handlers[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (*NUMERICAL_ERRORS, ValueError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
