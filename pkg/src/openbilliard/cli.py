"""``openbilliard`` command line.

Exit codes: 0 success, 1 domain or configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .config import ExperimentConfig
from .dynamics import trace
from .errors import ConfigError, DomainError, NumericalError
from .lyapunov import (benettin_oracle, continuity_modulus, derivative_study, estimate_lambda1,
                       lambda1_bracket, sweep_alpha)
from .orbits import find_periodic_orbit, refine_orbit
from .output import (LYAPUNOV_HEADER, SWEEP_HEADER, emit_csv, emit_svg, lyapunov_rows)
from .scene import check_no_eclipse, geometric_bounds

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERICAL = 0, 1, 2


def _out(msg=""):
    print(msg)


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


def _vec(x):
    return "(" + ", ".join(f"{float(c):.12g}" for c in x) + ")"


def _write_json(path, payload):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, allow_nan=True)
            fh.write("\n")


def _scene(cfg):
    """Scene from the config, refusing ones that break condition (H)."""
    scene = cfg.scene()
    report = check_no_eclipse(scene)
    if not report.holds:
        if report.conservative:
            _warn(report.describe())
        else:
            raise DomainError(report.describe())
    return scene


def _coding(cfg, scene):
    if not cfg.coding:
        raise ConfigError("coding: this subcommand needs a coding word")
    return cfg.zero_based_coding()


def _orbit(cfg, scene):
    orbit = find_periodic_orbit(scene, _coding(cfg, scene), tol=cfg.tolerances.orbit_residual)
    return orbit


def cmd_check(cfg, args):
    scene = cfg.scene()
    report = check_no_eclipse(scene)
    _out(report.describe())
    payload = {"no_eclipse": report.holds, "conservative": report.conservative,
               "violation": [x + 1 for x in report.violation] if report.violation else None}
    if report.holds:
        b = geometric_bounds(scene)
        lo, hi = lambda1_bracket(b)
        _out(f"kappa in [{b.kappa_min:.9g}, {b.kappa_max:.9g}]")
        _out(f"boundary gaps in [{b.d_min:.9g}, {b.d_max:.9g}]")
        _out(f"cos(phi) >= {b.cos_phi_max:.9g} (aperture bound)")
        _out(f"eigenvalue corridor [{b.mu_min:.9g}, {b.eta_max:.9g}]")
        _out(f"lambda1 bracket [{lo:.6f}, {hi:.6f}]")
        payload.update(kappa=[b.kappa_min, b.kappa_max], d=[b.d_min, b.d_max],
                       cos_phi_min=b.cos_phi_max, bracket=[lo, hi])
    _write_json(args.json, payload)
    return EXIT_OK if report.holds else EXIT_DOMAIN


def cmd_orbit(cfg, args):
    scene = _scene(cfg)
    orbit = _orbit(cfg, scene)
    _out(f"coding {[c + 1 for c in orbit.coding]}  period {orbit.period}")
    _out(f"reflection residual {orbit.residual:.3e}")
    _out(f"length {orbit.flight_lengths.sum():.15g}")
    _out("j  obstacle  q_j  d_j  cos_phi_j")
    for j, (c, q, d, cp) in enumerate(zip(orbit.coding, orbit.points, orbit.flight_lengths, orbit.cos_phi)):
        _out(f"{j + 1}  {c + 1}  {_vec(q)}  {d:.15g}  {cp:.15g}")
    _write_json(args.json, {"coding": [c + 1 for c in orbit.coding], "residual": orbit.residual,
                            "points": orbit.points.tolist(), "d": orbit.flight_lengths.tolist(),
                            "cos_phi": orbit.cos_phi.tolist()})
    return EXIT_OK


def cmd_trace(cfg, args):
    scene = _scene(cfg)
    m = args.bounces or cfg.bounces
    start = cfg.start_state()
    if start is None:
        orbit = _orbit(cfg, scene)
        if args.dps:
            orbit = refine_orbit(orbit, args.dps)
        start = orbit.state(0)
    traj = trace(scene, start, m, grazing=cfg.tolerances.grazing, dps=args.dps)
    rows = []
    for j, r in enumerate(traj.records):
        rows.append((j, r.obstacle + 1, *[float(x) for x in r.q], *[float(x) for x in r.v],
                     float(r.d), float(r.cos_phi)))
    n = scene.dimension
    header = (("bounce", "obstacle") + tuple(f"q{i + 1}" for i in range(n))
              + tuple(f"v{i + 1}" for i in range(n)) + ("d_j", "cos_phi_j"))
    _out(",".join(header))
    for row in rows:
        _out(",".join(str(x) if isinstance(x, int) else f"{x:.12g}" for x in row))
    if traj.escaped:
        _out(f"escaped after {len(traj.records)} reflections")
    csv_path = args.csv or cfg.output.get("csv")
    if csv_path:
        emit_csv(csv_path, header, rows)
    _write_json(args.json, {"escaped": traj.escaped, "coding": [c + 1 for c in traj.coding]})
    return EXIT_OK


def cmd_lyapunov(cfg, args):
    scene = _scene(cfg)
    m = args.bounces or cfg.bounces
    start = cfg.start_state()
    source = start if start is not None else _orbit(cfg, scene)
    series = estimate_lambda1(scene, source, m, seed=cfg.seed, burn_in=cfg.burn_in)
    bounds = geometric_bounds(scene, series.trajectory)
    lo, hi = lambda1_bracket(bounds)
    lam = series.value
    _out(f"m = {m}  burn-in = {series.burn_in}")
    for k in sorted({1, 10, 100, m} & set(range(1, m + 1))):
        _out(f"  lambda1^({k}) = {series.partial[k - 1]:.12f}")
    _out(f"lambda1 = {lam:.12f}")
    _out(f"bracket [{lo:.6f}, {hi:.6f}]  {'inside' if lo - 1e-9 <= lam <= hi + 1e-9 else 'OUTSIDE'}")
    payload = {"lambda1": lam, "m": m, "bracket": [lo, hi], "partial": series.partial.tolist()}
    if not args.no_oracle:
        oracle = benettin_oracle(scene, source, m, seed=cfg.seed, burn_in=cfg.burn_in)
        rel = abs(lam - oracle) / abs(lam)
        _out(f"oracle  = {oracle:.12f}  relative difference {rel:.2e}")
        payload.update(oracle=oracle, relative_difference=rel)
    csv_path = args.csv or cfg.output.get("csv")
    if csv_path:
        emit_csv(csv_path, LYAPUNOV_HEADER, lyapunov_rows(series))
    _write_json(args.json, payload)
    if not lo - 1e-9 <= lam <= hi + 1e-9:
        raise NumericalError(f"lambda1 = {lam} outside its bracket [{lo}, {hi}]")
    return EXIT_OK


def cmd_sweep(cfg, args):
    scene = _scene(cfg)
    if not cfg.alpha_grid:
        raise ConfigError("alpha_grid: sweep needs an alpha grid")
    family = cfg.family(scene)
    family.validate()
    m = args.bounces or cfg.bounces
    sweep = sweep_alpha(family, _coding(cfg, scene), cfg.alpha_grid, m, seed=cfg.seed, burn_in=cfg.burn_in)
    _out(",".join(SWEEP_HEADER))
    for row in sweep.rows():
        _out(",".join(f"{x:.12g}" for x in row))
    for a, err in sweep.errors.items():
        _warn(f"alpha={a:g}: {err}")
    payload = {"m": m, "rows": [list(r) for r in sweep.rows()], "errors": sweep.errors}
    alphas = np.asarray(sweep.alphas)
    if alphas.size >= 3 and np.any(alphas == 0):
        c = continuity_modulus(sweep)
        _out(f"empirical continuity modulus C = {c:.9g}")
        payload["continuity_modulus"] = c
    csv_path = args.csv or cfg.output.get("csv")
    svg_path = args.svg or cfg.output.get("svg")
    if csv_path:
        emit_csv(csv_path, SWEEP_HEADER, sweep.rows())
    if svg_path:
        emit_svg(sweep, svg_path)
    _write_json(args.json, payload)
    if sweep.errors:
        raise NumericalError(f"{len(sweep.errors)} grid point(s) failed")
    return EXIT_OK


def cmd_derivative(cfg, args):
    scene = _scene(cfg)
    if not cfg.h_grid:
        raise ConfigError("h_grid: derivative needs an h grid")
    family = cfg.family(scene)
    family.validate()
    m = args.bounces or cfg.bounces
    study = derivative_study(family, _coding(cfg, scene), m, cfg.h_grid, seed=cfg.seed, burn_in=cfg.burn_in)
    _out(f"lambda1(0) = {study.lambda0:.12f}  (m = {m})")
    _out("h,forward_difference,abs_diff_F_m")
    for h, fd, err in study.table():
        _out(f"{h:.6g},{fd:.12f},{err:.3e}")
    _out(f"Richardson limit = {study.extrapolated:.12f}")
    _out(f"F_m             = {study.F_m:.12f}")
    _out(f"|FD - F_m|      = {study.gap:.3e}")
    if not study.monotone:
        _warn("finite-difference errors do not shrink monotonically with h")
    _write_json(args.json, {"h": study.hs.tolist(), "forward": study.forward.tolist(),
                            "extrapolated": study.extrapolated, "F_m": study.F_m,
                            "gap": study.gap, "monotone": study.monotone})
    return EXIT_OK


def cmd_verify(cfg, args):
    from .verify import battery_passed, run_battery

    extra = None
    if cfg is not None and cfg.coding:
        extra = ("config", _scene(cfg), cfg.zero_based_coding())
    results, total = run_battery(extra, log=_out)
    passed = battery_passed(results, total)
    n_ok = sum(r.passed for r in results)
    _out(f"{n_ok}/{len(results)} checks passed in {total:.1f} s "
         f"(budget {60:.0f} s): {'PASS' if passed else 'FAIL'}")
    _write_json(args.json, {"passed": passed, "seconds": total,
                            "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail}
                                       for r in results]})
    return EXIT_OK if passed else EXIT_NUMERICAL


COMMANDS = {
    "check": (cmd_check, "condition (H) and geometric bounds"),
    "orbit": (cmd_orbit, "periodic orbit for the configured coding"),
    "trace": (cmd_trace, "bounce table of a traced trajectory"),
    "lyapunov": (cmd_lyapunov, "largest Lyapunov exponent, bracket and oracle"),
    "sweep": (cmd_sweep, "lambda1 over the alpha grid (CSV and SVG)"),
    "derivative": (cmd_derivative, "finite-difference derivative table and F_m"),
    "verify": (cmd_verify, "property battery with a pass/fail summary"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="openbilliard", description="Open billiards in R^n.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", nargs="?" if name == "verify" else None, help="experiment JSON")
        p.add_argument("--json", metavar="PATH", help="also write results as JSON")
        if name in ("trace", "lyapunov", "sweep", "derivative"):
            p.add_argument("-m", "--bounces", type=int, help="override the configured bounce count")
        if name in ("trace", "lyapunov", "sweep"):
            p.add_argument("--csv", metavar="PATH", help="CSV output (overrides output.csv)")
        if name == "sweep":
            p.add_argument("--svg", metavar="PATH", help="SVG output (overrides output.svg)")
        if name == "trace":
            p.add_argument("--dps", type=int, help="trace in mpmath at this many digits")
        if name == "lyapunov":
            p.add_argument("--no-oracle", action="store_true", help="skip the Benettin cross-check")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else None
        if getattr(args, "bounces", None) is not None and args.bounces < 1:
            raise ConfigError("--bounces must be positive")
        code = handler(cfg, args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (NumericalError, AssertionError, FloatingPointError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return code


if __name__ == "__main__":
    sys.exit(main())
