"""Acceptance criteria 1-8, one pass/fail line per criterion.

Run ``pytest tests/test_acceptance.py -v -s`` to see the summary lines.
"""

import math
import time

import numpy as np
import pytest

from openbilliard import presets
from openbilliard.lyapunov import (benettin_oracle, continuity_modulus, derivative_study, estimate_lambda1,
                                   lambda1_bracket, sweep_alpha)
from openbilliard.orbits import find_periodic_orbit, shadow_drift
from openbilliard.scene import geometric_bounds
from openbilliard.verify import battery_passed, run_battery

LOG_3_2SQRT2 = math.log(3 + 2 * math.sqrt(2))


def radius_lambda(alpha):
    d, kappa = 3 - 2 * alpha, 1 / (1 + alpha)
    return np.log1p(d * (kappa + np.sqrt(kappa * kappa + 2 * kappa / d)))


RADIUS_SLOPE = abs(radius_lambda(1e-20j).imag / 1e-20)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return emit


def test_criterion_1_period_two_closed_form(report):
    scene = presets.two_spheres()
    estimate_lambda1(scene, (0, 1), 10)       # import and first-call warm-up
    t = time.perf_counter()
    lam = estimate_lambda1(scene, (0, 1), 200).value
    elapsed = time.perf_counter() - t
    err = abs(lam - LOG_3_2SQRT2)
    report(1, err < 1e-9 and elapsed < 0.1,
           f"lambda1^(200) = {lam:.12f}, |error| = {err:.1e} (< 1e-9), {elapsed:.3f} s (< 0.1 s)")


def test_criterion_2_bracket_containment(report):
    bad, n = [], 0
    for name, (build, codings) in presets.SCENES.items():
        scene = build()
        for c in codings:
            orbit = find_periodic_orbit(scene, c)
            lam = estimate_lambda1(scene, orbit, 1000).value
            lo, hi = lambda1_bracket(geometric_bounds(scene, orbit.trajectory(orbit.period)))
            n += 1
            if not lo <= lam <= hi:
                bad.append(f"{name}{c}")
    orbit = find_periodic_orbit(presets.two_spheres(), (0, 1))
    lo, hi = lambda1_bracket(geometric_bounds(orbit.scene, orbit.trajectory(2)))
    two_ok = abs(lo - math.log(5)) < 1e-12 and abs(hi - math.log(6)) < 1e-12
    report(2, not bad and two_ok,
           f"{n - len(bad)}/{n} estimates inside their brackets; two-sphere bracket "
           f"[{lo:.9f}, {hi:.9f}] vs [log 5, log 6]")


@pytest.mark.parametrize("name, coding", [("two_spheres", (0, 1)), ("equilateral", (0, 1, 2)),
                                          ("asymmetric", (0, 1, 2))])
def test_criterion_3_oracle_cross_validation(report, name, coding):
    scene = presets.SCENES[name][0]()
    t = time.perf_counter()
    orbit = find_periodic_orbit(scene, coding)
    lam = estimate_lambda1(scene, orbit, 1000).value
    oracle = benettin_oracle(scene, orbit, 1000)
    elapsed = time.perf_counter() - t
    rel = abs(lam - oracle) / lam
    report(3, rel < 1e-3 and elapsed < 5,
           f"{name}: front {lam:.9f} vs oracle {oracle:.9f}, relative {rel:.1e} (< 1e-3), "
           f"{elapsed:.2f} s (< 5 s)")


def test_criterion_4_eigenvalue_corridor(report):
    total, bad = 0, []
    for name, (build, codings) in presets.SCENES.items():
        scene = build()
        per = math.ceil(10_000 / len(codings))
        for c in codings:
            orbit = find_periodic_orbit(scene, c)
            # K_1 comes from a flat front; the corridor is claimed from K_2 on
            series = estimate_lambda1(scene, orbit, per, burn_in=1)
            b = geometric_bounds(scene, orbit.trajectory(orbit.period))
            total += series.m
            label = f"{name}{tuple(x + 1 for x in c)}"
            if series.eig_min.min() < b.mu_min - 1e-9:
                bad.append(f"{label} min eig {series.eig_min.min():.4f} < 2 kappa_min = {b.mu_min:.4f}")
            if series.eig_max.max() > b.eta_max + 1e-9:
                bad.append(f"{label} max eig {series.eig_max.max():.4f} > eta_max = {b.eta_max:.4f}")
    report(4, not bad, f"{total} bounces checked; " + ("all inside [2 kappa_min, eta_max]" if not bad
                                                      else "violations: " + "; ".join(bad)))


def test_criterion_5_continuity(report):
    alphas = np.linspace(0.0, 0.01, 11)
    sweep = sweep_alpha(presets.radius_family(), (0, 1), alphas, 1000, with_F=False)
    C = continuity_modulus(sweep)
    lipschitz = bool(np.all(np.abs(sweep.lambda1[1:] - sweep.lambda1[0]) <= C * alphas[1:] + 1e-15))
    rel = abs(C - RADIUS_SLOPE) / RADIUS_SLOPE
    report(5, lipschitz and rel < 0.1,
           f"C = {C:.6f} vs |dlambda/dalpha(0)| = {RADIUS_SLOPE:.6f}, relative {rel:.1e} (< 0.1)")


def test_criterion_6_differentiability(report):
    hs = [1e-3, 5e-4, 2.5e-4]
    study = derivative_study(presets.radius_family(), (0, 1), 500, hs)
    errs = np.abs(study.errors)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    ok = study.gap < 1e-4 and study.monotone and 0.9 < slope < 1.1
    report(6, ok, f"Richardson {study.extrapolated:.10f} vs F_m {study.F_m:.10f}, gap {study.gap:.1e} "
                  f"(< 1e-4); |FD - F_m| = {', '.join(f'{e:.2e}' for e in errs)}, log-log slope {slope:.3f}")


def test_criterion_7_orbit_solver(report):
    worst_res, worst_drift, n = 0.0, 0.0, 0
    for name, (build, codings) in presets.SCENES.items():
        scene = build()
        for c in codings:
            orbit = find_periodic_orbit(scene, c)
            worst_res = max(worst_res, orbit.residual)
            worst_drift = max(worst_drift, shadow_drift(orbit, periods=10))
            n += 1
    report(7, worst_res < 1e-12 and worst_drift < 1e-6,
           f"{n} codings (period <= 6): max residual {worst_res:.1e} (< 1e-12), "
           f"max drift over 10 periods {worst_drift:.1e} (< 1e-6)")


def test_criterion_8_verify_battery(report):
    results, total = run_battery()
    failed = [r.name for r in results if not r.passed]
    report(8, battery_passed(results, total),
           f"{len(results) - len(failed)}/{len(results)} checks passed in {total:.1f} s (< 60 s)"
           + (f"; failed: {', '.join(failed)}" if failed else ""))
