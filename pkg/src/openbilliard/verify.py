"""Property battery run by ``openbilliard verify``.

Each check returns a :class:`CheckResult`; :func:`run_battery` runs them all
over the shipped scenes (plus an optional extra scene and coding) and
reports wall time.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import mpmath
import numpy as np

from . import presets
from .dynamics import PhaseState, reflect, reversed_state, trace
from .fronts import collision_operators, free_flight, propagate
from .geometry import shape_operator_ambient, tangent_frame, unit
from .lyapunov import benettin_oracle, estimate_lambda1, lambda1_bracket
from .orbits import find_periodic_orbit, refine_orbit, shadow_drift
from .output import LYAPUNOV_HEADER, SWEEP_HEADER, csv_text, lyapunov_rows
from .scene import geometric_bounds

BATTERY_BUDGET = 60.0


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f} s)"


def shipped_orbits(extra=None):
    """``(label, orbit)`` for every shipped coding, plus ``extra = (label, scene, coding)``."""
    out = []
    for name, (build, codings) in presets.SCENES.items():
        scene = build()
        for c in codings:
            out.append((f"{name}{tuple(x + 1 for x in c)}", find_periodic_orbit(scene, c)))
    if extra is not None:
        label, scene, coding = extra
        out.append((label, find_periodic_orbit(scene, coding)))
    return out


def check_reflection_identity(orbits, samples=200, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (2, 3, 5):
        for _ in range(samples):
            nu = unit(rng.standard_normal(n))
            v = unit(rng.standard_normal(n))
            if v @ nu > 0:
                v = -v
            w = reflect(v, nu)
            # reversing the outgoing ray retraces the incoming one
            back = -reflect(-w, nu)
            worst = max(worst, abs(w @ w - 1), abs(w @ nu + v @ nu), float(np.max(np.abs(back - v))))
    for _, orb in orbits:
        recs = orb.records()
        for j, r in enumerate(recs):
            v_in = recs[j - 1].v
            worst = max(worst, float(np.max(np.abs(r.v - (v_in - 2 * (v_in @ r.normal) * r.normal)))))
    return worst < 1e-12, f"max deviation {worst:.2e} (tol 1e-12)"


def check_unitarity(orbits):
    """``U`` restricted to the wave planes is orthogonal; ``V* N V`` is symmetric."""
    worst_u = worst_s = 0.0
    for _, orb in orbits:
        recs = orb.records()
        for j, r in enumerate(recs):
            v_in = recs[j - 1].v
            ops = collision_operators(r.normal, v_in, r.v)
            f_in, f_out = tangent_frame(v_in), tangent_frame(r.v)
            u = f_in.T @ ops["U"] @ f_out
            worst_u = max(worst_u, float(np.max(np.abs(u.T @ u - np.eye(len(u))))))
            n_amb = shape_operator_ambient(orb.scene[r.obstacle], r.q)
            s = f_out.T @ ops["V_star"] @ n_amb @ ops["V"] @ f_out
            worst_s = max(worst_s, float(np.max(np.abs(s - s.T))))
    ok = worst_u < 1e-12 and worst_s < 1e-12
    return ok, f"|U^T U - I| {worst_u:.2e}, |V*NV - (V*NV)^T| {worst_s:.2e} (tol 1e-12)"


def check_k_symmetry(orbits, m=200):
    """Curvature operators stay symmetric before any symmetrization."""
    worst = 0.0
    for _, orb in orbits:
        traj = orb.trajectory(m + 1)
        prev = None
        for step in propagate(orb.scene, traj):
            if prev is not None:
                r = traj.records[step.index]
                ops = collision_operators(r.normal, traj.records[step.index - 1].v, r.v)
                k_minus = prev.frame @ free_flight(prev.K, traj.records[step.index - 1].d) @ prev.frame.T
                n_amb = shape_operator_ambient(orb.scene[r.obstacle], r.q)
                raw = ops["U_inv"] @ k_minus @ ops["U"] + 2 * r.cos_phi * ops["V_star"] @ n_amb @ ops["V"]
                k = step.front.frame.T @ raw @ step.front.frame
                worst = max(worst, float(np.max(np.abs(k - k.T))) / max(1.0, float(np.max(np.abs(k)))))
            prev = step.front
    return worst < 1e-10, f"max relative asymmetry {worst:.2e} (tol 1e-10)"


def check_scale_covariance(factors=(0.4, 2.5), m=300):
    worst = 0.0
    for name in ("two_spheres", "equilateral", "ellipsoid"):
        build, codings = presets.SCENES[name]
        scene = build()
        base = estimate_lambda1(scene, codings[0], m).value
        for s in factors:
            worst = max(worst, abs(estimate_lambda1(scene.scaled(s), codings[0], m).value - base))
    return worst < 1e-10, f"max |lambda(sK) - lambda(K)| {worst:.2e} (tol 1e-10)"


def check_seed_independence(orbits, m=500, seeds=(0, 1)):
    worst = 0.0
    for _, orb in orbits:
        a, b = (estimate_lambda1(orb.scene, orb, m, seed=s).value for s in seeds)
        worst = max(worst, abs(a - b))
    return worst < 1e-8, f"max seed spread {worst:.2e} at m={m} (tol 1e-8)"


def check_csv_determinism():
    build, codings = presets.SCENES["asymmetric"]
    scene = build()
    texts = [csv_text(LYAPUNOV_HEADER, lyapunov_rows(estimate_lambda1(scene, codings[1], 100, seed=3)))
             for _ in range(2)]
    family = presets.radius_family()
    from .lyapunov import sweep_alpha
    sweeps = [csv_text(SWEEP_HEADER, sweep_alpha(family, (0, 1), [0.0, 0.01, 0.02], 50).rows())
              for _ in range(2)]
    ok = texts[0] == texts[1] and sweeps[0] == sweeps[1]
    return ok, "repeated runs byte-identical" if ok else "repeated runs differ"


def check_bracket(orbits, m=500):
    bad = []
    for label, orb in orbits:
        lam = estimate_lambda1(orb.scene, orb, m).value
        lo, hi = lambda1_bracket(geometric_bounds(orb.scene, orb.trajectory(orb.period)))
        if not lo - 1e-9 <= lam <= hi + 1e-9:
            bad.append(f"{label}: {lam:.6f} not in [{lo:.6f}, {hi:.6f}]")
    return not bad, "; ".join(bad) or f"{len(orbits)} estimates inside their brackets"


def check_oracle(orbits, m=1000):
    worst, where = 0.0, ""
    for label, orb in orbits:
        lam = estimate_lambda1(orb.scene, orb, m).value
        rel = abs(lam - benettin_oracle(orb.scene, orb, m)) / lam
        if rel >= worst:
            worst, where = rel, label
    return worst < 1e-3, f"max relative gap {worst:.2e} on {where} (tol 1e-3)"


def check_orbit_residual(orbits):
    worst = max(orb.residual for _, orb in orbits)
    return worst < 1e-12, f"max reflection residual {worst:.2e} over {len(orbits)} orbits (tol 1e-12)"


def check_time_reversal(bounces=50, dps=120, offset=1e-60):
    """Trace forward, reverse the velocity, trace back: the start is recovered."""
    build, codings = presets.SCENES["asymmetric"]
    scene = build()
    orb = refine_orbit(find_periodic_orbit(scene, codings[1]), dps)
    with mpmath.workdps(dps):
        s0 = orb.state(0)
        frame = tangent_frame(np.array([float(x) for x in s0.v]))
        kick = np.array([mpmath.mpf(x) for x in frame[:, 0]], dtype=object) * mpmath.mpf(offset)
        v = s0.v + kick
        v = v / mpmath.sqrt(v.dot(v))
        start = PhaseState(s0.q, v, s0.obstacle)
        fwd = trace(scene, start, bounces, dps=dps)
        back = trace(scene, reversed_state(fwd), bounces, dps=dps)
        err_q = float(mpmath.sqrt((back.final.q - start.q).dot(back.final.q - start.q)))
        v_end = -back.records[-1].v
        err_v = float(mpmath.sqrt((v_end - start.v).dot(v_end - start.v)))
    retraced = back.coding == tuple(reversed(fwd.coding[1:] + (fwd.final.obstacle,)))
    ok = err_q < 1e-30 and err_v < 1e-30 and retraced and back.final.obstacle == start.obstacle
    return ok, f"{bounces} bounces at {dps} digits: |dq| {err_q:.1e}, |dv| {err_v:.1e} (tol 1e-30)"


def check_shadowing(orbits, periods=10):
    worst, where = 0.0, ""
    for label, orb in orbits:
        drift = shadow_drift(orb, periods)
        if drift >= worst:
            worst, where = drift, label
    return worst < 1e-6, f"max drift over {periods} periods {worst:.1e} on {where} (tol 1e-6)"


def check_corridor(orbits, bounces=2000):
    """Post-collision eigenvalues lie in ``[2 kappa_min cos(phi)_min, 1/d_min + 2 kappa_max / cos(phi)_min]``."""
    bad = []
    for label, orb in orbits:
        series = estimate_lambda1(orb.scene, orb, bounces)
        b = geometric_bounds(orb.scene, orb.trajectory(orb.period))
        lo = 2 * b.kappa_min * b.cos_phi_max
        if series.eig_min.min() < lo - 1e-9 or series.eig_max.max() > b.eta_max + 1e-9:
            bad.append(f"{label}: [{series.eig_min.min():.4f}, {series.eig_max.max():.4f}] "
                       f"vs [{lo:.4f}, {b.eta_max:.4f}]")
    return not bad, "; ".join(bad) or f"{len(orbits)} orbits x {bounces} bounces inside the corridor"


def run_battery(extra=None, log=None):
    """Run every check; returns ``(results, total_seconds)``."""
    t0 = time.perf_counter()
    orbits = shipped_orbits(extra)
    setup = time.perf_counter() - t0
    checks = [
        ("orbit residual", lambda: check_orbit_residual(orbits)),
        ("reflection identity", lambda: check_reflection_identity(orbits)),
        ("unitarity of U", lambda: check_unitarity(orbits)),
        ("symmetry of K", lambda: check_k_symmetry(orbits)),
        ("scale covariance", check_scale_covariance),
        ("seed independence", lambda: check_seed_independence(orbits)),
        ("CSV determinism", check_csv_determinism),
        ("bracket containment", lambda: check_bracket(orbits)),
        ("oracle agreement", lambda: check_oracle(orbits)),
        ("eigenvalue corridor", lambda: check_corridor(orbits)),
        ("time reversal", check_time_reversal),
        ("shadowing", lambda: check_shadowing(orbits)),
    ]
    results = []
    for name, fn in checks:
        t = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:      # a crash is a failed check, not a crashed battery
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        res = CheckResult(name, bool(ok), detail, time.perf_counter() - t)
        results.append(res)
        if log is not None:
            log(res.line())
    total = time.perf_counter() - t0
    results.insert(0, CheckResult("orbit setup", True, f"{len(orbits)} orbits solved", setup))
    return results, total


def battery_passed(results, total) -> bool:
    return all(r.passed for r in results) and total < BATTERY_BUDGET and math.isfinite(total)
