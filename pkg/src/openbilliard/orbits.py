"""Periodic orbits with a prescribed coding, found by minimizing path length.

Under condition (H) every admissible periodic word has exactly one periodic
billiard orbit, and it is the minimizer of the total length
``sum_j |q_{j+1} - q_j|`` over points ``q_j`` on the obstacles named by the
word. Boundary points are parameterized by their unit-sphere pre-images, so
the optimizer never sees chart seams.
"""

from __future__ import annotations

import math
from contextlib import nullcontext
from dataclasses import dataclass

import mpmath
import numpy as np

from .dynamics import Bounce, PhaseState, Trajectory
from .errors import DomainError, SolverError
from .geometry import BOUNDARY_TOL, boundary_offset, norm, outward_normal, tangent_frame, unit

DEFAULT_TOL = 1e-12
MAX_ITERATIONS = 100_000


def validate_coding(scene, coding) -> tuple:
    """Check a periodic word of 0-based obstacle indices and return it as a tuple."""
    word = tuple(int(x) for x in coding)
    if len(word) < 2:
        raise DomainError("a periodic coding needs at least two symbols")
    for j, x in enumerate(word):
        if not 0 <= x < len(scene):
            raise DomainError(f"coding symbol {x + 1} at position {j} is not an obstacle")
        if x == word[(j + 1) % len(word)]:
            raise DomainError(f"coding repeats obstacle {x + 1} at positions {j}, {(j + 1) % len(word)}")
    return word


def _length_and_grad(bodies, coding, s):
    """Length and its tangential gradient with respect to sphere pre-images."""
    p = len(coding)
    q = [bodies[c].point_from_sphere(s[j]) for j, c in enumerate(coding)]
    total = 0
    e = []
    for j in range(p):
        seg = q[(j + 1) % p] - q[j]
        ln = norm(seg)
        total = total + ln
        e.append(seg / ln)
    grad = []
    for j, c in enumerate(coding):
        g = bodies[c].to_world.T @ (e[j - 1] - e[j])
        grad.append(g - s[j] * s[j].dot(g))
    return total, grad


def length_functional(scene, coding, points):
    """Total cyclic path length through ``points`` and its gradient.

    The gradient is taken with respect to each point's unit-sphere pre-image
    and projected onto that sphere's tangent space; it is returned as a
    ``(p, n)`` array.
    """
    coding = validate_coding(scene, coding)
    points = np.asarray(points, dtype=float)
    if points.shape != (len(coding), scene.dimension):
        raise DomainError(f"expected {len(coding)} points in R^{scene.dimension}")
    for j, c in enumerate(coding):
        if abs(boundary_offset(scene[c], points[j])) > BOUNDARY_TOL:
            raise DomainError(f"point {j} is not on obstacle {c + 1}")
    s = [scene[c].sphere_preimage(points[j]) for j, c in enumerate(coding)]
    value, grad = _length_and_grad(scene.obstacles, coding, s)
    return float(value), np.array(grad)


def _residual(bodies, coding, q):
    """Largest tangential mismatch of incoming and outgoing directions."""
    p = len(coding)
    worst = 0
    for j, c in enumerate(coding):
        nu = outward_normal(bodies[c], q[j])
        jump = unit(q[(j + 1) % p] - q[j]) - unit(q[j] - q[j - 1])
        tang = jump - nu * nu.dot(jump)
        worst = max(worst, norm(tang))
    return worst


def reflection_residual(scene, coding, points) -> float:
    coding = validate_coding(scene, coding)
    return float(_residual(scene.obstacles, coding, np.asarray(points, dtype=float)))


@dataclass(eq=False)
class PeriodicOrbit:
    scene: object
    coding: tuple
    points: np.ndarray
    residual: float
    iterations: int = 0
    dps: int | None = None

    @property
    def period(self) -> int:
        return len(self.coding)

    def _bodies(self):
        if self.points.dtype == object:
            return [ob.lifted() for ob in self.scene.obstacles]
        return self.scene.obstacles

    def records(self) -> list:
        """One period of reflection records, starting at ``points[0]``."""
        p = self.period
        ctx = mpmath.workdps(self.dps) if self.dps else nullcontext()
        with ctx:
            bodies = self._bodies()
            out = []
            for j, c in enumerate(self.coding):
                seg = self.points[(j + 1) % p] - self.points[j]
                d = norm(seg)
                v = seg / d
                nu = outward_normal(bodies[c], self.points[j])
                out.append(Bounce(c, self.points[j], v, nu, v.dot(nu), d))
        return out

    @property
    def flight_lengths(self) -> np.ndarray:
        return np.array([float(r.d) for r in self.records()])

    @property
    def cos_phi(self) -> np.ndarray:
        return np.array([float(r.cos_phi) for r in self.records()])

    def state(self, j: int = 0) -> PhaseState:
        r = self.records()[j % self.period]
        return PhaseState(r.q, r.v, r.obstacle)

    def trajectory(self, m: int, start: int = 0) -> Trajectory:
        """The exact periodic trajectory: ``m`` records from point ``start``."""
        period = self.records()
        recs = [period[(start + j) % self.period] for j in range(m)]
        nxt = period[(start + m) % self.period]
        return Trajectory(recs, escaped=False, final=PhaseState(nxt.q, nxt.v, nxt.obstacle),
                          periodic=True)

    def rotated(self, shift: int) -> "PeriodicOrbit":
        k = shift % self.period
        return PeriodicOrbit(self.scene, self.coding[k:] + self.coding[:k],
                             np.roll(self.points, -k, axis=0), self.residual, self.iterations,
                             self.dps)


def _initial_sphere_points(scene, coding):
    p = len(coding)
    s = []
    for j, c in enumerate(coding):
        ob = scene[c]
        target = (scene[coding[j - 1]].center + scene[coding[(j + 1) % p]].center) / 2
        rel = ob.to_body @ (target - ob.center)
        if np.linalg.norm(rel) < 1e-9:
            rel = ob.to_body @ (scene[coding[(j + 1) % p]].center - ob.center)
        s.append(rel / np.linalg.norm(rel))
    return s


def _chart_gradient(bodies, coding, s0, frames, x, block):
    """Length gradient in the local charts ``s_j = unit(s0_j + F_j x_j)``."""
    s = []
    scale = []
    for j in range(len(coding)):
        raw = s0[j] + frames[j] @ x[j * block:(j + 1) * block]
        r = norm(raw)
        s.append(raw / r)
        scale.append(r)
    _, grad = _length_and_grad(bodies, coding, s)
    return np.concatenate([frames[j].T @ grad[j] / scale[j] for j in range(len(coding))]), s


def _newton_polish(bodies, coding, s, tol, max_iter, solve, h, zero):
    n = len(s[0])
    block = n - 1
    size = block * len(coding)
    q_of = lambda ss: [bodies[c].point_from_sphere(ss[j]) for j, c in enumerate(coding)]
    res = _residual(bodies, coding, q_of(s))
    it = 0
    while res >= tol and it < max_iter:
        it += 1
        frames = [tangent_frame(sj) for sj in s]
        x0 = np.array([zero] * size, dtype=object if isinstance(zero, mpmath.mpf) else float)
        g0, _ = _chart_gradient(bodies, coding, s, frames, x0, block)
        jac = np.empty((size, size), dtype=x0.dtype)
        for k in range(size):
            xp = x0.copy()
            xm = x0.copy()
            xp[k] = xp[k] + h
            xm[k] = xm[k] - h
            gp, _ = _chart_gradient(bodies, coding, s, frames, xp, block)
            gm, _ = _chart_gradient(bodies, coding, s, frames, xm, block)
            jac[:, k] = (gp - gm) / (2 * h)
        jac = (jac + jac.T) / 2
        step = solve(jac, -g0)
        accepted = False
        for _ in range(30):
            _, s_new = _chart_gradient(bodies, coding, s, frames, x0 + step, block)
            res_new = _residual(bodies, coding, q_of(s_new))
            if res_new < res:
                s, res, accepted = s_new, res_new, True
                break
            step = step / 2
        if not accepted:
            break
    return s, res, it


def _descend(bodies, coding, s, target_grad, max_iter):
    """Projected gradient descent with Armijo backtracking on the sphere pre-images."""
    length, grad = _length_and_grad(bodies, coding, s)
    tau = 1.0
    for it in range(max_iter):
        gmax = max(float(np.max(np.abs(g))) for g in grad)
        if gmax < target_grad:
            return s, it
        gsq = sum(float(g @ g) for g in grad)
        while True:
            trial = [unit(sj - tau * gj) for sj, gj in zip(s, grad)]
            new_length, new_grad = _length_and_grad(bodies, coding, trial)
            if new_length <= length - 1e-4 * tau * gsq or tau < 1e-14:
                break
            tau /= 2
        s, length, grad = trial, new_length, new_grad
        tau = min(tau * 2, 1e3)
    return s, max_iter


def find_periodic_orbit(scene, coding, tol=DEFAULT_TOL, initial_points=None,
                        max_iter=MAX_ITERATIONS) -> PeriodicOrbit:
    """Periodic orbit with the given 0-based coding, polished until the
    reflection residual drops below ``tol``."""
    coding = validate_coding(scene, coding)
    bodies = scene.obstacles
    if initial_points is None:
        s = _initial_sphere_points(scene, coding)
    else:
        s = [scene[c].sphere_preimage(np.asarray(q, dtype=float)) for c, q in zip(coding, initial_points)]
    used = 0
    s, k = _descend(bodies, coding, s, 1e-3, min(max_iter, 20_000))
    used += k
    while True:
        s, res, k = _newton_polish(bodies, coding, s, tol, 50, np.linalg.solve, 1e-6, 0.0)
        used += k
        if res < tol:
            break
        if used >= max_iter:
            raise SolverError(f"orbit solver stalled at residual {res:.3e}", residual=res)
        s, k = _descend(bodies, coding, s, 1e-8, min(max_iter - used, 20_000))
        used += k + 1
    points = np.array([bodies[c].point_from_sphere(s[j]) for j, c in enumerate(coding)])
    return PeriodicOrbit(scene, coding, points, float(res), used)


def refine_orbit(orbit: PeriodicOrbit, dps: int) -> PeriodicOrbit:
    """Re-polish an orbit in mpmath at ``dps`` digits.

    The returned orbit's points are numpy object arrays of ``mpf``; use it
    (and :func:`openbilliard.dynamics.trace` with the same ``dps``) to follow
    the orbit for many periods despite its exponential instability.
    """
    with mpmath.workdps(dps):
        bodies = [ob.lifted() for ob in orbit.scene.obstacles]
        lift = np.vectorize(mpmath.mpf, otypes=[object])
        s = [bodies[c].sphere_preimage(lift(np.asarray(q, dtype=float)))
             for c, q in zip(orbit.coding, orbit.points)]

        def solve(a, b):
            x = mpmath.lu_solve(mpmath.matrix(a.tolist()), mpmath.matrix(b.tolist()))
            return np.array([x[i] for i in range(len(b))], dtype=object)

        tol = mpmath.mpf(10) ** (-(dps - 10))
        h = mpmath.mpf(10) ** (-(dps // 3))
        s, res, it = _newton_polish(bodies, orbit.coding, s, tol, 60, solve, h, mpmath.mpf(0))
        if res >= tol:
            raise SolverError(f"high-precision polish stalled at residual {mpmath.nstr(res, 5)}",
                              residual=float(res))
        points = np.array([bodies[c].point_from_sphere(s[j]) for j, c in enumerate(orbit.coding)],
                          dtype=object)
        return PeriodicOrbit(orbit.scene, orbit.coding, points, float(res), orbit.iterations + it, dps)


def near_orbit_for_word(scene, word, tol=DEFAULT_TOL) -> PeriodicOrbit:
    """Realize an arbitrary admissible word as the periodic orbit of its
    cyclic closure; used for long random codings."""
    word = tuple(word)
    if word[0] == word[-1]:
        raise DomainError("cyclic closure repeats a symbol; drop the last symbol")
    return find_periodic_orbit(scene, word, tol)


def random_word(num_obstacles: int, length: int, seed: int = 0) -> tuple:
    """Uniformly random admissible cyclic word over ``num_obstacles`` symbols."""
    rng = np.random.default_rng(seed)
    while True:
        word = [int(rng.integers(num_obstacles))]
        for _ in range(length - 1):
            choices = [x for x in range(num_obstacles) if x != word[-1]]
            word.append(choices[int(rng.integers(len(choices)))])
        if word[0] != word[-1]:
            return tuple(word)


def shadowing_digits(orbit: PeriodicOrbit, bounces: int, target: float = 1e-6) -> int:
    """Working precision needed to follow ``orbit`` for ``bounces`` reflections.

    Errors grow like ``prod_j (1 + 2 d_j / (r_j cos(phi_j)))``, a generous
    per-bounce Lyapunov bound, so this over-estimates the digits required.
    """
    d = orbit.flight_lengths
    cos_phi = orbit.cos_phi
    kmax = np.array([orbit.scene[c].curvature_bounds()[1] for c in orbit.coding])
    per_bounce = float(np.mean(np.log1p(d * (1 / d + 2 * kmax / cos_phi))))
    return int(math.ceil(per_bounce * bounces / math.log(10) - math.log10(target))) + 20


def shadow_drift(orbit: PeriodicOrbit, periods: int = 10, dps: int | None = None) -> float:
    """Largest distance between a traced copy of ``orbit`` and its periodic points.

    The orbit is re-polished at ``dps`` digits (estimated when omitted) and
    traced with the billiard map at the same precision, so the drift measures
    how faithfully the solved points close up, not float64 round-off.
    """
    from .dynamics import trace

    bounces = periods * orbit.period
    if dps is None:
        dps = shadowing_digits(orbit, bounces)
    fine = orbit if orbit.dps is not None and orbit.dps >= dps else refine_orbit(orbit, dps)
    traj = trace(orbit.scene, fine.state(0), bounces, dps=dps)
    if traj.escaped or traj.coding != tuple(orbit.coding[j % orbit.period] for j in range(bounces)):
        raise SolverError("traced orbit left its coding", residual=math.inf)
    worst = 0.0
    with mpmath.workdps(dps):
        for j, rec in enumerate(traj.records):
            worst = max(worst, float(norm(rec.q - fine.points[j % orbit.period])))
        worst = max(worst, float(norm(traj.final.q - fine.points[bounces % orbit.period])))
    return worst
