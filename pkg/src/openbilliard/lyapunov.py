"""Largest Lyapunov exponent from front expansion factors, an independent
two-trajectory oracle, and its dependence on a deformation parameter.

``lambda_1^(m) = (1/m) sum_j log(1 + d_j ell_j)`` is accumulated after a
burn-in along the orbit's own past, so the initial flat front has already
relaxed onto the unstable front when counting starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PhaseState, Trajectory, billiard_step, trace
from .errors import DomainError, EscapeError, NumericalError, OracleError
from .fronts import FrontState, projection_along, propagate
from .geometry import outward_normal, tangent_frame, unit
from .orbits import PeriodicOrbit, find_periodic_orbit
from .scene import SceneBounds, geometric_bounds

PERIODIC_BURN_IN = 100


@dataclass(eq=False)
class LyapunovSeries:
    log_factors: np.ndarray
    partial: np.ndarray          # partial[k-1] = lambda_1^(k)
    obstacles: np.ndarray
    d: np.ndarray
    cos_phi: np.ndarray
    ell: np.ndarray
    eig_min: np.ndarray
    eig_max: np.ndarray
    burn_in: int = 0
    trajectory: Trajectory | None = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return len(self.log_factors)

    @property
    def value(self) -> float:
        return float(self.partial[-1])


def _trajectory_for(scene, source, length, burn_in):
    """Resolve ``source`` to ``(trajectory, burn_in)`` with ``length + burn_in`` records."""
    if isinstance(source, (tuple, list)):
        source = find_periodic_orbit(scene, source)
    if isinstance(source, PeriodicOrbit):
        if burn_in is None:
            burn_in = PERIODIC_BURN_IN
        return source.trajectory(burn_in + length), burn_in
    if burn_in is None:
        burn_in = 0
    if isinstance(source, PhaseState):
        traj = trace(scene, source, burn_in + length)
    elif isinstance(source, Trajectory):
        traj = source
    else:
        raise DomainError(f"cannot estimate along {type(source).__name__}")
    if traj.escaped or len(traj.records) < burn_in + length:
        raise EscapeError("trajectory escaped before the requested bounce count",
                          bounce=len(traj.records))
    return traj, burn_in


def _aligned_front(scene, orbit, burn_in, seed):
    """Front at record ``burn_in`` of a periodic orbit, with the tracked
    direction replaced by the dominant eigenvector of the one-period map.

    ``K`` forgets its flat start within the burn-in, but the tracked
    direction forgets its seed only at the rate set by the gap between the
    two largest expansions, which can be slow. Along a periodic orbit that
    limit is available directly.
    """
    p = orbit.period
    traj = orbit.trajectory(burn_in + p + 1)
    fronts = {step.index: step.front for step in propagate(scene, traj, seed=seed)
              if step.index >= burn_in}
    start = fronts[burn_in]
    M = np.eye(scene.dimension)
    for j in range(burn_in, burn_in + p):
        r, nxt = traj.records[j], traj.records[j + 1]
        flight = np.eye(scene.dimension) + r.d * fronts[j].ambient_K
        M = projection_along(nxt.normal, nxt.v) @ flight @ M
    vals, vecs = np.linalg.eig(M)
    k = int(np.argmax(np.abs(vals)))
    top = np.sort(np.abs(vals))[::-1]
    vec = vecs[:, k]
    if abs(vals[k].imag) > 1e-12 * abs(vals[k]) or (len(top) > 1 and top[1] == top[0]):
        return start     # no unique real dominant direction; keep the seeded one
    w = start.frame.T @ vec.real
    return FrontState(start.frame, start.K, w / np.linalg.norm(w))


def estimate_lambda1(scene, source, m: int, seed: int = 0, burn_in: int | None = None) -> LyapunovSeries:
    """Front-recursion estimate of the largest Lyapunov exponent.

    ``source`` is a periodic orbit, a 0-based coding (solved for its periodic
    orbit), a start :class:`PhaseState` (traced forward), or a ready
    trajectory. Reflections ``burn_in + 1 .. burn_in + m`` are averaged;
    periodic sources default to a burn-in of one hundred bounces of the
    orbit's past, after which the tracked direction is set to the orbit's
    dominant expanding direction. Other sources default to no burn-in.
    """
    if m < 1:
        raise DomainError("m must be at least 1")
    if isinstance(source, (tuple, list)):
        source = find_periodic_orbit(scene, source)
    initial = None
    if isinstance(source, PeriodicOrbit) and burn_in is None:
        burn_in = PERIODIC_BURN_IN
        initial = _aligned_front(scene, source, burn_in, seed)
        traj = source.trajectory(m + 1, start=burn_in % source.period)
        offset = 0
    else:
        traj, offset = _trajectory_for(scene, source, m + 1, burn_in)
        burn_in = offset
    cols = {k: [] for k in ("log", "ob", "d", "cos", "ell", "lo", "hi")}
    for step in propagate(scene, traj, seed=seed, initial=initial):
        if step.index <= offset:
            continue
        if step.index > offset + m:
            break
        eig = step.front.eigenvalues()
        cols["log"].append(step.log_factor)
        cols["ob"].append(step.obstacle)
        cols["d"].append(step.d)
        cols["cos"].append(step.cos_phi)
        cols["ell"].append(step.ell)
        cols["lo"].append(eig[0])
        cols["hi"].append(eig[-1])
    if len(cols["log"]) < m:
        raise EscapeError("trajectory too short for the requested bounce count",
                          bounce=offset + len(cols["log"]))
    logs = np.array(cols["log"])
    return LyapunovSeries(
        logs, np.cumsum(logs) / np.arange(1, m + 1), np.array(cols["ob"]), np.array(cols["d"]),
        np.array(cols["cos"]), np.array(cols["ell"]), np.array(cols["lo"]), np.array(cols["hi"]),
        burn_in, traj,
    )


def lambda1_bracket(bounds: SceneBounds) -> tuple[float, float]:
    """``log(1 + d_min * 2 kappa_min) <= lambda_1 <= log(1 + d_max * eta_max)``."""
    if not (bounds.d_min > 0 and bounds.kappa_min > 0 and bounds.cos_phi_max > 0):
        raise DomainError("bounds must be strictly positive")
    return (math.log1p(bounds.d_min * bounds.mu_min),
            math.log1p(bounds.d_max * bounds.eta_max))


def _shadow(scene, rec, dq, dv):
    ob = scene[rec.obstacle]
    q = ob.point_from_sphere(ob.sphere_preimage(rec.q + dq))
    return PhaseState(q, unit(rec.v + dv), rec.obstacle)


def _separation(a, b_rec):
    return np.concatenate([a.q - b_rec.q, a.v - b_rec.v])


def _benettin_run(scene, traj, m, burn_in, eps, rng):
    recs = traj.records
    first = recs[0]
    n = scene.dimension
    tq = tangent_frame(outward_normal(scene[first.obstacle], first.q))
    tv = tangent_frame(first.v)
    dq = tq @ rng.standard_normal(n - 1)
    dv = tv @ rng.standard_normal(n - 1)
    scale = eps / math.sqrt(dq @ dq + dv @ dv)
    shadow = _shadow(scene, first, dq * scale, dv * scale)
    logs = []
    for j in range(1, burn_in + m + 1):
        prev = recs[j - 1]
        sep0 = np.linalg.norm(_separation(shadow, prev))
        step = billiard_step(scene, shadow)
        ref = recs[j] if j < len(recs) else traj.final
        if step is None or step[0].obstacle != ref.obstacle:
            raise OracleError("shadow trajectory left the reference coding", bounce=j)
        nxt = step[0]
        sep = _separation(nxt, ref)
        growth = np.linalg.norm(sep)
        if j > burn_in:
            logs.append(math.log(growth / sep0))
        sep *= eps / growth
        shadow = _shadow(scene, ref, sep[:n], sep[n:])
    return float(np.mean(logs))


def benettin_oracle(scene, source, m: int, eps: float = 1e-8, seed: int = 0,
                    burn_in: int | None = None) -> float:
    """Two-trajectory estimate of the largest exponent.

    A shadow state offset by ``eps`` in a random phase direction is advanced
    one reflection at a time next to the reference trajectory; after every
    reflection the separation's growth is logged and the shadow is pulled
    back to distance ``eps``. Uses only the billiard map, never fronts.
    """
    if not 1e-10 <= eps <= 1e-6:
        raise DomainError(f"eps must lie in [1e-10, 1e-6], got {eps}")
    traj, burn_in = _trajectory_for(scene, source, m, burn_in)
    last = None
    for attempt in range(4):
        try:
            return _benettin_run(scene, traj, m, burn_in, eps / 10**attempt,
                                 np.random.default_rng(seed))
        except OracleError as exc:
            last = exc
    raise last


# --- deformation studies -------------------------------------------------


@dataclass(eq=False)
class BounceProfile:
    """Per-bounce ``d_j`` and ``ell_j`` of the averaged window at one alpha."""

    alpha: float
    lam: float
    d: np.ndarray
    ell: np.ndarray
    series: LyapunovSeries = field(repr=False)
    orbit: PeriodicOrbit = field(repr=False)


def bounce_profile(family, coding, alpha, m, seed=0, burn_in=None, tol=1e-12) -> BounceProfile:
    scene = family.scene_at(alpha)
    orbit = find_periodic_orbit(scene, coding, tol)
    series = estimate_lambda1(scene, orbit, m, seed=seed, burn_in=burn_in)
    return BounceProfile(alpha, series.value, series.d, series.ell, series, orbit)


def _log_factor_rate(d, ell, d_dot, ell_dot):
    """Per-bounce derivative of ``log(1 + d ell)``."""
    return (d_dot * ell + d * ell_dot) / (1 + d * ell)


def per_bounce_derivative(family, coding, alpha, m, h, seed=0, burn_in=None) -> float:
    """``F_m(alpha) = (1/m) sum_j f_j'(alpha)`` with ``d_j'``, ``ell_j'`` from
    second-order differences of the per-bounce quantities (one-sided at the
    ends of ``[0, b]``)."""
    at = lambda a: bounce_profile(family, coding, a, m, seed, burn_in)
    base = at(alpha)
    if alpha - h >= 0 and alpha + h <= family.b:
        lo, hi = at(alpha - h), at(alpha + h)
        d_dot = (hi.d - lo.d) / (2 * h)
        ell_dot = (hi.ell - lo.ell) / (2 * h)
    elif alpha + 2 * h <= family.b:
        # written in differences so an alpha-independent family gives exactly 0
        p1, p2 = at(alpha + h), at(alpha + 2 * h)
        d_dot = (4 * (p1.d - base.d) - (p2.d - base.d)) / (2 * h)
        ell_dot = (4 * (p1.ell - base.ell) - (p2.ell - base.ell)) / (2 * h)
    else:
        m1, m2 = at(alpha - h), at(alpha - 2 * h)
        d_dot = ((m2.d - base.d) - 4 * (m1.d - base.d)) / (2 * h)
        ell_dot = ((m2.ell - base.ell) - 4 * (m1.ell - base.ell)) / (2 * h)
    return float(np.mean(_log_factor_rate(base.d, base.ell, d_dot, ell_dot)))


@dataclass(eq=False)
class SweepResult:
    alphas: np.ndarray
    lambda1: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    fd_deriv: np.ndarray
    F_m: np.ndarray
    m: int
    coding: tuple
    errors: dict = field(default_factory=dict)

    def rows(self):
        for k, a in enumerate(self.alphas):
            yield (float(a), float(self.lambda1[k]), float(self.lower[k]), float(self.upper[k]),
                   float(self.fd_deriv[k]), float(self.F_m[k]))

    @property
    def within_bracket(self) -> bool:
        ok = np.isfinite(self.lambda1)
        return bool(np.all((self.lower[ok] - 1e-9 <= self.lambda1[ok])
                           & (self.lambda1[ok] <= self.upper[ok] + 1e-9)))


def sweep_alpha(family, coding, alphas, m, seed=0, burn_in=None, per_bounce_h=1e-4,
                with_F=True) -> SweepResult:
    """``lambda_1^(m)(alpha)``, its bracket and derivatives over a grid.

    Each grid point solves its own periodic orbit from the default start, so
    points are independent of grid order and of each other. A failure at one
    alpha is recorded in ``errors`` and leaves NaNs in that row.
    """
    alphas = np.asarray(sorted(float(a) for a in alphas))
    if alphas.size == 0:
        raise DomainError("empty alpha grid")
    k = alphas.size
    lam, lower, upper, F = (np.full(k, np.nan) for _ in range(4))
    errors = {}
    for i, a in enumerate(alphas):
        try:
            prof = bounce_profile(family, coding, a, m, seed, burn_in)
            lam[i] = prof.lam
            bounds = geometric_bounds(prof.orbit.scene, prof.orbit.trajectory(prof.orbit.period))
            lower[i], upper[i] = lambda1_bracket(bounds)
            if with_F:
                F[i] = per_bounce_derivative(family, coding, a, m, per_bounce_h, seed, burn_in)
        except (DomainError, NumericalError) as exc:
            errors[float(a)] = f"{type(exc).__name__}: {exc}"
    fd = np.full(k, np.nan)
    ok = np.isfinite(lam)
    if ok.sum() >= 3:
        fd[ok] = grid_derivative(alphas[ok], lam[ok])
    elif ok.sum() == 2:
        x, y = alphas[ok], lam[ok]
        fd[ok] = (y[1] - y[0]) / (x[1] - x[0])
    return SweepResult(alphas, lam, lower, upper, fd, F, m, tuple(coding), errors)


def grid_derivative(x, y):
    """Second-order derivative on a non-uniform grid (one-sided at the ends).

    Same stencils as ``np.gradient(..., edge_order=2)`` but written in
    differences ``y_k - y_i``, so constant data gives exactly zero.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise DomainError("need at least three grid points")
    out = np.empty_like(y)
    h1, h2 = x[1:-1] - x[:-2], x[2:] - x[1:-1]
    out[1:-1] = (h1 * h1 * (y[2:] - y[1:-1]) + h2 * h2 * (y[1:-1] - y[:-2])) / (h1 * h2 * (h1 + h2))
    for i, a, b in ((0, 1, 2), (-1, -2, -3)):
        g1, g2 = x[a] - x[i], x[b] - x[a]
        out[i] = ((y[a] - y[i]) * (g1 + g2) ** 2 - (y[b] - y[i]) * g1 * g1) / (g1 * g2 * (g1 + g2))
    return out


def continuity_modulus(sweep: SweepResult) -> float:
    """Empirical Lipschitz constant ``max_alpha |lambda(alpha) - lambda(0)| / alpha``.

    Only this observed modulus is computable; the theoretical constant built
    from bounds on ``d_j'`` and ``ell_j'`` has no closed form.
    """
    alphas = np.asarray(sweep.alphas)
    if alphas.size < 3 or not np.any(alphas == 0):
        raise DomainError("continuity modulus needs at least 3 grid points including 0")
    lam0 = sweep.lambda1[alphas == 0][0]
    pos = (alphas > 0) & np.isfinite(sweep.lambda1)
    return float(np.max(np.abs(sweep.lambda1[pos] - lam0) / alphas[pos]))


def richardson(hs, values):
    """Extrapolate ``values(h) = D + c1 h + c2 h^2 + ...`` to ``h = 0``.

    Uses as many powers as there are points minus one (least squares would
    only be needed past that, which callers do not do).
    """
    hs = np.asarray(hs, dtype=float)
    values = np.asarray(values, dtype=float)
    vander = np.vander(hs, len(hs), increasing=True)
    return float(np.linalg.solve(vander, values)[0])


@dataclass(eq=False)
class DerivativeStudy:
    hs: np.ndarray
    forward: np.ndarray          # (lambda(h) - lambda(0)) / h
    extrapolated: float          # Richardson limit over the h grid
    F_m: float
    lambda0: float
    m: int
    monotone: bool

    @property
    def gap(self) -> float:
        return abs(self.extrapolated - self.F_m)

    @property
    def errors(self) -> np.ndarray:
        return self.forward - self.F_m

    def table(self):
        for h, fd, err in zip(self.hs, self.forward, self.errors):
            yield float(h), float(fd), float(err)


def derivative_study(family, coding, m, hs, seed=0, burn_in=None) -> DerivativeStudy:
    """Forward differences of ``lambda_1^(m)`` at ``alpha = 0`` over a decreasing
    ``h`` grid, their Richardson limit, and ``F_m`` from per-bounce rates."""
    hs = np.asarray([float(h) for h in hs])
    if hs.size < 2 or np.any(np.diff(hs) >= 0):
        raise DomainError("h grid must be strictly decreasing with at least two entries")
    if hs.min() < 1e-6:
        raise DomainError("h below 1e-6 is dominated by round-off")
    base = bounce_profile(family, coding, 0.0, m, seed, burn_in)
    forward = np.array([(bounce_profile(family, coding, h, m, seed, burn_in).lam - base.lam) / h
                        for h in hs])
    extrapolated = richardson(hs, forward)
    F = per_bounce_derivative(family, coding, 0.0, m, float(hs.min()), seed, burn_in)
    err = np.abs(forward - F)
    monotone = bool(np.all(np.diff(err) <= 0)) if not family.is_constant else True
    return DerivativeStudy(hs, forward, extrapolated, F, base.lam, m, monotone)
