"""The billiard map: specular reflection and obstacle-to-obstacle flights."""

from __future__ import annotations

import math
from contextlib import nullcontext
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import DomainError, EscapeError, GrazingError
from .geometry import entry_roots, norm, outward_normal

GRAZING_TOL = 1e-10
SELF_HIT_TOL = 1e-9
TIE_TOL = 1e-12
SPEED_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PhaseState:
    """A point ``q`` on obstacle ``obstacle`` with outgoing unit velocity ``v``."""

    q: np.ndarray
    v: np.ndarray
    obstacle: int

    def as_float(self) -> "PhaseState":
        return PhaseState(np.asarray(self.q, dtype=float), np.asarray(self.v, dtype=float), self.obstacle)


@dataclass(frozen=True, eq=False)
class Bounce:
    """One reflection record; ``d`` is the flight length to the next reflection."""

    obstacle: int
    q: np.ndarray
    v: np.ndarray
    normal: np.ndarray
    cos_phi: float
    d: float


@dataclass(eq=False)
class Trajectory:
    records: list
    escaped: bool = False
    final: PhaseState | None = None
    periodic: bool = field(default=False, repr=False)

    @property
    def bounces(self) -> int:
        return len(self.records)

    @property
    def coding(self) -> tuple:
        return tuple(r.obstacle for r in self.records)

    @property
    def points(self) -> np.ndarray:
        return np.array([r.q for r in self.records])

    def as_float(self) -> "Trajectory":
        recs = [Bounce(r.obstacle, np.asarray(r.q, dtype=float), np.asarray(r.v, dtype=float),
                       np.asarray(r.normal, dtype=float), float(r.cos_phi), float(r.d))
                for r in self.records]
        final = self.final.as_float() if self.final is not None else None
        return Trajectory(recs, self.escaped, final, self.periodic)


def reflect(v, nu, grazing=GRAZING_TOL):
    """Specular reflection ``v - 2 <v, nu> nu`` of an incoming velocity."""
    c = v.dot(nu)
    if c >= -grazing:
        raise GrazingError(f"velocity is not incoming (<v, nu> = {float(c):.3e})")
    return v - 2 * c * nu


def _bodies(scene, dps):
    if dps is None:
        return scene.obstacles
    return tuple(ob.lifted() for ob in scene.obstacles)


def _step(bodies, state, grazing):
    best = None
    for i, ob in enumerate(bodies):
        roots = entry_roots(ob, state.q, state.v)
        if roots is None:
            continue
        t = roots[0]
        if i == state.obstacle:
            # a strictly convex body cannot be re-entered right after leaving it
            if t >= SELF_HIT_TOL:
                raise AssertionError(f"ray re-enters its own obstacle {i + 1} at t={float(t):.3e}")
            continue
        if t <= TIE_TOL:
            continue
        if best is None or t < best[0] - TIE_TOL:
            best = (t, i)
    if best is None:
        return None
    t, i = best
    hit = state.q + t * state.v
    nu = outward_normal(bodies[i], hit)
    cos_phi = -state.v.dot(nu)
    if cos_phi < grazing:
        raise GrazingError(f"grazing collision with obstacle {i + 1} (cos phi = {float(cos_phi):.3e})")
    v_new = state.v + 2 * cos_phi * nu
    return PhaseState(hit, v_new, i), t, cos_phi


def billiard_step(scene, state: PhaseState, grazing=GRAZING_TOL):
    """Advance to the next reflection; ``None`` if the ray escapes.

    Returns ``(next_state, flight_length, cos_phi)``. Obstacles hit at equal
    distance (within 1e-12) resolve to the lowest index.
    """
    return _step(scene.obstacles, state, grazing)


def _lift_state(state, dps):
    lift = np.vectorize(mpmath.mpf, otypes=[object])
    q, v = state.q, state.v
    if q.dtype != object:
        q, v = lift(q), lift(v)
    return PhaseState(q, v, state.obstacle)


def trace(scene, state: PhaseState, m: int, grazing=GRAZING_TOL, dps=None) -> Trajectory:
    """Apply the billiard map up to ``m`` times.

    The returned records are the start point and the reflections reached
    before the last step, each carrying its outgoing flight length, so a
    complete run has ``m`` records plus the state after the ``m``-th step in
    ``final``. On escape the last record has ``d = inf`` and ``escaped`` is set.

    With ``dps`` the whole computation runs in mpmath at that many decimal
    digits; chaotic orbits need roughly ``lambda_1 * m / ln 10`` digits beyond
    the target accuracy to be followed for ``m`` bounces.
    """
    if m < 1:
        raise DomainError("m must be at least 1")
    ctx = mpmath.workdps(dps) if dps is not None else nullcontext()
    with ctx:
        bodies = _bodies(scene, dps)
        if dps is not None:
            state = _lift_state(state, dps)
        speed = norm(state.v)
        if abs(speed - 1) > SPEED_TOL:
            raise DomainError(f"velocity must be a unit vector (|v| = {float(speed)!r})")
        nu = outward_normal(bodies[state.obstacle], state.q)
        cos_phi = state.v.dot(nu)
        if cos_phi < grazing:
            raise GrazingError("start state is not outgoing", bounce=0)
        records = []
        for j in range(m):
            try:
                step = _step(bodies, state, grazing)
            except GrazingError as exc:
                raise GrazingError(str(exc), bounce=j + 1, record=state) from exc
            if step is None:
                records.append(Bounce(state.obstacle, state.q, state.v, nu, cos_phi, math.inf))
                return Trajectory(records, escaped=True, final=None)
            nxt, d, cos_next = step
            records.append(Bounce(state.obstacle, state.q, state.v, nu, cos_phi, d))
            state, cos_phi = nxt, cos_next
            nu = outward_normal(bodies[state.obstacle], state.q)
        return Trajectory(records, escaped=False, final=state)


def reversed_state(traj: Trajectory) -> PhaseState:
    """Time reversal of the final state: same point, reversed incoming velocity."""
    if traj.final is None:
        raise EscapeError("trajectory escaped; nothing to reverse")
    return PhaseState(traj.final.q, -traj.records[-1].v, traj.final.obstacle)
