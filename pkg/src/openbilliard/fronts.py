"""Curvature-operator propagation of convex fronts along a trajectory.

A front at a reflection is stored as its curvature operator ``K`` in an
orthonormal frame of the hyperplane orthogonal to the outgoing velocity,
together with the unit tangent direction ``w`` whose stretching is tracked.
Between reflections the front flattens, ``K -> K (I + d K)^-1``; at a
reflection it picks up the obstacle's shape operator,

    K_j = U^-1 K^- U + 2 cos(phi) V* N V,

where ``U``, ``U^-1``, ``V`` and ``V*`` are the oblique projections between
the incoming wave plane, the outgoing wave plane and the obstacle's tangent
plane (along the normal or along the outgoing velocity, as appropriate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GrazingError
from .geometry import shape_operator_ambient, tangent_frame

GRAZING_TOL = 1e-10
SYMMETRY_TOL = 1e-10
FACTOR_CONSISTENCY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FrontState:
    """Front on the plane ``frame^perp``; ``K`` and ``w`` are in frame coordinates."""

    frame: np.ndarray
    K: np.ndarray
    w: np.ndarray

    @property
    def ambient_K(self) -> np.ndarray:
        return self.frame @ self.K @ self.frame.T

    @property
    def ambient_w(self) -> np.ndarray:
        return self.frame @ self.w

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.K)


def free_flight(K, d):
    """Curvature after flying a distance ``d``: ``K (I + d K)^-1``.

    Solved as a linear system rather than through ``K^-1`` so flat
    directions (zero eigenvalues) pass through unchanged.
    """
    if d < 0:
        raise DomainError("flight length must be non-negative")
    K = np.asarray(K, dtype=float)
    try:
        out = np.linalg.solve(np.eye(K.shape[0]) + d * K, K)
    except np.linalg.LinAlgError as exc:
        raise AssertionError("I + dK is singular; K must be positive semi-definite") from exc
    return (out + out.T) / 2


def projection_along(direction, onto_normal):
    """Matrix of the projection parallel to ``direction`` onto ``onto_normal^perp``:
    ``w -> w - <w, onto_normal> / <direction, onto_normal> * direction``."""
    return np.eye(len(direction)) - np.outer(direction, onto_normal) / direction.dot(onto_normal)


def collision_operators(nu, v_in, v_out):
    """Ambient matrices of ``U``, ``U^-1``, ``V`` and ``V*`` at one reflection.

    ``U`` maps the outgoing wave plane onto the incoming one and ``U^-1`` back,
    both parallel to the normal; ``V`` maps the outgoing wave plane onto the
    tangent plane parallel to ``v_out`` and ``V*`` maps the tangent plane
    back parallel to the normal.
    """
    return {
        "U": projection_along(nu, v_in),
        "U_inv": projection_along(nu, v_out),
        "V": projection_along(v_out, nu),
        "V_star": projection_along(nu, v_out),
    }


def _orthonormalize(vectors, v):
    """Gram-Schmidt on ``vectors`` (columns) inside ``v^perp``."""
    out = []
    for col in vectors.T:
        u = col - v * v.dot(col)
        for e in out:
            u = u - e * e.dot(u)
        out.append(u / np.linalg.norm(u))
    return np.array(out).T


def collision_update(front: FrontState, nu, v_in, v_out, cos_phi, N) -> FrontState:
    """Front after a reflection, given the pre-collision front on ``v_in^perp``.

    ``N`` is the obstacle's shape operator as an ambient matrix vanishing on
    ``nu``. The tracked direction crosses the collision through ``U^-1``.
    """
    if cos_phi <= GRAZING_TOL:
        raise GrazingError(f"grazing collision (cos phi = {cos_phi:.3e})")
    ops = collision_operators(nu, v_in, v_out)
    k_minus = front.ambient_K
    k_amb = ops["U_inv"] @ k_minus @ ops["U"] + 2 * cos_phi * ops["V_star"] @ N @ ops["V"]
    frame = _orthonormalize(ops["U_inv"] @ front.frame, v_out)
    K = frame.T @ k_amb @ frame
    asym = np.max(np.abs(K - K.T))
    if asym > SYMMETRY_TOL * max(1.0, np.max(np.abs(K))):
        raise AssertionError(f"collision produced a non-symmetric curvature operator ({asym:.2e})")
    K = (K + K.T) / 2
    w = frame.T @ (ops["U_inv"] @ front.ambient_w)
    return FrontState(frame, K, w / np.linalg.norm(w))


def expansion_factor(front: FrontState, d: float):
    """Stretch ``|w + d K w|`` of the tracked direction over a flight ``d``.

    Returns ``(factor, ell, delta)`` with ``factor = 1 + d * ell`` and
    ``delta = 1 / factor``.
    """
    if not d > 0:
        raise DomainError(f"flight length must be positive, got {d}")
    kw = front.K @ front.w
    factor = float(np.linalg.norm(front.w + d * kw))
    k_dir = float(front.w @ kw)
    squared = 1 + 2 * d * k_dir + d * d * float(kw @ kw)
    if abs(factor * factor - squared) > FACTOR_CONSISTENCY_TOL * squared:
        raise AssertionError("expansion factor disagrees with its normal-curvature expansion")
    return factor, (factor - 1) / d, 1 / factor


def flat_front(v, seed=0, rng=None) -> FrontState:
    """Flat front (``K = 0``) on ``v^perp`` with a seeded random tracked direction."""
    frame = tangent_frame(np.asarray(v, dtype=float))
    if rng is None:
        rng = np.random.default_rng(seed)
    g = rng.standard_normal(len(v))
    w = frame.T @ g
    return FrontState(frame, np.zeros((len(v) - 1, len(v) - 1)), w / np.linalg.norm(w))


@dataclass(frozen=True)
class FrontStep:
    """Front quantities at reflection ``index`` of a trajectory."""

    index: int
    obstacle: int
    d: float
    cos_phi: float
    factor: float
    ell: float
    front: FrontState

    @property
    def log_factor(self) -> float:
        return math.log(self.factor)

    @property
    def delta(self) -> float:
        return 1 / self.factor


def propagate(scene, trajectory, seed=0, initial: FrontState | None = None):
    """Yield a :class:`FrontStep` for reflections ``1, 2, ...`` of ``trajectory``.

    The front starts at record 0 (flat unless ``initial`` is given). A record
    with ``d = inf`` (the escape flight) ends the run.
    """
    recs = trajectory.records
    if not recs:
        return
    first = recs[0]
    front = initial if initial is not None else flat_front(first.v, seed)
    d_prev = first.d
    v_prev = first.v
    _check_flight(d_prev, 0)
    for j in range(1, len(recs)):
        r = recs[j]
        factor, _, _ = expansion_factor(front, d_prev)
        flown_w = (front.w + d_prev * (front.K @ front.w)) / factor
        pre = FrontState(front.frame, free_flight(front.K, d_prev), flown_w)
        N = shape_operator_ambient(scene[r.obstacle], r.q)
        front = collision_update(pre, r.normal, v_prev, r.v, r.cos_phi, N)
        if not math.isfinite(r.d):
            return
        f, ell, _ = expansion_factor(front, r.d)
        yield FrontStep(j, r.obstacle, r.d, r.cos_phi, f, ell, front)
        d_prev, v_prev = r.d, r.v


def _check_flight(d, j):
    if not (math.isfinite(d) and d > 0):
        raise DomainError(f"record {j} has no finite flight length")
