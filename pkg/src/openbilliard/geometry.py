"""Strictly convex obstacles: spheres and ellipsoids in R^n.

Every obstacle is stored as an ellipsoid ``{x : |D^-1 Q^T (x - c)| = 1}`` with
center ``c``, radii ``D = diag(r)`` and an orthogonal axis matrix ``Q`` whose
columns are the principal axes. A sphere is the special case of equal radii
and ``Q = I``, so the unit sphere ``S^{n-1}`` doubles as a chart-free
parameterization of every boundary: ``q = c + Q D s`` with ``|s| = 1``.

The routines here accept float arrays and, for the high-precision paths in
:mod:`openbilliard.dynamics` and :mod:`openbilliard.orbits`, numpy object
arrays of ``mpmath.mpf``; see :meth:`Obstacle.lifted`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import mpmath
import numpy as np

from .errors import DomainError

BOUNDARY_TOL = 1e-9
NORMAL_TOL = 1e-12
ORTHOGONALITY_TOL = 1e-12
MAX_DIMENSION = 8


def sqrt(x):
    """Square root that keeps mpmath precision when given an ``mpf``."""
    if isinstance(x, mpmath.mpf):
        return mpmath.sqrt(x)
    return math.sqrt(x)


def norm(x):
    return sqrt(x.dot(x))


def unit(x):
    return x / norm(x)


def tangent_frame(u):
    """Orthonormal basis of the hyperplane orthogonal to the unit vector ``u``.

    Returned as the ``n x (n-1)`` matrix of basis columns, built from the
    Householder reflection sending ``u`` to a signed coordinate axis, so the
    frame is a smooth function of ``u`` away from axis switches.
    """
    n = len(u)
    k = int(np.argmax([abs(float(c)) for c in u]))
    sign = 1 if u[k] >= 0 else -1
    w = u.copy()
    w[k] = w[k] + sign
    eye = _eye(n, u.dtype)
    h = eye - np.outer(w, w) * (2 / w.dot(w))
    return np.delete(h, k, axis=1)


def _eye(n, dtype):
    if dtype == object:
        e = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                e[i, j] = mpmath.mpf(1) if i == j else mpmath.mpf(0)
        return e
    return np.eye(n)


@dataclass(frozen=True, eq=False)
class Obstacle:
    """A sphere or ellipsoid. ``orientation`` columns are the body axes."""

    kind: str
    center: np.ndarray
    radii: np.ndarray
    orientation: np.ndarray = field(default=None)

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        radii = np.asarray(self.radii, dtype=float)
        n = center.shape[0]
        if center.ndim != 1 or not 2 <= n <= MAX_DIMENSION:
            raise DomainError(f"dimension must be in [2, {MAX_DIMENSION}], got center {center!r}")
        if not np.all(np.isfinite(center)):
            raise DomainError("obstacle center must be finite")
        if self.kind not in ("sphere", "ellipsoid"):
            raise DomainError(f"unknown obstacle kind {self.kind!r}")
        if radii.shape != (n,):
            raise DomainError(f"expected {n} radii, got {radii.shape}")
        if not np.all(np.isfinite(radii)) or np.any(radii <= 0):
            raise DomainError("radii must be finite and strictly positive")
        if self.orientation is None:
            orientation = np.eye(n)
        else:
            orientation = np.asarray(self.orientation, dtype=float)
        if orientation.shape != (n, n):
            raise DomainError(f"orientation must be {n}x{n}")
        if np.max(np.abs(orientation.T @ orientation - np.eye(n))) > ORTHOGONALITY_TOL:
            raise DomainError("orientation matrix is not orthogonal")
        if self.kind == "sphere":
            if np.ptp(radii) != 0:
                raise DomainError("a sphere needs equal radii")
        center.flags.writeable = False
        radii.flags.writeable = False
        orientation.flags.writeable = False
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "orientation", orientation)

    @property
    def dimension(self) -> int:
        return self.center.shape[0]

    @cached_property
    def to_world(self):
        """``Q D``: maps the unit sphere onto the centered boundary."""
        return self.orientation * self.radii

    @cached_property
    def to_body(self):
        """``D^-1 Q^T``: maps the centered boundary onto the unit sphere."""
        return self.orientation.T / self.radii[:, None]

    @cached_property
    def metric(self):
        """``Q D^-2 Q^T``, half the Hessian of the defining quadratic."""
        return self.to_body.T @ self.to_body

    @property
    def inscribed_radius(self):
        return float(np.min(self.radii))

    @property
    def circumscribed_radius(self):
        return float(np.max(self.radii))

    def curvature_bounds(self) -> tuple[float, float]:
        """Extreme principal curvatures over the whole boundary."""
        a_min, a_max = float(np.min(self.radii)), float(np.max(self.radii))
        return a_min / a_max**2, a_max / a_min**2

    def point_from_sphere(self, s):
        return self.center + self.to_world @ s

    def sphere_preimage(self, q):
        return unit(self.to_body @ (q - self.center))

    def lifted(self) -> "_LiftedObstacle":
        """Copy with mpmath entries at the current ``mp.dps``."""
        return _LiftedObstacle(self)

    def __repr__(self):
        return (f"Obstacle({self.kind!r}, center={self.center.tolist()}, "
                f"radii={self.radii.tolist()})")


class _LiftedObstacle:
    """Duck-typed stand-in for :class:`Obstacle` with ``mpf`` arrays."""

    def __init__(self, obstacle: Obstacle):
        lift = np.vectorize(mpmath.mpf, otypes=[object])
        self.kind = obstacle.kind
        self.base = obstacle
        self.center = lift(obstacle.center)
        self.radii = lift(obstacle.radii)
        self.orientation = lift(obstacle.orientation)
        self.to_world = self.orientation * self.radii
        # the float orientation is orthogonal only to ~1e-16; invert exactly
        inv = mpmath.inverse(mpmath.matrix(self.to_world.tolist()))
        n = len(self.radii)
        self.to_body = np.array([[inv[i, j] for j in range(n)] for i in range(n)], dtype=object)
        self.metric = self.to_body.T @ self.to_body
        self.inscribed_radius = obstacle.inscribed_radius

    @property
    def dimension(self):
        return self.center.shape[0]

    point_from_sphere = Obstacle.point_from_sphere
    sphere_preimage = Obstacle.sphere_preimage


def sphere(center, radius) -> Obstacle:
    center = np.asarray(center, dtype=float)
    return Obstacle("sphere", center, np.full(center.shape[0], float(radius)))


def ellipsoid(center, radii, orientation=None) -> Obstacle:
    return Obstacle("ellipsoid", center, radii, orientation)


def boundary_offset(obstacle, q):
    """Signed distance proxy: ``(|D^-1 Q^T (q - c)| - 1) * r_min``.

    Exact for spheres; for ellipsoids it is within a factor ``r_max/r_min``
    of the true distance, which is all the boundary tolerance needs.
    """
    rho = norm(obstacle.to_body @ (q - obstacle.center))
    return (rho - 1) * obstacle.inscribed_radius


def _check_on_boundary(obstacle, q, tol):
    off = boundary_offset(obstacle, q)
    if abs(off) > tol:
        raise DomainError(f"point {np.asarray(q, dtype=float)} is {float(off):.3e} off the boundary")


def outward_normal(obstacle, q, tol=BOUNDARY_TOL):
    _check_on_boundary(obstacle, q, tol)
    return unit(obstacle.metric @ (q - obstacle.center))


def shape_operator_ambient(obstacle, q, tol=BOUNDARY_TOL):
    """Shape operator at ``q`` as an ``n x n`` matrix vanishing on the normal.

    With ``A = Q D^-2 Q^T`` and ``P`` the tangential projector, the normal
    field's differential on the tangent space is ``P A P / |A (q - c)|``.
    """
    _check_on_boundary(obstacle, q, tol)
    g = obstacle.metric @ (q - obstacle.center)
    gn = norm(g)
    nu = g / gn
    p = _eye(len(q), q.dtype) - np.outer(nu, nu)
    return p @ obstacle.metric @ p / gn


def shape_operator(obstacle, q, tol=BOUNDARY_TOL):
    """Shape operator in the orthonormal frame ``tangent_frame(normal)``."""
    frame = tangent_frame(outward_normal(obstacle, q, tol))
    s = frame.T @ shape_operator_ambient(obstacle, q, tol) @ frame
    return (s + s.T) / 2


def ray_intersect(obstacle, origin, direction, t_min=1e-12):
    """First entry point of the ray ``origin + t * direction`` into the obstacle.

    Returns ``(t, hit)`` or ``None``. Only the entry root of the quadratic is
    considered: a ray starting on the boundary and heading inward never
    "hits" the body it is leaving, and entry roots with ``t <= t_min`` are
    rejected.
    """
    roots = entry_roots(obstacle, origin, direction)
    if roots is None:
        return None
    t_entry, _ = roots
    if t_entry <= t_min:
        return None
    return t_entry, origin + t_entry * direction


def entry_roots(obstacle, origin, direction):
    """Both roots ``(t_entry, t_exit)`` of the ray/boundary quadratic, or None.

    The origin must not lie inside the obstacle by more than the boundary
    tolerance.
    """
    p = obstacle.to_body @ (origin - obstacle.center)
    e = obstacle.to_body @ direction
    a = e.dot(e)
    b = p.dot(e)
    c = p.dot(p) - 1
    if c * obstacle.inscribed_radius < -2 * BOUNDARY_TOL:
        raise DomainError("ray origin lies inside the obstacle")
    disc = b * b - a * c
    if disc < 0:
        return None
    root = sqrt(disc)
    if b > 0:
        # moving away from the center in body coordinates
        t_far = -(b + root) / a
        t_near = c / (a * t_far) if t_far != 0 else t_far
        t_near, t_far = min(t_near, t_far), max(t_near, t_far)
    else:
        t_far = (-b + root) / a
        t_near = c / (-b + root) if (-b + root) != 0 else t_far
    return t_near, t_far
