"""Obstacle collections, the no-eclipse condition (H), and global bounds."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError
from .geometry import Obstacle, outward_normal

GAP_TOL = 1e-9
_GOLDEN = (math.sqrt(5) - 1) / 2
_HULL_SAMPLES = 10_000
_APERTURE_SAMPLES = 4000


def boundary_gap(a: Obstacle, b: Obstacle) -> float:
    """Euclidean distance between two convex obstacles (0 if they overlap)."""
    if a.kind == "sphere" and b.kind == "sphere":
        return max(0.0, float(np.linalg.norm(a.center - b.center) - a.radii[0] - b.radii[0]))
    n = a.dimension

    def objective(z):
        diff = z[:n] - z[n:]
        return diff @ diff, np.concatenate([2 * diff, -2 * diff])

    def inside(ob, sl):
        def fun(z):
            y = ob.to_body @ (z[sl] - ob.center)
            return 1.0 - y @ y

        def jac(z):
            y = ob.to_body @ (z[sl] - ob.center)
            g = np.zeros(2 * n)
            g[sl] = -2 * ob.to_body.T @ y
            return g

        return {"type": "ineq", "fun": fun, "jac": jac}

    # start from the boundary points facing each other along the center line
    axis = b.center - a.center
    za = a.point_from_sphere(_facing(a, axis))
    zb = b.point_from_sphere(_facing(b, -axis))
    res = optimize.minimize(
        objective, np.concatenate([za, zb]), jac=True, method="SLSQP",
        constraints=[inside(a, slice(0, n)), inside(b, slice(n, 2 * n))],
        options={"ftol": 1e-15, "maxiter": 500},
    )
    return float(math.sqrt(max(res.fun, 0.0)))


def _facing(ob: Obstacle, direction):
    s = ob.orientation.T @ direction * ob.radii
    return s / np.linalg.norm(s)


@dataclass(frozen=True, eq=False)
class Scene:
    obstacles: tuple

    def __post_init__(self):
        obstacles = tuple(self.obstacles)
        if len(obstacles) < 2:
            raise DomainError("a scene needs at least two obstacles")
        dims = {ob.dimension for ob in obstacles}
        if len(dims) != 1:
            raise DomainError(f"obstacles of mixed dimension {sorted(dims)}")
        object.__setattr__(self, "obstacles", obstacles)
        for i, j in itertools.combinations(range(len(obstacles)), 2):
            if boundary_gap(obstacles[i], obstacles[j]) <= GAP_TOL:
                raise DomainError(f"obstacles {i + 1} and {j + 1} are not disjoint")

    @property
    def dimension(self) -> int:
        return self.obstacles[0].dimension

    def __len__(self):
        return len(self.obstacles)

    def __getitem__(self, i) -> Obstacle:
        return self.obstacles[i]

    def scaled(self, factor: float) -> "Scene":
        """All lengths multiplied by ``factor`` (about the origin)."""
        return Scene(tuple(
            Obstacle(ob.kind, ob.center * factor, ob.radii * factor, ob.orientation)
            for ob in self.obstacles
        ))

    def pairwise_gaps(self) -> np.ndarray:
        z = len(self)
        gaps = np.full((z, z), np.inf)
        for i, j in itertools.combinations(range(z), 2):
            gaps[i, j] = gaps[j, i] = boundary_gap(self.obstacles[i], self.obstacles[j])
        return gaps


@dataclass(frozen=True)
class NoEclipseReport:
    holds: bool
    violation: tuple | None = None      # (i, k, j): hull of K_i, K_k meets K_j, 0-based
    conservative: bool = False          # ellipsoids judged through bounding balls
    vacuous: bool = False
    margin: float = math.inf            # smallest hull-to-obstacle clearance found

    def describe(self) -> str:
        if self.vacuous:
            return "condition (H) holds vacuously (fewer than 3 obstacles)"
        if self.holds:
            tag = " (conservative: circumscribed balls)" if self.conservative else ""
            return f"condition (H) holds, margin {self.margin:.6g}{tag}"
        i, k, j = (x + 1 for x in self.violation)
        tag = " (inconclusive for ellipsoids)" if self.conservative else ""
        return f"condition (H) violated: hull of obstacles {i},{k} meets obstacle {j}{tag}"


def _hull_clearance(ci, ri, ck, rk, cj, rj):
    """min over t of |c_j - c(t)| - r(t) - r_j for the ball hull of i and k."""

    def h(t):
        return float(np.linalg.norm(cj - ((1 - t) * ci + t * ck)) - ((1 - t) * ri + t * rk) - rj)

    lo, hi = 0.0, 1.0
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = h(x1), h(x2)
    while hi - lo > 1e-10:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = h(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = h(x2)
    golden = min(f1, f2, h(0.0), h(1.0))
    # dense-sampling cross-check of the 1-D minimization
    t = np.linspace(0.0, 1.0, _HULL_SAMPLES)[:, None]
    centers = (1 - t) * ci + t * ck
    sampled = np.min(np.linalg.norm(cj - centers, axis=1) - ((1 - t[:, 0]) * ri + t[:, 0] * rk) - rj)
    return min(golden, float(sampled))


def check_no_eclipse(scene: Scene) -> NoEclipseReport:
    obs = scene.obstacles
    if len(obs) < 3:
        return NoEclipseReport(holds=True, vacuous=True)
    has_ellipsoid = any(ob.kind == "ellipsoid" for ob in obs)
    margin = math.inf
    for j in range(len(obs)):
        for i, k in itertools.combinations([x for x in range(len(obs)) if x != j], 2):
            a, b, c = obs[i], obs[k], obs[j]
            clearance = _hull_clearance(a.center, a.circumscribed_radius, b.center,
                                        b.circumscribed_radius, c.center, c.circumscribed_radius)
            if clearance > 0:
                margin = min(margin, clearance)
                continue
            if not has_ellipsoid:
                return NoEclipseReport(holds=False, violation=(i, k, j), margin=clearance)
            inner = _hull_clearance(a.center, a.inscribed_radius, b.center,
                                    b.inscribed_radius, c.center, c.inscribed_radius)
            return NoEclipseReport(holds=False, violation=(i, k, j),
                                   conservative=inner > 0, margin=clearance)
    return NoEclipseReport(holds=True, conservative=has_ellipsoid, margin=margin)


@dataclass(frozen=True)
class SceneBounds:
    kappa_min: float
    kappa_max: float
    d_min: float
    d_max: float
    cos_phi_max: float
    d_source: str = "pairwise"
    cos_phi_source: str = "aperture"

    def __post_init__(self):
        if not 0 < self.kappa_min <= self.kappa_max:
            raise DomainError(f"need 0 < kappa_min <= kappa_max, got {self.kappa_min}, {self.kappa_max}")
        if not 0 < self.d_min <= self.d_max:
            raise DomainError(f"need 0 < d_min <= d_max, got {self.d_min}, {self.d_max}")
        if not 0 < self.cos_phi_max <= 1:
            raise DomainError(f"need 0 < cos_phi_max <= 1, got {self.cos_phi_max}")

    @property
    def mu_min(self) -> float:
        """Lower eigenvalue bound ``2 kappa_min`` for post-collision fronts."""
        return 2 * self.kappa_min

    @property
    def eta_max(self) -> float:
        """Upper eigenvalue bound ``1/d_min + 2 kappa_max / cos(phi_max)``."""
        return 1 / self.d_min + 2 * self.kappa_max / self.cos_phi_max


def geometric_bounds(scene: Scene, trajectory=None) -> SceneBounds:
    """Curvature, flight-length and collision-angle bounds.

    Without a trajectory the flight lengths come from pairwise boundary gaps
    and the angle from :func:`aperture_cos_phi`; with one, the observed
    ``d_j`` and ``cos(phi_j)`` are used instead.
    """
    curv = np.array([ob.curvature_bounds() for ob in scene.obstacles])
    kappa_min, kappa_max = float(curv[:, 0].min()), float(curv[:, 1].max())
    if trajectory is None:
        gaps = scene.pairwise_gaps()
        finite = gaps[np.isfinite(gaps)]
        return SceneBounds(kappa_min, kappa_max, float(finite.min()), float(finite.max()),
                           aperture_cos_phi(scene), "pairwise", "aperture")
    d = np.array([r.d for r in trajectory.records], dtype=float)
    d = d[np.isfinite(d)]
    cos_phi = np.array([r.cos_phi for r in trajectory.records], dtype=float)
    if d.size == 0:
        raise DomainError("trajectory has no completed flights")
    return SceneBounds(kappa_min, kappa_max, float(d.min()), float(d.max()),
                       float(cos_phi.min()), "trajectory", "trajectory")


def _sample_directions(n, count, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((count, n))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def aperture_cos_phi(scene: Scene) -> float:
    """Conservative lower bound for ``cos(phi)`` over all collisions.

    For a collision on ``K_j`` coming from ``K_i`` and leaving towards ``K_k``
    the collision angle is at most half the angle subtended at the collision
    point by the bounding balls of ``K_i`` and ``K_k``, and at most the angle
    between the normal and either bounding cone. The bound is maximized over
    sampled boundary points of ``K_j`` that can see both cones.
    """
    obs = scene.obstacles
    dirs = _sample_directions(scene.dimension, _APERTURE_SAMPLES)
    worst = 0.0
    for j, ob in enumerate(obs):
        pts = np.array([ob.point_from_sphere(s) for s in dirs])
        normals = np.array([outward_normal(ob, p) for p in pts])
        cones = []
        for i, other in enumerate(obs):
            if i == j:
                cones.append(None)
                continue
            rel = other.center - pts
            dist = np.linalg.norm(rel, axis=1)
            axis = rel / dist[:, None]
            half = np.arcsin(np.minimum(1.0, other.circumscribed_radius / dist))
            tilt = np.arccos(np.clip(np.sum(axis * normals, axis=1), -1, 1))
            cones.append((axis, half, tilt + half))
        for i, k in itertools.product(range(len(obs)), repeat=2):
            if i == j or k == j:
                continue
            ax_i, half_i, reach_i = cones[i]
            ax_k, half_k, reach_k = cones[k]
            between = np.arccos(np.clip(np.sum(ax_i * ax_k, axis=1), -1, 1))
            bound = np.minimum.reduce([(between + half_i + half_k) / 2, reach_i, reach_k])
            visible = (reach_i < np.pi / 2) & (reach_k < np.pi / 2)
            if i == k:
                # the normal must bisect two directions inside one cone
                visible &= (reach_i - half_i) <= half_i
            if np.any(visible):
                worst = max(worst, float(bound[visible].max()))
    return float(max(math.cos(min(worst, math.pi / 2)), 1e-6))
