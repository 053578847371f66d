"""Shipped example scenes and deformation families."""

from __future__ import annotations

import math

import numpy as np

from .deformation import DeformationFamily, DeformationRule
from .geometry import ellipsoid, sphere
from .scene import Scene


def two_spheres(radius=1.0, half_distance=2.0, dimension=3) -> Scene:
    """Two equal spheres on the first axis; the period-2 orbit has gap ``2*half_distance - 2*radius``."""
    e = np.zeros(dimension)
    e[0] = half_distance
    return Scene((sphere(-e, radius), sphere(e, radius)))


def equilateral_spheres(side=6.0, radius=1.0) -> Scene:
    """Three equal spheres in R^3 at the vertices of an equilateral triangle in the xy-plane."""
    rho = side / math.sqrt(3)
    angles = [math.pi / 2 + 2 * math.pi * k / 3 for k in range(3)]
    return Scene(tuple(sphere([rho * math.cos(a), rho * math.sin(a), 0.0], radius) for a in angles))


def asymmetric_spheres() -> Scene:
    return Scene((
        sphere([0.0, 0.0, 0.0], 1.0),
        sphere([5.2, 0.4, 0.0], 1.3),
        sphere([1.9, 4.6, 0.9], 0.8),
    ))


def ellipsoid_scene() -> Scene:
    """Two spheres and a tilted ellipsoid in R^3."""
    c, s = math.cos(0.4), math.sin(0.4)
    tilt = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return Scene((
        sphere([0.0, 0.0, 0.0], 1.0),
        sphere([6.0, 0.0, 0.0], 1.0),
        ellipsoid([3.0, 5.0, 0.3], [1.4, 0.9, 1.0], tilt),
    ))


def collinear_spheres() -> Scene:
    """Violates condition (H): the middle sphere blocks the outer pair."""
    return Scene((sphere([0.0, 0.0, 0.0], 1.0), sphere([4.0, 0.0, 0.0], 1.0),
                  sphere([8.0, 0.0, 0.0], 1.0)))


def planar_disks() -> Scene:
    """Three disks in R^2, the degenerate scalar-curvature case."""
    return Scene((sphere([0.0, 0.0], 1.0), sphere([6.0, 0.0], 1.0), sphere([3.0, 5.0], 1.2)))


def radius_family(b=0.2) -> DeformationFamily:
    """Spheres at ``(+-2.5, 0, 0)`` with radii ``1 + alpha``."""
    return DeformationFamily(two_spheres(1.0, 2.5),
                             (DeformationRule(0, "scale"), DeformationRule(1, "scale")), b)


def radial_translation_family(b=0.5) -> DeformationFamily:
    """Second sphere of the two-sphere scene moving outward along the axis."""
    return DeformationFamily(two_spheres(), (DeformationRule(1, "translate", vector=(1.0, 0.0, 0.0)),), b)


def asymmetric_translation_family(b=0.2) -> DeformationFamily:
    """Third sphere of :func:`asymmetric_spheres` drifting off the triangle plane."""
    return DeformationFamily(asymmetric_spheres(),
                             (DeformationRule(2, "translate", vector=(0.3, -0.2, 1.0)),), b)


def constant_family(b=0.2) -> DeformationFamily:
    return DeformationFamily(equilateral_spheres(), (DeformationRule(0, "identity"),), b)


# scene name -> (builder, shipped codings, 0-based)
SCENES = {
    "two_spheres": (two_spheres, [(0, 1)]),
    "equilateral": (equilateral_spheres, [(0, 1, 2), (0, 2, 1), (0, 1, 0, 2),
                                          (0, 1, 2, 1, 2), (0, 1, 0, 1, 0, 2), (0, 1, 2, 0, 2, 1)]),
    "asymmetric": (asymmetric_spheres, [(0, 1), (0, 1, 2), (0, 1, 0, 2), (0, 2, 1, 2, 1, 2)]),
    "ellipsoid": (ellipsoid_scene, [(0, 1), (0, 1, 2), (0, 2, 1, 2)]),
    "planar": (planar_disks, [(0, 1, 2), (0, 1, 0, 2)]),
}

FAMILIES = {
    "radius": radius_family,
    "radial_translation": radial_translation_family,
    "asymmetric_translation": asymmetric_translation_family,
    "constant": constant_family,
}
