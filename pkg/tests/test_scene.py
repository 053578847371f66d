import itertools
import math

import numpy as np
import pytest

from openbilliard import presets
from openbilliard.errors import DomainError
from openbilliard.geometry import ellipsoid, sphere
from openbilliard.lyapunov import lambda1_bracket
from openbilliard.orbits import find_periodic_orbit
from openbilliard.scene import Scene, SceneBounds, boundary_gap, check_no_eclipse, geometric_bounds


def triangle(side, r=1.0):
    rho = side / math.sqrt(3)
    return [sphere([rho * math.cos(a), rho * math.sin(a), 0.0], r)
            for a in (math.pi / 2 + 2 * math.pi * k / 3 for k in range(3))]


def _sampled_hull_clearance(a, b, c, samples=20001):
    t = np.linspace(0, 1, samples)[:, None]
    centers = (1 - t) * a.center + t * b.center
    radii = (1 - t[:, 0]) * a.circumscribed_radius + t[:, 0] * b.circumscribed_radius
    return np.min(np.linalg.norm(c.center - centers, axis=1) - radii - c.circumscribed_radius)


def test_equilateral_side_10_satisfies_h():
    obs = triangle(10.0)
    report = check_no_eclipse(Scene(tuple(obs)))
    assert report.holds and not report.vacuous
    sampled = min(_sampled_hull_clearance(obs[i], obs[k], obs[j])
                  for j in range(3) for i, k in itertools.combinations([x for x in range(3) if x != j], 2))
    assert report.margin == pytest.approx(sampled, abs=1e-6)


def test_collinear_violation_triple():
    report = check_no_eclipse(presets.collinear_spheres())
    assert not report.holds
    i, k, j = report.violation
    assert {i, k} == {0, 2} and j == 1
    assert "1,3" in report.describe() and "obstacle 2" in report.describe()


def test_two_obstacles_is_vacuous():
    report = check_no_eclipse(presets.two_spheres())
    assert report.holds and report.vacuous


def test_no_eclipse_is_permutation_invariant():
    obs = list(presets.collinear_spheres().obstacles)
    for perm in itertools.permutations(range(3)):
        report = check_no_eclipse(Scene(tuple(obs[p] for p in perm)))
        assert not report.holds
        blocked = perm[report.violation[2]]
        assert blocked == 1
    obs = triangle(6.0)
    assert all(check_no_eclipse(Scene(tuple(obs[p] for p in perm))).holds
               for perm in itertools.permutations(range(3)))


def test_overlapping_obstacles_rejected():
    with pytest.raises(DomainError):
        Scene((sphere([0, 0, 0], 1.0), sphere([1.5, 0, 0], 1.0)))
    with pytest.raises(DomainError):
        Scene((sphere([0, 0, 0], 1.0),))


def test_boundary_gap_ellipsoid_matches_axis_distance():
    a = ellipsoid([0, 0, 0], [2.0, 1.0, 1.0])
    b = sphere([5.0, 0, 0], 1.0)
    assert boundary_gap(a, b) == pytest.approx(2.0, abs=1e-6)
    assert boundary_gap(sphere([0, 0, 0], 1), b) == pytest.approx(3.0)


def test_bounds_two_spheres():
    scene = presets.two_spheres()
    b = geometric_bounds(scene)
    assert (b.kappa_min, b.kappa_max, b.d_min, b.d_max) == pytest.approx((1, 1, 2, 2))
    orbit = find_periodic_orbit(scene, (0, 1))
    bt = geometric_bounds(scene, orbit.trajectory(2))
    assert bt.cos_phi_max == pytest.approx(1.0, abs=1e-15)


def test_bounds_equilateral_gaps():
    b = geometric_bounds(presets.equilateral_spheres())
    assert b.d_min == pytest.approx(4.0) and b.d_max == pytest.approx(4.0)


def test_aperture_bound_is_below_observed_cosines(shipped_orbits):
    for (name, _), orbit in shipped_orbits.items():
        aperture = geometric_bounds(orbit.scene).cos_phi_max
        assert aperture <= orbit.cos_phi.min() + 1e-12


def test_scene_bounds_validation():
    with pytest.raises(DomainError):
        SceneBounds(1.0, 1.0, 0.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        SceneBounds(1.0, 0.5, 1.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        SceneBounds(1.0, 1.0, 1.0, 1.0, 0.0)


def test_bracket_two_spheres_closed_form():
    orbit = find_periodic_orbit(presets.two_spheres(), (0, 1))
    lo, hi = lambda1_bracket(geometric_bounds(orbit.scene, orbit.trajectory(2)))
    assert lo == pytest.approx(math.log(5), abs=1e-12)
    assert hi == pytest.approx(math.log(6), abs=1e-12)
    assert lo < hi
