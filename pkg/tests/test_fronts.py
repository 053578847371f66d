import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from openbilliard import presets
from openbilliard.dynamics import reflect
from openbilliard.errors import DomainError, GrazingError
from openbilliard.fronts import (FrontState, collision_operators, collision_update, expansion_factor,
                                 flat_front, free_flight, propagate)
from openbilliard.geometry import shape_operator_ambient, tangent_frame
from openbilliard.lyapunov import benettin_oracle, estimate_lambda1
from openbilliard.orbits import find_periodic_orbit

from conftest import kstar


def spd(rng, n):
    a = rng.standard_normal((n, n))
    return a @ a.T + 0.1 * np.eye(n)


def test_free_flight_zero_and_scalar():
    K = np.diag([1.0, 2.0])
    assert np.allclose(free_flight(K, 0.0), K)
    assert np.allclose(free_flight(3.0 * np.eye(2), 1.5), 3.0 / (1 + 4.5) * np.eye(2))
    with pytest.raises(DomainError):
        free_flight(K, -1.0)


def test_free_flight_eigen_oracle(rng):
    K = spd(rng, 3)
    lam, vec = np.linalg.eigh(K)
    want = vec @ np.diag(lam / (1 + 1.7 * lam)) @ vec.T
    assert np.allclose(free_flight(K, 1.7), want, atol=1e-12, rtol=0)


def test_normal_incidence_is_mirror_formula(rng):
    v_in = np.array([1.0, 0, 0])
    nu = np.array([-1.0, 0, 0])
    v_out = reflect(v_in, nu)
    frame = tangent_frame(v_in)
    K_minus = spd(rng, 2)
    R = 1.7
    N = (np.eye(3) - np.outer(nu, nu)) / R
    front = collision_update(FrontState(frame, K_minus, frame.T @ np.array([0, 1.0, 0])), nu, v_in, v_out, 1.0, N)
    want = frame @ K_minus @ frame.T + 2 * N
    assert np.allclose(front.ambient_K, want, atol=1e-13)


def test_two_sphere_fixed_point():
    kappa, d = 1.0, 2.0
    v = np.array([1.0, 0, 0])
    front = flat_front(v)
    for _ in range(60):
        nu = -v
        v_out = reflect(v, nu)
        pre = FrontState(front.frame, free_flight(front.K, d), front.w)
        front = collision_update(pre, nu, v, v_out, 1.0, (np.eye(3) - np.outer(nu, nu)) * kappa)
        v = v_out
    assert np.allclose(front.K, kstar(kappa, d) * np.eye(2), atol=1e-14)
    assert kstar(kappa, d) == pytest.approx(1 + math.sqrt(2), abs=1e-15)
    factor, ell, delta = expansion_factor(front, d)
    assert factor == pytest.approx(3 + 2 * math.sqrt(2), abs=1e-13)
    assert delta == pytest.approx(1 / factor)


def test_expansion_factor_special_cases():
    frame = tangent_frame(np.array([0, 0, 1.0]))
    iso = FrontState(frame, 2.5 * np.eye(2), np.array([0.6, 0.8]))
    assert expansion_factor(iso, 0.7)[1] == pytest.approx(2.5, abs=1e-15)
    flat = flat_front(np.array([0, 0, 1.0]), seed=3)
    assert expansion_factor(flat, 2.0) == (1.0, 0.0, 1.0)


def test_planar_scalar_recursion():
    scene = presets.planar_disks()
    orbit = find_periodic_orbit(scene, (0, 1, 0, 2))
    traj = orbit.trajectory(41)
    kappas = [1 / scene[r.obstacle].radii[0] for r in traj.records]
    k = 0.0
    got = [step.front.K[0, 0] for step in propagate(scene, traj)]
    for j in range(1, 41):
        r = traj.records[j]
        k = k / (1 + traj.records[j - 1].d * k) + 2 * kappas[j] / r.cos_phi
        assert got[j - 1] == pytest.approx(k, rel=1e-13)


def test_equilateral_eigenvalues_split_in_and_out_of_plane(shipped_orbits):
    orbit = shipped_orbits[("equilateral", (0, 1, 2))]
    d, c = orbit.flight_lengths[0], orbit.cos_phi[0]
    series = estimate_lambda1(orbit.scene, orbit, 30)
    # in-plane the mirror kick is 2 kappa / cos(phi), out of plane 2 kappa cos(phi)
    assert series.eig_max[-1] == pytest.approx(kstar(1.0, d, 1.0 / c), abs=1e-12)
    assert series.eig_min[-1] == pytest.approx(kstar(1.0, d, c), abs=1e-12)
    assert series.value == pytest.approx(math.log1p(d * kstar(1.0, d, 1.0 / c)), abs=1e-12)


unit3 = st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 1e-2).map(lambda v: np.array(v) / np.linalg.norm(v))


@settings(max_examples=80, deadline=None)
@given(unit3, unit3)
def test_collision_operators_unitary_and_symmetric(v_in, nu):
    if v_in @ nu > -0.05:
        v_in = -v_in
    if v_in @ nu > -0.05:
        return
    v_out = reflect(v_in, nu)
    ops = collision_operators(nu, v_in, v_out)
    f_in, f_out = tangent_frame(v_in), tangent_frame(v_out)
    U = f_in.T @ ops["U"] @ f_out
    assert np.allclose(U.T @ U, np.eye(2), atol=1e-12)
    assert np.allclose(ops["U_inv"] @ ops["U"] @ f_out, f_out, atol=1e-12)
    N = np.diag([0.3, 1.1, 0.7])
    P = np.eye(3) - np.outer(nu, nu)
    S = f_out.T @ ops["V_star"] @ (P @ N @ P) @ ops["V"] @ f_out
    assert np.allclose(S, S.T, atol=1e-12)


def test_grazing_collision_rejected():
    frame = tangent_frame(np.array([1.0, 0, 0]))
    front = FrontState(frame, np.eye(2), np.array([1.0, 0]))
    with pytest.raises(GrazingError):
        collision_update(front, np.array([0, 1.0, 0]), np.array([1.0, 0, 0]), np.array([1.0, 0, 0]), 0.0,
                         np.zeros((3, 3)))


def test_shape_kick_norm_bounds(shipped_orbits):
    for key, orbit in shipped_orbits.items():
        recs = orbit.records()
        for j, r in enumerate(recs):
            ob = orbit.scene[r.obstacle]
            k_min, k_max = ob.curvature_bounds()
            ops = collision_operators(r.normal, recs[j - 1].v, r.v)
            f = tangent_frame(r.v)
            S = f.T @ ops["V_star"] @ shape_operator_ambient(ob, r.q) @ ops["V"] @ f
            norm = np.linalg.norm(S, 2)
            assert k_min - 1e-12 <= norm <= k_max / r.cos_phi**2 + 1e-12, key


@pytest.mark.parametrize("key", [("two_spheres", (0, 1)), ("equilateral", (0, 1, 2)),
                                 ("ellipsoid", (0, 1, 2))])
def test_delta_product_matches_oracle_contraction(key, shipped_orbits):
    orbit = shipped_orbits[key]
    m = 1000
    traj = orbit.trajectory(m + 101)
    logs = [math.log(step.delta) for step in propagate(orbit.scene, traj) if step.index > 100]
    # the product itself underflows, so compare per-bounce logarithms
    rate = -sum(logs[:m]) / m
    oracle = benettin_oracle(orbit.scene, orbit, m)
    assert abs(rate - oracle) / oracle < 1e-3
