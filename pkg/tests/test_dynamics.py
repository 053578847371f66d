import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from openbilliard import presets
from openbilliard.dynamics import PhaseState, billiard_step, reflect, reversed_state, trace
from openbilliard.errors import DomainError, GrazingError
from openbilliard.orbits import find_periodic_orbit, refine_orbit, shadowing_digits


def test_reflect_examples():
    assert np.allclose(reflect(np.array([0, 0, 1.0]), np.array([0, 0, -1.0])), [0, 0, -1])
    s = math.sqrt(2) / 2
    assert np.allclose(reflect(np.array([1.0, 0, 0]), np.array([-s, s, 0])), [0, 1, 0], atol=1e-15)


def test_reflect_refuses_outgoing_velocity():
    with pytest.raises(GrazingError):
        reflect(np.array([0, 0, 1.0]), np.array([0, 0, 1.0]))


unit_vectors = st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 1e-2).map(lambda v: np.array(v) / np.linalg.norm(v))


@settings(max_examples=100, deadline=None)
@given(unit_vectors, unit_vectors)
def test_reflection_identity(v, nu):
    if abs(v @ nu) < 1e-6:
        return
    if v @ nu > 0:
        v = -v
    w = reflect(v, nu)
    assert w @ nu == pytest.approx(-(v @ nu), abs=1e-12)
    assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(w - v, -2 * (v @ nu) * nu, atol=1e-12)


def test_axial_step(two_spheres):
    nxt, d, cos_phi = billiard_step(two_spheres, PhaseState(np.array([-1.0, 0, 0]), np.array([1.0, 0, 0]), 0))
    assert nxt.obstacle == 1 and np.allclose(nxt.q, [1, 0, 0])
    assert np.allclose(nxt.v, [-1, 0, 0])
    assert d == pytest.approx(2.0) and cos_phi == pytest.approx(1.0)


def test_escape_step(two_spheres):
    state = PhaseState(np.array([-1.0, 0, 0]), np.array([0, 0, 1.0]), 0)
    with pytest.raises(GrazingError):
        trace(two_spheres, state, 3)   # tangent start
    off = PhaseState(np.array([-1.0, 0, 0]), np.array([0.6, 0, 0.8]), 0)
    assert billiard_step(two_spheres, off) is None


def test_equilateral_step_matches_orbit_chord(equilateral):
    orbit = find_periodic_orbit(equilateral, (0, 1, 2))
    nxt, d, _ = billiard_step(equilateral, orbit.state(0))
    assert nxt.obstacle == 1
    assert d == pytest.approx(orbit.flight_lengths[0], abs=1e-12)


def test_period_two_trace(two_spheres):
    traj = trace(two_spheres, PhaseState(np.array([-1.0, 0, 0]), np.array([1.0, 0, 0]), 0), 100)
    assert len(traj.records) == 100 and not traj.escaped
    assert traj.coding == (0, 1) * 50
    assert all(r.d == pytest.approx(2.0) for r in traj.records)


def test_escaping_trace(two_spheres):
    traj = trace(two_spheres, PhaseState(np.array([-1.0, 0, 0]), np.array([0.6, 0, 0.8]), 0), 10)
    assert traj.escaped and len(traj.records) < 10
    assert math.isinf(traj.records[-1].d)


def test_periodic_three_trace_in_high_precision(equilateral):
    coarse = find_periodic_orbit(equilateral, (0, 1, 2))
    dps = shadowing_digits(coarse, 300)
    orbit = refine_orbit(coarse, dps)
    traj = trace(equilateral, orbit.state(0), 300, dps=dps)
    assert not traj.escaped
    assert traj.coding == (0, 1, 2) * 100
    d = np.array([float(r.d) for r in traj.records])
    assert np.ptp(d) < 1e-12


def test_trace_rejects_non_unit_velocity(two_spheres):
    with pytest.raises(DomainError):
        trace(two_spheres, PhaseState(np.array([-1.0, 0, 0]), np.array([2.0, 0, 0]), 0), 3)


def test_time_reversal_in_high_precision(asymmetric):
    dps = 120
    orbit = refine_orbit(find_periodic_orbit(asymmetric, (0, 1, 2)), dps)
    with mpmath.workdps(dps):
        s0 = orbit.state(0)
        v = s0.v + np.array([mpmath.mpf("1e-60"), 0, 0], dtype=object)
        v = v / mpmath.sqrt(v.dot(v))
        start = PhaseState(s0.q, v, s0.obstacle)
        fwd = trace(asymmetric, start, 50, dps=dps)
        back = trace(asymmetric, reversed_state(fwd), 50, dps=dps)
        assert float(mpmath.sqrt((back.final.q - start.q).dot(back.final.q - start.q))) < 1e-40
        assert back.final.obstacle == start.obstacle


def test_speed_is_conserved(asymmetric):
    orbit = find_periodic_orbit(asymmetric, (0, 1, 0, 2))
    traj = trace(asymmetric, orbit.state(0), 8)
    for r in traj.records:
        assert np.linalg.norm(r.v) == pytest.approx(1.0, abs=1e-14)
