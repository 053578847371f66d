from openbilliard.verify import CheckResult, battery_passed, check_csv_determinism, check_orbit_residual


def test_check_result_line():
    assert CheckResult("x", True, "fine", 0.5).line() == "[PASS] x: fine (0.50 s)"
    assert CheckResult("y", False, "bad").line().startswith("[FAIL]")


def test_budget_is_enforced():
    ok = [CheckResult("a", True, "")]
    assert battery_passed(ok, 10.0)
    assert not battery_passed(ok, 61.0)
    assert not battery_passed(ok + [CheckResult("b", False, "")], 1.0)


def test_individual_checks(shipped_orbits):
    orbits = [(str(k), o) for k, o in shipped_orbits.items()]
    assert check_orbit_residual(orbits)[0]
    assert check_csv_determinism()[0]
