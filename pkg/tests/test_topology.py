import numpy as np
import pytest
from hypothesis import given, strategies as st

from femtolearn.scenario import (ScenarioError, dumps_scenario, load_scenario, loads_scenario,
                                 save_scenario, scenario_from_gains)
from femtolearn.topology import GeometryParams, RadioParams, generate_topology, pathloss_gain

from helpers import follower, leader


def test_pathloss_unit_distance():
    assert pathloss_gain(1.0, 4) == 1.0


def test_pathloss_power_law():
    assert pathloss_gain(10.0, 4) == pytest.approx(1e-4, rel=1e-15)


def test_pathloss_clamps_below_min_distance():
    assert pathloss_gain(0.0, 4) == 1.0
    assert pathloss_gain(0.3, 4) == 1.0
    assert pathloss_gain(0.5, 4, min_distance=0.5) == pytest.approx(16.0)


@given(st.floats(1.0, 1e4), st.floats(1.0, 1e4), st.floats(0.5, 6.0))
def test_pathloss_monotone_in_distance(d1, d2, n):
    if d1 == d2:
        return
    lo, hi = sorted((d1, d2))
    assert pathloss_gain(lo, n) > pathloss_gain(hi, n) or pathloss_gain(hi, n) == 0.0


def test_same_seed_same_scenario():
    a = generate_topology(GeometryParams(seed=42))
    b = generate_topology(GeometryParams(seed=42))
    assert a.gains.tobytes() == b.gains.tobytes()
    assert np.array_equal(a.layout.fu, b.layout.fu)


def test_different_seeds_differ():
    seen = {generate_topology(GeometryParams(seed=s)).gains.tobytes() for s in range(200)}
    assert len(seen) == 200


@pytest.mark.parametrize("seed", range(10))
def test_geometry_and_gains(seed):
    p = GeometryParams(seed=seed, num_femtocells=4)
    sc = generate_topology(p)
    lay = sc.layout
    assert sc.gains.shape == (5, 5)
    assert np.all(sc.gains > 0)
    assert np.all(np.linalg.norm(lay.fbs, axis=1) <= p.macro_radius)
    assert np.linalg.norm(lay.mu) <= p.macro_radius
    assert np.all(np.linalg.norm(lay.fu - lay.fbs, axis=1) <= p.femto_radius)
    tx, rx = lay.transmitters(), lay.receivers()
    for j in range(5):
        for i in range(5):
            d = max(np.linalg.norm(tx[j] - rx[i]), 1.0)
            assert sc.gains[j, i] == pytest.approx(d ** -4, rel=1e-12)


def test_default_users_follow_radio_params():
    sc = generate_topology(GeometryParams(seed=1))
    assert [u.role for u in sc.users] == ["leader", "follower", "follower"]
    assert sc.users[0].power_levels == pytest.approx((0.1, 0.1 * 10 ** 0.5, 1.0))
    assert sc.users[0].min_sinr == pytest.approx(10 ** 0.3)
    assert sc.users[1].min_sinr == pytest.approx(10 ** 0.5)
    assert sc.noise_power == pytest.approx(1e-14)
    assert sc.bandwidth == 1e6


def test_shadowing_is_opt_in():
    plain = generate_topology(GeometryParams(seed=3))
    shadowed = generate_topology(GeometryParams(seed=3, shadowing_std_db=8.0))
    again = generate_topology(GeometryParams(seed=3, shadowing_std_db=8.0))
    assert np.array_equal(plain.layout.fbs, shadowed.layout.fbs)
    assert not np.array_equal(plain.gains, shadowed.gains)
    assert np.array_equal(shadowed.gains, again.gains)


@pytest.mark.parametrize("kwargs", [
    dict(macro_radius=10.0, femto_radius=20.0),
    dict(femto_radius=0.0),
    dict(num_femtocells=0),
    dict(pathloss_exponent=0.0),
])
def test_geometry_params_invariants(kwargs):
    with pytest.raises(ScenarioError):
        GeometryParams(**kwargs)


def test_scenario_from_gains_single_user():
    sc = scenario_from_gains([[1.0]], 0.5, 1.0, [leader()])
    assert sc.num_users == 1 and sc.num_followers == 0


def test_scenario_from_gains_three_users():
    sc = scenario_from_gains(np.full((3, 3), 0.5), 0.1, 1.0, [leader(), follower(), follower()])
    assert sc.layout is None
    assert sc.action_counts == (1, 1, 1)


def test_scenario_from_gains_dimension_mismatch():
    with pytest.raises(ScenarioError, match="2 users"):
        scenario_from_gains(np.ones((3, 3)), 0.1, 1.0, [leader(), follower()])


@pytest.mark.parametrize("bad", [0.0, -1.0, np.inf])
def test_scenario_from_gains_rejects_bad_entries(bad):
    g = np.ones((2, 2))
    g[0, 1] = bad
    with pytest.raises(ScenarioError):
        scenario_from_gains(g, 0.1, 1.0, [leader(), follower()])


def test_user_spec_invariants():
    with pytest.raises(ScenarioError):
        leader(levels=())
    with pytest.raises(ScenarioError):
        leader(levels=(1.0, 1.0))
    with pytest.raises(ScenarioError):
        leader(levels=(0.0, 1.0))
    with pytest.raises(ScenarioError):
        leader(min_sinr=0.0)
    with pytest.raises(ScenarioError, match="mask"):
        follower(levels=(0.1, 1.0), mask=0.5)


def test_gains_are_read_only(default_scenario):
    with pytest.raises(ValueError):
        default_scenario.gains[0, 0] = 1.0


def test_round_trip_is_lossless(tmp_path):
    sc = generate_topology(GeometryParams(seed=11, num_femtocells=3, shadowing_std_db=4.0),
                           RadioParams(power_mask=2.0))
    path = tmp_path / "scenario.toml"
    save_scenario(sc, path)
    back = load_scenario(path)
    assert back.gains.tobytes() == sc.gains.tobytes()
    assert back.users == sc.users
    assert back.noise_power == sc.noise_power and back.bandwidth == sc.bandwidth
    assert np.array_equal(back.layout.fu, sc.layout.fu)
    assert dumps_scenario(back) == dumps_scenario(sc)


def test_round_trip_without_layout():
    sc = scenario_from_gains([[0.1 + 0.2, 1 / 3], [2 / 7, 1e-300]], 1e-14, 1e6,
                             [leader((0.1, 0.2)), follower((0.3,))])
    back = loads_scenario(dumps_scenario(sc))
    assert back.gains.tobytes() == sc.gains.tobytes()
    assert back.layout is None


def test_loader_reports_missing_sections():
    with pytest.raises(ScenarioError, match="channel"):
        loads_scenario("[[users]]\nrole = 'leader'\n")
