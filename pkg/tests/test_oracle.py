import itertools

import numpy as np
import pytest

from femtolearn.game import PayoffTable
from femtolearn.oracle import (FIRST, MAX_SUM, NoPureNashError, best_response,
                               best_response_cycles, best_response_dynamics, cooperative_benchmark,
                               is_follower_nash, pure_nash_of_subgame, stackelberg_equilibrium)
from femtolearn.scenario import scenario_from_gains
from femtolearn.topology import GeometryParams, generate_topology

from helpers import follower, leader, small_game


def with_utilities(scenario, utility):
    """Swap in a hand-made utility tensor (SINR left as computed)."""
    scenario.__dict__["table"] = PayoffTable(sinr=scenario.table.sinr, utility=np.asarray(utility, float))
    return scenario


def two_by_two(m0=1):
    return scenario_from_gains(np.eye(3) + 0.1, 0.1, 1.0,
                               [leader(tuple(range(1, m0 + 1))), follower((1.0, 2.0)),
                                follower((1.0, 2.0))])


def matching_pennies(m0=1, broken=(0,)):
    """Followers 1 and 2 play matching pennies under the leader actions in ``broken``."""
    sc = two_by_two(m0)
    u = np.zeros((3, m0, 2, 2))
    for a in range(m0):
        u[0, a] = 10.0 - a
        if a in broken:
            u[1, a] = [[1, 0], [0, 1]]   # follower 1 wants to match
            u[2, a] = [[0, 1], [1, 0]]   # follower 2 wants to differ
        else:
            u[1, a] = [[1, 0], [0, 0]]
            u[2, a] = [[1, 0], [0, 0]]
    return with_utilities(sc, u)


def brute_force_is_ne(scenario, leader_action, fp):
    u = scenario.table.utility
    full = (leader_action, *fp)
    for i in range(1, scenario.num_users):
        for alt in range(scenario.action_counts[i]):
            dev = list(full)
            dev[i] = alt
            if u[i][tuple(dev)] > u[i][full]:
                return False
    return True


def test_best_response_keeps_ties():
    sc = with_utilities(two_by_two(), np.zeros((3, 1, 2, 2)))
    assert best_response(sc, 1, (0, None, 1)) == (0, 1)


def test_best_response_length_check(random_gain_scenario):
    with pytest.raises(ValueError):
        best_response(random_gain_scenario, 1, (0, 0))


def test_dominant_strategies_give_unique_ne():
    # follower 1 always prefers action 1, follower 2 always prefers action 0
    u = np.zeros((3, 1, 2, 2))
    u[1, 0] = [[1, 1], [3, 2]]
    u[2, 0] = [[5, 4], [6, 1]]
    u[0, 0] = [[0, 0], [7, 0]]
    sc = with_utilities(two_by_two(), u)
    assert pure_nash_of_subgame(sc, 0) == [(1, 0)]
    rep = stackelberg_equilibrium(sc)
    assert rep.profile == (0, 1, 0)
    assert rep.utilities == (7.0, 3.0, 6.0)


def test_decoupled_users_play_solo_optimum():
    users = [leader((0.1, 0.5, 1.0), 0.5, 0.2), follower((0.1, 0.5, 1.0), 0.5, 0.05),
             follower((0.1, 0.5, 1.0), 0.5, 1.0)]
    g = np.full((3, 3), 1e-300) + np.diag([1.0, 2.0, 0.5])
    sc = scenario_from_gains(g, 0.1, 1.0, users)
    solo = []
    for i, u in enumerate(users):
        alone = scenario_from_gains([[g[i, i]]], 0.1, 1.0, [leader(u.power_levels, u.min_sinr,
                                                                   u.circuit_power)])
        solo.append(best_response(alone, 0, (None,))[0])
    rep = stackelberg_equilibrium(sc)
    assert rep.profile == tuple(solo)
    assert cooperative_benchmark(sc).actions == tuple(solo)


def test_all_zero_utilities_pick_lowest_indices():
    sc = small_game()
    hopeless = sc.replace_users([leader((0.1, 0.5, 1.0), 1e9), follower((0.1, 0.5, 1.0), 1e9),
                                 follower((0.1, 0.5, 1.0), 1e9)])
    assert np.all(hopeless.table.utility == 0)
    assert len(pure_nash_of_subgame(hopeless, 0)) == 9
    rep = stackelberg_equilibrium(hopeless)
    assert rep.profile == (0, 0, 0)
    assert rep.utilities == (0.0, 0.0, 0.0)
    assert cooperative_benchmark(hopeless).actions == (0, 0, 0)


def test_single_action_everyone():
    sc = scenario_from_gains(np.eye(3) + 0.01, 0.1, 1.0, [leader(), follower(), follower()])
    rep = stackelberg_equilibrium(sc)
    assert rep.profile == (0, 0, 0) and rep.is_pure_ne
    assert rep.leader_utility == pytest.approx(sc.table.utility[0][0, 0, 0])


def test_leader_tie_goes_to_lowest_index():
    u = np.zeros((3, 3, 2, 2))
    u[0, :, 0, 0] = [1.0, 2.0, 2.0]
    u[1, :, 0, :] = 1.0
    u[2, :, :, 0] = 1.0
    sc = with_utilities(two_by_two(3), u)
    rep = stackelberg_equilibrium(sc)
    assert rep.leader_action == 1
    assert rep.leader_values == {0: 1.0, 1: 2.0, 2: 2.0}


def test_max_sum_selector_and_first_selector():
    # coordination game with two NE; (1, 1) pays followers more in total
    u = np.zeros((3, 1, 2, 2))
    u[1, 0] = [[1, 0], [0, 2]]
    u[2, 0] = [[1, 0], [0, 2]]
    u[0, 0] = [[5, 0], [0, 3]]
    sc = with_utilities(two_by_two(), u)
    assert pure_nash_of_subgame(sc, 0) == [(0, 0), (1, 1)]
    assert stackelberg_equilibrium(sc, MAX_SUM).follower_actions == (1, 1)
    assert stackelberg_equilibrium(sc, FIRST).follower_actions == (0, 0)
    assert stackelberg_equilibrium(sc, FIRST).leader_utility == 5.0


@pytest.mark.parametrize("seed", range(10))
def test_every_reported_ne_survives_deviation(seed):
    sc = generate_topology(GeometryParams(seed=seed))
    for a in range(sc.action_counts[0]):
        found = pure_nash_of_subgame(sc, a)
        for fp in itertools.product(range(3), range(3)):
            assert (fp in found) == brute_force_is_ne(sc, a, fp)
            assert is_follower_nash(sc, (a, *fp)) == brute_force_is_ne(sc, a, fp)


@pytest.mark.parametrize("seed", range(10))
def test_leader_choice_is_optimal(seed):
    sc = generate_topology(GeometryParams(seed=seed))
    rep = stackelberg_equilibrium(sc)
    u = sc.table.utility
    for a, fp in rep.selected.items():
        assert u[0][(a, *fp)] <= rep.leader_utility
    assert rep.leader_utility == u[0][rep.profile]


def test_equilibrium_invariant_under_utility_rescaling(random_gain_scenario):
    sc = random_gain_scenario
    base = stackelberg_equilibrium(sc)
    scaled = with_utilities(small_game(), sc.table.utility * np.array([3.0, 0.5, 7.0])[:, None, None, None])
    rep = stackelberg_equilibrium(scaled)
    assert rep.profile == base.profile
    assert cooperative_benchmark(scaled).per_user_max == pytest.approx(
        tuple(np.array(cooperative_benchmark(sc).per_user_max) * [3.0, 0.5, 7.0]))


def test_cooperative_benchmark_by_second_scan(default_scenario):
    sc = default_scenario
    co = cooperative_benchmark(sc)
    u = sc.table.utility
    totals = u.sum(axis=0)
    assert co.total == pytest.approx(totals.max(), rel=1e-15)
    first = np.unravel_index(np.argmax(totals), totals.shape)
    assert co.actions == tuple(int(x) for x in first)
    assert co.per_user_max == tuple(float(u[i].max()) for i in range(3))
    se = stackelberg_equilibrium(sc)
    assert sum(se.utilities) <= co.total * (1 + 1e-15)


def test_strict_mode_raises_on_missing_ne():
    sc = matching_pennies(m0=2, broken=(0,))
    with pytest.raises(NoPureNashError) as err:
        stackelberg_equilibrium(sc)
    assert err.value.code == "NO_PURE_NE"
    assert err.value.leader_actions == [0]
    assert "NO_PURE_NE" in str(err.value)


def test_lenient_mode_flags_and_skips():
    sc = matching_pennies(m0=2, broken=(0,))
    rep = stackelberg_equilibrium(sc, strict=False)
    assert rep.missing == [0]
    assert not rep.is_pure_ne
    assert rep.leader_action == 1
    assert 0 not in rep.selected and rep.candidates[0] == []
    # states are recorded once per round, after both followers have moved
    assert rep.cycles[0] == [[(0, 1), (1, 0)]]
    assert "NO_PURE_NE" in rep.summary(sc)


def test_lenient_mode_still_raises_when_nothing_is_left():
    with pytest.raises(NoPureNashError):
        stackelberg_equilibrium(matching_pennies(m0=1), strict=False)


def test_best_response_dynamics_settles_on_ne(default_scenario):
    sc = default_scenario
    for a in range(3):
        ne = pure_nash_of_subgame(sc, a)
        for start in itertools.product(range(3), range(3)):
            _, cycle = best_response_dynamics(sc, a, start)
            if len(cycle) == 1:
                assert cycle[0] in ne
        assert all(len(c) == 1 for c in best_response_cycles(sc, a))


def test_summary_mentions_powers(default_scenario):
    text = stackelberg_equilibrium(default_scenario).summary(default_scenario)
    assert "powers (W)" in text and "leader action" in text
