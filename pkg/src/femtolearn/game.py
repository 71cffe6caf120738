"""SINR, energy efficiency and the QoS-gated utility, pure and expected.

Expected utilities are exact: the joint action space is enumerated once per
scenario into dense tensors (``PayoffTable``) and every expectation is a
contraction of one of them with the users' strategies. Cost grows as the
product of the action counts, which is 27 for the default three-user setup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .scenario import NetworkScenario

STRATEGY_ATOL = 1e-12


def sinr(scenario: NetworkScenario, p, i):
    """SINR of user ``i`` at its own base station for transmit powers ``p`` (W)."""
    h = scenario.gains
    interference = 0.0
    for j in range(scenario.num_users):
        if j != i:
            interference += h[j, i] * p[j]
    return h[i, i] * p[i] / (interference + scenario.noise_power)


def energy_efficiency(scenario: NetworkScenario, p, i):
    """Throughput per consumed watt, ``W log2(1 + sinr) / (p_a + p_i)``."""
    gamma = sinr(scenario, p, i)
    return scenario.bandwidth * math.log2(1.0 + gamma) / (scenario.users[i].circuit_power + p[i])


def utility(scenario: NetworkScenario, p, i):
    """Energy efficiency if the SINR target is met (inclusive), else 0."""
    gamma = sinr(scenario, p, i)
    if gamma < scenario.users[i].min_sinr:
        return 0.0
    return scenario.bandwidth * math.log2(1.0 + gamma) / (scenario.users[i].circuit_power + p[i])


@dataclass(frozen=True)
class PayoffTable:
    """Pure-profile quantities over the whole joint action space.

    ``sinr[i][j0, ..., jN]`` and ``utility[i][j0, ..., jN]`` are user i's SINR
    and utility when user s plays its action ``j_s``.
    """

    sinr: np.ndarray
    utility: np.ndarray

    @property
    def shape(self):
        return self.utility.shape[1:]

    def scale(self, i):
        """Largest pure utility user ``i`` can get; 1.0 if it never gets any."""
        top = float(self.utility[i].max())
        return top if top > 0 else 1.0


def payoff_table(scenario: NetworkScenario) -> PayoffTable:
    n = scenario.num_users
    grids = np.meshgrid(*[np.array(u.power_levels) for u in scenario.users], indexing="ij")
    h = scenario.gains
    gammas, utils = [], []
    for i, user in enumerate(scenario.users):
        # same accumulation order as sinr() so both paths agree bit for bit
        interference = np.zeros(grids[0].shape)
        for j in range(n):
            if j != i:
                interference = interference + h[j, i] * grids[j]
        gamma = h[i, i] * grids[i] / (interference + scenario.noise_power)
        eta = scenario.bandwidth * np.log2(1.0 + gamma) / (user.circuit_power + grids[i])
        gammas.append(gamma)
        utils.append(np.where(gamma >= user.min_sinr, eta, 0.0))
    return PayoffTable(sinr=np.array(gammas), utility=np.array(utils))


def check_strategy(probs, num_actions):
    pi = np.asarray(probs, dtype=float)
    if pi.shape != (num_actions,):
        raise ValueError(f"strategy must have {num_actions} entries, got shape {pi.shape}")
    if np.any(pi < 0) or abs(pi.sum() - 1.0) > STRATEGY_ATOL:
        raise ValueError(f"not a probability vector: {pi}")
    return pi


def uniform_strategy(num_actions):
    return np.full(num_actions, 1.0 / num_actions)


def one_hot(index, num_actions):
    pi = np.zeros(num_actions)
    pi[index] = 1.0
    return pi


def contract(tensor, strategies):
    """Sum a payoff tensor against one probability vector per trailing axis."""
    out = np.asarray(tensor)
    for pi in reversed(strategies):
        out = out @ pi
    return float(out)


def expected_utility(scenario: NetworkScenario, strategies: Sequence, i):
    """Expected utility of user ``i`` when every user s mixes with ``strategies[s]``."""
    sp = [check_strategy(pi, m) for pi, m in zip(strategies, scenario.action_counts, strict=True)]
    return contract(scenario.table.utility[i], sp)


def expected_sinr(scenario: NetworkScenario, strategies: Sequence, i):
    sp = [check_strategy(pi, m) for pi, m in zip(strategies, scenario.action_counts, strict=True)]
    return contract(scenario.table.sinr[i], sp)


def _conditional(tensor, scenario, strategies, fixed):
    index = []
    free = []
    for s, m in enumerate(scenario.action_counts):
        if s in fixed:
            a = fixed[s]
            if not 0 <= a < m:
                raise ValueError(f"action {a} is not in user {s}'s action set of size {m}")
            index.append(a)
        else:
            index.append(slice(None))
            free.append(check_strategy(strategies[s], m))
    return contract(tensor[tuple(index)], free)


def conditional_expected_utility(scenario: NetworkScenario, strategies: Sequence, i,
                                 fixed: Mapping[int, int]):
    """Expected utility of user ``i`` with some users' actions pinned.

    ``fixed`` maps user index to action index. Users not in ``fixed`` mix with
    their entry of ``strategies``; entries of pinned users are ignored and may
    be ``None``.
    """
    bad = [s for s in fixed if not 0 <= s < scenario.num_users]
    if bad:
        raise ValueError(f"unknown users in fixed assignment: {bad}")
    return _conditional(scenario.table.utility[i], scenario, strategies, fixed)


def conditional_expected_sinr(scenario: NetworkScenario, strategies: Sequence, i,
                              fixed: Mapping[int, int]):
    return _conditional(scenario.table.sinr[i], scenario, strategies, fixed)


def leader_conditioned_expectation(tensor, leader_strategy, follower_tables):
    """Expectation when followers' strategies depend on the leader's action.

    ``tensor`` is one user's payoff tensor; ``follower_tables[s]`` has one row
    per leader action giving follower s's strategy against that action.
    """
    total = 0.0
    for a, w in enumerate(leader_strategy):
        if w == 0.0:
            continue
        total += w * contract(tensor[a], [tab[a] for tab in follower_tables])
    return total

