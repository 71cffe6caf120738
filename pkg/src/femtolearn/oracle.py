"""Exhaustive pure-strategy equilibrium search for the leader/follower game.

Everything works on action indices. Ties are resolved towards the lowest
index so that results are deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .scenario import NetworkScenario

MAX_SUM = "max_sum"
FIRST = "first"


class NoPureNashError(RuntimeError):
    """Some leader action leaves the follower sub-game without a pure NE."""

    code = "NO_PURE_NE"

    def __init__(self, leader_actions, cycles):
        self.leader_actions = list(leader_actions)
        self.cycles = cycles
        super().__init__(f"{self.code}: no pure follower NE for leader actions {self.leader_actions}")


def best_response(scenario: NetworkScenario, i, others: Sequence[int]):
    """All actions of user ``i`` maximising its utility against ``others``.

    ``others`` holds one action index per user; entry ``i`` is ignored and
    may be ``None``. Returns a sorted tuple (ties kept).
    """
    index = tuple(slice(None) if s == i else int(a) for s, a in enumerate(others))
    if len(index) != scenario.num_users:
        raise ValueError(f"expected {scenario.num_users} entries, got {len(index)}")
    values = scenario.table.utility[i][index]
    best = values.max()
    return tuple(int(a) for a in np.flatnonzero(values == best))


def is_follower_nash(scenario: NetworkScenario, profile: Sequence[int]):
    """True if no follower gains by a unilateral switch (leader entry held fixed)."""
    u = scenario.table.utility
    profile = tuple(profile)
    for i in range(1, scenario.num_users):
        current = u[i][profile]
        for alt in range(scenario.users[i].num_actions):
            dev = profile[:i] + (alt,) + profile[i + 1:]
            if u[i][dev] > current:
                return False
    return True


def follower_profiles(scenario: NetworkScenario):
    return itertools.product(*[range(m) for m in scenario.action_counts[1:]])


def pure_nash_of_subgame(scenario: NetworkScenario, leader_action) -> List[Tuple[int, ...]]:
    """Every follower profile in which each follower best-responds, given the leader's action."""
    if not 0 <= leader_action < scenario.users[0].num_actions:
        raise ValueError(f"leader action {leader_action} out of range")
    found = []
    for fp in follower_profiles(scenario):
        full = (leader_action, *fp)
        if all(full[i] in best_response(scenario, i, full) for i in range(1, scenario.num_users)):
            found.append(tuple(fp))
    return found


def best_response_dynamics(scenario: NetworkScenario, leader_action, start: Sequence[int],
                           max_rounds=1000):
    """Round-robin best-response play among the followers.

    Each follower in turn switches to its lowest-index best response. Returns
    ``(path, cycle)`` where ``cycle`` is the recurring sequence of follower
    profiles (a single profile when the dynamics settle on a pure NE).
    """
    current = [leader_action, *start]
    path = [tuple(current[1:])]
    seen = {path[0]: 0}
    for _ in range(max_rounds):
        for i in range(1, scenario.num_users):
            br = best_response(scenario, i, current)
            if current[i] not in br:
                current[i] = br[0]
        state = tuple(current[1:])
        if state in seen:
            return path, path[seen[state]:]
        seen[state] = len(path)
        path.append(state)
    return path, []


def best_response_cycles(scenario: NetworkScenario, leader_action):
    """Distinct limit cycles of best-response dynamics from every starting profile."""
    cycles = []
    for fp in follower_profiles(scenario):
        _, cyc = best_response_dynamics(scenario, leader_action, fp)
        # rotate so equal cycles compare equal
        if cyc:
            k = cyc.index(min(cyc))
            cyc = cyc[k:] + cyc[:k]
        if cyc not in cycles:
            cycles.append(cyc)
    return cycles


def select_max_sum(scenario: NetworkScenario, leader_action, candidates):
    """Pick the NE with the largest total follower utility; lowest index on ties."""
    u = scenario.table.utility
    best, best_val = None, -np.inf
    for fp in sorted(candidates):
        full = (leader_action, *fp)
        val = sum(u[i][full] for i in range(1, scenario.num_users))
        if val > best_val:
            best, best_val = fp, val
    return best


def select_first(scenario, leader_action, candidates):
    return min(candidates)


SELECTORS: Dict[str, Callable] = {MAX_SUM: select_max_sum, FIRST: select_first}


@dataclass
class EquilibriumReport:
    leader_action: int
    follower_actions: Tuple[int, ...]
    leader_utility: float
    follower_utilities: Tuple[float, ...]
    is_pure_ne: bool
    candidates: Dict[int, List[Tuple[int, ...]]]
    selected: Dict[int, Tuple[int, ...]]
    leader_values: Dict[int, float]
    missing: List[int] = field(default_factory=list)
    cycles: Dict[int, list] = field(default_factory=dict)

    @property
    def profile(self):
        return (self.leader_action, *self.follower_actions)

    @property
    def utilities(self):
        return (self.leader_utility, *self.follower_utilities)

    def summary(self, scenario: Optional[NetworkScenario] = None):
        lines = [f"Stackelberg equilibrium: leader action {self.leader_action}, "
                 f"followers {list(self.follower_actions)}",
                 f"  pure NE in every sub-game: {self.is_pure_ne}"]
        if scenario is not None:
            powers = scenario.powers(self.profile)
            lines.append("  powers (W): " + ", ".join(f"{p:.4g}" for p in powers))
        lines.append("  utilities (bit/s/W): " + ", ".join(f"{x:.6g}" for x in self.utilities))
        for a in sorted(self.candidates):
            tag = f" -> {list(self.selected[a])}, leader utility {self.leader_values[a]:.6g}" \
                if a in self.selected else " -> NO_PURE_NE"
            lines.append(f"  leader action {a}: {len(self.candidates[a])} pure NE{tag}")
        for a, cyc in self.cycles.items():
            lines.append(f"  leader action {a}: best-response limit cycles {cyc}")
        return "\n".join(lines)


def stackelberg_equilibrium(scenario: NetworkScenario, ne_selector=MAX_SUM,
                            strict=True) -> EquilibriumReport:
    """Leader action maximising the leader's utility against the selected follower NE.

    With ``strict`` a leader action whose sub-game has no pure NE raises
    :class:`NoPureNashError`; otherwise that action is skipped and listed in
    ``report.missing`` together with the best-response cycles found there.
    Leader ties go to the lowest action index.
    """
    select = SELECTORS[ne_selector] if isinstance(ne_selector, str) else ne_selector
    u = scenario.table.utility
    candidates, selected, values = {}, {}, {}
    missing, cycles = [], {}
    for a in range(scenario.users[0].num_actions):
        ne = pure_nash_of_subgame(scenario, a)
        candidates[a] = ne
        if not ne:
            missing.append(a)
            cycles[a] = best_response_cycles(scenario, a)
            continue
        selected[a] = tuple(select(scenario, a, ne))
        values[a] = float(u[0][(a, *selected[a])])
    if missing and strict:
        raise NoPureNashError(missing, cycles)
    if not selected:
        raise NoPureNashError(missing, cycles)
    best = max(selected, key=lambda a: (values[a], -a))
    full = (best, *selected[best])
    return EquilibriumReport(
        leader_action=best,
        follower_actions=selected[best],
        leader_utility=values[best],
        follower_utilities=tuple(float(u[i][full]) for i in range(1, scenario.num_users)),
        is_pure_ne=not missing,
        candidates=candidates,
        selected=selected,
        leader_values=values,
        missing=missing,
        cycles=cycles,
    )


@dataclass
class CooperativeReport:
    """Fully cooperative benchmark.

    ``actions`` maximises the sum of all utilities; ``per_user_max`` is each
    user's best utility over all joint profiles, an upper bound no joint
    profile need attain simultaneously.
    """

    actions: Tuple[int, ...]
    utilities: Tuple[float, ...]
    total: float
    per_user_max: Tuple[float, ...]


def cooperative_benchmark(scenario: NetworkScenario) -> CooperativeReport:
    u = scenario.table.utility
    best, best_total = None, -np.inf
    for prof in itertools.product(*[range(m) for m in scenario.action_counts]):
        total = sum(float(u[i][prof]) for i in range(scenario.num_users))
        if total > best_total:
            best, best_total = prof, total
    return CooperativeReport(
        actions=best,
        utilities=tuple(float(u[i][best]) for i in range(scenario.num_users)),
        total=best_total,
        per_user_max=tuple(float(u[i].max()) for i in range(scenario.num_users)),
    )
