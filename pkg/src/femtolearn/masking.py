"""Macrocell power-mask policy for femtocell users.

The macrocell caps femtocell transmit power so that its own user can still
reach its SINR target. ``protective_power_mask`` picks the largest cap that
guarantees this against the worst case (every femtocell user at the top of
its allowed range, the macrocell user at full power). When not even the
lowest femtocell level is safe, the femtocells are switched off.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .scenario import NetworkScenario, ScenarioError, UserSpec, scenario_from_gains

NO_MASK = "none"
PROTECTIVE = "protective"
MASK_POLICIES = (NO_MASK, PROTECTIVE)


def _capped(levels, cap):
    allowed = [p for p in levels if p <= cap]
    return allowed[-1] if allowed else None


def leader_protected(scenario: NetworkScenario, cap):
    """True if the leader meets its target at full power with every follower at its top level under ``cap``."""
    h = scenario.gains
    interference = 0.0
    for j in range(1, scenario.num_users):
        p = _capped(scenario.users[j].power_levels, cap)
        if p is None:
            return False
        interference += h[j, 0] * p
    lead = scenario.users[0]
    gamma = h[0, 0] * lead.power_levels[-1] / (interference + scenario.noise_power)
    return gamma >= lead.min_sinr


def protective_power_mask(scenario: NetworkScenario) -> Optional[float]:
    """Largest follower power level that keeps the leader protected; ``None`` if there is none."""
    candidates = sorted({p for u in scenario.users[1:] for p in u.power_levels}, reverse=True)
    for cap in candidates:
        if leader_protected(scenario, cap):
            return cap
    return None


def apply_power_mask(scenario: NetworkScenario, cap) -> NetworkScenario:
    """Drop follower levels above ``cap`` and record the cap on each follower."""
    users = [scenario.users[0]]
    for i, u in enumerate(scenario.users[1:], start=1):
        levels = tuple(p for p in u.power_levels if p <= cap)
        if not levels:
            raise ScenarioError(f"power mask {cap} W leaves user {i} without any power level")
        mask = cap if u.power_mask is None else min(cap, u.power_mask)
        users.append(UserSpec(u.role, levels, u.min_sinr, u.circuit_power, mask))
    return scenario.replace_users(users)


def leader_only(scenario: NetworkScenario) -> NetworkScenario:
    """The same cell with every femtocell switched off."""
    return scenario_from_gains(np.asarray(scenario.gains)[:1, :1], scenario.noise_power,
                               scenario.bandwidth, scenario.users[:1])


def masked_scenario(scenario: NetworkScenario, policy=NO_MASK):
    """Apply a mask policy. Returns ``(scenario, followers_active)``.

    With the protective policy and no safe cap, the returned scenario has the
    leader alone and ``followers_active`` is False.
    """
    if policy == NO_MASK:
        return scenario, True
    if policy != PROTECTIVE:
        raise ScenarioError(f"unknown mask policy {policy!r}; expected one of {MASK_POLICIES}")
    cap = protective_power_mask(scenario)
    if cap is None:
        return leader_only(scenario), False
    return apply_power_mask(scenario, cap), True
