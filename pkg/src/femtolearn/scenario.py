"""Static description of one macrocell with N underlaid femtocells.

User 0 is always the macrocell user (the leader); users 1..N are the
femtocell users (followers). ``gains[j, i]`` is the linear channel gain from
user j's transmitter to base station i, the receiver of user i.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

LEADER = "leader"
FOLLOWER = "follower"


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class UserSpec:
    """Radio constraints and discrete action set of one scheduled user.

    Attributes:
        role: ``"leader"`` for the MU, ``"follower"`` for an FU.
        power_levels: strictly increasing transmit powers in W.
        min_sinr: linear SINR target; below it the user's utility is zero.
        circuit_power: power drawn by the device on top of transmit power (W).
        power_mask: cap on follower transmit power (W). ``None`` for the leader.
    """

    role: str
    power_levels: tuple
    min_sinr: float
    circuit_power: float
    power_mask: Optional[float] = None

    def __post_init__(self):
        levels = tuple(float(p) for p in self.power_levels)
        object.__setattr__(self, "power_levels", levels)
        if self.role not in (LEADER, FOLLOWER):
            raise ScenarioError(f"role must be 'leader' or 'follower', got {self.role!r}")
        if not levels:
            raise ScenarioError("power_levels must be nonempty")
        if any(p <= 0 for p in levels):
            raise ScenarioError("power levels must be > 0")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ScenarioError("power levels must be strictly increasing")
        if not self.min_sinr > 0:
            raise ScenarioError("min_sinr must be > 0")
        if self.circuit_power < 0:
            raise ScenarioError("circuit_power must be >= 0")
        if self.role == FOLLOWER and self.power_mask is not None:
            if levels[-1] > self.power_mask:
                raise ScenarioError(
                    f"follower power level {levels[-1]} W exceeds power mask {self.power_mask} W")

    @property
    def num_actions(self):
        return len(self.power_levels)


@dataclass(frozen=True)
class Layout:
    """Node coordinates in metres; the MBS sits at the origin."""

    mbs: np.ndarray
    mu: np.ndarray
    fbs: np.ndarray  # (N, 2)
    fu: np.ndarray  # (N, 2)

    def transmitters(self):
        return np.vstack([self.mu[None, :], self.fu])

    def receivers(self):
        return np.vstack([self.mbs[None, :], self.fbs])


@dataclass(frozen=True, eq=False)
class NetworkScenario:
    gains: np.ndarray
    noise_power: float
    bandwidth: float
    users: tuple
    layout: Optional[Layout] = field(default=None)

    def __post_init__(self):
        gains = np.array(self.gains, dtype=float)
        users = tuple(self.users)
        if gains.ndim != 2 or gains.shape[0] != gains.shape[1]:
            raise ScenarioError(f"gains must be a square matrix, got shape {gains.shape}")
        if gains.shape[0] != len(users):
            raise ScenarioError(
                f"gains is {gains.shape[0]}x{gains.shape[1]} but {len(users)} users were given")
        if not np.all(np.isfinite(gains)) or np.any(gains <= 0):
            raise ScenarioError("all channel gains must be finite and > 0")
        if not self.noise_power > 0:
            raise ScenarioError("noise_power must be > 0")
        if not self.bandwidth > 0:
            raise ScenarioError("bandwidth must be > 0")
        if users[0].role != LEADER:
            raise ScenarioError("user 0 must be the leader")
        if any(u.role != FOLLOWER for u in users[1:]):
            raise ScenarioError("users 1..N must be followers")
        gains.setflags(write=False)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "noise_power", float(self.noise_power))
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    @property
    def num_users(self):
        return len(self.users)

    @property
    def num_followers(self):
        return len(self.users) - 1

    @property
    def action_counts(self):
        return tuple(u.num_actions for u in self.users)

    def powers(self, actions):
        """Map a vector of action indices to transmit powers (W)."""
        if len(actions) != self.num_users:
            raise ScenarioError(f"expected {self.num_users} actions, got {len(actions)}")
        return np.array([u.power_levels[a] for u, a in zip(self.users, actions)])

    @cached_property
    def table(self):
        """Pure-profile SINR and utility tensors, see :func:`femtolearn.game.payoff_table`."""
        from .game import payoff_table
        return payoff_table(self)

    def replace_users(self, users):
        return NetworkScenario(self.gains, self.noise_power, self.bandwidth, users, self.layout)


def scenario_from_gains(gains, noise_power, bandwidth, users: Sequence[UserSpec]):
    """Build a scenario straight from a gain matrix (no geometry)."""
    return NetworkScenario(gains, noise_power, bandwidth, tuple(users))


# -- plain-text import / export ------------------------------------------------

def _f(x):
    # 17 significant digits round-trips every double exactly
    return f"{float(x):.16e}"


def _farr(xs):
    return "[" + ", ".join(_f(x) for x in xs) + "]"


def dumps_scenario(scenario: NetworkScenario) -> str:
    lines = ["# femtolearn scenario", "",
             "[channel]",
             f"noise_power = {_f(scenario.noise_power)}",
             f"bandwidth = {_f(scenario.bandwidth)}",
             "gains = ["]
    for row in scenario.gains:
        lines.append(f"  {_farr(row)},")
    lines.append("]")
    for u in scenario.users:
        lines += ["", "[[users]]",
                  f'role = "{u.role}"',
                  f"power_levels = {_farr(u.power_levels)}",
                  f"min_sinr = {_f(u.min_sinr)}",
                  f"circuit_power = {_f(u.circuit_power)}"]
        if u.power_mask is not None:
            lines.append(f"power_mask = {_f(u.power_mask)}")
    if scenario.layout is not None:
        lay = scenario.layout
        lines += ["", "[layout]",
                  f"mbs = {_farr(lay.mbs)}",
                  f"mu = {_farr(lay.mu)}",
                  "fbs = [" + ", ".join(_farr(p) for p in lay.fbs) + "]",
                  "fu = [" + ", ".join(_farr(p) for p in lay.fu) + "]"]
    return "\n".join(lines) + "\n"


def loads_scenario(text: str) -> NetworkScenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"malformed scenario file: {exc}") from exc
    try:
        ch = doc["channel"]
        users = [UserSpec(role=u["role"], power_levels=tuple(u["power_levels"]),
                          min_sinr=u["min_sinr"], circuit_power=u["circuit_power"],
                          power_mask=u.get("power_mask"))
                 for u in doc["users"]]
        layout = None
        if "layout" in doc:
            lay = doc["layout"]
            layout = Layout(mbs=np.array(lay["mbs"], dtype=float), mu=np.array(lay["mu"], dtype=float),
                            fbs=np.array(lay["fbs"], dtype=float).reshape(-1, 2),
                            fu=np.array(lay["fu"], dtype=float).reshape(-1, 2))
        return NetworkScenario(np.array(ch["gains"], dtype=float), ch["noise_power"],
                               ch["bandwidth"], tuple(users), layout)
    except KeyError as exc:
        raise ScenarioError(f"scenario file is missing {exc}") from exc


def save_scenario(scenario: NetworkScenario, path):
    Path(path).write_text(dumps_scenario(scenario))


def load_scenario(path) -> NetworkScenario:
    return loads_scenario(Path(path).read_text())
