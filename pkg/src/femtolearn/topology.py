"""Random two-tier geometry and the distance-power-law channel gains."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import FOLLOWER, LEADER, Layout, NetworkScenario, ScenarioError, UserSpec
from .units import db_to_linear, dbm_to_watt

MIN_DISTANCE = 1.0  # metres; pathloss singularity guard


@dataclass(frozen=True)
class GeometryParams:
    macro_radius: float = 500.0
    femto_radius: float = 20.0
    num_femtocells: int = 2
    pathloss_exponent: float = 4.0
    seed: int = 0
    min_distance: float = MIN_DISTANCE
    # log-normal shadowing on top of d^-n; 0 disables it
    shadowing_std_db: float = 0.0

    def __post_init__(self):
        if not self.femto_radius > 0:
            raise ScenarioError("femto_radius must be > 0")
        if not self.macro_radius > self.femto_radius:
            raise ScenarioError("macro_radius must exceed femto_radius")
        if int(self.num_femtocells) != self.num_femtocells or self.num_femtocells < 1:
            raise ScenarioError("num_femtocells must be an integer >= 1")
        if not self.pathloss_exponent > 0:
            raise ScenarioError("pathloss_exponent must be > 0")
        if not self.min_distance > 0:
            raise ScenarioError("min_distance must be > 0")
        if self.shadowing_std_db < 0:
            raise ScenarioError("shadowing_std_db must be >= 0")


@dataclass(frozen=True)
class RadioParams:
    """Link budget shared by every user, in linear units (W, Hz)."""

    bandwidth: float = 1e6
    noise_power: float = dbm_to_watt(-110.0)
    circuit_power: float = dbm_to_watt(10.0)
    leader_levels: tuple = tuple(dbm_to_watt(x) for x in (20.0, 25.0, 30.0))
    follower_levels: tuple = tuple(dbm_to_watt(x) for x in (20.0, 25.0, 30.0))
    leader_min_sinr: float = db_to_linear(3.0)
    follower_min_sinr: float = db_to_linear(5.0)
    power_mask: float = field(default=None)

    def users(self, num_femtocells):
        mask = self.power_mask if self.power_mask is not None else max(self.follower_levels)
        leader = UserSpec(LEADER, tuple(self.leader_levels), self.leader_min_sinr, self.circuit_power)
        followers = [UserSpec(FOLLOWER, tuple(self.follower_levels), self.follower_min_sinr,
                              self.circuit_power, mask)
                     for _ in range(num_femtocells)]
        return (leader, *followers)


def pathloss_gain(distance, exponent, min_distance=MIN_DISTANCE):
    """Linear gain ``max(d, min_distance) ** -n``."""
    d = np.maximum(np.asarray(distance, dtype=float), min_distance)
    return d ** (-float(exponent))


def uniform_in_disc(rng, radius, size, center=(0.0, 0.0)):
    r = radius * np.sqrt(rng.random(size))
    phi = 2.0 * np.pi * rng.random(size)
    return np.column_stack([center[0] + r * np.cos(phi), center[1] + r * np.sin(phi)])


def generate_topology(params: GeometryParams, radio: RadioParams = None) -> NetworkScenario:
    """Drop FBSs, FUs and the MU at random and derive the gain matrix.

    FBS centres and the MU are uniform over the macro disc around the MBS;
    each FU is uniform over the disc of radius ``femto_radius`` around its
    FBS. The result depends only on ``params`` (including its seed).
    """
    radio = radio if radio is not None else RadioParams()
    n = int(params.num_femtocells)
    rng = np.random.default_rng(params.seed)

    fbs = uniform_in_disc(rng, params.macro_radius, n)
    fu = np.vstack([uniform_in_disc(rng, params.femto_radius, 1, center=c) for c in fbs])
    mu = uniform_in_disc(rng, params.macro_radius, 1)[0]
    layout = Layout(mbs=np.zeros(2), mu=mu, fbs=fbs, fu=fu)

    tx = layout.transmitters()
    rx = layout.receivers()
    dist = np.linalg.norm(tx[:, None, :] - rx[None, :, :], axis=-1)
    gains = pathloss_gain(dist, params.pathloss_exponent, params.min_distance)
    if params.shadowing_std_db > 0:
        gains = gains * db_to_linear(rng.normal(0.0, params.shadowing_std_db, gains.shape))

    return NetworkScenario(gains, radio.noise_power, radio.bandwidth, radio.users(n), layout)
