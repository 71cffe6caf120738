"""Numerical spot-check that the conjecture-based follower update is a contraction.

For a fixed leader action the map sends every follower's Q-vector to its
conjecture target: own action j is scored with the others' joint measure
(product of their Boltzmann strategies) shifted by ``delta * (pi_i[j] -
ref_i[j])`` and clamped, where ``pi_i`` is the follower's own Boltzmann
strategy and ``ref_i`` a reference strategy standing in for the previous
slot. Both members of a pair share the reference, so any difference in the
images comes from the Q-values alone. Distances use the sup norm over all
followers and actions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..scenario import NetworkScenario
from .rules import belief_update, boltzmann, conjecture_target, product_measure
from .runners import follower_utility_matrix


@dataclass
class ContractionReport:
    ratios: np.ndarray
    skipped: int
    temperatures: list

    @property
    def trials(self):
        return len(self.ratios) + self.skipped

    @property
    def max_ratio(self):
        return float(self.ratios.max()) if len(self.ratios) else 0.0

    @property
    def fraction_below_one(self):
        return float(np.mean(self.ratios < 1.0)) if len(self.ratios) else 1.0

    def summary(self):
        return (f"contraction check: {len(self.ratios)} pairs ({self.skipped} identical skipped), "
                f"max ratio {self.max_ratio:.4g}, share below 1 {self.fraction_below_one:.2%}")


def conjecture_map(scenario: NetworkScenario, leader_action, q, reference, temperatures, deltas):
    """Image of the follower Q-vectors ``q`` (list, one per follower) under the conjecture update target."""
    followers = range(1, scenario.num_users)
    pis = {i: boltzmann(q[i - 1], temperatures[i - 1]) for i in followers}
    out = []
    for i in followers:
        measure = product_measure([pis[s] for s in followers if s != i])
        belief = belief_update(measure, pis[i], reference[i - 1], deltas[i - 1])
        out.append(conjecture_target(follower_utility_matrix(scenario, i, leader_action), belief))
    return out


def sup_distance(x: Sequence[np.ndarray], y: Sequence[np.ndarray]):
    return max(float(np.max(np.abs(a - b))) for a, b in zip(x, y))


def contraction_check(scenario: NetworkScenario, leader_action, temperatures, trials=1000,
                      deltas=2.0, rng=None) -> ContractionReport:
    """Sample ``trials`` random Q pairs and record the ratio of image distance to input distance.

    ``temperatures`` and ``deltas`` give one value per follower (a scalar is
    broadcast). Q-values are drawn uniformly from [0, utility scale].
    """
    rng = np.random.default_rng(rng)
    nf = scenario.num_followers
    temps = [float(temperatures)] * nf if np.isscalar(temperatures) else [float(t) for t in temperatures]
    deltas = [float(deltas)] * nf if np.isscalar(deltas) else [float(d) for d in deltas]
    if len(temps) != nf or len(deltas) != nf:
        raise ValueError(f"need one temperature and one delta per follower ({nf})")
    m = scenario.action_counts
    scales = [scenario.table.scale(i) for i in range(1, scenario.num_users)]
    ratios, skipped = [], 0
    for _ in range(trials):
        q = [rng.uniform(0, s, m[i + 1]) for i, s in enumerate(scales)]
        q2 = [rng.uniform(0, s, m[i + 1]) for i, s in enumerate(scales)]
        ref = [rng.dirichlet(np.ones(m[i + 1])) for i in range(nf)]
        dist = sup_distance(q, q2)
        if dist == 0.0:
            skipped += 1
            continue
        image = sup_distance(conjecture_map(scenario, leader_action, q, ref, temps, deltas),
                             conjecture_map(scenario, leader_action, q2, ref, temps, deltas))
        ratios.append(image / dist)
    return ContractionReport(ratios=np.array(ratios), skipped=skipped, temperatures=temps)
