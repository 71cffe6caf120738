"""Single-step update rules shared by the learners.

Q-tables and strategies are plain 1-D float arrays indexed by action.
"""

from __future__ import annotations

import math

import numpy as np

GEOMETRIC = "geometric"
HARMONIC = "harmonic"


def boltzmann(q, temperature):
    """Softmax of ``q / temperature`` (max-shifted, so large Q cannot overflow)."""
    if not temperature > 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    q = np.asarray(q, dtype=float)
    e = np.exp((q - q.max()) / temperature)
    return e / e.sum()


def q_update(q_old, rate, target):
    return (1.0 - rate) * q_old + rate * target


def rate(step, init, decay, schedule=GEOMETRIC):
    """Learning rate at step ``step >= 1``: ``init / decay**step`` or ``init / step``."""
    if step < 1:
        raise ValueError("rate steps start at 1")
    if schedule == GEOMETRIC:
        return init / decay ** step
    if schedule == HARMONIC:
        return init / step
    raise ValueError(f"unknown rate schedule {schedule!r}")


def sample_action(pi, u):
    """Inverse-CDF draw from ``pi`` using a uniform ``u`` in [0, 1)."""
    c = 0.0
    for j, p in enumerate(pi):
        c += p
        if u < c:
            return j
    return len(pi) - 1


class FollowerEstimator:
    """Per-episode running mean of the utility each own action has returned.

    Entries of actions not yet played in the episode stay at 0.
    """

    def __init__(self, num_actions):
        self.u_tilde = np.zeros(num_actions)
        self.counts = np.zeros(num_actions, dtype=np.int64)

    def reset(self):
        self.u_tilde[:] = 0.0
        self.counts[:] = 0

    def update(self, action, utility):
        n = self.counts[action]
        self.u_tilde[action] += (utility - self.u_tilde[action]) / (n + 1)
        self.counts[action] = n + 1
        return self


def follower_update_rlhpa1(q, estimator: FollowerEstimator, alpha, played):
    """Move the played action's Q towards its running-mean estimate.

    Only the played action has fresh information, so the other entries are
    left alone.
    """
    q = np.array(q, dtype=float)
    q[played] = q_update(q[played], alpha, estimator.u_tilde[played])
    return q


def product_measure(strategies):
    """Joint distribution of independent strategies, flattened in C order."""
    out = np.ones(1)
    for pi in strategies:
        out = np.multiply.outer(out, pi).ravel()
    return out


def belief_update(prev_measure, own_now, own_prev, delta):
    """Conjectured contention measure, one row per own action.

    Row ``j`` is the others' previous joint measure shifted by
    ``-delta * (own_now[j] - own_prev[j])`` and clamped to [0, 1]. Rows are
    not renormalised.
    """
    shift = delta * (np.asarray(own_now) - np.asarray(own_prev))
    return np.clip(np.asarray(prev_measure)[None, :] - shift[:, None], 0.0, 1.0)


def belief_deficit(belief):
    """Largest distance of a belief row's total mass from 1."""
    return float(np.max(np.abs(1.0 - belief.sum(axis=1))))


def conjecture_target(utilities, belief):
    """Per own action, utility averaged over the others' joint actions under ``belief``.

    ``utilities[j, k]`` is the follower's utility for own action j against
    the others' joint action k (leader action fixed).
    """
    return np.sum(utilities * belief, axis=1)


def follower_update_rlhpa2(q, utilities, belief, alpha):
    """Update every own action towards its conjecture-weighted utility."""
    return q_update(np.asarray(q, dtype=float), alpha, conjecture_target(utilities, belief))


def leader_update(q0, slot_values, alpha, played):
    """Episode-end leader update towards the mean per-slot expected utility."""
    q0 = np.array(q0, dtype=float)
    q0[played] = q_update(q0[played], alpha, math.fsum(slot_values) / len(slot_values))
    return q0
