"""Hierarchical (leader/follower) and flat Boltzmann Q-learning runs.

A run is ``num_episodes`` episodes of ``episode_length`` slots. In the
hierarchical regimes the leader draws one action per episode and updates
once at its end from the mean of the per-slot expected utilities; followers
observe the leader's action, keep one Q-table per leader action and update
every slot. In the non-cooperative regime nobody observes anybody, everyone
updates every slot from its realised utility, and episodes are only a
bookkeeping unit.

All randomness comes from one generator seeded with ``rng_seed``; the update
order inside a slot is fixed, so a seed reproduces a run bit for bit.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from ..game import leader_conditioned_expectation
from ..scenario import NetworkScenario
from .rules import GEOMETRIC, HARMONIC, boltzmann, leader_update, rate, sample_action

RLHPA1 = "rlhpa1"
RLHPA2 = "rlhpa2"
NONCOOP = "noncoop"

EPISODE_CLOCK = "episode"
GLOBAL_CLOCK = "global"
OPTIMISTIC = "optimistic"


@dataclass
class LearningConfig:
    """Knobs of one learning run.

    Attributes:
        num_episodes: K, number of leader decisions.
        episode_length: T, follower slots per leader decision.
        temperature: absolute Boltzmann temperature, one value for everyone or
            one per user. ``None`` means ``temperature_scale`` times each
            user's utility scale (its largest pure utility).
        temperature_scale: see ``temperature``.
        leader_rate_init, follower_rate_init: first learning rates, in [0, 1).
        rate_decay: theta > 1 of the geometric schedule ``init / theta**s``.
        rate_schedule: ``"geometric"`` or ``"harmonic"`` (``init / s``).
        follower_clock: ``"episode"`` restarts the follower rate every
            episode, ``"global"`` counts slots since the start of the run.
        belief_factor: conjecture strength delta (RLHPA-II), scalar or one
            per follower.
        q_init: initial Q-value for every action, or ``"optimistic"`` to start
            each user at its utility scale.
        rng_seed: seed of the run's random generator.
        record_slots: keep per-slot records (needed for CSV traces).
        final_fraction: share of the last episodes averaged into finals.
    """

    num_episodes: int = 2000
    episode_length: int = 100
    temperature: Union[None, float, Sequence[float]] = None
    temperature_scale: float = 0.02
    leader_rate_init: float = 0.9
    follower_rate_init: float = 0.9
    rate_decay: float = 1.1
    rate_schedule: str = GEOMETRIC
    follower_clock: str = EPISODE_CLOCK
    belief_factor: Union[float, Sequence[float]] = 2.0
    q_init: Union[float, str] = OPTIMISTIC
    rng_seed: int = 0
    record_slots: bool = True
    final_fraction: float = 0.1

    def __post_init__(self):
        if self.num_episodes < 0:
            raise ValueError("num_episodes must be >= 0")
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        temps = self.temperature
        if temps is not None:
            temps = [temps] if np.isscalar(temps) else list(temps)
            if any(not t > 0 for t in temps):
                raise ValueError("temperatures must be > 0")
        if not self.temperature_scale > 0:
            raise ValueError("temperature_scale must be > 0")
        for name in ("leader_rate_init", "follower_rate_init"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be in [0, 1)")
        if not self.rate_decay > 1.0:
            raise ValueError("rate_decay must be > 1")
        if self.rate_schedule not in (GEOMETRIC, HARMONIC):
            raise ValueError(f"unknown rate_schedule {self.rate_schedule!r}")
        if self.follower_clock not in (EPISODE_CLOCK, GLOBAL_CLOCK):
            raise ValueError(f"unknown follower_clock {self.follower_clock!r}")
        deltas = [self.belief_factor] if np.isscalar(self.belief_factor) else list(self.belief_factor)
        if any(d < 0 for d in deltas):
            raise ValueError("belief factors must be >= 0")
        if isinstance(self.q_init, str) and self.q_init != OPTIMISTIC:
            raise ValueError(f"q_init must be a number or {OPTIMISTIC!r}")
        if not 0.0 < self.final_fraction <= 1.0:
            raise ValueError("final_fraction must be in (0, 1]")

    def temperatures(self, scenario: NetworkScenario):
        n = scenario.num_users
        if self.temperature is None:
            return [self.temperature_scale * scenario.table.scale(i) for i in range(n)]
        return _per_user(self.temperature, n, "temperature")

    def initial_q(self, scenario: NetworkScenario):
        if self.q_init == OPTIMISTIC:
            return [scenario.table.scale(i) for i in range(scenario.num_users)]
        return [float(self.q_init)] * scenario.num_users

    def belief_factors(self, num_followers):
        return _per_user(self.belief_factor, num_followers, "belief_factor")


def _per_user(value, n, name):
    if np.isscalar(value):
        return [float(value)] * n
    value = [float(v) for v in value]
    if len(value) != n:
        raise ValueError(f"{name} needs {n} entries, got {len(value)}")
    return value


@dataclass
class RunTrace:
    """Everything recorded during one run.

    Episode-indexed arrays have ``K + 1`` rows; row ``k`` is the state after
    ``k`` episodes (row 0 is the initial state). Follower strategies are
    stored per leader action: ``follower_strategy[s][k, a]`` is follower
    ``s + 1``'s strategy against leader action ``a``. Expected quantities
    weight each leader action by the leader's strategy and use the matching
    follower rows.

    Slot arrays (``None`` unless ``record_slots``) have leading shape
    ``(K, T)``; ``slot_strategies[i]`` is the strategy user ``i`` drew from in
    that slot and the slot expected utility/SINR are exact expectations under
    those strategies.
    """

    regime: str
    seed: int
    action_counts: tuple
    episode_length: int
    leader_strategy: np.ndarray
    follower_strategy: List[np.ndarray]
    leader_q: np.ndarray
    episode_expected_utility: np.ndarray
    episode_expected_sinr: np.ndarray
    leader_actions: np.ndarray
    leader_targets: np.ndarray
    final_q: list
    final_fraction: float = 0.1
    actions: Optional[np.ndarray] = None
    realized_utility: Optional[np.ndarray] = None
    slot_strategies: Optional[List[np.ndarray]] = None
    slot_expected_utility: Optional[np.ndarray] = None
    slot_expected_sinr: Optional[np.ndarray] = None
    belief_deficit: Optional[np.ndarray] = None
    temperatures: list = field(default_factory=list)

    @property
    def num_episodes(self):
        return len(self.leader_actions)

    @property
    def num_users(self):
        return len(self.action_counts)

    def _tail(self):
        k = self.num_episodes
        if k == 0:
            return slice(0, 1)
        return slice(k + 1 - max(1, math.ceil(self.final_fraction * k)), k + 1)

    def final_expected_utility(self):
        return self.episode_expected_utility[self._tail()].mean(axis=0)

    def final_expected_sinr(self):
        return self.episode_expected_sinr[self._tail()].mean(axis=0)

    def strategy_history(self, i):
        """Per-episode strategy of user ``i`` (followers: the whole per-leader-action table)."""
        if i == 0:
            return self.leader_strategy
        return self.follower_strategy[i - 1].reshape(self.num_episodes + 1, -1)

    def strategy_drift(self, window=200):
        """Per user, largest sup-norm distance of any of the last ``window`` episode strategies from the final one."""
        start = max(0, self.num_episodes - window)
        out = []
        for i in range(self.num_users):
            hist = self.strategy_history(i)
            out.append(float(np.max(np.abs(hist[start:] - hist[-1]))))
        return np.array(out)

    def final_strategies(self):
        return [self.strategy_history(i)[-1] for i in range(self.num_users)]

    def fingerprint(self):
        """SHA-256 over every recorded array; equal fingerprints mean identical runs."""
        h = hashlib.sha256()
        arrays = [self.leader_strategy, *self.follower_strategy, self.leader_q,
                  self.episode_expected_utility, self.episode_expected_sinr, self.leader_actions,
                  self.leader_targets, *self.final_q]
        for opt in (self.actions, self.realized_utility, self.slot_expected_utility,
                    self.slot_expected_sinr, self.belief_deficit):
            if opt is not None:
                arrays.append(opt)
        if self.slot_strategies is not None:
            arrays.extend(self.slot_strategies)
        for arr in arrays:
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def batch_contract(tensor, strategies):
    """``contract`` for a batch: ``strategies[s]`` has shape (B, m_s)."""
    out = np.broadcast_to(tensor, (strategies[0].shape[0],) + tensor.shape)
    for S in reversed(strategies):
        out = np.einsum("b...m,bm->b...", out, S)
    return out


def follower_utility_matrix(scenario: NetworkScenario, i, leader_action):
    """Follower ``i``'s utilities as (own action, others' joint action) for a fixed leader action."""
    t = scenario.table.utility[i][leader_action]
    return np.moveaxis(t, i - 1, 0).reshape(t.shape[i - 1], -1)


class _Recorder:
    def __init__(self, scenario: NetworkScenario, cfg: LearningConfig, with_beliefs):
        self.table = scenario.table
        self.m = scenario.action_counts
        n, K, T = scenario.num_users, cfg.num_episodes, cfg.episode_length
        self.n, self.K, self.T = n, K, T
        m0 = self.m[0]
        self.leader_strategy = np.zeros((K + 1, m0))
        self.follower_strategy = [np.zeros((K + 1, m0, self.m[s])) for s in range(1, n)]
        self.leader_q = np.zeros((K + 1, m0))
        self.eu = np.zeros((K + 1, n))
        self.esinr = np.zeros((K + 1, n))
        self.leader_actions = np.full(K, -1, dtype=np.int64)
        self.leader_targets = np.full(K, np.nan)
        self.slots = cfg.record_slots
        self.with_beliefs = with_beliefs
        if self.slots:
            self.actions = np.zeros((K, T, n), dtype=np.int64)
            self.slot_pi = [np.zeros((K, T, mi)) for mi in self.m]
            self.slot_eu = np.zeros((K, T, n))
            self.slot_esinr = np.zeros((K, T, n))
            self.deficit = np.zeros((K, T, n - 1)) if with_beliefs else None
        self._open()

    def _open(self):
        self._acts, self._pis, self._def = [], [], []

    def episode(self, k, pi0, tables, q0):
        self.leader_strategy[k] = pi0
        self.leader_q[k] = q0
        for s, tab in enumerate(tables):
            self.follower_strategy[s][k] = tab
        for i in range(self.n):
            self.eu[k, i] = leader_conditioned_expectation(self.table.utility[i], pi0, tables)
            self.esinr[k, i] = leader_conditioned_expectation(self.table.sinr[i], pi0, tables)

    def slot(self, profile, pis, deficits=None):
        if self.slots:
            self._acts.append(profile)
            self._pis.append(pis)
            if deficits is not None:
                self._def.append(deficits)

    def close_episode(self, k):
        """Store the finished episode ``k`` (0-based) and its exact per-slot expectations."""
        if not self.slots:
            return
        self.actions[k] = self._acts
        strategies = []
        for i in range(self.n):
            self.slot_pi[i][k] = [p[i] for p in self._pis]
            strategies.append(self.slot_pi[i][k])
        for i in range(self.n):
            self.slot_eu[k, :, i] = batch_contract(self.table.utility[i], strategies)
            self.slot_esinr[k, :, i] = batch_contract(self.table.sinr[i], strategies)
        if self.with_beliefs:
            self.deficit[k] = self._def
        self._open()

    def trace(self, regime, cfg, final_q, temps):
        extra = {}
        if self.slots:
            t = self.table.utility
            realized = np.stack([t[i][tuple(self.actions[..., s] for s in range(self.n))]
                                 for i in range(self.n)], axis=-1)
            extra = dict(actions=self.actions, realized_utility=realized,
                         slot_strategies=self.slot_pi, slot_expected_utility=self.slot_eu,
                         slot_expected_sinr=self.slot_esinr, belief_deficit=self.deficit)
        return RunTrace(regime=regime, seed=cfg.rng_seed, action_counts=tuple(self.m),
                        episode_length=cfg.episode_length,
                        leader_strategy=self.leader_strategy,
                        follower_strategy=self.follower_strategy, leader_q=self.leader_q,
                        episode_expected_utility=self.eu, episode_expected_sinr=self.esinr,
                        leader_actions=self.leader_actions, leader_targets=self.leader_targets,
                        final_q=final_q, final_fraction=cfg.final_fraction,
                        temperatures=list(temps), **extra)


# The slot loop runs on plain floats and lists: the vectors have a handful of
# entries and numpy's per-call overhead would dominate. These helpers are the
# scalar counterparts of boltzmann, product_measure and the conjecture rule.

def _softmax(q, tau):
    top = max(q)
    e = [math.exp((x - top) / tau) for x in q]
    z = sum(e)
    return [x / z for x in e]


def _product(strategies):
    out = [1.0]
    for pi in strategies:
        out = [x * p for x in out for p in pi]
    return out


def _dot(u, w):
    return sum(x * y for x, y in zip(u, w))


def _follower_rates(cfg: LearningConfig, k):
    """Follower learning rates for the T slots of episode ``k`` (1-based)."""
    T = cfg.episode_length
    offset = 0 if cfg.follower_clock == EPISODE_CLOCK else (k - 1) * T
    return [rate(offset + t, cfg.follower_rate_init, cfg.rate_decay, cfg.rate_schedule)
            for t in range(1, T + 1)]


def _hierarchical(scenario: NetworkScenario, cfg: LearningConfig, variant) -> RunTrace:
    table = scenario.table
    n = scenario.num_users
    followers = range(1, n)
    m = scenario.action_counts
    K, T = cfg.num_episodes, cfg.episode_length
    taus = cfg.temperatures(scenario)
    qinit = cfg.initial_q(scenario)
    deltas = [0.0, *cfg.belief_factors(n - 1)]
    rng = np.random.default_rng(cfg.rng_seed)

    q0 = np.full(m[0], qinit[0])
    # one private Q-table per leader action: qf[i][a] is follower i's Q against action a
    qf = {i: [[qinit[i]] * m[i] for _ in range(m[0])] for i in followers}
    # utilities flattened over the followers' joint action, C order
    u_flat = [[table.utility[i][a].ravel().tolist() for a in range(m[0])] for i in range(n)]
    strides = [int(np.prod(m[i + 1:])) for i in followers]
    umats = {}
    if variant == RLHPA2:
        umats = {(i, a): follower_utility_matrix(scenario, i, a).tolist()
                 for i in followers for a in range(m[0])}

    def tables():
        return [np.array([_softmax(row, taus[i]) for row in qf[i]]) for i in followers]

    rec = _Recorder(scenario, cfg, with_beliefs=variant == RLHPA2)
    pi0 = boltzmann(q0, taus[0])
    rec.episode(0, pi0, tables(), q0)

    fixed_rates = _follower_rates(cfg, 1) if cfg.follower_clock == EPISODE_CLOCK else None
    for k in range(1, K + 1):
        draws = rng.random((T, n)).tolist()
        a = sample_action(pi0, draws[0][0])
        pi0_list = pi0.tolist()
        u0a = u_flat[0][a]
        rates = fixed_rates or _follower_rates(cfg, k)
        u_tilde = {i: [0.0] * m[i] for i in followers}
        counts = {i: [0] * m[i] for i in followers}
        pis = {i: _softmax(qf[i][a], taus[i]) for i in followers}
        prev = pis
        slot_values = []
        for t in range(T):
            draw = draws[t]
            acts = [sample_action(pis[i], draw[i]) for i in followers]
            flat = sum(j * s for j, s in zip(acts, strides))
            slot_values.append(_dot(u0a, _product([pis[i] for i in followers])))
            alpha = rates[t]
            deficits = None
            if variant == RLHPA1:
                for i in followers:
                    j = acts[i - 1]
                    n_j = counts[i][j]
                    u_tilde[i][j] += (u_flat[i][a][flat] - u_tilde[i][j]) / (n_j + 1)
                    counts[i][j] = n_j + 1
                    q = qf[i][a]
                    q[j] = (1.0 - alpha) * q[j] + alpha * u_tilde[i][j]
            else:
                deficits = []
                new_q = {}
                for i in followers:
                    measure = _product([prev[s] for s in followers if s != i])
                    q, cur, old, d = qf[i][a], pis[i], prev[i], deltas[i]
                    row_q, worst = [], 0.0
                    for j, u_row in enumerate(umats[i, a]):
                        shift = d * (cur[j] - old[j])
                        belief = [min(1.0, max(0.0, b - shift)) for b in measure]
                        worst = max(worst, abs(1.0 - sum(belief)))
                        row_q.append((1.0 - alpha) * q[j] + alpha * _dot(u_row, belief))
                    new_q[i] = row_q
                    deficits.append(worst)
                for i in followers:
                    qf[i][a] = new_q[i]
            rec.slot((a, *acts), [pi0_list, *[pis[i] for i in followers]], deficits)
            prev = pis
            pis = {i: _softmax(qf[i][a], taus[i]) for i in followers}
        rec.close_episode(k - 1)
        alpha_l = rate(k, cfg.leader_rate_init, cfg.rate_decay, cfg.rate_schedule)
        q0 = leader_update(q0, slot_values, alpha_l, a)
        rec.leader_actions[k - 1] = a
        rec.leader_targets[k - 1] = math.fsum(slot_values) / T
        pi0 = boltzmann(q0, taus[0])
        rec.episode(k, pi0, tables(), q0)

    final_q = [q0.copy(), *[np.array(qf[i]) for i in followers]]
    return rec.trace(variant, cfg, final_q, taus)


def run_rlhpa1(scenario: NetworkScenario, cfg: LearningConfig) -> RunTrace:
    """Followers learn from per-episode running means of their realised utilities.

    Only the action a follower actually played gets its Q-value moved.
    """
    return _hierarchical(scenario, cfg, RLHPA1)


def run_rlhpa2(scenario: NetworkScenario, cfg: LearningConfig) -> RunTrace:
    """Followers learn from utilities weighted by a conjectured contention measure.

    At every slot each follower sees the other followers' strategies of the
    previous slot (zero-delay broadcast) and updates all of its actions. In
    an episode's first slot there is no previous slot under the current
    leader action, so the current strategies stand in for it.
    """
    return _hierarchical(scenario, cfg, RLHPA2)


def run_noncooperative(scenario: NetworkScenario, cfg: LearningConfig) -> RunTrace:
    """Flat baseline: every user, the leader included, learns from its own realised utility each slot."""
    table = scenario.table
    n = scenario.num_users
    m = scenario.action_counts
    K, T = cfg.num_episodes, cfg.episode_length
    taus = cfg.temperatures(scenario)
    qinit = cfg.initial_q(scenario)
    rng = np.random.default_rng(cfg.rng_seed)
    inits = [cfg.leader_rate_init] + [cfg.follower_rate_init] * (n - 1)
    u_flat = [table.utility[i].ravel().tolist() for i in range(n)]
    strides = [int(np.prod(m[i + 1:])) for i in range(n)]

    q = [[qinit[i]] * m[i] for i in range(n)]
    pis = [_softmax(q[i], taus[i]) for i in range(n)]

    def tables():
        # nobody sees the leader, so every leader action gets the same row
        return [np.tile(pis[i], (m[0], 1)) for i in range(1, n)]

    rec = _Recorder(scenario, cfg, with_beliefs=False)
    rec.episode(0, np.array(pis[0]), tables(), q[0])
    for k in range(1, K + 1):
        draws = rng.random((T, n)).tolist()
        offset = 0 if cfg.follower_clock == EPISODE_CLOCK else (k - 1) * T
        for t in range(T):
            profile = [sample_action(pis[i], draws[t][i]) for i in range(n)]
            flat = sum(j * s for j, s in zip(profile, strides))
            rec.slot(tuple(profile), pis)
            step = offset + t + 1
            for i in range(n):
                alpha = rate(step, inits[i], cfg.rate_decay, cfg.rate_schedule)
                j = profile[i]
                q[i][j] = (1.0 - alpha) * q[i][j] + alpha * u_flat[i][flat]
            pis = [_softmax(q[i], taus[i]) for i in range(n)]
        rec.close_episode(k - 1)
        rec.episode(k, np.array(pis[0]), tables(), q[0])

    return rec.trace(NONCOOP, cfg, [np.array(qi) for qi in q], taus)


RUNNERS = {RLHPA1: run_rlhpa1, RLHPA2: run_rlhpa2, NONCOOP: run_noncooperative}
