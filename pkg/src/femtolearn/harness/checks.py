"""Quick numerical self-checks behind the ``check`` command.

Each check returns ``(passed, detail)``. They use fixed seeds, so results
are reproducible, and finish in a few seconds together.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..game import expected_utility, one_hot
from ..learning import FollowerEstimator, LearningConfig, boltzmann, contraction_check, run_rlhpa2
from ..oracle import is_follower_nash, pure_nash_of_subgame, stackelberg_equilibrium
from ..topology import GeometryParams, generate_topology


def check_softmax(rng):
    worst_norm = worst_shift = 0.0
    for _ in range(1000):
        q = rng.normal(0, 10, rng.integers(1, 8))
        pi = boltzmann(q, rng.uniform(0.1, 10))
        worst_norm = max(worst_norm, abs(pi.sum() - 1))
        tau = rng.uniform(0.1, 10)
        worst_shift = max(worst_shift, np.max(np.abs(boltzmann(q + rng.normal(0, 100), tau)
                                                     - boltzmann(q, tau))))
    return worst_norm <= 1e-12 and worst_shift <= 1e-12, \
        f"normalisation error {worst_norm:.2e}, shift error {worst_shift:.2e}"


def check_multilinearity(rng):
    sc = generate_topology(GeometryParams(seed=0))
    worst = 0.0
    for _ in range(200):
        sp = [rng.dirichlet(np.ones(3)) for _ in range(3)]
        x, y, lam, who = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3)), rng.random(), rng.integers(3)
        for i in range(3):
            def eu(pi):
                s = list(sp)
                s[who] = pi
                return expected_utility(sc, s, i)
            mix = lam * x + (1 - lam) * y
            err = abs(eu(mix / mix.sum()) - lam * eu(x) - (1 - lam) * eu(y)) / sc.table.scale(i)
            worst = max(worst, err)
    return worst <= 1e-10, f"largest relative deviation {worst:.2e}"


def check_one_hot(rng):
    sc = generate_topology(GeometryParams(seed=int(rng.integers(1000))))
    worst = 0.0
    for prof in itertools.product(range(3), repeat=3):
        sp = [one_hot(a, 3) for a in prof]
        for i in range(3):
            pure = sc.table.utility[i][prof]
            worst = max(worst, abs(expected_utility(sc, sp, i) - pure) / max(pure, 1e-300))
    return worst <= 1e-12, f"largest relative deviation {worst:.2e}"


def check_estimator(rng):
    worst = 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 6))
        est, sums, counts = FollowerEstimator(m), np.zeros(m), np.zeros(m)
        for a, u in zip(rng.integers(0, m, 100), rng.uniform(0, 1e8, 100)):
            est.update(a, u)
            sums[a] += u
            counts[a] += 1
        seen = counts > 0
        naive = sums[seen] / counts[seen]
        worst = max(worst, float(np.max(np.abs(est.u_tilde[seen] - naive) / naive)))
    return worst <= 1e-9, f"largest relative deviation {worst:.2e}"


def check_oracle(rng):
    count = 0
    for seed in rng.integers(0, 2**31, 20):
        sc = generate_topology(GeometryParams(seed=int(seed)))
        for a in range(3):
            for fp in pure_nash_of_subgame(sc, a):
                if not is_follower_nash(sc, (a, *fp)):
                    return False, f"seed {seed}: reported NE {fp} is not stable"
                count += 1
        rep = stackelberg_equilibrium(sc, strict=False)
        if any(v > rep.leader_utility for v in rep.leader_values.values()):
            return False, f"seed {seed}: leader choice not optimal"
    return True, f"{count} equilibria verified"


def check_contraction(rng):
    sc = generate_topology(GeometryParams(seed=0))
    temps = [100 * sc.table.scale(i) for i in range(1, sc.num_users)]
    rep = contraction_check(sc, 0, temps, trials=1000, rng=rng)
    return rep.fraction_below_one >= 0.99, rep.summary()


def check_determinism(rng):
    sc = generate_topology(GeometryParams(seed=1))
    cfg = LearningConfig(num_episodes=20, episode_length=20, rng_seed=int(rng.integers(1000)))
    a, b = run_rlhpa2(sc, cfg).fingerprint(), run_rlhpa2(sc, cfg).fingerprint()
    return a == b, f"fingerprint {a[:16]}"


CHECKS = [
    ("softmax normalisation and shift invariance", check_softmax),
    ("expected utility multilinearity", check_multilinearity),
    ("one-hot expectations equal pure utilities", check_one_hot),
    ("running-mean estimator equals naive mean", check_estimator),
    ("oracle equilibria survive deviations", check_oracle),
    ("conjecture update contracts at large temperature", check_contraction),
    ("same seed gives identical runs", check_determinism),
]


def run_checks(report=print, seed=0):
    """Run every check; returns True if all pass."""
    ok = True
    for name, fn in CHECKS:
        passed, detail = fn(np.random.default_rng(seed))
        ok &= passed
        report(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return ok
