import numpy as np

from femtolearn.scenario import FOLLOWER, LEADER, UserSpec, scenario_from_gains


def leader(levels=(1.0,), min_sinr=1e-9, circuit=0.0):
    return UserSpec(LEADER, tuple(levels), min_sinr, circuit)


def follower(levels=(1.0,), min_sinr=1e-9, circuit=0.0, mask=None):
    return UserSpec(FOLLOWER, tuple(levels), min_sinr, circuit, mask)


def small_game(seed=7):
    """Three users, three levels each, gains drawn so that QoS targets bite sometimes."""
    rng = np.random.default_rng(seed)
    gains = rng.uniform(0.05, 1.0, (3, 3)) + 2.0 * np.eye(3)
    users = [leader((0.1, 0.5, 1.0), 1.5, 0.05),
             follower((0.1, 0.5, 1.0), 2.0, 0.05),
             follower((0.1, 0.5, 1.0), 2.0, 0.05)]
    return scenario_from_gains(gains, 0.1, 1.0, users)


# one line per acceptance criterion, printed at the end of the session by conftest
ACCEPTANCE_LINES = []


def report_criterion(number, name, passed, detail):
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed
