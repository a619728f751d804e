from functools import partial

import numpy as np

from relclock.science.montecarlo import run_replicas, seed_sequence


def draw(seed, n=5):
    return np.random.default_rng(seed).standard_normal(n).tolist()


def test_workers_match_serial():
    seeds = seed_sequence(42, 12)
    assert run_replicas(partial(draw, n=3), seeds, workers=3) == run_replicas(partial(draw, n=3), seeds)


def test_seed_sequence():
    a = seed_sequence(7, 50)
    assert a == seed_sequence(7, 50)
    assert len(set(a)) == 50
    assert all(0 <= s < 2 ** 63 for s in a)
    assert seed_sequence(8, 50) != a
    assert seed_sequence(7, 60)[:50] == a
