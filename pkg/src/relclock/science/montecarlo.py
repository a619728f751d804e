"""Seeded Monte Carlo replicas, optionally spread over worker processes."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np


def run_replicas(job: Callable, seeds: Sequence[int], workers: int = 1) -> list:
    """``[job(seed) for seed in seeds]``; with ``workers > 1`` the replicas
    run in separate processes and results are returned in seed order.
    ``job`` must be picklable (a module-level function or a partial)."""
    seeds = list(seeds)
    if workers <= 1 or len(seeds) < 2:
        return [job(s) for s in seeds]
    chunk = max(1, len(seeds) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, seeds, chunksize=chunk))


def seed_sequence(base: int, n: int) -> list[int]:
    """``n`` independent 63-bit seeds derived from ``base``."""
    ss = np.random.SeedSequence(base)
    return [int(c.generate_state(1, dtype=np.uint64)[0] >> 1) for c in ss.spawn(n)]
