"""Reproducible, splittable random streams.

Every stream is a Philox (counter-based) generator keyed by the run seed plus
a tuple of integers, so stream ``(seed, r)`` does not depend on how many
other streams were drawn or in which order.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

# Monte Carlo work is split into blocks of this many replicates; block b uses
# stream (seed, tag, b). Results do not depend on the worker count.
BLOCK = 1 << 16


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def worker_count(requested: int | None = None) -> int:
    if requested:
        return max(1, int(requested))
    env = os.environ.get("RECOMB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def blocks(total: int, block: int = BLOCK):
    """Yield ``(index, start, count)`` for fixed-size blocks covering ``total``."""
    for b, start in enumerate(range(0, total, block)):
        yield b, start, min(block, total - start)


def map_blocks(fn, total: int, workers: int | None = None, block: int = BLOCK) -> list:
    """Run ``fn(b, start, count)`` over all blocks; results come back in block order."""
    jobs = list(blocks(total, block))
    n = min(worker_count(workers), len(jobs))
    if n <= 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
