"""Seed derivation and deterministic batch execution.

Batch work is parallelized across draw indices.  Every draw gets its own
generator seeded by a splitmix64 hash of (base seed, index), so results are
a pure function of (seed, index) and never depend on the worker count or
scheduling order.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """One output of the splitmix64 mixer for a given state."""
    z = (state + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(base_seed: int, index: int) -> int:
    """Per-draw seed: mix the base seed, then mix in the index."""
    return splitmix64((splitmix64(base_seed & _MASK64) + index) & _MASK64)


def rng_for(base_seed: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(base_seed, index))


def thread_count(requested=None) -> int:
    """Worker count: explicit argument, else RMT_THREADS, else single thread."""
    if requested is not None:
        n = int(requested)
    else:
        env = os.environ.get("RMT_THREADS", "").strip()
        n = int(env) if env else 1
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    return n


def indexed_map(fn, n: int, workers=None) -> list:
    """[fn(0), ..., fn(n-1)] with results in index order.

    fn must be pure given the index (derive randomness via derive_seed), so
    the output is identical for any worker count.
    """
    k = thread_count(workers)
    if k == 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, range(n)))
