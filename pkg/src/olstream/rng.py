"""Seeded randomness and bounded parallelism.

Every random stream is derived from one 64-bit seed plus a tuple of integer
stream ids, through numpy's counter-based Philox generator.  Work is split
into fixed chunks, each with its own stream, so results do not depend on how
many threads run them.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

SEED_MASK = (1 << 64) - 1

T = TypeVar("T")
R = TypeVar("R")


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    if seed is None:
        raise ValueError("a seed is required")
    seed = int(seed)
    if not 0 <= seed <= SEED_MASK:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *map(int, stream)])))


def thread_count() -> int:
    raw = os.environ.get("OLSTREAM_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"OLSTREAM_THREADS must be an integer, got {raw!r}") from None
        return max(1, n)
    return max(1, os.cpu_count() or 1)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """``[fn(x) for x in items]`` on up to ``threads`` workers, results in input order."""
    items = list(items)
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
