"""Seeded test-function families and the thread-capped parallel map.

Per-sample streams are ``np.random.default_rng([seed, k])`` for sample
counter ``k``, so any single sample can be reproduced on its own.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ParameterError

FAMILIES = ("random-gaussian", "random-signs", "spike", "constant")


def rng_for(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & (2**64 - 1), int(k)])


def random_function(kind: str, n: int, rng: np.random.Generator, support=None) -> np.ndarray:
    """A test function of the given family, optionally supported on ``support``."""
    idx = np.arange(n) if support is None else np.asarray(support, dtype=np.int64)
    f = np.zeros(n)
    if kind == "random-gaussian":
        f[idx] = rng.standard_normal(idx.size)
    elif kind == "random-signs":
        f[idx] = rng.choice([-1.0, 1.0], size=idx.size)
    elif kind == "spike":
        f[idx[rng.integers(idx.size)]] = 1.0
    elif kind == "constant":
        f[idx] = 1.0
    else:
        raise ParameterError(f"unknown function kind {kind!r}")
    return f


def thread_count() -> int:
    env = os.environ.get("BALLBASIS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ParameterError("BALLBASIS_THREADS must be an integer") from None
    return os.cpu_count() or 1


def pmap(fn, items) -> list:
    """Ordered map, run on up to ``BALLBASIS_THREADS`` threads."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
