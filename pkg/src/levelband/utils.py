"""Deterministic parallel mapping and seed derivation."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np


def derive_seed(seed: int, index: int) -> int:
    """Child seed for realization ``index`` of a run seeded with ``seed``.

    Uses SeedSequence hashing so children are decorrelated and the mapping
    is stable across platforms.
    """
    return int(np.random.SeedSequence((int(seed), int(index))).generate_state(1, np.uint64)[0])


def parallel_map(fn: Callable, items: Sequence, workers: int = 1) -> list:
    """Map ``fn`` over ``items`` preserving order.

    workers <= 1 runs serially; otherwise a process pool is used.  Results
    are merged by index, so parallel and serial runs are bit-comparable.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
