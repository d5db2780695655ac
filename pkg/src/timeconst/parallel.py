"""Order-preserving sample dispatch.

Results always come back indexed by sample number, so any aggregation done
afterwards in index order is independent of the worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Callable, Sequence


def map_samples(fn: Callable, indices: Sequence[int], workers: int = 1, **kwargs) -> list:
    task = partial(fn, **kwargs) if kwargs else fn
    if workers <= 1 or len(indices) < 2:
        return [task(i) for i in indices]
    chunk = max(1, len(indices) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, indices, chunksize=chunk))
