"""Deterministic parallel execution of per-seed jobs.

Workers are threads (the heavy lifting is BLAS, which releases the GIL) and
BLAS itself is pinned to one thread for the duration of a pooled section, so
results are bit-identical no matter how many workers run.  Results come back
in job order; failures are captured per job instead of aborting the pool.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from threadpoolctl import threadpool_limits


@dataclass
class JobFailure:
    """A job that raised; carried in the result list in place of a value."""

    key: object
    message: str


def parallel_map(fn, items, threads: int = 1, keys=None) -> list:
    """Run ``fn`` over ``items``; list of results (or JobFailure) in item order."""
    keys = list(keys) if keys is not None else list(range(len(items)))

    def guarded(key, item):
        try:
            return fn(item)
        except Exception as exc:  # noqa: BLE001 - failures are per-seed data
            return JobFailure(key=key, message=f"{type(exc).__name__}: {exc}")

    with threadpool_limits(limits=1):
        if threads <= 1:
            return [guarded(k, it) for k, it in zip(keys, items)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(guarded, k, it) for k, it in zip(keys, items)]
            return [f.result() for f in futures]
