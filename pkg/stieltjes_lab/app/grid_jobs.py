# stieltjes_lab/app/grid_jobs.py
"""Fan grid-point evaluations out over a small thread pool.

numpy/scipy release the GIL inside LAPACK calls, so threads are enough for
the per-point eigen/SVD work the checks do.
"""
from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Generic, Iterable, Optional, Sequence, TypeVar

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class GridJob(Generic[T, R]):
    """One unit of grid work; remembers its outcome the way a background job would."""

    def __init__(self, index: int, item: T, function: Callable[[T], R]) -> None:
        self._index = index
        self._item = item
        self._function = function
        self._result: Optional[R] = None
        self._exception: Optional[BaseException] = None
        self._elapsed: Optional[float] = None
        self._done = threading.Event()

    @property
    def index(self) -> int:
        return self._index

    @property
    def item(self) -> T:
        return self._item

    @property
    def elapsed(self) -> Optional[float]:
        return self._elapsed

    def run(self) -> None:
        started = time.perf_counter()
        try:
            self._result = self._function(self._item)
        except Exception as exc:
            self._exception = exc
            log.debug("grid job %d failed on %r: %s", self._index, self._item, exc)
        finally:
            self._elapsed = time.perf_counter() - started
            self._done.set()

    def has_error(self) -> bool:
        return self._exception is not None

    def get_result(self) -> Optional[R]:
        return self._result

    def get_exception(self) -> Optional[BaseException]:
        return self._exception

    def status(self) -> str:
        if not self._done.is_set():
            return "queued"
        return "error" if self.has_error() else "done"


def run_jobs(function: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[GridJob[T, R]]:
    """Run every item to completion; failures stay on their job instead of propagating."""
    jobs = [GridJob(i, item, function) for i, item in enumerate(items)]
    if workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            job.run()
        return jobs
    with ThreadPoolExecutor(max_workers=min(workers, len(jobs)), thread_name_prefix="grid") as pool:
        for future in [pool.submit(job.run) for job in jobs]:
            future.result()
    return jobs


def parallel_map(function: Callable[[T], R], items: Sequence[T] | Iterable[T], workers: int = 1) -> list[R]:
    """Order-preserving map; the first failure (by input order) is re-raised after all jobs settle."""
    jobs = run_jobs(function, items, workers)
    failed = [job for job in jobs if job.has_error()]
    if failed:
        log.warning("%d of %d grid jobs failed; first failure at index %d", len(failed), len(jobs), failed[0].index)
        exc = failed[0].get_exception()
        assert exc is not None
        raise exc
    return [job.get_result() for job in jobs]  # type: ignore[misc]


def describe_jobs(jobs: Sequence[GridJob[Any, Any]]) -> dict[str, Any]:
    return {
        "total": len(jobs),
        "failed": sum(1 for job in jobs if job.has_error()),
        "elapsed": sum(job.elapsed or 0.0 for job in jobs),
    }


__all__ = ["GridJob", "run_jobs", "parallel_map", "describe_jobs"]
