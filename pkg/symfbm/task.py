import logging
import os
import threading

import numpy as np

import amp

log = logging.getLogger(__name__)

CHUNK_SIZE = 256
THREADS_ENV = "SYMFBM_THREADS"


def default_workers():
    """Worker count from $SYMFBM_THREADS, 1 when unset."""
    value = os.environ.get(THREADS_ENV, "").strip()
    if not value:
        return 1
    try:
        workers = int(value)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got '{value}'")
    return max(1, workers)


def chunk_ranges(count, chunk_size=CHUNK_SIZE):
    """(start, size) pairs covering 0..count-1. Depends on count and chunk_size only."""
    return [(start, min(chunk_size, count - start)) for start in range(0, count, chunk_size)]


def merge(results):
    """Concatenates per-chunk dicts of arrays along the path axis, in chunk order."""
    if not results:
        return {}
    return {key: np.concatenate([np.atleast_1d(r[key]) for r in results]) for key in results[0]}


class BatchTask:
    """
    Runs ``func(start, count, *args)`` over fixed-size chunks of path indices
    using the AMP pool.

    Chunk boundaries never depend on the worker count and results are put
    back in chunk order, so the merged output is the same bytes whether one
    process or many did the work. ``workers=1`` runs inline without a pool.
    """
    def __init__(self, func, workers=None, chunk_size=CHUNK_SIZE, timeout=amp.JOIN_TIMEOUT):
        """
        Args:
            func: Module-level function (it is pickled into the workers).
            workers: Process count; defaults to $SYMFBM_THREADS or 1.
            chunk_size: Paths per submitted task.
            timeout: Seconds to wait for a run's chunks before TimeoutError.
        """
        self.func = func
        self.timeout = timeout
        self.workers = workers or default_workers()
        self.chunk_size = chunk_size
        self.results = {}
        self.errors = {}
        self.lock = threading.Lock()
        if self.workers > 1:
            amp.GlobalMPPool(min_workers=self.workers)

    def run(self, count, *args, **kwargs):
        """Evaluates every chunk and returns the per-chunk results in order."""
        chunks = chunk_ranges(count, self.chunk_size)
        if self.workers == 1:
            return [self.func(start, size, *args, **kwargs) for start, size in chunks]

        self.results.clear()
        self.errors.clear()
        log.debug("submitting %d chunks of %s to %d workers", len(chunks), self.func.__name__, self.workers)
        for index, (start, size) in enumerate(chunks):
            self.run_async(index, start, size, *args, **kwargs)
        self.wait_all()
        if self.errors:
            raise self.errors[min(self.errors)]
        return [self.results[index] for index in range(len(chunks))]

    def run_async(self, index, *args, **kwargs):
        """Submits one chunk; its result lands in ``self.results[index]``."""
        def success(result):
            with self.lock:
                self.results[index] = result

        def failure(exc):
            with self.lock:
                self.errors[index] = exc

        amp.async_call(self.func, *args, success=success, failure=failure, **kwargs)

    def wait_all(self):
        """
        Waits for all currently submitted tasks to finish. A timeout or a dead
        worker leaves orphaned tasks behind, so the pool is dropped first.
        """
        try:
            amp.GlobalMPPool().join(timeout=self.timeout)
        except (TimeoutError, RuntimeError):
            amp.shutdown_global()
            raise

    def shutdown(self):
        """Cleans up the pool resources."""
        amp.shutdown_global()
