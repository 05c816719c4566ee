import collections
import logging
import multiprocessing
import os
import queue
import threading
import time
import traceback

log = logging.getLogger(__name__)

# Longest a join() waits for outstanding tasks unless told otherwise
JOIN_TIMEOUT = 3600.0

# Pickleable containers crossing the process boundary
TaskPayload = collections.namedtuple("TaskPayload", "task_id target args kwargs")
TaskResult = collections.namedtuple("TaskResult", "task_id success data")


def _worker_loop(task_queue, result_queue, max_tasks):
    """Runs payloads until the None sentinel or ``max_tasks`` completions."""
    completed = 0
    while True:
        payload = task_queue.get()
        if payload is None:
            break
        try:
            result = TaskResult(payload.task_id, True, payload.target(*payload.args, **payload.kwargs))
        except Exception as e:
            result = TaskResult(payload.task_id, False, e)
        result_queue.put(result)
        completed += 1
        if max_tasks and completed >= max_tasks:
            # Exit to prevent memory creep; the monitor starts a replacement
            break


class MultiprocessingPool:
    """
    Worker processes fed from one task queue.

    Results come back on a result queue and are dispatched to per-task
    callbacks by a handler thread in the main process. A monitor thread
    replaces workers that retired after ``max_tasks_per_worker`` tasks, and may
    grow the pool up to ``max_workers`` under a deep queue. A worker that died
    with a nonzero exit code loses its task, so join() fails instead of waiting.
    """
    def __init__(self, min_workers=2, max_tasks_per_worker=100, max_workers=None):
        self.min_workers = min_workers
        self.max_workers = max(min_workers, max_workers or min_workers)
        self.max_tasks_per_worker = max_tasks_per_worker
        self.workers = []
        self.crashed = [] # exit codes of workers that died mid-run
        self.task_queue = multiprocessing.Queue()
        self.result_queue = multiprocessing.Queue()

        # Mapping task_id -> (success_callback, failure_callback)
        self.callbacks = {}
        self.task_counter = 0
        self.lock = threading.Lock() # Protect callbacks dict and counter
        self._shutdown = False

        for _ in range(min_workers):
            self._add_worker()

        self.result_handler = threading.Thread(target=self._handle_results)
        self.result_handler.daemon = True
        self.result_handler.start()

        self.monitor_thread = threading.Thread(target=self._monitor_load)
        self.monitor_thread.daemon = True
        self.monitor_thread.start()
        log.info("--- AMP pool started with %d workers ---", min_workers)

    def _add_worker(self):
        w = multiprocessing.Process(target=_worker_loop, daemon=True,
                                    args=(self.task_queue, self.result_queue, self.max_tasks_per_worker))
        w.start()
        self.workers.append(w)

    def _monitor_load(self):
        """
        Health checks: keeps at least ``min_workers`` alive and adds one worker
        per tick while the queue holds more than two tasks per worker.
        """
        while not self._shutdown:
            time.sleep(0.5)
            try:
                with self.lock:
                    if self._shutdown:
                        break
                    self.crashed.extend(w.exitcode for w in self.workers if w.exitcode)
                    self.workers = [w for w in self.workers if w.is_alive()]
                    n_workers = len(self.workers)

                    if n_workers < self.min_workers:
                        self._add_worker()
                    elif n_workers < self.max_workers:
                        try:
                            q_size = self.task_queue.qsize()
                        except NotImplementedError: # macOS
                            q_size = 0
                        if q_size > n_workers * 2:
                            self._add_worker()
            except Exception:
                log.debug("AMP monitor error", exc_info=True)

    def _handle_results(self):
        """
        Reads results from the multiprocessing queue and triggers
        callbacks in the main process context.
        """
        while not self._shutdown:
            try:
                try:
                    result_packet = self.result_queue.get(timeout=1.0)
                except queue.Empty:
                    continue

                with self.lock:
                    callback_data = self.callbacks.get(result_packet.task_id)

                if callback_data:
                    success_cb, failure_cb = callback_data
                    if result_packet.success:
                        if success_cb:
                            success_cb(result_packet.data)
                    else:
                        if failure_cb:
                            failure_cb(result_packet.data)
                        else:
                            log.error("Task %d failed (no callback): %s", result_packet.task_id, result_packet.data)

                # Pop only after the callback ran so join() never returns early
                with self.lock:
                    self.callbacks.pop(result_packet.task_id, None)

            except Exception:
                traceback.print_exc()

    def apply_async(self, target, args=(), kwargs=None, success=None, failure=None):
        if kwargs is None: kwargs = {}

        with self.lock:
            if self._shutdown:
                raise RuntimeError("Cannot apply_async to a shutdown pool.")
            task_id = self.task_counter
            self.task_counter += 1
            self.callbacks[task_id] = (success, failure)

        payload = TaskPayload(task_id, target, args, kwargs)
        self.task_queue.put(payload)
        return task_id

    def join(self, timeout=JOIN_TIMEOUT):
        """
        Wait for all tasks to be processed.

        Raises:
            RuntimeError: A worker died while tasks were pending.
            TimeoutError: Tasks were still pending after ``timeout`` seconds.
        """
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            with self.lock:
                if len(self.callbacks) == 0:
                    break
                crashed = self.crashed + [w.exitcode for w in self.workers if w.exitcode]
            if crashed:
                raise RuntimeError(f"AMP worker died with exit code {crashed[0]}; {len(self.callbacks)} tasks lost or pending")
            if deadline is not None and time.monotonic() > deadline:
                raise TimeoutError(f"{len(self.callbacks)} AMP tasks still pending after {timeout}s")
            time.sleep(0.01)

    def shutdown(self):
        """
        Stops all workers and threads cleanly.
        """
        with self.lock:
            self._shutdown = True

        for _ in range(len(self.workers)):
            self.task_queue.put(None)

        for w in self.workers:
            w.join(timeout=2.0)
            if w.is_alive():
                w.terminate()

        while not self.task_queue.empty():
            try:
                self.task_queue.get_nowait()
            except queue.Empty:
                break

        while not self.result_queue.empty():
            try:
                self.result_queue.get_nowait()
            except queue.Empty:
                break

        log.info("AMP Pool shutdown complete.")

# Singleton
_global_mp_pool = None

def GlobalMPPool(min_workers=None, max_tasks_per_worker=100):
    """
    The shared pool. Asking for a different worker count than the running
    pool has restarts it with the new size.
    """
    global _global_mp_pool
    if min_workers is None and (_global_mp_pool is None or _global_mp_pool._shutdown):
        min_workers = os.cpu_count() or 2
    if (_global_mp_pool is not None and not _global_mp_pool._shutdown
            and min_workers is not None and min_workers != _global_mp_pool.min_workers):
        _global_mp_pool.shutdown()
    if _global_mp_pool is None or _global_mp_pool._shutdown:
        _global_mp_pool = MultiprocessingPool(min_workers, max_tasks_per_worker)
    return _global_mp_pool

def async_call(target, *args, **kwargs):
    success = kwargs.pop('success', None)
    failure = kwargs.pop('failure', None)
    pool = GlobalMPPool()
    return pool.apply_async(target, args=args, kwargs=kwargs, success=success, failure=failure)

def shutdown_global():
    """Stops the shared pool if one is running."""
    global _global_mp_pool
    if _global_mp_pool is not None and not _global_mp_pool._shutdown:
        _global_mp_pool.shutdown()
    _global_mp_pool = None
