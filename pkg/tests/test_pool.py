import os
import time

import numpy as np
import pytest

import amp
from symfbm.task import THREADS_ENV, BatchTask, chunk_ranges, default_workers, merge


def squares(start, count, scale):
    idx = np.arange(start, start + count, dtype=float)
    return {"value": scale * idx ** 2, "index": idx}


def explode(start, count):
    if start >= 10:
        raise ValueError(f"bad chunk at {start}")
    return {"value": np.zeros(count)}


def crash(start, count):
    if start >= 5:
        os._exit(3)
    return {"value": np.zeros(count)}


def stall(start, count):
    time.sleep(5.0)
    return {"value": np.zeros(count)}


@pytest.fixture(autouse=True)
def shutdown_pool():
    yield
    amp.shutdown_global()


def test_chunk_ranges():
    assert chunk_ranges(0) == []
    assert chunk_ranges(10, 4) == [(0, 4), (4, 4), (8, 2)]
    assert sum(size for _, size in chunk_ranges(1000)) == 1000


def test_merge_keeps_chunk_order():
    merged = merge([{"a": np.array([1, 2])}, {"a": np.array([3])}])
    assert merged["a"].tolist() == [1, 2, 3]
    assert merge([]) == {}


def test_inline_and_pooled_agree():
    inline = merge(BatchTask(squares, workers=1, chunk_size=7).run(50, 0.5))
    pooled = merge(BatchTask(squares, workers=2, chunk_size=7).run(50, 0.5))
    assert np.array_equal(inline["index"], np.arange(50.0))
    assert inline["value"].tobytes() == pooled["value"].tobytes()


def test_errors_propagate():
    with pytest.raises(ValueError):
        BatchTask(explode, workers=1, chunk_size=5).run(20)
    with pytest.raises(ValueError):
        BatchTask(explode, workers=2, chunk_size=5).run(20)


def test_default_workers(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert default_workers() == 1
    monkeypatch.setenv(THREADS_ENV, "3")
    assert default_workers() == 3
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ValueError):
        default_workers()


def test_dead_worker_fails_the_run():
    started = time.monotonic()
    with pytest.raises(RuntimeError, match="exit code 3"):
        BatchTask(crash, workers=2, chunk_size=5).run(20)
    assert time.monotonic() - started < 30.0
    # the broken pool is dropped and the next run gets a fresh one
    pooled = merge(BatchTask(squares, workers=2, chunk_size=7).run(14, 1.0))
    assert pooled["value"].tolist() == [float(i * i) for i in range(14)]


def test_join_times_out():
    with pytest.raises(TimeoutError):
        BatchTask(stall, workers=2, chunk_size=5, timeout=0.5).run(10)


def test_join_has_a_finite_default():
    assert 0 < amp.JOIN_TIMEOUT < float("inf")
    assert BatchTask(squares, workers=1).timeout == amp.JOIN_TIMEOUT
