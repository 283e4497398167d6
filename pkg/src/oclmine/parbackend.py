"""Multithreaded DBSCAN and Kmeans with fixed equal data partitioning.

Workers are plain threads created once per algorithm invocation and kept
for its whole duration; each owns one contiguous partition.  Phases are
coordinator-driven: the coordinator publishes a task, every worker runs
it over its partition and signals completion, and the coordinator
proceeds once all have signaled.

Only the embarrassingly parallel steps are distributed (the
eps-neighborhood scan and the Kmeans assignment); per-point results are
merged in partition order and the center update stays on the
coordinator via the canonical routine in :mod:`oclmine.cluster`.  That
is what makes the output bitwise-equal to the single-threaded backend
for every worker count.

DBSCAN keeps two worker sets, one answering main-loop queries and one
answering cluster-expansion queries, so the measured thread-setup cost
covers twice the threads that Kmeans needs.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass

import numpy as np

from . import cluster, hotpath
from .concur import CancellationToken
from .datagen import Dataset

DEFAULT_WORKERS = max(1, (os.cpu_count() or 2) - 1)


class SetupError(RuntimeError):
    """Worker threads could not be created or launched."""


@dataclass(frozen=True)
class SetupTiming:
    """Time spent creating/launching workers and joining/destroying them."""

    setup_ns: int
    teardown_ns: int

    def __post_init__(self) -> None:
        if self.setup_ns < 0 or self.teardown_ns < 0:
            raise ValueError("timings must be non-negative")


def partition(n: int, w: int) -> list[tuple[int, int]]:
    """Split [0, n) into w contiguous ranges; the first n % w get one extra."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if w < 1:
        raise ValueError("worker count must be >= 1")
    base, rem = divmod(n, w)
    ranges = []
    lo = 0
    for i in range(w):
        hi = lo + base + (1 if i < rem else 0)
        ranges.append((lo, hi))
        lo = hi
    return ranges


class WorkerPool:
    """Fixed-partition worker threads with a phase rendezvous gate.

    Thread creation and launch are timed at construction (including the
    first ready handshake); :meth:`shutdown` times the join.  Workers
    poll the shared cancellation token between phases and skip the
    phase's work once it is set.
    """

    def __init__(
        self,
        n: int,
        workers: int,
        token: CancellationToken | None = None,
        name: str = "pool",
    ) -> None:
        self.workers = workers
        self.ranges = partition(n, workers)
        self._token = token
        self._cond = threading.Condition()
        self._task: tuple | None = None
        self._generation = 0
        self._pending = 0
        self._ready = 0
        self._shutdown = False
        self._error: BaseException | None = None
        self._threads: list[threading.Thread] = []
        self.teardown_ns = 0

        t0 = time.perf_counter_ns()
        try:
            for i in range(workers):
                th = threading.Thread(target=self._worker_loop, args=(i,), name=f"{name}-{i}", daemon=True)
                self._threads.append(th)
                th.start()
        except BaseException as exc:
            self._shutdown = True
            with self._cond:
                self._cond.notify_all()
            raise SetupError(f"failed to launch workers for {name}") from exc
        with self._cond:
            while self._ready < self.workers:
                self._cond.wait()
        self.setup_ns = time.perf_counter_ns() - t0

    def _worker_loop(self, index: int) -> None:
        lo, hi = self.ranges[index]
        last_gen = 0
        with self._cond:
            self._ready += 1
            self._cond.notify_all()
        while True:
            with self._cond:
                while not self._shutdown and self._generation == last_gen:
                    self._cond.wait()
                if self._shutdown:
                    return
                last_gen = self._generation
                fn, args = self._task  # type: ignore[misc]
            err: BaseException | None = None
            if not (self._token is not None and self._token.is_cancelled()):
                try:
                    fn(index, lo, hi, *args)
                except BaseException as exc:
                    err = exc
            with self._cond:
                if err is not None and self._error is None:
                    self._error = err
                self._pending -= 1
                if self._pending == 0:
                    self._cond.notify_all()

    def run_phase(self, fn, *args) -> None:
        """Run ``fn(worker_index, lo, hi, *args)`` on every worker; block until done."""
        with self._cond:
            if self._shutdown:
                raise RuntimeError("pool is shut down")
            self._task = (fn, args)
            self._generation += 1
            self._pending = self.workers
            self._cond.notify_all()
            while self._pending > 0:
                self._cond.wait()
            if self._error is not None:
                err, self._error = self._error, None
                raise err

    def shutdown(self) -> None:
        t0 = time.perf_counter_ns()
        with self._cond:
            self._shutdown = True
            self._cond.notify_all()
        for th in self._threads:
            th.join()
        self.teardown_ns += time.perf_counter_ns() - t0

    def timing(self) -> SetupTiming:
        return SetupTiming(setup_ns=self.setup_ns, teardown_ns=self.teardown_ns)


def dbscan_partitioned(
    ds: Dataset,
    params: cluster.DbscanParams,
    token: CancellationToken | None,
    main_pool: WorkerPool,
    expand_pool: WorkerPool,
) -> np.ndarray:
    """DBSCAN over caller-owned pools; traversal identical to the single backend.

    Each neighbor query fans out over the partitions and the per-worker
    hit lists are concatenated in partition order, which reproduces the
    ascending index order of the single-threaded scan.
    """
    eps2 = float(params.eps2)
    w = main_pool.workers
    max_batch = max(cluster.EXPANSION_BATCH, cluster.MAIN_LOOKAHEAD)
    bufs = [np.empty((max_batch, hi - lo), dtype=np.int32) for lo, hi in main_pool.ranges]
    counts = [np.empty(max_batch, dtype=np.int32) for _ in range(w)]

    def scan(index: int, lo: int, hi: int, qs: np.ndarray) -> None:
        hotpath.region_scan_multi(ds.data, qs, eps2, lo, hi, bufs[index], counts[index])

    def query_via(pool: WorkerPool):
        def query(qs: np.ndarray) -> list[np.ndarray]:
            pool.run_phase(scan, qs)
            return [
                np.concatenate([bufs[i][b, : counts[i][b]] for i in range(w)])
                for b in range(qs.shape[0])
            ]

        return query

    return cluster.dbscan_drive(ds.n, params, token, query_via(main_pool), query_via(expand_pool))


def kmeans_partitioned(
    ds: Dataset,
    params: cluster.KmeansParams,
    seed: int,
    token: CancellationToken | None,
    pool: WorkerPool,
    init_indices: np.ndarray | None = None,
    on_iteration: cluster.IterationHook | None = None,
) -> cluster.KmeansResult:
    """Lloyd Kmeans over a caller-owned pool.

    Workers fill disjoint label slices; the coordinator performs the
    canonical center update and the termination test, so labels and
    centers match the single-threaded backend bit for bit.
    """

    def assign_task(index: int, lo: int, hi: int, centers: np.ndarray, labels: np.ndarray) -> None:
        hotpath.kmeans_assign(ds.data, centers, lo, hi, labels)

    def assign(centers: np.ndarray, labels: np.ndarray) -> None:
        pool.run_phase(assign_task, centers, labels)

    return cluster.kmeans_drive(ds, params, token, assign, seed, init_indices, on_iteration)


def dbscan_parallel(
    ds: Dataset,
    params: cluster.DbscanParams,
    token: CancellationToken | None = None,
    workers: int | None = None,
) -> tuple[np.ndarray, SetupTiming]:
    """One-shot multithreaded DBSCAN: create both worker sets, run, tear down."""
    w = workers if workers is not None else DEFAULT_WORKERS
    main_pool = WorkerPool(ds.n, w, token, "dbscan-main")
    try:
        expand_pool = WorkerPool(ds.n, w, token, "dbscan-expand")
    except SetupError:
        main_pool.shutdown()
        raise
    try:
        labels = dbscan_partitioned(ds, params, token, main_pool, expand_pool)
    finally:
        main_pool.shutdown()
        expand_pool.shutdown()
    return labels, SetupTiming(
        setup_ns=main_pool.setup_ns + expand_pool.setup_ns,
        teardown_ns=main_pool.teardown_ns + expand_pool.teardown_ns,
    )


def kmeans_parallel(
    ds: Dataset,
    params: cluster.KmeansParams,
    seed: int,
    token: CancellationToken | None = None,
    workers: int | None = None,
    init_indices: np.ndarray | None = None,
    on_iteration: cluster.IterationHook | None = None,
) -> tuple[cluster.KmeansResult, SetupTiming]:
    """One-shot multithreaded Kmeans: create the pool, run, tear down."""
    w = workers if workers is not None else DEFAULT_WORKERS
    pool = WorkerPool(ds.n, w, token, "kmeans")
    try:
        result = kmeans_partitioned(ds, params, seed, token, pool, init_indices, on_iteration)
    finally:
        pool.shutdown()
    return result, pool.timing()
