"""Benchmark harness: grid sweep, per-method timing records, CSV reports.

For every grid tuple and pass, one dataset is generated from a seed
derived from (master seed, tuple index, pass index); every requested
backend x algorithm method runs serially on that same dataset in a
seed-shuffled order.  DBSCAN results are verified element-wise against
the single-threaded reference; Kmeans results are verified too because
every backend shares the pass's derived init seed.

Interval accounting per record uses one monotonic clock and shared
boundary timestamps: span = setup + wall + teardown with nothing
counted twice; the record's setup_ns column carries setup plus
teardown as one overhead interval.  GPU buffer management time is
shifted from wall into overhead, mirroring how thread/GPU setup is
reported separately from algorithm time.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import cluster, datagen, gpubackend, parbackend
from .concur import CancellationToken
from .hotpath import KERNEL_IMPL

logger = logging.getLogger(__name__)

STATUS_COMPLETED = "Completed"
STATUS_ABORTED = "Aborted"
STATUS_ERROR = "Error"

ALGORITHMS = ("dbscan", "kmeans")
RAW_HEADER = ["tuple", "pass", "backend", "algo", "wall_ns", "setup_ns", "status", "verify"]


@dataclass(frozen=True)
class GridTuple:
    features: int
    clusters: int
    size: int

    @property
    def tuple_id(self) -> str:
        return f"d{self.features}_c{self.clusters}_s{self.size}"

    @property
    def n(self) -> int:
        return self.clusters * self.size


@dataclass(frozen=True)
class GridSpec:
    """Experiment grid; the default enumerates exactly 60 tuples."""

    features_set: tuple[int, ...] = (1, 2, 4)
    cluster_counts: tuple[int, ...] = (2, 4, 6, 8)
    cluster_sizes: tuple[int, ...] = (128, 256, 512, 1024, 2048)
    passes: int = 70
    master_seed: int = 0

    def __post_init__(self) -> None:
        if not (self.features_set and self.cluster_counts and self.cluster_sizes):
            raise ValueError("grid axes must be non-empty")
        if self.passes < 1:
            raise ValueError("passes must be >= 1")

    def tuples(self) -> list[GridTuple]:
        return [
            GridTuple(f, c, s)
            for f, c, s in itertools.product(self.features_set, self.cluster_counts, self.cluster_sizes)
        ]


@dataclass(frozen=True)
class GpuOptions:
    """Everything the GPU backend needs from the environment."""

    loader: object
    sources: gpubackend.KernelSourceBundle
    allow_cpu: bool = False


@dataclass
class TimingRecord:
    """One (backend, algorithm) interval set for one pass.

    ``setup_ns`` is the combined setup+teardown overhead; ``wall_ns``
    excludes it; ``span_ns`` is the full measured span and always equals
    ``setup_ns + wall_ns`` exactly.
    """

    tuple_id: str
    pass_id: int
    backend: str
    algo: str
    wall_ns: int
    setup_ns: int
    span_ns: int
    status: str
    verify_ok: bool | None = None
    error: str = ""


@dataclass(frozen=True)
class SummaryRow:
    tuple_id: str
    backend: str
    algo: str
    count: int
    median: float
    q1: float
    q3: float
    min: float
    max: float


def _derive_seed(master_seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def verify_dbscan(reference: np.ndarray, candidate: np.ndarray) -> bool:
    """True iff the label arrays are element-wise identical."""
    if reference.shape != candidate.shape:
        raise ValueError("label arrays differ in length")
    return bool(np.array_equal(reference, candidate))


def _execute(
    backend: str,
    algo: str,
    ds: datagen.Dataset,
    dparams: cluster.DbscanParams,
    kparams: cluster.KmeansParams,
    kmeans_seed: int,
    token: CancellationToken,
    workers: int,
    gpu: GpuOptions | None,
) -> tuple[TimingRecord, np.ndarray | None]:
    """Run one method with setup/wall/teardown boundaries on one clock."""
    labels: np.ndarray | None = None
    status = STATUS_COMPLETED
    error = ""
    inner_overhead = 0
    pools: list[parbackend.WorkerPool] = []
    ctx: gpubackend.GpuContext | None = None

    t0 = time.perf_counter_ns()
    try:
        if backend == "multi":
            if algo == "dbscan":
                pools.append(parbackend.WorkerPool(ds.n, workers, token, "dbscan-main"))
                pools.append(parbackend.WorkerPool(ds.n, workers, token, "dbscan-expand"))
            else:
                pools.append(parbackend.WorkerPool(ds.n, workers, token, "kmeans"))
        elif backend == "gpu":
            if gpu is None:
                raise gpubackend.DeviceUnavailable("gpu backend requested without GPU options")
            ctx = gpubackend.gpu_setup(gpu.loader, gpu.sources, algorithms=(algo,), allow_cpu=gpu.allow_cpu)
        t1 = time.perf_counter_ns()
        try:
            if algo == "dbscan":
                if backend == "single":
                    labels = cluster.dbscan_single(ds, dparams, token)
                elif backend == "multi":
                    labels = parbackend.dbscan_partitioned(ds, dparams, token, pools[0], pools[1])
                else:
                    labels = gpubackend.dbscan_gpu(ctx, ds, dparams, token)
            else:
                if backend == "single":
                    labels = cluster.kmeans_single(ds, kparams, kmeans_seed, token).labels
                elif backend == "multi":
                    labels = parbackend.kmeans_partitioned(ds, kparams, kmeans_seed, token, pools[0]).labels
                else:
                    labels = gpubackend.kmeans_gpu(ctx, ds, kparams, kmeans_seed, token).labels
        except cluster.Aborted:
            status = STATUS_ABORTED
            labels = None
        t2 = time.perf_counter_ns()
        for pool in pools:
            pool.shutdown()
        if ctx is not None:
            inner_overhead = ctx.buffer_ns
            gpubackend.gpu_teardown(ctx)
        t3 = time.perf_counter_ns()
    except Exception as exc:  # backend failure: record the error, keep sweeping
        logger.warning("%s/%s failed: %s", backend, algo, exc)
        for pool in pools:
            pool.shutdown()
        if ctx is not None:
            try:
                gpubackend.gpu_teardown(ctx)
            except Exception:
                pass
        t_err = time.perf_counter_ns()
        rec = TimingRecord(
            tuple_id="", pass_id=0, backend=backend, algo=algo,
            wall_ns=0, setup_ns=t_err - t0, span_ns=t_err - t0,
            status=STATUS_ERROR, error=str(exc),
        )
        return rec, None

    wall = (t2 - t1) - inner_overhead
    setup = (t1 - t0) + (t3 - t2) + inner_overhead
    rec = TimingRecord(
        tuple_id="", pass_id=0, backend=backend, algo=algo,
        wall_ns=wall, setup_ns=setup, span_ns=t3 - t0,
        status=status, error=error,
    )
    return rec, labels


def run_grid(
    spec: GridSpec,
    backends: tuple[str, ...] = ("single", "multi"),
    algorithms: tuple[str, ...] = ALGORITHMS,
    workers: int | None = None,
    gpu: GpuOptions | None = None,
    verify: bool = True,
    cancel_after_ms: float | None = None,
    on_record: Callable[[TimingRecord], None] | None = None,
) -> list[TimingRecord]:
    """Sweep the grid; one record per (backend, algorithm) per pass.

    The shared cancellation token is rearmed at every pass start, so an
    injected cancellation (``cancel_after_ms``) aborts the remainder of
    the pass it lands in and the sweep continues.
    """
    if not backends:
        raise ValueError("at least one backend is required")
    unknown = set(backends) - {"single", "multi", "gpu"}
    if unknown:
        raise ValueError(f"unknown backends: {sorted(unknown)}")
    if not algorithms or set(algorithms) - set(ALGORITHMS):
        raise ValueError("algorithms must be a non-empty subset of dbscan/kmeans")
    w = workers if workers is not None else parbackend.DEFAULT_WORKERS

    token = CancellationToken()
    timer: threading.Timer | None = None
    if cancel_after_ms is not None:
        timer = threading.Timer(cancel_after_ms / 1e3, token.cancel)
        timer.daemon = True
        timer.start()

    methods = [(b, a) for b in backends for a in algorithms]
    records: list[TimingRecord] = []
    try:
        for t_idx, tup in enumerate(spec.tuples()):
            dparams = cluster.derive_dbscan_params(tup.features)
            kparams = cluster.KmeansParams(k=tup.clusters)
            for pass_id in range(spec.passes):
                token.reset()
                ds, _ = datagen.generate(
                    datagen.DatasetSpec(
                        features=tup.features,
                        cluster_sizes=(tup.size,) * tup.clusters,
                        seed=_derive_seed(spec.master_seed, t_idx, pass_id, 0),
                    )
                )
                kmeans_seed = _derive_seed(spec.master_seed, t_idx, pass_id, 1)
                order_rng = np.random.Generator(
                    np.random.PCG64(_derive_seed(spec.master_seed, t_idx, pass_id, 2))
                )
                order = [methods[i] for i in order_rng.permutation(len(methods))]

                pass_records: list[tuple[TimingRecord, np.ndarray | None]] = []
                for backend, algo in order:
                    rec, labels = _execute(
                        backend, algo, ds, dparams, kparams, kmeans_seed, token, w, gpu
                    )
                    rec.tuple_id = tup.tuple_id
                    rec.pass_id = pass_id
                    pass_records.append((rec, labels))

                if verify:
                    _verify_pass(pass_records, ds, dparams, kparams, kmeans_seed)
                for rec, _ in pass_records:
                    records.append(rec)
                    if on_record is not None:
                        on_record(rec)
    finally:
        if timer is not None:
            timer.cancel()
    return records


def _verify_pass(
    pass_records: list[tuple[TimingRecord, np.ndarray | None]],
    ds: datagen.Dataset,
    dparams: cluster.DbscanParams,
    kparams: cluster.KmeansParams,
    kmeans_seed: int,
) -> None:
    """Check every completed method's labels against the single-threaded reference.

    The reference is the single backend's own output when it completed
    in this pass, otherwise it is computed out-of-band (untimed).
    """
    for algo in ALGORITHMS:
        group = [(rec, lab) for rec, lab in pass_records if rec.algo == algo]
        if not group:
            continue
        reference = None
        for rec, lab in group:
            if rec.backend == "single" and rec.status == STATUS_COMPLETED and lab is not None:
                reference = lab
                break
        if reference is None:
            if not any(rec.status == STATUS_COMPLETED for rec, _ in group):
                continue
            if algo == "dbscan":
                reference = cluster.dbscan_single(ds, dparams)
            else:
                reference = cluster.kmeans_single(ds, kparams, kmeans_seed).labels
        for rec, lab in group:
            if rec.status != STATUS_COMPLETED or lab is None:
                continue
            try:
                rec.verify_ok = verify_dbscan(reference, lab)
            except ValueError as exc:
                rec.status = STATUS_ERROR
                rec.error = str(exc)


def summarize(records: Iterable[TimingRecord]) -> list[SummaryRow]:
    """Per (tuple, backend, algorithm) wall-time statistics over Completed records.

    Median is the mean-of-middle-two rule; quartiles use linear
    interpolation (the spreadsheet QUARTILE.INC convention).
    """
    recs = [r for r in records if r.status == STATUS_COMPLETED]
    if not recs:
        raise ValueError("no completed records to summarize")
    groups: dict[tuple[str, str, str], list[int]] = {}
    for r in recs:
        groups.setdefault((r.tuple_id, r.backend, r.algo), []).append(r.wall_ns)
    rows = []
    for (tuple_id, backend, algo), values in sorted(groups.items()):
        arr = np.asarray(values, dtype=np.float64)
        rows.append(
            SummaryRow(
                tuple_id=tuple_id,
                backend=backend,
                algo=algo,
                count=arr.size,
                median=float(np.median(arr)),
                q1=float(np.percentile(arr, 25)),
                q3=float(np.percentile(arr, 75)),
                min=float(arr.min()),
                max=float(arr.max()),
            )
        )
    return rows


def write_raw_csv(records: Iterable[TimingRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RAW_HEADER)
        for r in records:
            verify = "" if r.verify_ok is None else str(r.verify_ok).lower()
            writer.writerow(
                [r.tuple_id, r.pass_id, r.backend, r.algo, r.wall_ns, r.setup_ns, r.status, verify]
            )


def write_summary_csv(rows: Iterable[SummaryRow], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tuple", "backend", "algo", "count", "median_ns", "q1_ns", "q3_ns", "min_ns", "max_ns"])
        for row in rows:
            writer.writerow(
                [row.tuple_id, row.backend, row.algo, row.count, row.median, row.q1, row.q3, row.min, row.max]
            )


def write_boxplot_csv(records: Iterable[TimingRecord], path: str | Path) -> None:
    """Per (backend, algorithm) box data for wall time and setup overhead."""
    recs = [r for r in records if r.status == STATUS_COMPLETED]
    groups: dict[tuple[str, str, str], list[int]] = {}
    for r in recs:
        groups.setdefault((r.backend, r.algo, "wall_ns"), []).append(r.wall_ns)
        groups.setdefault((r.backend, r.algo, "setup_ns"), []).append(r.setup_ns)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["backend", "algo", "metric", "min", "q1", "median", "q3", "max"])
        for (backend, algo, metric), values in sorted(groups.items()):
            arr = np.asarray(values, dtype=np.float64)
            writer.writerow(
                [backend, algo, metric, float(arr.min()), float(np.percentile(arr, 25)),
                 float(np.median(arr)), float(np.percentile(arr, 75)), float(arr.max())]
            )


def write_run_meta(path: str | Path, spec: GridSpec, backends: tuple[str, ...], workers: int | None, extra: dict | None = None) -> None:
    """Run metadata sidecar; the only place wall-clock timestamps appear."""
    meta = {
        "started_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "master_seed": spec.master_seed,
        "passes": spec.passes,
        "features_set": list(spec.features_set),
        "cluster_counts": list(spec.cluster_counts),
        "cluster_sizes": list(spec.cluster_sizes),
        "backends": list(backends),
        "workers": workers,
        "kernel_impl": KERNEL_IMPL,
        "clock": "perf_counter_ns (monotonic)",
    }
    if extra:
        meta.update(extra)
    Path(path).write_text(json.dumps(meta, indent=2) + "\n")
