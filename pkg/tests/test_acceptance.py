"""Acceptance suite: every release criterion at its stated tolerance.

Primary criteria run everywhere (the stub driver stands in for OpenCL).
The device-dependent criteria need a real or software OpenCL device and
skip, with a reason, where none exists.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
pass lines.
"""

from __future__ import annotations

import csv
import threading
import time
from ctypes import byref, c_float, c_uint32

import numpy as np
import pytest

import oracles
from oclmine import bench, clapi, cluster, datagen, gpubackend, parbackend
from oclmine.concur import CancellationToken, RwLockWP
from oclmine.oclloader import NOT_LOADED_ERROR, OpenClLoader


def report(name: str, detail: str = "") -> None:
    print(f"ACCEPTANCE {name}: PASS {detail}".rstrip())


# -- criterion 1: DBSCAN oracle equivalence ---------------------------------

def test_dbscan_oracle_equivalence_200_instances():
    rng = np.random.default_rng(0xD85CA)
    t0 = time.monotonic()
    for trial in range(200):
        d = int(rng.choice([1, 2, 4]))
        n_clusters = int(rng.integers(1, 5))
        total_budget = int(rng.integers(16, 513))
        sizes = []
        left = total_budget
        for c in range(n_clusters):
            take = max(1, left // (n_clusters - c))
            sizes.append(take)
            left -= take
        ds, _ = datagen.generate(
            datagen.DatasetSpec(d, tuple(sizes), seed=int(rng.integers(1 << 62)))
        )
        assert ds.n <= 512
        params = cluster.derive_dbscan_params(d)
        got = cluster.dbscan_single(ds, params)
        want = oracles.dbscan_labels(ds.data, params.eps, params.min_pts)
        assert np.array_equal(got, want), f"oracle mismatch on instance {trial}"
    elapsed = time.monotonic() - t0
    assert elapsed < 60.0, f"criterion requires < 60 s, took {elapsed:.1f} s"
    report("dbscan-oracle-equivalence", f"(200/200 instances, {elapsed:.1f}s)")


# -- criterion 2: cross-backend DBSCAN parity over the full grid ------------

def test_cross_backend_dbscan_parity_full_default_grid():
    spec = bench.GridSpec(passes=1, master_seed=2)
    assert len(spec.tuples()) == 60
    checked = 0
    for workers in (2, 7):
        records = bench.run_grid(
            spec, backends=("single", "multi"), algorithms=("dbscan",), workers=workers
        )
        completed = [r for r in records if r.status == bench.STATUS_COMPLETED]
        assert len(completed) == len(records) == 120
        bad = [r for r in completed if r.verify_ok is not True]
        assert not bad, f"verification failed for {[(r.tuple_id, r.backend) for r in bad]}"
        checked += len(completed)
    report("cross-backend-dbscan-parity", f"({checked} records over w in {{2,7}}, 100% verified)")


# -- criterion 3: Kmeans Lloyd properties ------------------------------------

def test_kmeans_lloyd_properties_100_instances():
    rng = np.random.default_rng(0x1107D)
    for trial in range(100):
        d = int(rng.choice([1, 2, 4]))
        k = int(rng.integers(2, 9))
        sizes = tuple(int(s) for s in rng.integers(16, 160, size=k))
        ds, _ = datagen.generate(datagen.DatasetSpec(d, sizes, seed=int(rng.integers(1 << 62))))
        seed = int(rng.integers(1 << 62))
        params = cluster.KmeansParams(k=k)

        wcss = []

        def hook(_it, labels, centers):
            wcss.append(oracles.kmeans_wcss(ds.data, labels, centers))

        ref = cluster.kmeans_single(ds, params, seed, on_iteration=hook)
        for prev, cur in zip(wcss, wcss[1:]):
            assert cur <= prev * (1 + 1e-9) + 1e-6, f"WCSS increased on instance {trial}"
        # termination: tolerance fired or the iteration cap did
        assert ref.converged or ref.iterations == params.max_iter
        if ref.converged:
            assert ref.iterations <= params.max_iter

        workers = 2 if trial % 2 == 0 else 7
        par, _ = parbackend.kmeans_parallel(ds, params, seed, workers=workers)
        assert np.array_equal(par.labels, ref.labels), f"labels differ on instance {trial}"
        assert np.array_equal(par.centers, ref.centers)
        assert par.iterations == ref.iterations and par.converged == ref.converged
    report("kmeans-lloyd-properties", "(100 instances, WCSS monotone, parallel bitwise-equal)")


# -- criterion 4: RW-lock suite ----------------------------------------------

def test_rwlock_writer_preference_1000_repetitions():
    violations = 0
    for _ in range(1000):
        lock = RwLockWP()
        order = []
        lock.acquire_read()
        tw = threading.Thread(target=lambda: (lock.acquire_write(), order.append("W"), lock.release_write()))
        tw.start()
        while lock.writers_waiting != 1:
            time.sleep(0)
        tr = threading.Thread(target=lambda: (lock.acquire_read(), order.append("R2"), lock.release_read()))
        tr.start()
        lock.release_read()
        tw.join(timeout=10)
        tr.join(timeout=10)
        if order != ["W", "R2"]:
            violations += 1
    assert violations == 0
    report("rwlock-writer-preference", "(1000 interleavings, 0 violations)")


def test_rwlock_reentrancy_depth_64():
    lock = RwLockWP()
    for _ in range(64):
        lock.acquire_read()
    for _ in range(64):
        lock.release_read()
    assert lock.reader_count == 0
    report("rwlock-reentrancy-depth-64")


def test_rwlock_exclusion_counter_100k_operations():
    lock = RwLockWP()
    shared = {"a": 0, "b": 0}
    torn = []
    stop = threading.Event()
    increments_per_writer = 15_000
    n_writers = 4
    reads = [0] * 4

    def writer(seed: int):
        rng = np.random.default_rng(seed)
        for i in range(increments_per_writer):
            with lock.write_locked():
                shared["a"] += 1
                if rng.random() < 0.01:
                    time.sleep(0)
                shared["b"] += 1

    def reader(slot: int):
        while not stop.is_set():
            with lock.read_locked():
                a, b = shared["a"], shared["b"]
            reads[slot] += 1
            if a != b:
                torn.append((a, b))

    writers = [threading.Thread(target=writer, args=(s,)) for s in range(n_writers)]
    readers = [threading.Thread(target=reader, args=(i,)) for i in range(4)]
    for t in readers + writers:
        t.start()
    for t in writers:
        t.join(timeout=120)
    stop.set()
    for t in readers:
        t.join(timeout=10)
    total_ops = n_writers * increments_per_writer * 2 + sum(reads)
    assert total_ops >= 100_000
    assert torn == []
    assert shared["a"] == shared["b"] == n_writers * increments_per_writer
    report("rwlock-exclusion-counter", f"({total_ops} operations, 0 torn updates)")


# -- criterion 5: loader conformance vs the stub driver ----------------------

def test_loader_conformance_suite(stub_lib, stub_probe):
    loader = OpenClLoader()
    n = c_uint32(0)

    # call before load
    assert loader.clGetPlatformIDs(0, None, byref(n)) == NOT_LOADED_ERROR

    # load / unload / reload cycle with lazy resolution
    loader.load(str(stub_lib))
    assert loader.resolved_symbols == ()
    assert loader.clGetPlatformIDs(0, None, byref(n)) == clapi.CL_SUCCESS
    assert loader.resolved_symbols == ("clGetPlatformIDs",)
    loader.unload()
    assert loader.clGetPlatformIDs(0, None, byref(n)) == NOT_LOADED_ERROR
    loader.load(str(stub_lib))
    assert loader.clGetPlatformIDs(0, None, byref(n)) == clapi.CL_SUCCESS

    # concurrent dispatch during an unload storm
    stop = threading.Event()
    successes = [0] * 8
    unexpected = []

    def hammer(slot: int):
        local_n = c_uint32(0)
        while not stop.is_set():
            rc = loader.clGetPlatformIDs(0, None, byref(local_n))
            if rc == clapi.CL_SUCCESS:
                successes[slot] += 1
            elif rc != NOT_LOADED_ERROR:
                unexpected.append(rc)

    base = stub_probe.calls("clGetPlatformIDs")
    threads = [threading.Thread(target=hammer, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for _ in range(100):
        loader.unload()
        loader.load(str(stub_lib))
    stop.set()
    for t in threads:
        t.join(timeout=60)
    assert unexpected == []
    forwarded = stub_probe.calls("clGetPlatformIDs") - base
    assert forwarded == sum(successes), "a call was forwarded while unloaded or lost"
    loader.unload()
    report(
        "loader-conformance",
        f"(storm: {sum(successes)} forwards across 100 unload/reload cycles, all accounted)",
    )


# -- criterion 6: harness reproducibility ------------------------------------

def test_harness_reproducibility_and_accounting(tmp_path):
    spec = bench.GridSpec(
        features_set=(1, 2), cluster_counts=(2, 4), cluster_sizes=(64, 128),
        passes=2, master_seed=20260809,
    )
    paths = []
    for run in range(2):
        records = bench.run_grid(spec, backends=("single", "multi"), workers=3)
        for r in records:
            assert r.span_ns == r.wall_ns + r.setup_ns, "interval accounting violated"
        path = tmp_path / f"raw_{run}.csv"
        bench.write_raw_csv(records, path)
        paths.append(path)
    rows = [list(csv.reader(p.open())) for p in paths]
    timing_columns = (4, 5)
    stripped = [
        [[cell for i, cell in enumerate(row) if i not in timing_columns] for row in run_rows]
        for run_rows in rows
    ]
    assert stripped[0] == stripped[1], "raw.csv differs beyond the timing columns"
    report("harness-reproducibility", f"({len(rows[0]) - 1} rows, identical modulo timings)")


# -- device-dependent criteria ------------------------------------------------

@pytest.fixture(scope="module")
def device_ctx_factory():
    """Set up against a real or software OpenCL device, or skip."""
    loader = OpenClLoader()
    try:
        loader.load()
    except Exception:
        pytest.skip("no OpenCL shared library on this machine")
    sources = gpubackend.load_kernel_bundle()
    try:
        probe = gpubackend.gpu_setup(loader, sources, allow_cpu=True)
    except (gpubackend.DeviceUnavailable, gpubackend.GpuError) as exc:
        loader.unload()
        pytest.skip(f"no usable OpenCL device: {exc}")
    gpubackend.gpu_teardown(probe)

    def factory(algorithms=("dbscan", "kmeans")):
        return gpubackend.gpu_setup(loader, sources, algorithms=algorithms, allow_cpu=True)

    yield factory
    loader.unload()


def test_device_kernel_parity_50_tuples(device_ctx_factory):
    spec = bench.GridSpec(passes=1, master_seed=50)
    tuples = sorted(spec.tuples(), key=lambda t: t.n)[:50]
    for idx, tup in enumerate(tuples):
        ds, _ = datagen.generate(
            datagen.DatasetSpec(tup.features, (tup.size,) * tup.clusters, seed=1000 + idx)
        )
        dparams = cluster.derive_dbscan_params(tup.features)
        ref = cluster.dbscan_single(ds, dparams)
        kref = cluster.kmeans_single(ds, cluster.KmeansParams(k=tup.clusters), seed=idx)
        ctx = device_ctx_factory()
        try:
            got = gpubackend.dbscan_gpu(ctx, ds, dparams)
            assert np.array_equal(got, ref), f"dbscan parity failed on {tup.tuple_id}"
            kgot = gpubackend.kmeans_gpu(ctx, ds, cluster.KmeansParams(k=tup.clusters), seed=idx)
            assert np.array_equal(kgot.labels, kref.labels), f"kmeans parity failed on {tup.tuple_id}"
        finally:
            gpubackend.gpu_teardown(ctx)
    report("device-kernel-parity", "(50 tuples bitwise-equal)")


def test_device_neighbor_counters_match_host(device_ctx_factory):
    ds, _ = datagen.generate(datagen.DatasetSpec(2, (256, 256), seed=7))
    n = ds.n
    params = cluster.derive_dbscan_params(2)
    d2 = oracles.distance_matrix_f32(ds.data)
    host_counts = (d2 <= params.eps2).sum(axis=1) - 1  # minus the self-distance

    ctx = device_ctx_factory(algorithms=("dbscan",))
    try:
        state_host = np.zeros(n, dtype=np.uint16)
        counter_host = np.zeros(1, dtype=np.uint32)
        zero = np.zeros(1, dtype=np.uint32)
        data_buf = ctx.create_buffer(
            clapi.CL_MEM_READ_ONLY | clapi.CL_MEM_USE_HOST_PTR, ds.data.nbytes, ds.data
        )
        state_buf = ctx.create_buffer(
            clapi.CL_MEM_READ_WRITE | clapi.CL_MEM_USE_HOST_PTR, state_host.nbytes, state_host
        )
        counter_buf = ctx.create_buffer(clapi.CL_MEM_READ_WRITE, 4)
        kernel = ctx.kernels[gpubackend.DBSCAN_MAIN_KERNEL]
        ctx.set_args(
            kernel,
            [(0, data_buf), (1, c_uint32(n)), (2, c_uint32(ds.d)),
             (4, c_float(float(params.eps2))), (5, state_buf), (6, counter_buf)],
        )
        for q in range(n):
            ctx.write_buffer(counter_buf, zero)
            ctx.set_args(kernel, [(3, c_uint32(q))])
            ctx.launch(kernel, n)
            ctx.read_buffer(counter_buf, counter_host)
            assert int(counter_host[0]) == int(host_counts[q]), f"counter wrong for q={q}"
        # atomicity: relaunching the same query always totals the same
        for _ in range(5):
            ctx.write_buffer(counter_buf, zero)
            ctx.launch(kernel, n)
            ctx.read_buffer(counter_buf, counter_host)
            assert int(counter_host[0]) == int(host_counts[n - 1])
    finally:
        gpubackend.gpu_teardown(ctx)
    report("device-neighbor-counters", f"(n={n}, every query vs host oracle)")


def test_device_cancellation_within_one_launch(device_ctx_factory):
    ds, _ = datagen.generate(datagen.DatasetSpec(2, (2048,) * 4, seed=3))
    params = cluster.derive_dbscan_params(2)
    ctx = device_ctx_factory(algorithms=("dbscan",))
    token = CancellationToken()
    at_cancel = []

    def cancel_soon():
        time.sleep(0.05)
        token.cancel()
        at_cancel.append(ctx.loader.forward_count("clEnqueueNDRangeKernel"))

    try:
        threading.Thread(target=cancel_soon).start()
        with pytest.raises(cluster.Aborted):
            gpubackend.dbscan_gpu(ctx, ds, params, token)
        final = ctx.loader.forward_count("clEnqueueNDRangeKernel")
        assert final <= at_cancel[0] + 1
    finally:
        gpubackend.gpu_teardown(ctx)
    report("device-cancellation-latency", "(at most one launch after cancel)")


def test_device_scaling_trend_report(device_ctx_factory, tmp_path):
    sizes = [4096, 8192, 16384]
    rows = []
    for n in sizes:
        ds, _ = datagen.generate(datagen.DatasetSpec(2, (n // 4,) * 4, seed=n))
        params = cluster.derive_dbscan_params(2)
        t0 = time.perf_counter_ns()
        cluster.dbscan_single(ds, params)
        single_ns = time.perf_counter_ns() - t0
        ctx = device_ctx_factory(algorithms=("dbscan",))
        try:
            t0 = time.perf_counter_ns()
            gpubackend.dbscan_gpu(ctx, ds, params)
            gpu_ns = time.perf_counter_ns() - t0
        finally:
            gpubackend.gpu_teardown(ctx)
        rows.append((n, single_ns, gpu_ns))
    out = tmp_path / "scaling_report.csv"
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "single_wall_ns", "gpu_wall_ns"])
        writer.writerows(rows)
    log_n = np.log2([r[0] for r in rows])
    slope_single = np.polyfit(log_n, np.log10([r[1] for r in rows]), 1)[0]
    slope_gpu = np.polyfit(log_n, np.log10([r[2] for r in rows]), 1)[0]
    assert out.exists()
    assert slope_gpu < slope_single, (
        f"expected the GPU log-log slope ({slope_gpu:.3f}) below the single-threaded "
        f"slope ({slope_single:.3f}); report at {out}"
    )
    report("device-scaling-trend", f"(slopes: gpu {slope_gpu:.3f} < single {slope_single:.3f})")
