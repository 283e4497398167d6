"""Harness behavior: grid enumeration, records, verification, statistics, CSV."""

from __future__ import annotations

import csv

import numpy as np
import pytest

from oclmine import bench, gpubackend
from oclmine.oclloader import OpenClLoader

SMALL = bench.GridSpec(
    features_set=(1, 2),
    cluster_counts=(2,),
    cluster_sizes=(64, 128),
    passes=2,
    master_seed=123,
)


def strip_timings(rows: list[list[str]]) -> list[list[str]]:
    return [[c for i, c in enumerate(row) if i not in (4, 5)] for row in rows]


class TestGrid:
    def test_default_grid_enumerates_60_tuples(self):
        assert len(bench.GridSpec().tuples()) == 60

    def test_default_pass_count(self):
        assert bench.GridSpec().passes == 70  # configurable per run

    def test_tuple_ids_unique(self):
        ids = [t.tuple_id for t in bench.GridSpec().tuples()]
        assert len(set(ids)) == 60

    def test_invalid_grid_rejected(self):
        with pytest.raises(ValueError):
            bench.GridSpec(features_set=())
        with pytest.raises(ValueError):
            bench.GridSpec(passes=0)


class TestVerifyDbscan:
    def test_identical_arrays(self):
        a = np.array([0, 1, 2], dtype=np.uint16)
        assert bench.verify_dbscan(a, a.copy()) is True

    def test_single_difference(self):
        a = np.array([0, 1, 2], dtype=np.uint16)
        b = a.copy()
        b[1] = 9
        assert bench.verify_dbscan(a, b) is False

    def test_length_mismatch_raises(self):
        with pytest.raises(ValueError):
            bench.verify_dbscan(np.zeros(3, np.uint16), np.zeros(4, np.uint16))


class TestRunGrid:
    def test_single_backend_two_records_per_pass(self):
        spec = bench.GridSpec((2,), (2,), (128,), passes=1, master_seed=0)
        records = bench.run_grid(spec, backends=("single",))
        assert len(records) == 2
        assert {r.algo for r in records} == {"dbscan", "kmeans"}
        assert all(r.status == bench.STATUS_COMPLETED for r in records)
        assert all(r.verify_ok is True for r in records)

    def test_accounting_identity_every_record(self):
        records = bench.run_grid(SMALL, backends=("single", "multi"), workers=2)
        assert records
        for r in records:
            assert r.span_ns == r.wall_ns + r.setup_ns
            assert r.wall_ns >= 0 and r.setup_ns >= 0

    def test_multi_records_verify_against_single(self):
        records = bench.run_grid(SMALL, backends=("single", "multi"), workers=3)
        multi = [r for r in records if r.backend == "multi"]
        assert multi
        assert all(r.verify_ok is True for r in multi)

    def test_reproducible_modulo_timing(self, tmp_path):
        rec1 = bench.run_grid(SMALL, backends=("single", "multi"), workers=2)
        rec2 = bench.run_grid(SMALL, backends=("single", "multi"), workers=2)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        bench.write_raw_csv(rec1, p1)
        bench.write_raw_csv(rec2, p2)
        rows1 = list(csv.reader(p1.open()))
        rows2 = list(csv.reader(p2.open()))
        assert strip_timings(rows1) == strip_timings(rows2)
        assert rows1 != rows2  # timings themselves differ

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            bench.run_grid(SMALL, backends=("turbo",))
        with pytest.raises(ValueError):
            bench.run_grid(SMALL, backends=())

    def test_algorithm_subset(self):
        spec = bench.GridSpec((1,), (2,), (64,), passes=1, master_seed=1)
        records = bench.run_grid(spec, backends=("single",), algorithms=("dbscan",))
        assert [r.algo for r in records] == ["dbscan"]

    def test_gpu_without_device_yields_error_records(self, stub_lib):
        # loader never loaded: every GPU record errors, the sweep continues
        ldr = OpenClLoader()
        gpu = bench.GpuOptions(loader=ldr, sources=gpubackend.load_kernel_bundle())
        spec = bench.GridSpec((1,), (2,), (64,), passes=1, master_seed=2)
        records = bench.run_grid(spec, backends=("single", "gpu"), gpu=gpu)
        by_backend = {r.backend: r for r in records if r.algo == "dbscan"}
        assert by_backend["gpu"].status == bench.STATUS_ERROR
        assert by_backend["single"].status == bench.STATUS_COMPLETED

    def test_verification_catches_a_lying_backend(self, stub_lib):
        # the stub driver never executes kernels, so its GPU results are
        # garbage; cross-backend verification must flag every one of them
        ldr = OpenClLoader()
        ldr.load(str(stub_lib))
        gpu = bench.GpuOptions(loader=ldr, sources=gpubackend.load_kernel_bundle())
        spec = bench.GridSpec((1,), (2,), (128,), passes=1, master_seed=6)
        records = bench.run_grid(spec, backends=("single", "gpu"), gpu=gpu)
        ldr.unload()
        gpu_dbscan = [r for r in records if r.backend == "gpu" and r.algo == "dbscan"]
        assert gpu_dbscan and all(r.status == bench.STATUS_COMPLETED for r in gpu_dbscan)
        assert all(r.verify_ok is False for r in gpu_dbscan)
        single = [r for r in records if r.backend == "single"]
        assert all(r.verify_ok is True for r in single)

    def test_cancel_after_aborts_then_recovers(self):
        # cancellation lands mid-sweep; that pass aborts, later passes recover
        spec = bench.GridSpec((2,), (4,), (512,), passes=6, master_seed=3)
        records = bench.run_grid(
            spec, backends=("single",), algorithms=("dbscan",), cancel_after_ms=60.0
        )
        statuses = [r.status for r in records]
        assert bench.STATUS_ABORTED in statuses
        assert statuses[-1] == bench.STATUS_COMPLETED
        for r in records:
            assert r.span_ns == r.wall_ns + r.setup_ns

    def test_execution_order_is_shuffled_but_seeded(self):
        spec = bench.GridSpec((1,), (2,), (64,), passes=8, master_seed=9)
        rec1 = bench.run_grid(spec, backends=("single", "multi"), workers=2)
        rec2 = bench.run_grid(spec, backends=("single", "multi"), workers=2)
        order1 = [(r.pass_id, r.backend, r.algo) for r in rec1]
        assert order1 == [(r.pass_id, r.backend, r.algo) for r in rec2]
        per_pass = {}
        for r in rec1:
            per_pass.setdefault(r.pass_id, []).append((r.backend, r.algo))
        assert len({tuple(v) for v in per_pass.values()}) > 1  # not one fixed order


class TestSummaries:
    def _records(self, values, **kw):
        return [
            bench.TimingRecord(
                tuple_id=kw.get("tuple_id", "t"), pass_id=i, backend=kw.get("backend", "single"),
                algo=kw.get("algo", "dbscan"), wall_ns=v, setup_ns=0, span_ns=v,
                status=kw.get("status", bench.STATUS_COMPLETED),
            )
            for i, v in enumerate(values)
        ]

    def test_median_odd_count(self):
        rows = bench.summarize(self._records([1, 2, 3, 4, 5]))
        assert rows[0].median == 3

    def test_median_even_count_mean_of_middle(self):
        rows = bench.summarize(self._records([1, 2, 3, 4]))
        assert rows[0].median == 2.5

    def test_quartiles_match_spreadsheet_convention(self):
        # QUARTILE.INC([1,2,3,4], 1) = 1.75 and (.., 3) = 3.25
        rows = bench.summarize(self._records([1, 2, 3, 4]))
        assert rows[0].q1 == 1.75
        assert rows[0].q3 == 3.25
        assert rows[0].min == 1 and rows[0].max == 4 and rows[0].count == 4

    def test_only_completed_records_counted(self):
        recs = self._records([10, 20]) + self._records([999], status=bench.STATUS_ABORTED)
        rows = bench.summarize(recs)
        assert rows[0].count == 2
        assert rows[0].max == 20

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            bench.summarize([])
        with pytest.raises(ValueError):
            bench.summarize(self._records([5], status=bench.STATUS_ERROR))


class TestCsvOutputs:
    def test_raw_csv_schema(self, tmp_path):
        spec = bench.GridSpec((1,), (2,), (64,), passes=1, master_seed=4)
        records = bench.run_grid(spec, backends=("single",))
        out = tmp_path / "raw.csv"
        bench.write_raw_csv(records, out)
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["tuple", "pass", "backend", "algo", "wall_ns", "setup_ns", "status", "verify"]
        assert len(rows) == 1 + len(records)
        assert rows[1][6] == "Completed"
        assert rows[1][7] == "true"

    def test_summary_and_boxplot_files(self, tmp_path):
        spec = bench.GridSpec((1,), (2,), (64,), passes=3, master_seed=4)
        records = bench.run_grid(spec, backends=("single",))
        bench.write_summary_csv(bench.summarize(records), tmp_path / "summary.csv")
        bench.write_boxplot_csv(records, tmp_path / "boxplot.csv")
        srows = list(csv.reader((tmp_path / "summary.csv").open()))
        brows = list(csv.reader((tmp_path / "boxplot.csv").open()))
        assert srows[0][0] == "tuple" and len(srows) == 3  # dbscan + kmeans groups
        assert brows[0][:3] == ["backend", "algo", "metric"]
        assert len(brows) == 1 + 4  # 2 algos x {wall,setup}

    def test_run_meta(self, tmp_path):
        bench.write_run_meta(tmp_path / "meta.json", SMALL, ("single",), 2)
        text = (tmp_path / "meta.json").read_text()
        assert '"master_seed": 123' in text
        assert "perf_counter_ns" in text
