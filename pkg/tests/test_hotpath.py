"""Bitwise parity between the compiled kernels and the numpy fallback."""

from __future__ import annotations

import numpy as np
import pytest

from oclmine import _kernels_py

compiled = pytest.importorskip("oclmine._kernels", reason="compiled extension not built")


@pytest.mark.parametrize("d", [1, 2, 3, 4, 8, 64])
def test_region_scan_parity(d):
    rng = np.random.default_rng(d)
    data = rng.uniform(0, 5, size=(400, d)).astype(np.float32)
    eps2 = float(np.float32(1.3) * np.float32(1.3))
    out_c = np.empty(400, dtype=np.int32)
    out_p = np.empty(400, dtype=np.int32)
    for q in range(0, 400, 13):
        for lo, hi in [(0, 400), (100, 300), (q, q + 1), (0, 0)]:
            nc = compiled.region_scan(data, q, eps2, lo, hi, out_c)
            np_ = _kernels_py.region_scan(data, q, eps2, lo, hi, out_p)
            assert nc == np_
            assert np.array_equal(out_c[:nc], out_p[:np_])


def test_region_scan_multi_parity():
    rng = np.random.default_rng(5)
    data = rng.uniform(0, 3, size=(256, 2)).astype(np.float32)
    qs = np.array([0, 17, 255, 17], dtype=np.int32)
    out_c = np.empty((4, 256), dtype=np.int32)
    out_p = np.empty((4, 256), dtype=np.int32)
    cnt_c = np.empty(4, dtype=np.int32)
    cnt_p = np.empty(4, dtype=np.int32)
    compiled.region_scan_multi(data, qs, 1.0, 30, 200, out_c, cnt_c)
    _kernels_py.region_scan_multi(data, qs, 1.0, 30, 200, out_p, cnt_p)
    assert np.array_equal(cnt_c, cnt_p)
    for b in range(4):
        assert np.array_equal(out_c[b, : cnt_c[b]], out_p[b, : cnt_p[b]])


@pytest.mark.parametrize("d,k", [(1, 2), (2, 6), (4, 8), (16, 3)])
def test_kmeans_assign_parity(d, k):
    rng = np.random.default_rng(d * 100 + k)
    data = rng.uniform(0, 8, size=(512, d)).astype(np.float32)
    centers = data[rng.choice(512, size=k, replace=False)].copy()
    lab_c = np.zeros(512, dtype=np.uint16)
    lab_p = np.zeros(512, dtype=np.uint16)
    for lo, hi in [(0, 512), (17, 400)]:
        compiled.kmeans_assign(data, centers, lo, hi, lab_c)
        _kernels_py.kmeans_assign(data, centers, lo, hi, lab_p)
        assert np.array_equal(lab_c, lab_p)


def test_kmeans_assign_tie_goes_to_lowest_index():
    data = np.array([[1.0, 0.0]], dtype=np.float32)
    centers = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 1.0]], dtype=np.float32)
    lab_c = np.zeros(1, dtype=np.uint16)
    lab_p = np.zeros(1, dtype=np.uint16)
    compiled.kmeans_assign(data, centers, 0, 1, lab_c)
    _kernels_py.kmeans_assign(data, centers, 0, 1, lab_p)
    assert lab_c[0] == lab_p[0] == 0
