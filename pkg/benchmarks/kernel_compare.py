#!/usr/bin/env python3
"""Compare the compiled hot kernels against the numpy fallback.

Runs the eps-neighborhood scan and the Kmeans assignment on both
implementations over a range of sizes, checks bitwise agreement, and
prints a timing table.  Useful for judging what the extension buys on a
given machine.

Usage: python benchmarks/kernel_compare.py [--sizes 1024,4096,16384]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from oclmine import _kernels_py

try:
    from oclmine import _kernels as _compiled
except ImportError:
    _compiled = None


def bench_region(impl, data: np.ndarray, eps2: float, batch: int, repeats: int) -> float:
    n = data.shape[0]
    qs = np.arange(batch, dtype=np.int32)
    out = np.empty((batch, n), dtype=np.int32)
    counts = np.empty(batch, dtype=np.int32)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        impl.region_scan_multi(data, qs, eps2, 0, n, out, counts)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_assign(impl, data: np.ndarray, centers: np.ndarray, repeats: int) -> float:
    labels = np.empty(data.shape[0], dtype=np.uint16)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        impl.kmeans_assign(data, centers, 0, data.shape[0], labels)
        best = min(best, time.perf_counter() - t0)
    return best


def check_agreement(data: np.ndarray, centers: np.ndarray, eps2: float) -> None:
    n = data.shape[0]
    qs = np.arange(min(64, n), dtype=np.int32)
    out_a = np.empty((len(qs), n), dtype=np.int32)
    out_b = np.empty((len(qs), n), dtype=np.int32)
    cnt_a = np.empty(len(qs), dtype=np.int32)
    cnt_b = np.empty(len(qs), dtype=np.int32)
    _compiled.region_scan_multi(data, qs, eps2, 0, n, out_a, cnt_a)
    _kernels_py.region_scan_multi(data, qs, eps2, 0, n, out_b, cnt_b)
    assert np.array_equal(cnt_a, cnt_b)
    for b in range(len(qs)):
        assert np.array_equal(out_a[b, : cnt_a[b]], out_b[b, : cnt_b[b]])
    lab_a = np.empty(n, dtype=np.uint16)
    lab_b = np.empty(n, dtype=np.uint16)
    _compiled.kmeans_assign(data, centers, 0, n, lab_a)
    _kernels_py.kmeans_assign(data, centers, 0, n, lab_b)
    assert np.array_equal(lab_a, lab_b)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="1024,4096,16384",
                        type=lambda s: [int(v) for v in s.split(",")])
    parser.add_argument("--features", type=int, default=2)
    parser.add_argument("--k", type=int, default=8)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if _compiled is None:
        print("compiled extension not built; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    print(f"{'n':>8} {'kernel':<12} {'cython':>12} {'numpy':>12} {'speedup':>8}")
    for n in args.sizes:
        data = rng.uniform(0, 10, size=(n, args.features)).astype(np.float32)
        centers = data[rng.choice(n, size=args.k, replace=False)].copy()
        eps2 = float(np.float32(args.features))
        check_agreement(data, centers, eps2)
        t_scan_c = bench_region(_compiled, data, eps2, 32, args.repeats)
        t_scan_p = bench_region(_kernels_py, data, eps2, 32, args.repeats)
        t_asg_c = bench_assign(_compiled, data, centers, args.repeats)
        t_asg_p = bench_assign(_kernels_py, data, centers, args.repeats)
        print(f"{n:>8} {'region_scan':<12} {t_scan_c * 1e3:>10.3f}ms {t_scan_p * 1e3:>10.3f}ms {t_scan_p / t_scan_c:>7.1f}x")
        print(f"{n:>8} {'assign':<12} {t_asg_c * 1e3:>10.3f}ms {t_asg_p * 1e3:>10.3f}ms {t_asg_p / t_asg_c:>7.1f}x")
    print("bitwise agreement verified for every size")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
