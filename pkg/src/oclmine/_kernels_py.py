"""Numpy fallback for the hot kernels.

Feature sums are accumulated column by column so the single-precision
rounding sequence is identical to the compiled kernels' inner loops.
"""

from __future__ import annotations

import numpy as np


def region_scan(data: np.ndarray, q: int, eps2: float, lo: int, hi: int, out: np.ndarray) -> int:
    """Collect indices j in [lo, hi), j != q, with squared distance to q <= eps2.

    Indices are written to ``out`` in ascending order; returns the count.
    """
    block = data[lo:hi]
    qrow = data[q]
    d2 = np.zeros(block.shape[0], dtype=np.float32)
    for f in range(data.shape[1]):
        diff = block[:, f] - qrow[f]
        d2 += diff * diff
    hits = (np.flatnonzero(d2 <= np.float32(eps2)) + lo).astype(np.int32)
    if lo <= q < hi:
        hits = hits[hits != q]
    cnt = hits.shape[0]
    out[:cnt] = hits
    return cnt


def region_scan_multi(
    data: np.ndarray,
    qs: np.ndarray,
    eps2: float,
    lo: int,
    hi: int,
    out: np.ndarray,
    counts: np.ndarray,
) -> None:
    """Run region_scan for every query in qs; row b of out holds query b's hits.

    The whole batch is evaluated as one (B, m) distance block; the
    arithmetic per element is unchanged, so results stay bitwise equal
    to the one-query-at-a-time path.
    """
    block = data[lo:hi]
    nq = qs.shape[0]
    diff = block[None, :, 0] - data[qs, 0][:, None]
    d2 = diff * diff
    for f in range(1, data.shape[1]):
        diff = block[None, :, f] - data[qs, f][:, None]
        d2 += diff * diff
    mask = d2 <= np.float32(eps2)
    inside = np.flatnonzero((qs >= lo) & (qs < hi))
    mask[inside, qs[inside] - lo] = False  # a point is not its own neighbor
    rows, cols = np.nonzero(mask)
    per_row = np.bincount(rows, minlength=nq)
    idx = (cols + lo).astype(np.int32)
    start = 0
    for b in range(nq):
        cnt = int(per_row[b])
        counts[b] = cnt
        out[b, :cnt] = idx[start : start + cnt]
        start += cnt


def kmeans_assign(data: np.ndarray, centers: np.ndarray, lo: int, hi: int, labels: np.ndarray) -> None:
    """Assign each point in [lo, hi) to its nearest center (ties: lowest index)."""
    block = data[lo:hi]
    d2 = np.zeros((block.shape[0], centers.shape[0]), dtype=np.float32)
    for f in range(data.shape[1]):
        diff = block[:, f : f + 1] - centers[None, :, f]
        d2 += diff * diff
    labels[lo:hi] = d2.argmin(axis=1).astype(np.uint16)
