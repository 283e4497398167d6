"""Reference single-threaded DBSCAN (non-recursive) and Lloyd Kmeans.

Also home to the pieces every backend shares: the parameter derivation,
the 16-bit per-point state encoding, the seeded center initialization,
and the canonical center update.  The threaded and GPU backends reuse
the traversal/iteration drivers below and swap in their own neighbor
query or assignment step, which is what makes bitwise cross-backend
equality testable at all.

Conventions that shift results and are therefore fixed here:

* ``region_query`` never includes the query point itself, and the
  min_pts core test is applied to that exclusive count.
* Distances are compared as squared values against eps^2, in single
  precision.
* Kmeans ties go to the lowest center index; an empty cluster keeps its
  previous center for that iteration.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import hotpath
from .concur import CancellationToken
from .datagen import Dataset

# Per-point 16-bit state word used while an algorithm runs: three low
# transient flag bits, cluster id in bits 3..15 (0 = noise).  Returned
# label arrays are the shifted-down pure cluster ids.
FLAG_VISITED = 0x1
FLAG_REACH_MAIN = 0x2
FLAG_REACH_EXPAND = 0x4
FLAG_MASK = 0x7
CLUSTER_SHIFT = 3
MAX_CLUSTER_ID = (1 << 13) - 1

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 100_000


class Aborted(RuntimeError):
    """A run observed its cancellation token; partial results were discarded."""


class ClusterCapacityError(RuntimeError):
    """More clusters were discovered than the 13-bit id field can hold."""


@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_pts: int

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")

    @property
    def eps2(self) -> np.float32:
        e = np.float32(self.eps)
        return e * e


@dataclass(frozen=True)
class KmeansParams:
    k: int
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class KmeansResult:
    labels: np.ndarray = field(repr=False)  # (n,) uint16
    centers: np.ndarray = field(repr=False)  # (k, d) float32
    iterations: int
    converged: bool


def derive_dbscan_params(d: int) -> DbscanParams:
    """min_pts = 10 * d, eps = sqrt(d) in single precision."""
    if d < 1:
        raise ValueError("feature count must be >= 1")
    return DbscanParams(eps=float(np.float32(math.sqrt(d))), min_pts=10 * d)


def region_query(ds: Dataset, q: int, eps: float) -> np.ndarray:
    """Ascending indices j != q with squared distance(ds[q], ds[j]) <= eps^2."""
    if not 0 <= q < ds.n:
        raise ValueError("query index out of range")
    e = np.float32(eps)
    out = np.empty(ds.n, dtype=np.int32)
    cnt = hotpath.region_scan(ds.data, q, float(e * e), 0, ds.n, out)
    return out[:cnt].copy()


# A query callable receives an int32 array of point indices and returns
# one ascending neighbor-index array per query, in order.  Queries
# depend only on the immutable dataset, so a backend may evaluate a
# batch in any way it likes.
BatchQueryFn = Callable[[np.ndarray], list[np.ndarray]]

EXPANSION_BATCH = 32
MAIN_LOOKAHEAD = 8


def dbscan_drive(
    n: int,
    params: DbscanParams,
    token: CancellationToken | None,
    query_main: BatchQueryFn,
    query_expand: BatchQueryFn,
    expansion_batch: int = EXPANSION_BATCH,
    main_lookahead: int = MAIN_LOOKAHEAD,
    state: np.ndarray | None = None,
) -> np.ndarray:
    """Non-recursive DBSCAN traversal shared by every backend.

    Points are visited in index order; a core point opens the next
    cluster id and its neighborhood is expanded through a FIFO seed
    queue.  Border points keep the first cluster that reaches them.

    Queued points are queried in batches of ``expansion_batch`` and the
    main loop looks ahead up to ``main_lookahead`` unvisited candidates
    per round trip; neighbor sets never change, so batching leaves the
    labels exactly what per-point querying produces while cutting the
    per-query dispatch cost.  The GPU backend passes 1/1 to keep one
    kernel launch per query point.

    ``state`` lets a backend supply the 16-bit word array itself (the
    GPU backend aliases it with a host-backed device buffer so kernels
    set reach flags in the very words the traversal labels).
    """
    if state is None:
        state = np.zeros(n, dtype=np.uint16)
    elif state.shape != (n,) or state.dtype != np.uint16 or np.any(state):
        raise ValueError("state must be a zeroed uint16 array of length n")
    # Queue membership, so a dense neighborhood enqueues each point once.
    enqueued = np.zeros(n, dtype=bool)
    next_cluster = 0
    pending_main: dict[int, np.ndarray] = {}

    def absorb(queue: deque, neigh: np.ndarray, cbits: int) -> None:
        # Claim already-visited provisional noise as border points (first
        # claim wins) and enqueue the not-yet-seen remainder.
        words = state[neigh]
        visited = (words & FLAG_VISITED) != 0
        claim = neigh[visited & (words >> CLUSTER_SHIFT == 0)]
        state[claim] = (state[claim] & FLAG_MASK) | cbits
        fresh = neigh[~visited & ~enqueued[neigh]]
        enqueued[fresh] = True
        queue.extend(fresh.tolist())

    for p in range(n):
        if token is not None and token.is_cancelled():
            raise Aborted("dbscan cancelled")
        if state[p] & FLAG_VISITED:
            pending_main.pop(p, None)
            continue
        state[p] |= FLAG_VISITED
        neigh = pending_main.pop(p, None)
        if neigh is None:
            qs = [p]
            j = p + 1
            while len(qs) < main_lookahead and j < n:
                if not state[j] & FLAG_VISITED:
                    qs.append(j)
                j += 1
            results = query_main(np.asarray(qs, dtype=np.int32))
            # Query results may be views into a scan buffer that the next
            # query reuses; anything kept across queries must be copied.
            for extra_q, res in zip(qs[1:], results[1:]):
                pending_main[extra_q] = res.copy()
            neigh = results[0]
        if neigh.shape[0] < params.min_pts:
            continue  # provisional noise; may become a border point later
        next_cluster += 1
        if next_cluster > MAX_CLUSTER_ID:
            raise ClusterCapacityError(f"more than {MAX_CLUSTER_ID} clusters")
        cbits = next_cluster << CLUSTER_SHIFT
        state[p] = (state[p] & FLAG_MASK) | cbits
        queue: deque = deque()
        absorb(queue, neigh, cbits)
        while queue:
            if token is not None and token.is_cancelled():
                raise Aborted("dbscan cancelled")
            batch = [queue.popleft() for _ in range(min(expansion_batch, len(queue)))]
            arr = np.asarray(batch, dtype=np.int32)
            state[arr] = (state[arr] | FLAG_VISITED) | cbits
            results = query_expand(arr)
            for res in results:
                if res.shape[0] >= params.min_pts:
                    absorb(queue, res, cbits)
    return (state >> CLUSTER_SHIFT).astype(np.uint16)


def scan_query_fn(data: np.ndarray, eps2: float, max_batch: int) -> BatchQueryFn:
    """Batch query over the full point range via the hot scan kernel.

    Returned arrays are views into a reused buffer and stay valid only
    until the next call.
    """
    n = data.shape[0]
    out = np.empty((max_batch, n), dtype=np.int32)
    counts = np.empty(max_batch, dtype=np.int32)

    def query(qs: np.ndarray) -> list[np.ndarray]:
        hotpath.region_scan_multi(data, qs, eps2, 0, n, out, counts)
        return [out[b, : counts[b]] for b in range(qs.shape[0])]

    return query


def dbscan_single(ds: Dataset, params: DbscanParams, token: CancellationToken | None = None) -> np.ndarray:
    """Single-threaded DBSCAN; returns the per-point cluster ids (0 = noise)."""
    query = scan_query_fn(ds.data, float(params.eps2), max(EXPANSION_BATCH, MAIN_LOOKAHEAD))
    return dbscan_drive(ds.n, params, token, query, query)


def init_centers(ds: Dataset, k: int, seed: int) -> np.ndarray:
    """Indices of k distinct data points drawn uniformly without replacement."""
    if k > ds.n:
        raise ValueError("k must not exceed the number of points")
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.choice(ds.n, size=k, replace=False)


def update_centers(
    data: np.ndarray, labels: np.ndarray, k: int, old_centers: np.ndarray
) -> tuple[np.ndarray, float]:
    """Canonical center update used by every backend.

    Means are accumulated in double precision in point-index order and
    rounded to single precision; a cluster with no members keeps its old
    center.  Returns the new centers and the summed absolute
    displacement.  One shared routine keeps the backends bitwise equal
    regardless of how the assignment step was parallelized.
    """
    sums = np.zeros((k, data.shape[1]), dtype=np.float64)
    np.add.at(sums, labels, data.astype(np.float64))
    counts = np.bincount(labels, minlength=k).astype(np.int64)
    new = old_centers.copy()
    nz = counts > 0
    new[nz] = (sums[nz] / counts[nz, None]).astype(np.float32)
    disp = float(np.abs(new.astype(np.float64) - old_centers.astype(np.float64)).sum())
    return new, disp


AssignFn = Callable[[np.ndarray, np.ndarray], None]
IterationHook = Callable[[int, np.ndarray, np.ndarray], None]


def kmeans_drive(
    ds: Dataset,
    params: KmeansParams,
    token: CancellationToken | None,
    assign: AssignFn,
    seed: int,
    init_indices: np.ndarray | None = None,
    on_iteration: IterationHook | None = None,
) -> KmeansResult:
    """Lloyd iteration loop shared by every backend.

    ``assign`` fills the label array for the current centers; the center
    update and the termination test are common.  Stops when the summed
    absolute center displacement drops below tol, or at max_iter to
    break single-precision cycling.
    """
    if params.k > ds.n:
        raise ValueError("k must not exceed the number of points")
    idx = init_centers(ds, params.k, seed) if init_indices is None else np.asarray(init_indices)
    if idx.shape[0] != params.k or np.unique(idx).shape[0] != params.k:
        raise ValueError("initial center indices must be k distinct points")
    centers = ds.data[idx].astype(np.float32)
    labels = np.empty(ds.n, dtype=np.uint16)
    converged = False
    iterations = 0
    for it in range(1, params.max_iter + 1):
        if token is not None and token.is_cancelled():
            raise Aborted("kmeans cancelled")
        iterations = it
        assign(centers, labels)
        centers, disp = update_centers(ds.data, labels, params.k, centers)
        if on_iteration is not None:
            on_iteration(it, labels, centers)
        if disp < params.tol:
            converged = True
            break
    return KmeansResult(labels=labels.copy(), centers=centers, iterations=iterations, converged=converged)


def kmeans_single(
    ds: Dataset,
    params: KmeansParams,
    seed: int,
    token: CancellationToken | None = None,
    init_indices: np.ndarray | None = None,
    on_iteration: IterationHook | None = None,
) -> KmeansResult:
    """Single-threaded Lloyd Kmeans."""

    def assign(centers: np.ndarray, labels: np.ndarray) -> None:
        hotpath.kmeans_assign(ds.data, centers, 0, ds.n, labels)

    return kmeans_drive(ds, params, token, assign, seed, init_indices, on_iteration)


def dump_labels_csv(labels: np.ndarray, path: str | Path) -> None:
    """Write labels as CSV with header ``point_index,label``."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point_index", "label"])
        for i, lab in enumerate(labels):
            writer.writerow([i, int(lab)])
