"""Seeded synthetic Gaussian cluster generator.

Each cluster draws a center uniformly from [0, 10]^d and a per-feature
standard deviation uniformly from [0.25, 1.25], then samples its points
from independent normals.  The full point set is permuted by a seeded
Fisher-Yates shuffle.  Sampling runs in double precision and is rounded
to single precision for storage, because every consumer clusters in
single precision.

RNG: numpy PCG64 behind ``numpy.random.Generator``.  Identical spec and
seed reproduce the dataset bit for bit on the same numpy version.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CENTER_LOW, CENTER_HIGH = 0.0, 10.0
SIGMA_LOW, SIGMA_HIGH = 0.25, 1.25
MAX_FEATURES = 64


@dataclass(frozen=True)
class DatasetSpec:
    """Recipe for one synthetic dataset."""

    features: int
    cluster_sizes: tuple[int, ...]
    seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "cluster_sizes", tuple(int(s) for s in self.cluster_sizes))
        if self.features < 1 or self.features > MAX_FEATURES:
            raise ValueError(f"features must be in [1, {MAX_FEATURES}], got {self.features}")
        if not self.cluster_sizes or any(s < 1 for s in self.cluster_sizes):
            raise ValueError("cluster_sizes must be a non-empty list of positive integers")

    @property
    def n(self) -> int:
        return sum(self.cluster_sizes)


@dataclass(frozen=True)
class Dataset:
    """Row-major single-precision point matrix, immutable during clustering."""

    data: np.ndarray  # (n, d) float32, C order, read-only

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError("dataset must be a non-empty 2-d array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("dataset values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class GroundTruth:
    """Generated-cluster index per point, in post-shuffle order.

    Reporting aid only; the clustering algorithms never see it.
    """

    gen_label: np.ndarray = field(repr=False)  # (n,) int32


def _draw_cluster_params(rng: np.random.Generator, d: int) -> tuple[np.ndarray, np.ndarray]:
    center = rng.uniform(CENTER_LOW, CENTER_HIGH, size=d)
    sigma = rng.uniform(SIGMA_LOW, SIGMA_HIGH, size=d)
    return center, sigma


def _sample_points(rng: np.random.Generator, center: np.ndarray, sigma: np.ndarray, size: int) -> np.ndarray:
    return rng.normal(center, sigma, size=(size, center.shape[0]))


def generate(spec: DatasetSpec) -> tuple[Dataset, GroundTruth]:
    """Generate one dataset and its generated-cluster labels."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    blocks = []
    labels = []
    for idx, size in enumerate(spec.cluster_sizes):
        center, sigma = _draw_cluster_params(rng, spec.features)
        blocks.append(_sample_points(rng, center, sigma, size))
        labels.append(np.full(size, idx, dtype=np.int32))
    points = np.concatenate(blocks, axis=0)
    gen_label = np.concatenate(labels)
    perm = rng.permutation(spec.n)
    data = points[perm].astype(np.float32)
    return Dataset(data), GroundTruth(gen_label[perm])


def dump_csv(ds: Dataset, gt: GroundTruth, path: str | Path) -> None:
    """Write the dataset as CSV with header ``x0,...,x{d-1},gen_label``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(ds.d)] + ["gen_label"])
        for row, label in zip(ds.data, gt.gen_label):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
