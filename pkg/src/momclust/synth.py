"""Synthetic Gaussian-mixture scenarios with outlier contamination.

True centers sit on a grid with spacing 0.1. Center ``j`` (0-based) has
coordinate ``d`` equal to ``((j // 10**d) % 10) / 10``, so the first ten
centers run along the first axis and the next ten start a second row.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .model import Centroids

OUTLIER_LABEL = -1
OUTLIER_MODELS = ("uniform_range", "gaussian_far")


@dataclass
class ScenarioSpec:
    k_true: int = 3
    p: int = 5
    points_per_cluster: int = 30
    cluster_variance: float = 0.1
    outlier_fraction: float = 0.0
    outlier_model: str = "uniform_range"
    far_mean_coordinate: float = 20.0
    far_variance: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.k_true < 1 or self.p < 1 or self.points_per_cluster < 1:
            raise ValueError("k_true, p and points_per_cluster must be positive")
        if not 0.0 <= self.outlier_fraction <= 0.9:
            raise ValueError(f"outlier_fraction must lie in [0, 0.9], got {self.outlier_fraction}")
        if self.outlier_model not in OUTLIER_MODELS:
            raise ValueError(f"outlier_model must be one of {OUTLIER_MODELS}")
        if self.cluster_variance < 0 or self.far_variance < 0:
            raise ValueError("variances must be non-negative")

    @property
    def n_inliers(self) -> int:
        return self.k_true * self.points_per_cluster

    @property
    def n_outliers(self) -> int:
        f = self.outlier_fraction
        return int(round(f / (1.0 - f) * self.n_inliers))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Dataset:
    X: np.ndarray
    labels: Optional[np.ndarray] = None
    is_outlier: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        n = self.X.shape[0]
        if self.is_outlier is None:
            self.is_outlier = np.zeros(n, dtype=bool)
        self.is_outlier = np.asarray(self.is_outlier, dtype=bool)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def inliers(self) -> np.ndarray:
        return ~self.is_outlier


def true_centroids(spec: ScenarioSpec) -> Centroids:
    j = np.arange(spec.k_true)[:, None]
    d = np.arange(spec.p)[None, :]
    theta = ((j // 10**d) % 10) / 10.0
    return Centroids(theta)


def generate(spec: ScenarioSpec) -> Dataset:
    """Draw inliers around the grid centers, then append outliers.

    ``uniform_range`` outliers are uniform on the inliers' bounding box;
    ``gaussian_far`` outliers are Gaussian around ``far_mean_coordinate * 1``.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    centers = true_centroids(spec).theta
    labels = np.repeat(np.arange(spec.k_true), spec.points_per_cluster)
    X_in = centers[labels] + rng.normal(scale=np.sqrt(spec.cluster_variance), size=(len(labels), spec.p))

    n_out = spec.n_outliers
    if spec.outlier_model == "uniform_range":
        X_out = rng.uniform(X_in.min(axis=0), X_in.max(axis=0), size=(n_out, spec.p))
    else:
        X_out = spec.far_mean_coordinate + rng.normal(scale=np.sqrt(spec.far_variance), size=(n_out, spec.p))

    return Dataset(
        X=np.vstack([X_in, X_out]),
        labels=np.concatenate([labels, np.full(n_out, OUTLIER_LABEL)]),
        is_outlier=np.concatenate([np.zeros(len(labels), bool), np.ones(n_out, bool)]),
    )


def write_csv(ds: Dataset, path) -> None:
    """Header ``x1..xp,label,is_outlier``; floats with 17 significant digits."""
    labels = ds.labels if ds.labels is not None else np.full(ds.n, OUTLIER_LABEL)
    if hasattr(path, "write"):
        _write_rows(path, ds, labels)
    else:
        with open(path, "w", newline="") as fh:
            _write_rows(fh, ds, labels)


def _write_rows(fh, ds: Dataset, labels) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(ds.p)] + ["label", "is_outlier"])
    for row, lab, out in zip(ds.X, labels, ds.is_outlier):
        w.writerow([f"{v:.17g}" for v in row] + [int(lab), int(out)])


def read_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    if header[-2:] != ["label", "is_outlier"]:
        # bare feature matrix
        return Dataset(np.array(rows, dtype=float).reshape(len(rows), len(header)))
    p = len(header) - 2
    arr = np.array(rows, dtype=object)
    if len(rows) == 0:
        return Dataset(np.empty((0, p)))
    return Dataset(
        X=arr[:, :p].astype(float),
        labels=arr[:, p].astype(int),
        is_outlier=arr[:, p + 1].astype(int).astype(bool),
    )
