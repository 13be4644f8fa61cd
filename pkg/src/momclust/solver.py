"""Adagrad solver for the ERM and median-of-means clustering objectives.

Each iteration finds the median block, takes the gradient of that block's
mean loss, applies a per-center Adagrad step and clamps the centers back into
``[-M, M]^p``. Power-mean aggregators are annealed by pushing ``s`` towards
``-inf`` geometrically. Lloyd's algorithm is included as a baseline.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .aggregate import Aggregator
from .bregman import Divergence, box_project, pairwise
from .model import (
    Centroids,
    Partition,
    block_means,
    contiguous_partition,
    make_partition,
    mean_gradient,
    median_block,
)

logger = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


@dataclass
class SolverConfig:
    learning_rate: float = 1.0
    epsilon: float = 1e-8
    max_iters: int = 1000
    tol: float = 1e-6
    L: int = 1
    reshuffle_every: int = 1
    anneal: bool = True
    anneal_multiplier: float = 1.02
    s_initial: float = -1.0
    s_final_cap: float = -128.0
    seed: int = 0
    estimator: str = "mom"
    init: str = "sample"
    restarts: int = 1

    def validate(self, n: Optional[int] = None) -> None:
        if self.estimator not in ("erm", "mom"):
            raise ValueError(f"estimator must be 'erm' or 'mom', got {self.estimator!r}")
        if self.learning_rate <= 0 or self.epsilon <= 0 or self.tol <= 0:
            raise ValueError("learning_rate, epsilon and tol must be positive")
        if self.max_iters < 1 or self.restarts < 1:
            raise ValueError("max_iters and restarts must be >= 1")
        if self.L < 1 or (n is not None and self.L > n):
            raise ValueError(f"need 1 <= L <= n, got L={self.L}, n={n}")
        if self.reshuffle_every < 0:
            raise ValueError("reshuffle_every must be >= 0")
        if self.anneal_multiplier <= 1:
            raise ValueError("anneal_multiplier must exceed 1")
        if self.s_initial > -1 or self.s_final_cap > self.s_initial:
            raise ValueError("need s_final_cap <= s_initial <= -1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FitResult:
    centroids: Centroids
    objective_trace: list = field(default_factory=list)
    median_block_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    labels: Optional[np.ndarray] = None
    step_trace: list = field(default_factory=list)
    s_trace: list = field(default_factory=list)
    n_degenerate: int = 0

    @property
    def objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else float("nan")


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def init_centroids(X, k: int, seed=0, method: str = "sample") -> Centroids:
    """Initial centers.

    ``"sample"`` draws ``k`` distinct rows; ``"kmeans++"`` uses D^2-weighted
    seeding. The box bound is the largest absolute coordinate of ``X``.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = _rng(seed)
    M = float(np.max(np.abs(X)))
    if M == 0:
        M = 1.0
    if method == "sample":
        idx = rng.choice(n, size=k, replace=False)
        return Centroids(X[idx].copy(), M)
    if method == "kmeans++":
        return Centroids(kmeans_plusplus(X, k, rng), M)
    raise ValueError(f"unknown init method {method!r}")


def kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            # every point already sits on a center
            pick = rng.integers(n)
        else:
            pick = rng.choice(n, p=d2 / total)
        centers[j] = X[pick]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def assign_labels(X, centroids, div: Divergence) -> np.ndarray:
    """Hard assignment to the closest center (0-based; ties to lowest index)."""
    theta = centroids.theta if isinstance(centroids, Centroids) else centroids
    return np.argmin(pairwise(div, np.asarray(X, dtype=float), np.atleast_2d(theta)), axis=1)


def _fit_once(X, k, div, agg, cfg: SolverConfig, seed, theta0=None, partition=None, callback=None) -> FitResult:
    n = X.shape[0]
    init_ss, part_ss = np.random.SeedSequence(seed).spawn(2)
    part_rng = np.random.default_rng(part_ss)
    cent = init_centroids(X, k, np.random.default_rng(init_ss), cfg.init)
    theta, M = cent.theta, cent.box_bound
    if theta0 is not None:
        theta = box_project(np.array(theta0, dtype=float).reshape(k, -1), M)

    mom = cfg.estimator == "mom"
    if not mom:
        part = contiguous_partition(n, 1)
    elif partition is not None:
        partition.validate(n)
        part = partition
    else:
        part = make_partition(n, cfg.L, part_rng)

    annealing = agg.name == "power" and cfg.anneal
    s = cfg.s_initial if annealing else agg.s
    cur = agg.with_s(s) if agg.name == "power" else agg

    accum = np.zeros(k)
    res = FitResult(Centroids(theta, M))
    prev = None
    for t in range(cfg.max_iters):
        if mom and cfg.reshuffle_every and t > 0 and t % cfg.reshuffle_every == 0:
            part = make_partition(n, cfg.L, part_rng)
        means = block_means(div, cur, theta, X, part)
        ell = median_block(means)
        obj = float(means[ell])
        if not np.isfinite(obj):
            raise SolverError(f"non-finite objective at iteration {t}")
        res.objective_trace.append(obj)
        res.median_block_trace.append(ell)
        res.s_trace.append(s)
        res.iterations = t + 1
        if prev is not None and abs(obj - prev) / max(prev, 1e-12) < cfg.tol:
            res.converged = True
            break
        prev = obj

        g, n_deg = mean_gradient(div, cur, theta, X[part.blocks[ell]])
        res.n_degenerate += n_deg
        accum += np.sum(g * g, axis=1)
        step = cfg.learning_rate / np.sqrt(cfg.epsilon + accum)
        res.step_trace.append(step)
        theta = box_project(theta - step[:, None] * g, M)
        if not np.all(np.isfinite(theta)):
            raise SolverError(f"non-finite centroids at iteration {t}")
        if callback is not None:
            callback(t, theta)

        if annealing and s > cfg.s_final_cap:
            s = max(s * cfg.anneal_multiplier, cfg.s_final_cap)
            cur = agg.with_s(s)

    res.centroids = Centroids(theta, M)
    res.labels = assign_labels(X, theta, div)
    return res


def fit(X, k: int, div: Divergence, agg: Aggregator, cfg: Optional[SolverConfig] = None,
        theta0=None, partition: Optional[Partition] = None, callback=None) -> FitResult:
    """Minimize the ERM or MoM objective with Adagrad.

    With ``cfg.restarts > 1`` the run with the lowest final objective is
    returned; restart ``r`` uses seed ``(cfg.seed, r)``.

    Parameters
    ----------
    theta0 : array, optional
        Starting centers instead of random data rows.
    partition : Partition, optional
        Starting MoM partition (replaced on reshuffles unless
        ``cfg.reshuffle_every == 0``).
    callback : callable, optional
        Called as ``callback(t, theta)`` after every update.

    Raises
    ------
    SolverError
        If the centroids or the objective become non-finite.
    """
    cfg = cfg or SolverConfig()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("fit needs a non-empty (n, p) data matrix")
    cfg.validate(X.shape[0])
    if agg.k != k:
        raise ValueError(f"aggregator built for k={agg.k}, asked to fit k={k}")
    best = None
    for r in range(cfg.restarts):
        seed = cfg.seed if cfg.restarts == 1 else [cfg.seed, r]
        res = _fit_once(X, k, div, agg, cfg, seed, theta0, partition, callback)
        logger.debug("restart %d: objective %.6g after %d iterations", r, res.objective, res.iterations)
        if best is None or res.objective < best.objective:
            best = res
    return best


def lloyd(X, k: int, seed=0, init: str = "kmeans++", max_iters: int = 300, tol: float = 1e-6) -> FitResult:
    """Lloyd's k-means with squared Euclidean distance.

    An emptied cluster keeps its previous center.
    """
    X = np.asarray(X, dtype=float)
    cent = init_centroids(X, k, _rng(seed), init)
    theta = cent.theta.copy()
    res = FitResult(cent)
    prev = None
    for t in range(max_iters):
        D = np.sum((X[:, None, :] - theta[None]) ** 2, axis=-1)
        labels = np.argmin(D, axis=1)
        obj = float(np.mean(D[np.arange(len(X)), labels]))
        res.objective_trace.append(obj)
        res.iterations = t + 1
        if prev is not None and abs(prev - obj) <= tol * max(prev, 1e-12):
            res.converged = True
            break
        prev = obj
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(theta)
        np.add.at(sums, labels, X)
        nonempty = counts > 0
        theta[nonempty] = sums[nonempty] / counts[nonempty, None]
    res.centroids = Centroids(theta, cent.box_bound)
    res.labels = np.argmin(np.sum((X[:, None, :] - theta[None]) ** 2, axis=-1), axis=1)
    return res
