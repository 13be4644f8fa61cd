"""Per-sample loss, ERM and median-of-means objectives, and their gradients."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aggregate import Aggregator, _partials_unchecked, degenerate_mask, evaluate
from .bregman import Divergence, pairwise


@dataclass
class Centroids:
    """``k x p`` centers with the box bound ``M`` they are confined to."""

    theta: np.ndarray
    box_bound: float = np.inf

    def __post_init__(self):
        self.theta = np.atleast_2d(np.asarray(self.theta, dtype=float))

    @property
    def k(self) -> int:
        return self.theta.shape[0]


@dataclass
class Partition:
    """``L`` disjoint equal-size blocks of sample indices.

    ``blocks`` is an ``(L, b)`` integer array; each row is sorted so that a
    single block over all samples reproduces the plain sample order.
    """

    blocks: np.ndarray
    dropped: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    @property
    def L(self) -> int:
        return self.blocks.shape[0]

    @property
    def b(self) -> int:
        return self.blocks.shape[1]

    def validate(self, n: int) -> None:
        allidx = np.concatenate([self.blocks.ravel(), self.dropped])
        if len(allidx) != n or not np.array_equal(np.sort(allidx), np.arange(n)):
            raise ValueError("partition does not match the data: blocks plus dropped must cover 0..n-1 once")


def make_partition(n: int, L: int, rng: np.random.Generator) -> Partition:
    """Random partition into ``L`` blocks of ``b = n // L``.

    The ``n mod L`` leftover indices are the tail of a random permutation and
    are dropped.
    """
    if not 1 <= L <= n:
        raise ValueError(f"need 1 <= L <= n, got L={L}, n={n}")
    b = n // L
    perm = rng.permutation(n)
    blocks = np.sort(perm[: L * b].reshape(L, b), axis=1)
    return Partition(blocks, np.sort(perm[L * b:]))


def contiguous_partition(n: int, L: int) -> Partition:
    """Deterministic partition: block ``l`` holds ``l*b .. (l+1)*b - 1``."""
    b = n // L
    return Partition(np.arange(L * b).reshape(L, b), np.arange(L * b, n))


def _theta(theta) -> np.ndarray:
    if isinstance(theta, Centroids):
        return theta.theta
    return np.atleast_2d(np.asarray(theta, dtype=float))


def losses(div: Divergence, agg: Aggregator, theta, X) -> np.ndarray:
    """Vector of per-sample losses ``f_Theta(X_i)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.asarray(evaluate(agg, pairwise(div, X, _theta(theta))))


def loss(div: Divergence, agg: Aggregator, theta, x) -> float:
    """``Psi(d_phi(x, theta_1), ..., d_phi(x, theta_k))`` for one sample."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("loss expects a single p-vector; use losses() for batches")
    return float(losses(div, agg, theta, x[None, :])[0])


def erm_objective(div: Divergence, agg: Aggregator, theta, X) -> float:
    """Empirical risk: mean loss over all rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("erm_objective needs a non-empty (n, p) data matrix")
    return float(np.mean(losses(div, agg, theta, X)))


def block_means(div, agg, theta, X, part: Partition) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if part.blocks.size and part.blocks.max() >= X.shape[0]:
        raise ValueError("partition indexes beyond the data")
    f = losses(div, agg, theta, X)
    return f[part.blocks].mean(axis=1)


def median_block(means: np.ndarray) -> int:
    """Index of the block attaining the (lower) median of ``means``.

    Position ``ceil(L/2)`` of the sorted means (1-based); among equal values
    the lowest block index wins.
    """
    L = len(means)
    value = np.sort(means)[(L + 1) // 2 - 1]
    return int(np.flatnonzero(means == value)[0])


def mom_objective(div, agg, theta, X, part: Partition) -> tuple[float, int]:
    """Median of the per-block mean losses and the block attaining it."""
    means = block_means(div, agg, theta, X, part)
    ell = median_block(means)
    return float(means[ell]), ell


def mean_gradient(div: Divergence, agg: Aggregator, theta, X) -> tuple[np.ndarray, int]:
    """Gradient of ``mean_i f_Theta(X_i)`` over the rows of ``X``.

    Chain rule: ``sum_i dPsi/dd_j * grad_theta d_phi(X_i, theta_j)``. Samples
    sitting exactly on a center under a smooth aggregator contribute nothing
    (the true gradient is unbounded there), but still count in the mean.

    Returns
    -------
    grad : (k, p) array
    n_degenerate : int
        Number of skipped samples.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    th = _theta(theta)
    D = pairwise(div, X, th)
    W = _partials_unchecked(agg, D)
    n_deg = int(np.count_nonzero(degenerate_mask(agg, D)))
    # separable phi: grad_theta d(x, theta) = h(theta) * (theta - x)
    wsum = W.sum(axis=0)
    grad = div.hess_diag(th) * (th * wsum[:, None] - W.T @ X) / X.shape[0]
    return grad, n_deg


def erm_gradient(div, agg, theta, X) -> np.ndarray:
    return mean_gradient(div, agg, theta, X)[0]


def mom_subgradient(div, agg, theta, X, part: Partition) -> np.ndarray:
    """Gradient of the median block's mean loss with respect to ``Theta``."""
    X = np.asarray(X, dtype=float)
    _, ell = mom_objective(div, agg, theta, X, part)
    return mean_gradient(div, agg, theta, X[part.blocks[ell]])[0]


def power_sqeuclidean_gradient(theta, x, s: float) -> np.ndarray:
    """Closed-form gradient of the power k-means loss at one sample.

    ``(2/k) (mean_j' ||x - theta_j'||^(2s))^(1/s - 1) ||x - theta_j||^(2(s-1)) (theta_j - x)``
    """
    theta = _theta(theta)
    x = np.asarray(x, dtype=float)
    k = theta.shape[0]
    sq = np.sum((x - theta) ** 2, axis=1)
    inner = np.mean(sq**s) ** (1.0 / s - 1.0)
    return (2.0 / k) * inner * (sq ** (s - 1.0))[:, None] * (theta - x)
