"""Clustering quality: adjusted Rand index, precision/recall and centroid dissimilarity."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass
class ContingencyTable:
    counts: np.ndarray
    row_sums: np.ndarray
    col_sums: np.ndarray
    total: int


def _check_pair(a, b):
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise ValueError(f"label vectors differ in length: {a.size} vs {b.size}")
    if a.size < 2:
        raise ValueError("need at least two labelled points")
    return a, b


def contingency(labels_a, labels_b) -> ContingencyTable:
    a, b = _check_pair(labels_a, labels_b)
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    counts = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(counts, (ia, ib), 1)
    return ContingencyTable(counts, counts.sum(axis=1), counts.sum(axis=0), int(a.size))


def _comb2(x):
    x = np.asarray(x, dtype=np.int64)
    return x * (x - 1) // 2


def ari(labels_a, labels_b) -> float:
    """Hubert-Arabie adjusted Rand index.

    Not clamped: anti-correlated partitions give negative values. When the
    denominator vanishes, returns 1 if the partitions agree and 0 otherwise.
    """
    t = contingency(labels_a, labels_b)
    # integer pair counts keep the numerator exact
    sum_ij = int(_comb2(t.counts).sum())
    sum_a = int(_comb2(t.row_sums).sum())
    sum_b = int(_comb2(t.col_sums).sum())
    pairs = int(_comb2(t.total))
    expected = sum_a * sum_b / pairs
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        same = t.counts.shape[0] == t.counts.shape[1] and np.count_nonzero(t.counts) == t.counts.shape[0]
        return 1.0 if same else 0.0
    return float((sum_ij - expected) / (max_index - expected))


def precision_recall(pred, truth) -> tuple[float, float]:
    """Macro-averaged precision and recall after majority-vote matching.

    Each predicted cluster is mapped to the truth class most of its members
    carry (ties to the smallest class label). For every truth class ``c``,
    precision is the fraction of points mapped to ``c`` that truly are ``c``
    (0 if nothing maps to ``c``) and recall the fraction of class ``c`` that is
    mapped to ``c``. Both are averaged over truth classes.
    """
    pred, truth = _check_pair(pred, truth)
    t = contingency(pred, truth)
    C = t.counts  # rows: predicted clusters, cols: truth classes (sorted)
    match = np.argmax(C, axis=1)
    mapped = match[np.unique(pred, return_inverse=True)[1]]
    true_idx = np.unique(truth, return_inverse=True)[1]
    n_cls = C.shape[1]
    hit = np.bincount(true_idx[mapped == true_idx], minlength=n_cls)
    mapped_count = np.bincount(mapped, minlength=n_cls)
    prec = np.divide(hit, mapped_count, out=np.zeros(n_cls), where=mapped_count > 0)
    rec = hit / t.col_sums
    return float(prec.mean()), float(rec.mean())


def diss(theta_a, theta_b) -> float:
    """``min_P ||Theta_a - P Theta_b||_F`` over row permutations ``P``.

    The squared Frobenius norm splits into per-row costs, so the optimum is a
    linear assignment on pairwise squared distances.
    """
    A = np.atleast_2d(np.asarray(getattr(theta_a, "theta", theta_a), dtype=float))
    B = np.atleast_2d(np.asarray(getattr(theta_b, "theta", theta_b), dtype=float))
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    cost = np.sum((A[:, None, :] - B[None, :, :]) ** 2, axis=-1)
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].sum()))
