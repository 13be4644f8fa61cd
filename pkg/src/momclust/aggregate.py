"""Aggregators combining the k per-center divergences into one loss value.

Three aggregators are provided:

* ``min``       -- hard clustering (k-means / Bregman hard clustering)
* ``power``     -- power mean ``M_s(d) = (mean d_j^s)^(1/s)``, ``s <= -1``
* ``harmonic``  -- ``(sum_j 1/d_j)^-1`` (k-harmonic means)

All are non-decreasing in each argument, vanish at zero and are Lipschitz in
the l1 norm with constant :func:`lipschitz_constant`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class DegeneracyError(ValueError):
    """A zero divergence was passed to a smooth aggregator with a pole there."""


@dataclass(frozen=True)
class Aggregator:
    name: str
    k: int
    s: Optional[float] = None

    def __post_init__(self):
        if self.name not in ("min", "power", "harmonic"):
            raise ValueError(f"unknown aggregator {self.name!r}")
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.name == "power":
            if self.s is None or not self.s < 0:
                raise ValueError("power aggregator needs s < 0")

    @property
    def smooth(self) -> bool:
        return self.name != "min"

    @property
    def lipschitz(self) -> float:
        return lipschitz_constant(self)

    def with_s(self, s: float) -> "Aggregator":
        return Aggregator(self.name, self.k, s)


def min_aggregator(k: int) -> Aggregator:
    return Aggregator("min", k)


def power_mean(k: int, s: float = -1.0) -> Aggregator:
    return Aggregator("power", k, float(s))


def harmonic(k: int) -> Aggregator:
    return Aggregator("harmonic", k)


def get_aggregator(name: str, k: int, s: float = -1.0) -> Aggregator:
    if name == "power":
        return power_mean(k, s)
    return Aggregator(name, k)


def _as_input(agg: Aggregator, d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.shape[-1] != agg.k:
        raise ValueError(f"expected {agg.k} divergences, got {d.shape[-1]}")
    if np.any(d < 0) or np.any(np.isnan(d)):
        raise ValueError("divergences must be non-negative")
    return d


def degenerate_mask(agg: Aggregator, d) -> np.ndarray:
    """Rows where a smooth aggregator hits its pole (some ``d_j == 0``)."""
    d = np.asarray(d, dtype=float)
    if not agg.smooth:
        return np.zeros(d.shape[:-1], dtype=bool)
    return np.any(d == 0, axis=-1)


def _power_parts(d: np.ndarray, s: float):
    # Factor out the row minimum so that (d/dmin)^s lies in (0, 1].
    dmin = d.min(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = d / dmin
        rs = r**s
        S = rs.mean(axis=-1, keepdims=True)
    return dmin, r, rs, S


def evaluate(agg: Aggregator, d) -> np.ndarray:
    """Evaluate the aggregator on the last axis of ``d``.

    Rows containing a zero evaluate to 0 (the limit value) for every
    aggregator; use :func:`degenerate_mask` to detect them.
    """
    d = _as_input(agg, d)
    if agg.name == "min":
        out = d.min(axis=-1)
    else:
        zero = degenerate_mask(agg, d)
        safe = np.where(zero[..., None], 1.0, d)
        if agg.name == "power":
            dmin, _, _, S = _power_parts(safe, agg.s)
            out = (dmin * S ** (1.0 / agg.s))[..., 0]
        else:
            dmin = safe.min(axis=-1)
            out = dmin / np.sum(dmin[..., None] / safe, axis=-1)
        out = np.where(zero, 0.0, out)
    return out if np.ndim(out) else float(out)


def _partials_unchecked(agg: Aggregator, d: np.ndarray) -> np.ndarray:
    """Partials for rows without zeros; degenerate rows come back as zeros."""
    if agg.name == "min":
        out = np.zeros_like(d)
        idx = np.argmin(d, axis=-1)  # first occurrence -> lowest index on ties
        np.put_along_axis(out, idx[..., None], 1.0, axis=-1)
        return out
    zero = degenerate_mask(agg, d)
    safe = np.where(zero[..., None], 1.0, d)
    if agg.name == "power":
        s = agg.s
        _, r, _, S = _power_parts(safe, s)
        out = S ** (1.0 / s - 1.0) * r ** (s - 1.0) / agg.k
    else:
        # d/dd_j (sum 1/d)^-1 = (psi / d_j)^2
        psi = np.asarray(evaluate(agg, safe))[..., None]
        out = (psi / safe) ** 2
    return np.where(zero[..., None], 0.0, out)


def partials(agg: Aggregator, d) -> np.ndarray:
    """Gradient of the aggregator with respect to each divergence.

    For ``min`` this is the indicator of the (lowest-index) argmin, i.e. the
    subgradient used by k-means.

    Raises
    ------
    DegeneracyError
        If a smooth aggregator receives a zero coordinate.
    """
    d = _as_input(agg, d)
    if np.any(degenerate_mask(agg, d)):
        raise DegeneracyError(f"{agg.name} aggregator is not differentiable at d_j = 0")
    return _partials_unchecked(agg, d)


def lipschitz_constant(agg: Aggregator) -> float:
    """l1-Lipschitz constant ``tau``.

    ``min``: 1. ``power``: ``k^(-1/s)``. ``harmonic``: 1, since
    ``(sum 1/d)^-1 = M_{-1}(d) / k`` and ``M_{-1}`` has constant ``k``.
    """
    if agg.name == "power":
        return float(agg.k ** (-1.0 / agg.s))
    return 1.0
