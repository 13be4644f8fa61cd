"""Finite-sample bound calculators and an empirical concentration-rate harness.

The closed forms bound the loss class ``F = {f_Theta : Theta in [-M, M]^(k x p)}``
in terms of the aggregator constant ``tau``, the divergence constant ``H``,
the box bound ``M`` and the sizes ``k, p, n``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .aggregate import Aggregator
from .bregman import Divergence
from .model import losses


@dataclass
class BoundInputs:
    tau: float = 1.0
    H: float = 2.0
    M: float = 1.0
    k: int = 1
    p: int = 1
    n: int = 1
    L: int = 1
    n_inliers: Optional[int] = None
    n_outliers: int = 0
    eta_mom: float = 1.0
    delta_conf: float = 0.05

    def __post_init__(self):
        if self.n_inliers is None:
            self.n_inliers = self.n - self.n_outliers

    def validate(self, mom: bool = False) -> None:
        for name in ("tau", "H", "M", "k", "p", "n", "L", "eta_mom", "delta_conf"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n_outliers < 0 or self.n_inliers < 0:
            raise ValueError("inlier/outlier counts must be non-negative")
        if mom and not self.L > (2 + self.eta_mom) * self.n_outliers:
            raise ValueError(
                f"need L > (2 + eta) |O|: L={self.L}, eta={self.eta_mom}, |O|={self.n_outliers}"
            )

    def to_dict(self) -> dict:
        return asdict(self)


def _scale(b: BoundInputs) -> float:
    return b.tau * b.H * b.M**2


def rademacher_bound(b: BoundInputs) -> float:
    """``48 sqrt(pi) tau H M^2 (kp)^(3/2) / sqrt(n)``."""
    b.validate()
    return 48.0 * math.sqrt(math.pi) * _scale(b) * (b.k * b.p) ** 1.5 / math.sqrt(b.n)


def sup_norm_bound(b: BoundInputs) -> float:
    """Uniform bound ``4 tau H M^2 p k`` on ``f_Theta(x)`` over the box."""
    return 4.0 * _scale(b) * b.p * b.k


def diameter_bound(b: BoundInputs) -> float:
    """``diam(F) <= 8 tau H M^2 k p`` in the sup norm."""
    return 8.0 * _scale(b) * b.k * b.p


def deviation_bound(b: BoundInputs) -> float:
    """High-probability bound on ``sup_F |P_n f - P f|`` at level ``1 - delta``.

    ``96 sqrt(pi) tau H M^2 (kp)^(3/2) / sqrt(n) + 4 tau H M^2 p k sqrt(log(2/delta) / (2n))``
    """
    b.validate()
    chaining = 2.0 * rademacher_bound(b)
    tail = sup_norm_bound(b) * math.sqrt(math.log(2.0 / b.delta_conf) / (2.0 * b.n))
    return chaining + tail


def mom_bound(b: BoundInputs) -> tuple[float, float]:
    """Uniform deviation of the MoM objective and the probability it holds with.

    Returns ``(epsilon, 1 - 2 exp(-2 L delta^2))`` with
    ``delta = 2/(4 + eta) - |O|/L``. The confidence is returned unclamped and
    is vacuous (<= 0) when ``2 L delta^2 <= log 2``.

    Raises
    ------
    ValueError
        If ``L > (2 + eta)|O|`` fails.
    """
    b.validate(mom=True)
    eta, kp = b.eta_mom, b.k * b.p
    delta = 2.0 / (4.0 + eta) - b.n_outliers / b.L
    first = math.sqrt(32.0 * _scale(b) ** 2 * math.log(4.0 * (eta + 4.0) / eta)) * kp * math.sqrt(b.L / b.n)
    second = (
        1536.0 * (eta + 4.0) * _scale(b) * math.sqrt(math.pi) / eta
        * kp**1.5 * math.sqrt(b.n_inliers) / b.n
    )
    eps = 2.0 * max(first, second)
    conf = 1.0 - 2.0 * math.exp(-2.0 * b.L * delta**2)
    return eps, conf


def covering_number_bound(delta: float, b: BoundInputs) -> int:
    """``max(floor(8 M^2 tau H k p / delta), 1) ** (k p)``, as an exact integer."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    base = max(math.floor(8.0 * _scale(b) * b.k * b.p / delta), 1)
    return base ** (b.k * b.p)


def bound_inputs_for(div: Divergence, agg: Aggregator, M: float, p: int, n: int, **kw) -> BoundInputs:
    return BoundInputs(tau=agg.lipschitz, H=div.lipschitz_grad, M=M, k=agg.k, p=p, n=n, **kw)


# --------------------------------------------------------------------------
# empirical rate harness

Sampler = Callable[[np.random.Generator, int], np.ndarray]


def mixture_sampler(centers, sd: float, M: float) -> Sampler:
    """Equal-weight Gaussian mixture clipped to ``[-M, M]^p``."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        which = rng.integers(len(centers), size=n)
        X = centers[which] + sd * rng.standard_normal((n, centers.shape[1]))
        return np.clip(X, -M, M)

    return draw


@dataclass
class RateReport:
    n_values: list
    mean_devs: list
    slope: float
    slope_stderr: float
    devs: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "n_values": list(self.n_values),
            "mean_devs": list(self.mean_devs),
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _mean_losses(div, agg, thetas, X, chunk=200_000) -> np.ndarray:
    out = np.zeros(len(thetas))
    for start in range(0, X.shape[0], chunk):
        block = X[start:start + chunk]
        for t, th in enumerate(thetas):
            out[t] += losses(div, agg, th, block).sum()
    return out / X.shape[0]


def empirical_deviation(
    div: Divergence,
    agg: Aggregator,
    data_sampler: Sampler,
    theta_grid: Sequence,
    n_values: Sequence[int],
    replicates: int,
    seed: int = 0,
    n_reference: int = 1_000_000,
    n_random_thetas: int = 0,
    box_bound: float = 1.0,
) -> RateReport:
    """Measure ``max_Theta |P_n f_Theta - P f_Theta|`` as ``n`` grows.

    ``P f_Theta`` is replaced by a Monte Carlo mean over ``n_reference`` draws
    from an independent stream. The sup is taken over ``theta_grid`` plus
    ``n_random_thetas`` uniform draws from the box. The slope is the least
    squares fit of log mean deviation on log n.
    """
    thetas = [np.atleast_2d(np.asarray(t, dtype=float)) for t in theta_grid]
    n_values = [int(n) for n in n_values]
    if replicates < 1 or len(n_values) < 2:
        raise ValueError("need replicates >= 1 and at least two sample sizes")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be strictly increasing")
    ref_ss, theta_ss, rep_ss = np.random.SeedSequence(seed).spawn(3)
    if n_random_thetas:
        if not thetas:
            raise ValueError("random thetas need at least one grid point for the shape")
        trng = np.random.default_rng(theta_ss)
        shape = thetas[0].shape
        thetas += [trng.uniform(-box_bound, box_bound, shape) for _ in range(n_random_thetas)]
    if not thetas:
        raise ValueError("theta grid is empty")

    ref = data_sampler(np.random.default_rng(ref_ss), n_reference)
    Pf = _mean_losses(div, agg, thetas, ref)

    rep_seeds = rep_ss.spawn(len(n_values) * replicates)
    devs = np.empty((len(n_values), replicates))
    for i, n in enumerate(n_values):
        for r in range(replicates):
            X = data_sampler(np.random.default_rng(rep_seeds[i * replicates + r]), n)
            devs[i, r] = np.max(np.abs(_mean_losses(div, agg, thetas, X) - Pf))

    mean_devs = devs.mean(axis=1)
    fit = stats.linregress(np.log(n_values), np.log(mean_devs))
    return RateReport(n_values, mean_devs.tolist(), float(fit.slope), float(fit.stderr), devs.tolist())
