"""Bregman divergences generated by coordinate-separable convex functions.

Every built-in generator ``phi`` is a sum of one-dimensional convex terms, so
its Hessian is diagonal. That gives a cheap closed form for the gradient of
``d_phi(x, theta)`` with respect to the center ``theta``::

    grad_theta d_phi(x, theta) = hess_diag(theta) * (theta - x)

and makes the Bregman projection onto a box coordinatewise clamping.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# KL / Itakura-Saito coordinates must exceed this.
DOMAIN_FLOOR = 1e-12


class DomainError(ValueError):
    """Input outside the domain of the generating function."""


@dataclass(frozen=True)
class Divergence:
    """Descriptor of a separable Bregman divergence.

    All callables act on the last axis and broadcast over leading axes.

    Attributes
    ----------
    name : str
        Config identifier.
    phi : callable
        Generator, ``(..., p) -> (...)``.
    grad_phi : callable
        Gradient of ``phi``, ``(..., p) -> (..., p)``.
    hess_diag : callable
        Diagonal of the Hessian of ``phi``, ``(..., p) -> (..., p)``.
    lipschitz_grad : float
        ``H_p``: Lipschitz constant of ``grad_phi`` on the valid box.
    requires_positive_domain : bool
        True for generators involving ``log`` or reciprocals.
    lower : float
        Lower end of the box on which ``lipschitz_grad`` holds (only
        meaningful for positive-domain divergences).
    closed_form : callable, optional
        Numerically preferable direct formula for ``d_phi(x, y)``.
    """

    name: str
    phi: Callable[[np.ndarray], np.ndarray]
    grad_phi: Callable[[np.ndarray], np.ndarray]
    hess_diag: Callable[[np.ndarray], np.ndarray]
    lipschitz_grad: float
    requires_positive_domain: bool = False
    lower: float = -np.inf
    closed_form: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(
        default=None, compare=False
    )

    def check_domain(self, *arrays: np.ndarray) -> None:
        if not self.requires_positive_domain:
            return
        for a in arrays:
            if np.any(~(a > DOMAIN_FLOOR)):
                raise DomainError(
                    f"{self.name} divergence needs all coordinates > {DOMAIN_FLOOR:g}"
                )


def _check_dims(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[-1] != y.shape[-1]:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")


def eval_divergence(div: Divergence, x, y) -> np.ndarray:
    """``d_phi(x, y) = phi(x) - phi(y) - <grad phi(y), x - y>``.

    Broadcasts over leading axes; returns a float for 1-d inputs.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_dims(x, y)
    div.check_domain(x, y)
    if div.closed_form is not None:
        out = div.closed_form(x, y)
    else:
        out = div.phi(x) - div.phi(y) - np.sum(div.grad_phi(y) * (x - y), axis=-1)
    return out if np.ndim(out) else float(out)


def grad_wrt_center(div: Divergence, x, theta) -> np.ndarray:
    """Gradient of ``theta -> d_phi(x, theta)``."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    _check_dims(x, theta)
    div.check_domain(x, theta)
    return div.hess_diag(theta) * (theta - x)


def pairwise(div: Divergence, X: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """``D[i, j] = d_phi(X[i], theta[j])`` as an ``(n, k)`` array."""
    X = np.asarray(X, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return np.asarray(eval_divergence(div, X[:, None, :], theta[None, :, :]))


def box_project(theta, M: float) -> np.ndarray:
    """Project onto ``[-M, M]^p``.

    Exact Bregman projection for every separable generator: the problem
    decouples per coordinate and each 1-d divergence is monotone away from
    its second argument.
    """
    if M <= 0:
        raise ValueError("box bound M must be positive")
    return np.clip(np.asarray(theta, dtype=float), -M, M)


# --------------------------------------------------------------------------
# built-in generators


def sqeuclidean() -> Divergence:
    """``phi(u) = ||u||^2``, so ``d_phi(x, y) = ||x - y||^2`` and ``H_p = 2``."""
    return Divergence(
        name="sqeuclidean",
        phi=lambda u: np.sum(u * u, axis=-1),
        grad_phi=lambda u: 2.0 * u,
        hess_diag=lambda u: np.full_like(u, 2.0),
        lipschitz_grad=2.0,
        closed_form=lambda x, y: np.sum((x - y) ** 2, axis=-1),
    )


def mahalanobis_diag(weights) -> Divergence:
    """``phi(u) = sum_i w_i u_i^2`` with positive weights; ``H_p = 2 max w``."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or np.any(w <= 0):
        raise ValueError("weights must be a 1-d vector of positive entries")
    w = w.copy()
    w.setflags(write=False)
    return Divergence(
        name="mahalanobis_diag",
        phi=lambda u: np.sum(w * u * u, axis=-1),
        grad_phi=lambda u: 2.0 * w * u,
        hess_diag=lambda u: np.broadcast_to(2.0 * w, u.shape).copy(),
        lipschitz_grad=float(2.0 * w.max()),
        closed_form=lambda x, y: np.sum(w * (x - y) ** 2, axis=-1),
    )


def kl(lower: float = 1e-2) -> Divergence:
    """Generalized KL: ``phi(u) = sum u log u``.

    ``d(x, y) = sum x log(x/y) - x + y``. The gradient ``log u + 1`` is only
    Lipschitz away from zero, with ``H_p = 1/lower`` on ``[lower, M]^p``.
    """
    if lower <= 0:
        raise ValueError("lower must be positive")
    return Divergence(
        name="kl",
        phi=lambda u: np.sum(u * np.log(u), axis=-1),
        grad_phi=lambda u: np.log(u) + 1.0,
        hess_diag=lambda u: 1.0 / u,
        lipschitz_grad=1.0 / lower,
        requires_positive_domain=True,
        lower=lower,
        closed_form=lambda x, y: np.sum(x * np.log(x / y) - x + y, axis=-1),
    )


def itakura_saito(lower: float = 1e-1) -> Divergence:
    """``phi(u) = -sum log u``; ``d(x, y) = sum x/y - log(x/y) - 1``.

    ``H_p = 1/lower^2`` on ``[lower, M]^p``.
    """
    if lower <= 0:
        raise ValueError("lower must be positive")
    return Divergence(
        name="itakura_saito",
        phi=lambda u: -np.sum(np.log(u), axis=-1),
        grad_phi=lambda u: -1.0 / u,
        hess_diag=lambda u: 1.0 / (u * u),
        lipschitz_grad=1.0 / lower**2,
        requires_positive_domain=True,
        lower=lower,
        closed_form=lambda x, y: np.sum(x / y - np.log(x / y) - 1.0, axis=-1),
    )


def get_divergence(name: str, **params) -> Divergence:
    """Look up a divergence by its config id."""
    factories = {
        "sqeuclidean": sqeuclidean,
        "kl": kl,
        "itakura_saito": itakura_saito,
        "mahalanobis_diag": mahalanobis_diag,
    }
    try:
        factory = factories[name]
    except KeyError:
        raise ValueError(f"unknown divergence {name!r}; choose from {sorted(factories)}")
    return factory(**params)
