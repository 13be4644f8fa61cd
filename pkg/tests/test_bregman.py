import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import central_diff, rel_err
from momclust.bregman import (
    DomainError,
    box_project,
    eval_divergence,
    get_divergence,
    grad_wrt_center,
    itakura_saito,
    kl,
    mahalanobis_diag,
    pairwise,
    sqeuclidean,
)

SQ = sqeuclidean()
# 0.5 log 2 + 0.5 log(2/3), 40-digit mpmath evaluation
KL_REFERENCE = 0.1438410362258904637


def test_sqeuclidean_examples():
    assert eval_divergence(SQ, [1, 2], [1, 2]) == 0
    assert eval_divergence(SQ, [3], [1]) == 4
    assert SQ.phi(np.zeros(3)) == 0
    assert np.all(SQ.grad_phi(np.zeros(3)) == 0)


def test_kl_example():
    assert eval_divergence(kl(), [0.5, 0.5], [0.25, 0.75]) == pytest.approx(KL_REFERENCE, rel=1e-14)


def test_generic_formula_matches_closed_form(rng):
    for div in (SQ, kl(), itakura_saito(), mahalanobis_diag([0.5, 2.0, 1.0])):
        x = rng.uniform(0.2, 2, size=(50, 3))
        y = rng.uniform(0.2, 2, size=(50, 3))
        generic = div.phi(x) - div.phi(y) - np.sum(div.grad_phi(y) * (x - y), axis=-1)
        np.testing.assert_allclose(eval_divergence(div, x, y), generic, rtol=1e-9, atol=1e-12)


def test_grad_examples():
    np.testing.assert_array_equal(grad_wrt_center(SQ, [1, 1], [1, 1]), [0, 0])
    np.testing.assert_array_equal(grad_wrt_center(SQ, [0, 0], [2, -1]), [4, -2])


@pytest.mark.parametrize("name", ["sqeuclidean", "kl", "itakura_saito", "mahalanobis_diag"])
def test_grad_matches_finite_differences(name, rng):
    div = get_divergence(name, weights=[1.0, 3.0, 0.5]) if name == "mahalanobis_diag" else get_divergence(name)
    for _ in range(1000):
        x = rng.uniform(0.5, 2, 3)
        th = rng.uniform(0.5, 2, 3)
        fd = central_diff(lambda t: eval_divergence(div, x, t), th)
        assert rel_err(grad_wrt_center(div, x, th), fd) < 1e-5


def test_dimension_and_domain_errors():
    with pytest.raises(ValueError):
        eval_divergence(SQ, [1, 2], [1, 2, 3])
    with pytest.raises(DomainError):
        eval_divergence(kl(), [0.5, 0.0], [0.5, 0.5])
    with pytest.raises(DomainError):
        grad_wrt_center(itakura_saito(), [0.5, 0.5], [-1.0, 0.5])
    with pytest.raises(ValueError):
        get_divergence("cosine")


def test_box_project_examples():
    np.testing.assert_array_equal(box_project([0.5], 1), [0.5])
    np.testing.assert_array_equal(box_project([3, -7], 1), [1, -1])
    np.testing.assert_array_equal(box_project([2, 0.3, -1.5], 1), [1, 0.3, -1])
    with pytest.raises(ValueError):
        box_project([1.0], 0)


def test_pairwise_shape(rng):
    X, T = rng.normal(size=(7, 3)), rng.normal(size=(4, 3))
    D = pairwise(SQ, X, T)
    assert D.shape == (7, 4)
    assert D[2, 3] == pytest.approx(np.sum((X[2] - T[3]) ** 2))


def test_descriptors_are_immutable():
    with pytest.raises(Exception):
        SQ.lipschitz_grad = 3.0


finite = st.floats(-50, 50, allow_nan=False)


@settings(max_examples=200)
@given(arrays(float, 4, elements=finite), arrays(float, 4, elements=finite))
def test_sqeuclidean_nonnegative_and_symmetric(x, y):
    d = eval_divergence(SQ, x, y)
    assert d >= 0
    assert d == eval_divergence(SQ, y, x)


@settings(max_examples=200)
@given(arrays(float, 3, elements=st.floats(1e-3, 1e3)), arrays(float, 3, elements=st.floats(1e-3, 1e3)))
def test_positive_domain_divergences_nonnegative(x, y):
    for div in (kl(), itakura_saito()):
        assert eval_divergence(div, x, y) >= -1e-12 * max(1.0, np.abs(x).sum())
        assert abs(eval_divergence(div, x, x)) <= 1e-12
