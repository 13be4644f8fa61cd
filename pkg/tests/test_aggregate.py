import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import central_diff, rel_err
from momclust.aggregate import (
    Aggregator,
    DegeneracyError,
    degenerate_mask,
    evaluate,
    harmonic,
    lipschitz_constant,
    min_aggregator,
    partials,
    power_mean,
)


def test_eval_examples():
    assert evaluate(min_aggregator(3), [3, 1, 2]) == 1
    for c in (0.01, 1.0, 7.5):
        assert evaluate(power_mean(4, -1), [c] * 4) == pytest.approx(c, rel=1e-15)
    # mpmath: (1/2 (1 + 3))^-1
    with mp.workdps(30):
        ref = float(1 / (mp.mpf(1) / 2 * (1 + 1 / (mp.mpf(1) / 3))))
    assert evaluate(power_mean(2, -1), [1, 1 / 3]) == pytest.approx(ref, rel=1e-15)
    assert ref == 0.5


def test_zero_input_limit_and_flag():
    for agg in (power_mean(3, -2), harmonic(3), min_aggregator(3)):
        assert evaluate(agg, [0.0, 1.0, 2.0]) == 0.0
    assert degenerate_mask(power_mean(3, -2), [[0.0, 1, 2], [1, 1, 1]]).tolist() == [True, False]
    assert not degenerate_mask(min_aggregator(3), [0.0, 1, 2])
    with pytest.raises(DegeneracyError):
        partials(power_mean(3, -2), [0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        evaluate(min_aggregator(2), [-1.0, 1.0])


def test_partials_examples():
    np.testing.assert_array_equal(partials(min_aggregator(3), [3, 1, 2]), [0, 1, 0])
    np.testing.assert_array_equal(partials(min_aggregator(3), [1, 1, 2]), [1, 0, 0])  # tie -> lowest
    np.testing.assert_allclose(partials(power_mean(5, -1), [2.0] * 5), [0.2] * 5, rtol=1e-14)


@pytest.mark.parametrize("agg", [power_mean(3, -3), power_mean(4, -1), power_mean(3, -8), harmonic(3)],
                         ids=lambda a: f"{a.name}{a.s or ''}")
def test_partials_match_finite_differences(agg, rng):
    for _ in range(200):
        d = rng.uniform(0.2, 3.0, agg.k)
        fd = central_diff(lambda v: evaluate(agg, v), d, h=1e-6)
        assert rel_err(partials(agg, d), fd) < 1e-6


def test_lipschitz_constants():
    assert lipschitz_constant(min_aggregator(7)) == 1
    assert lipschitz_constant(power_mean(4, -1)) == pytest.approx(4)
    assert lipschitz_constant(power_mean(9, -2)) == pytest.approx(3)
    assert lipschitz_constant(harmonic(5)) == 1
    assert power_mean(9, -2).lipschitz == lipschitz_constant(power_mean(9, -2))


def test_construction_errors():
    with pytest.raises(ValueError):
        Aggregator("max", 3)
    with pytest.raises(ValueError):
        power_mean(3, 0.5)
    with pytest.raises(ValueError):
        evaluate(min_aggregator(3), [1.0, 2.0])


def test_power_mean_decreases_towards_min(rng):
    """M_s is non-increasing as s -> -inf and sandwiched as min <= M_s <= k^(-1/s) min."""
    for _ in range(200):
        k = int(rng.integers(2, 8))
        d = rng.permutation(rng.uniform(0.1, 5.0, k))
        vals = [evaluate(power_mean(k, s), d) for s in (-1, -2, -8, -32, -128)]
        assert all(b <= a * (1 + 1e-13) for a, b in zip(vals, vals[1:]))
        lo = d.min()
        for s, v in zip((-1, -2, -8, -32, -128), vals):
            assert lo * (1 - 1e-13) <= v <= k ** (-1.0 / s) * lo * (1 + 1e-13)
    # deep in the tail the gap closes to 1e-6
    d = np.array([0.7, 1.3, 2.0])
    assert evaluate(power_mean(3, -2e6), d) == pytest.approx(0.7, abs=1e-6)


@pytest.mark.parametrize("agg", [min_aggregator(4), power_mean(4, -1), power_mean(4, -3), harmonic(4)],
                         ids=lambda a: f"{a.name}{a.s or ''}")
def test_lipschitz_property(agg, rng):
    tau = lipschitz_constant(agg)
    x = rng.exponential(size=(100_000, 4)) * rng.choice([0.01, 1, 100], size=(100_000, 1))
    y = x + rng.normal(scale=0.5, size=x.shape) * x.mean(axis=1, keepdims=True)
    y = np.abs(y)
    lhs = np.abs(evaluate(agg, x) - evaluate(agg, y))
    rhs = tau * np.abs(x - y).sum(axis=1)
    assert np.all(lhs <= rhs + 1e-9)


pos = st.floats(1e-3, 1e3)


@settings(max_examples=300)
@given(arrays(float, 4, elements=pos), st.floats(1e-3, 1e3), st.sampled_from([-1.0, -2.0, -5.5, -20.0]))
def test_power_mean_homogeneous(d, c, s):
    agg = power_mean(4, s)
    assert evaluate(agg, c * d) == pytest.approx(c * evaluate(agg, d), rel=1e-12)


@settings(max_examples=300)
@given(arrays(float, 3, elements=pos), st.integers(0, 2), st.floats(0, 10),
       st.sampled_from([min_aggregator(3), power_mean(3, -1), power_mean(3, -4), harmonic(3)]))
def test_componentwise_nondecreasing(d, j, bump, agg):
    up = d.copy()
    up[j] += bump
    assert evaluate(agg, up) >= evaluate(agg, d) * (1 - 1e-14)


@settings(max_examples=200)
@given(arrays(float, 3, elements=pos), st.sampled_from([power_mean(3, -1), power_mean(3, -6), harmonic(3)]))
def test_smooth_partials_nonnegative(d, agg):
    assert np.all(partials(agg, d) >= 0)


def test_psi_vanishes_at_zero():
    for agg in (min_aggregator(3), power_mean(3, -2), harmonic(3)):
        assert evaluate(agg, np.zeros(3)) == 0
