import math

import mpmath as mp
import numpy as np
import pytest

from momclust.aggregate import harmonic, min_aggregator, power_mean
from momclust.bregman import sqeuclidean
from momclust.theory import (
    BoundInputs,
    bound_inputs_for,
    covering_number_bound,
    deviation_bound,
    diameter_bound,
    empirical_deviation,
    mixture_sampler,
    mom_bound,
    rademacher_bound,
    sup_norm_bound,
)

mp.mp.dps = 40

# frozen high-precision values
NINETY_SIX_ROOT_PI = 170.15556968692954
DEVIATION_K2P2 = 27.659483634945724
MOM_CONF_L10 = 0.9184755920432676


def test_rademacher_examples():
    b = BoundInputs(tau=1, H=2, M=1, k=1, p=1, n=1)
    assert rademacher_bound(b) == pytest.approx(NINETY_SIX_ROOT_PI, rel=1e-14)
    assert float(96 * mp.sqrt(mp.pi)) == pytest.approx(NINETY_SIX_ROOT_PI, rel=1e-15)
    b2 = BoundInputs(tau=1, H=2, M=1, k=1, p=1, n=2)
    assert rademacher_bound(b) / rademacher_bound(b2) == pytest.approx(math.sqrt(2), rel=1e-15)
    b4 = BoundInputs(tau=1, H=2, M=1, k=4, p=1, n=1)
    assert rademacher_bound(b4) / rademacher_bound(b) == pytest.approx(8.0, rel=1e-15)


def test_deviation_examples():
    b = BoundInputs(tau=1, H=2, M=1, k=2, p=2, n=10**4, delta_conf=0.05)
    assert deviation_bound(b) == pytest.approx(DEVIATION_K2P2, rel=1e-13)
    edge = BoundInputs(tau=1, H=2, M=1, k=2, p=2, n=10**4, delta_conf=2.0)
    assert deviation_bound(edge) == pytest.approx(2 * rademacher_bound(edge), rel=1e-15)
    vals = [deviation_bound(BoundInputs(k=2, p=2, n=n)) for n in np.geomspace(10, 1e7, 10).astype(int)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_mom_examples():
    eps, conf = mom_bound(BoundInputs(tau=1, H=2, M=1, k=2, p=2, n=1000, L=10, n_outliers=0, eta_mom=1))
    assert conf == pytest.approx(MOM_CONF_L10, rel=1e-14)
    assert float(1 - 2 * mp.exp(-2 * 10 * mp.mpf(2) ** 2 / 25)) == pytest.approx(MOM_CONF_L10, rel=1e-15)
    confs = [mom_bound(BoundInputs(n=1000, L=40, n_outliers=o, eta_mom=1))[1] for o in range(0, 13)]
    assert all(a > b for a, b in zip(confs, confs[1:]))


def test_mom_first_branch_scaling():
    # huge n_inliers-free regime: with |I| small the first branch dominates
    base = dict(tau=1, H=2, M=1, k=2, p=2, n_inliers=1, eta_mom=1)
    e1, _ = mom_bound(BoundInputs(n=10**6, L=100, **base))
    e2, _ = mom_bound(BoundInputs(n=4 * 10**6, L=400, **base))
    e3, _ = mom_bound(BoundInputs(n=10**6, L=400, **base))
    assert e1 == pytest.approx(e2, rel=1e-14)  # L/n unchanged
    assert e3 / e1 == pytest.approx(2.0, rel=1e-14)


def test_mom_requires_enough_blocks():
    with pytest.raises(ValueError, match="L > "):
        mom_bound(BoundInputs(n=100, L=6, n_outliers=2, eta_mom=1))
    mom_bound(BoundInputs(n=100, L=7, n_outliers=2, eta_mom=1))


def test_covering_examples():
    one = BoundInputs(tau=1, H=1, M=1, k=1, p=1)
    assert covering_number_bound(1.0, one) == 8
    b = BoundInputs(tau=1, H=2, M=1.5, k=2, p=3)
    assert covering_number_bound(8 * 1.5**2 * 2 * 6, b) == 1
    assert covering_number_bound(1e9, b) == 1
    for delta in np.geomspace(1e-2, 50, 20):
        base = max(math.floor(8 * 1.5**2 * 2 * 6 / delta), 1)
        half = max(math.floor(8 * 1.5**2 * 2 * 6 / (delta / 2)), 1)
        assert covering_number_bound(delta, b) == base**6
        assert base <= half <= 2 * base + 1
        assert covering_number_bound(delta / 2, b) <= (2 * base + 1) ** 6
    with pytest.raises(ValueError):
        covering_number_bound(0.0, b)


def test_covering_is_exact_integer():
    b = BoundInputs(tau=1, H=2, M=1, k=5, p=5)
    v = covering_number_bound(0.001, b)
    assert isinstance(v, int)
    assert v == 400000**25


@pytest.mark.parametrize("fn", [rademacher_bound, deviation_bound, sup_norm_bound, diameter_bound])
def test_monotone_in_sizes(fn):
    grid = range(1, 11)
    by_k = [fn(BoundInputs(k=k, p=3, n=50)) for k in grid]
    by_p = [fn(BoundInputs(k=3, p=p, n=50)) for p in grid]
    assert all(a < b for a, b in zip(by_k, by_k[1:]))
    assert all(a < b for a, b in zip(by_p, by_p[1:]))


def test_mom_eps_monotone_in_n():
    eps = [mom_bound(BoundInputs(k=2, p=2, n=n, L=20, n_outliers=3))[0] for n in np.geomspace(100, 1e6, 10).astype(int)]
    assert all(a > b for a, b in zip(eps, eps[1:]))


def test_small_L_confidence_is_vacuous():
    # L > (2 + eta)|O| holds, yet 1 - 2 exp(-2 L delta^2) is negative for a single block
    _, conf = mom_bound(BoundInputs(n=10, L=1, n_outliers=0, eta_mom=1))
    assert conf < 0
    _, conf = mom_bound(BoundInputs(n=1000, L=30, n_outliers=2, eta_mom=1))
    assert 0 < conf < 1


def test_inputs_from_components():
    b = bound_inputs_for(sqeuclidean(), power_mean(4), M=2.0, p=3, n=100)
    assert (b.tau, b.H, b.k) == (4.0, 2.0, 4)  # k^(-1/s) at s = -1
    assert bound_inputs_for(sqeuclidean(), harmonic(3), 1.0, 2, 10).tau == 1.0


def test_mixture_sampler_clips():
    draw = mixture_sampler([[-0.9, 0.9], [0.9, -0.9]], sd=1.0, M=1.0)
    X = draw(np.random.default_rng(0), 5000)
    assert X.shape == (5000, 2)
    assert np.abs(X).max() <= 1.0


def small_rate(**kw):
    centers = np.array([[-0.5, -0.5], [0.5, 0.5]])
    grid = [centers, centers[::-1] * 0.5, np.zeros((2, 2))]
    args = dict(
        div=sqeuclidean(), agg=min_aggregator(2), data_sampler=mixture_sampler(centers, 0.3, 1.0),
        theta_grid=grid, n_values=[2**7, 2**9, 2**11], replicates=6, seed=4, n_reference=100_000,
    )
    args.update(kw)
    return empirical_deviation(**args)


def test_rate_report_shape_and_determinism():
    a, b = small_rate(), small_rate()
    assert a.to_dict() == b.to_dict()
    assert set(a.to_dict()) == {"n_values", "mean_devs", "slope", "slope_stderr"}
    assert len(a.mean_devs) == 3
    assert -1.0 < a.slope < 0.0


def test_single_theta_matches_sample_mean_error():
    centers = np.array([[0.0, 0.0]])
    theta = np.array([[0.2, -0.1]])
    sampler = mixture_sampler(centers, 0.5, 1.0)
    rep = empirical_deviation(sqeuclidean(), min_aggregator(1), sampler, [theta],
                              [2**7, 2**9, 2**11, 2**13], 30, seed=1, n_reference=400_000)
    assert -0.65 <= rep.slope <= -0.35


def test_large_n_beats_small_n():
    # random box draws make the sup over the grid concentrate away from zero
    rep = small_rate(n_values=[2**7, 2**13], replicates=20, n_reference=10**6, n_random_thetas=20)
    devs = np.array(rep.devs)
    wins = np.mean(devs[1][None, :] < devs[0][:, None])
    assert wins >= 0.95


def test_measured_deviation_below_bound():
    rep = small_rate()
    for n, dev in zip(rep.n_values, rep.devs):
        bound = deviation_bound(BoundInputs(tau=1, H=2, M=1, k=2, p=2, n=n, delta_conf=0.05))
        assert max(dev) <= bound


def test_rate_input_errors():
    with pytest.raises(ValueError):
        small_rate(theta_grid=[])
    with pytest.raises(ValueError):
        small_rate(n_values=[512, 128])
    with pytest.raises(ValueError):
        small_rate(replicates=0)
