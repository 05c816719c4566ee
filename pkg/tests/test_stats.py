import math

import numpy as np
import pytest
import scipy.stats

from symfbm.errors import SampleSizeError
from symfbm.harness.stats import (
    correlation,
    correlation_band,
    jackknife_se,
    ks_statistic,
    mean_and_se,
    skewness_and_se,
    variance_and_se,
    z_score,
)


@pytest.fixture
def normal_samples():
    return np.random.default_rng(12345).standard_normal(5000)


def test_ks_accepts_the_reference(normal_samples):
    stat, p = ks_statistic(normal_samples, scipy.stats.norm.cdf)
    assert 0.0 < stat < 0.05
    assert p > 0.01


def test_ks_rejects_wrong_scale(normal_samples):
    _, p = ks_statistic(2.0 * normal_samples, scipy.stats.norm.cdf)
    assert p < 1e-6


def test_ks_degenerate_samples():
    stat, _ = ks_statistic(np.zeros(200), scipy.stats.norm.cdf)
    assert stat >= 0.5


def test_ks_needs_100_samples():
    with pytest.raises(SampleSizeError):
        ks_statistic(np.zeros(99), scipy.stats.norm.cdf)


def test_moments(normal_samples):
    mean, se = mean_and_se(normal_samples)
    assert abs(mean) <= 4 * se
    var, se = variance_and_se(normal_samples)
    assert abs(var - 1.0) <= 4 * se
    # for Gaussian data the SE is close to sqrt(2/M)
    assert se == pytest.approx(math.sqrt(2.0 / 5000), rel=0.1)
    skew, se = skewness_and_se(normal_samples)
    assert se == pytest.approx(math.sqrt(6.0 / 5000))
    assert abs(skew) <= 5 * se


def test_correlation():
    x = np.arange(10.0)
    assert correlation(x, 2 * x + 1) == pytest.approx(1.0)
    assert correlation(x, -x) == pytest.approx(-1.0)
    assert correlation(x, np.ones(10)) == 0.0
    assert correlation_band(10000) == pytest.approx(0.03)
    with pytest.raises(ValueError):
        correlation(x, x[:5])


def test_jackknife_of_the_mean(normal_samples):
    se = jackknife_se(normal_samples, np.mean)
    assert se == pytest.approx(1.0 / math.sqrt(5000), rel=0.5)
    with pytest.raises(SampleSizeError):
        jackknife_se(np.ones(5), np.mean)


def test_reductions_are_order_fixed(normal_samples):
    a = variance_and_se(normal_samples)
    b = variance_and_se(normal_samples.copy())
    assert a == b


def test_z_score():
    assert z_score(1.5, 1.0, 0.25) == 2.0
    assert z_score(1.0, 1.0, 0.0) == 0.0
    assert math.isinf(z_score(2.0, 1.0, 0.0))
