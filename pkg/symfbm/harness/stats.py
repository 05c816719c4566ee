"""
Sample statistics used by the experiments.

Reductions go through numpy's pairwise summation over arrays kept in
path-index order, so every value depends on the samples only, not on how
the paths were produced.
"""
import math

import numpy as np
import scipy.stats

from ..errors import SampleSizeError

KS_MIN_SAMPLES = 100
KS_ALPHA = 0.01
JACKKNIFE_GROUPS = 20


def _samples(samples, minimum=2):
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < minimum:
        raise SampleSizeError(f"Need at least {minimum} samples, got {x.size}")
    return x


def ks_statistic(samples, reference_cdf):
    """
    One-sample Kolmogorov-Smirnov test against a continuous cdf.

    Returns:
        (statistic, p_value) with the asymptotic Kolmogorov p-value.
    """
    x = _samples(samples, KS_MIN_SAMPLES)
    result = scipy.stats.kstest(x, reference_cdf, method="asymp")
    return float(result.statistic), float(result.pvalue)


def mean_and_se(samples):
    x = _samples(samples)
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size))


def variance_and_se(samples):
    """Unbiased sample variance and its delta-method SE sqrt((m4 - s^4 (M-3)/(M-1)) / M)."""
    x = _samples(samples, 4)
    m = x.size
    centered = x - np.mean(x)
    var = float(np.sum(centered * centered) / (m - 1))
    m4 = float(np.mean(centered ** 4))
    spread = max(m4 - var * var * (m - 3) / (m - 1), 0.0)
    return var, math.sqrt(spread / m)


def skewness_and_se(samples):
    """Standardized third central moment; SE sqrt(6/M) under normality."""
    x = _samples(samples, 3)
    centered = x - np.mean(x)
    m2 = float(np.mean(centered ** 2))
    if m2 == 0.0:
        return 0.0, math.sqrt(6.0 / x.size)
    return float(np.mean(centered ** 3)) / m2 ** 1.5, math.sqrt(6.0 / x.size)


def correlation(x, y):
    """Pearson correlation; 0 when either sample is constant."""
    x = _samples(x)
    y = _samples(y)
    if x.size != y.size:
        raise ValueError(f"Samples differ in length: {x.size} vs {y.size}")
    cx = x - np.mean(x)
    cy = y - np.mean(y)
    denom = math.sqrt(float(np.sum(cx * cx)) * float(np.sum(cy * cy)))
    if denom == 0.0:
        return 0.0
    return float(np.sum(cx * cy)) / denom


def correlation_band(count):
    return 3.0 / math.sqrt(count)


def jackknife_se(samples, statistic, groups=JACKKNIFE_GROUPS):
    """
    Grouped (delete-one-block) jackknife SE of ``statistic(samples)``.

    Blocks are contiguous in path order; ``statistic`` maps a 1-d array to a float.
    """
    x = _samples(samples, groups)
    blocks = np.array_split(np.arange(x.size), groups)
    estimates = np.array([statistic(np.delete(x, block)) for block in blocks])
    centered = estimates - np.mean(estimates)
    return math.sqrt((groups - 1) / groups * float(np.sum(centered * centered)))


def z_score(estimate, target, se):
    if se == 0.0:
        return 0.0 if estimate == target else math.inf
    return (estimate - target) / se
