import math

import pytest
from scipy.integrate import quad

from symfbm.constants import (
    bm_limit_variance,
    brute_force_power_sum_variance,
    c_nu,
    constants_table,
    critical_hurst,
    exact_power_sum_variance,
    gaussian_moment,
    isserlis_moment,
    limit_law_variance,
    normalization_ratio,
    power_sum_endpoint_correlation,
    power_sum_endpoint_covariance,
    rho_power_series,
    sigma_sq,
)
from symfbm.errors import DomainError, InfiniteEll, ScalingWarning
from symfbm.fbm import rho
from symfbm.measure import kv_constant, lebesgue, simpson, trapezoid
from symfbm.riemann import exponential, monomial


def test_sigma_sq_value():
    value = sigma_sq(1)
    assert 0.0 < value.value < 1.0
    assert value.value == pytest.approx(0.89853, abs=5e-5)
    assert value.tail_bound < 1e-12


def test_sigma_sq_truncation_is_stable():
    base = sigma_sq(1)
    doubled = sigma_sq(1, terms=2 * base.terms_used)
    assert abs(base.value - doubled.value) <= 1e-10


@pytest.mark.parametrize("ell", [1, 2])
def test_two_series_forms_agree(ell):
    closed = sigma_sq(ell)
    direct = rho_power_series(critical_hurst(ell), 2 * ell + 1)
    assert abs(closed.value - direct.value) <= closed.tail_bound + direct.tail_bound + 1e-12


def test_rho_power_series_q1_is_zero():
    assert rho_power_series(1.0 / 6.0, 1).value == 0.0
    with pytest.raises(DomainError):
        rho_power_series(1.0 / 6.0, 0)


def test_bm_limit_variance():
    limit = bm_limit_variance(1.0 / 6.0, 3)
    assert limit.value == pytest.approx(6.0 * sigma_sq(1).value, rel=1e-10)
    assert limit.value == pytest.approx(5.3912, abs=1e-3)


def test_off_critical_warns():
    with pytest.warns(ScalingWarning):
        bm_limit_variance(0.2, 3)


def test_exact_variance_approaches_limit():
    exact = exact_power_sum_variance(1.0 / 6.0, 3, 2 ** 14, 1.0)
    limit = bm_limit_variance(1.0 / 6.0, 3).value
    assert abs(exact / limit - 1.0) < 0.01


def test_exact_variance_r1_telescopes():
    n, hurst = 100, 1.0 / 6.0
    assert exact_power_sum_variance(hurst, 1, n, 0.37) == pytest.approx((37 / n) ** (2 * hurst), rel=1e-12)
    assert exact_power_sum_variance(hurst, 3, n, 0.0) == 0.0
    with pytest.raises(DomainError):
        exact_power_sum_variance(hurst, 2, n, 1.0)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("r", [1, 3])
def test_isserlis_enumeration_matches_oracle(n, r):
    hurst = 1.0 / 6.0
    assert brute_force_power_sum_variance(hurst, r, n, 1.0) == pytest.approx(
        exact_power_sum_variance(hurst, r, n, 1.0), abs=1e-12)


def test_isserlis_moment():
    cov = [[2.0, 0.5], [0.5, 1.0]]
    assert isserlis_moment(cov, [0, 0]) == 2.0
    assert isserlis_moment(cov, [0, 0, 0, 0]) == pytest.approx(3 * 4.0)
    assert isserlis_moment(cov, [0, 0, 1, 1]) == pytest.approx(2.0 + 2 * 0.25)
    assert isserlis_moment(cov, [0, 1, 1]) == 0.0


def test_gaussian_moments():
    assert [gaussian_moment(k) for k in range(7)] == [1, 0, 1, 0, 3, 0, 15]
    assert gaussian_moment(10) == 945


def test_c_nu():
    assert c_nu(trapezoid()) == pytest.approx(-math.sqrt(sigma_sq(1).value) / 12.0)
    with pytest.raises(InfiniteEll):
        c_nu(lebesgue())


def test_normalization_ratio_at_l1():
    assert normalization_ratio(1) == pytest.approx(6.0, rel=1e-10)


def test_limit_law_variance_constant_derivative():
    oracle = limit_law_variance(monomial(3), trapezoid(), 0.5)
    expected = 36.0 * (1.0 / 144.0) * bm_limit_variance(1.0 / 6.0, 3).value * 0.5
    assert oracle == pytest.approx(expected, rel=1e-12)
    series = limit_law_variance(monomial(3), trapezoid(), 0.5, normalization="series")
    assert series == pytest.approx(36.0 / 144.0 * sigma_sq(1).value * 0.5, rel=1e-12)
    with pytest.raises(ValueError):
        limit_law_variance(monomial(3), trapezoid(), 0.5, normalization="other")


def test_limit_law_variance_by_quadrature():
    # f''' = e^x and E[e^{2 B_s}] = exp(2 s^{2H})
    hurst = 1.0 / 6.0
    f = exponential(1.0, 1.0)
    t = 0.8
    integral, _ = quad(lambda s: math.exp(2.0 * s ** (2 * hurst)), 0.0, t)
    k = kv_constant(trapezoid(), 1)
    expected = k * k * bm_limit_variance(hurst, 3).value * integral
    assert limit_law_variance(f, trapezoid(), t) == pytest.approx(expected, rel=1e-4)


def test_constants_table():
    rows = {row["measure"]: row for row in constants_table([trapezoid(), simpson(), lebesgue()])}
    assert rows["trapezoid"]["ell"] == "1"
    assert rows["trapezoid"]["k"] == pytest.approx(-1.0 / 12.0)
    assert rows["simpson"]["hurst"] == pytest.approx(0.1)
    assert rows["lebesgue"]["ell"] == "Infinite"
    assert rows["lebesgue"]["c_nu"] is None


@pytest.mark.parametrize("r,n,t", [(3, 3, 1.0), (3, 2, 1.0), (5, 3, 1.0), (3, 4, 0.5)])
def test_endpoint_covariance_matches_isserlis(r, n, t):
    hurst = 1.0 / 6.0
    steps = int(n * t)
    scale = n ** (-2.0 * hurst)
    lags = range(steps)
    cov = [[scale * rho(hurst, i - j) for j in lags] for i in lags]
    brute = sum(isserlis_moment(cov, [i] * r + [j]) for i in lags for j in lags)
    assert power_sum_endpoint_covariance(hurst, r, n, t) == pytest.approx(brute, rel=1e-12)


def test_endpoint_correlation():
    hurst = 1.0 / 6.0
    # r = 1 is B itself
    assert power_sum_endpoint_correlation(hurst, 1, 64, 1.0) == pytest.approx(1.0, rel=1e-12)
    corr = power_sum_endpoint_correlation(hurst, 3, 4096, 1.0)
    expected = 3.0 * 4096 ** (-1.0 / 3.0) / math.sqrt(exact_power_sum_variance(hurst, 3, 4096, 1.0))
    assert corr == pytest.approx(expected, rel=1e-12)
    assert corr == pytest.approx(0.0805, abs=5e-4)
    assert power_sum_endpoint_correlation(hurst, 3, 64, 0.0) == 0.0
    # first-chaos weight falls like n^{-(r-1)H}
    assert power_sum_endpoint_correlation(0.1, 5, 4096, 1.0) < power_sum_endpoint_correlation(0.1, 5, 256, 1.0)
    with pytest.raises(DomainError):
        power_sum_endpoint_covariance(hurst, 2, 64, 1.0)
