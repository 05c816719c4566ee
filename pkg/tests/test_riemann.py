import math

import numpy as np
import pytest

from symfbm.constants import gaussian_moment
from symfbm.errors import DerivativeOrderError, DomainError, InfiniteEll
from symfbm.fbm import GridSpec, SamplePath, sample_paths
from symfbm.measure import beta_measure, ell_of, lebesgue, midpoint, simpson, trapezoid
from symfbm.riemann import (
    decompose,
    exponential,
    gauss_mollified,
    hermite_coeffs,
    hermite_poly,
    increment_power_sum,
    monomial,
    nu_symmetric_sum,
    parse_function,
    polynomial,
    raw_power_sum,
    residual,
    trig,
    weighted_power_sum,
)


def test_hermite_coefficients():
    assert hermite_coeffs(1).coefficients == (1,)
    assert hermite_coeffs(3).coefficients == (1, 3)
    assert hermite_coeffs(5).coefficients == (1, 10, 15)
    with pytest.raises(DomainError):
        hermite_coeffs(4)


def test_hermite_expansion_reproduces_power():
    x = np.linspace(-3, 3, 13)
    for r in (1, 3, 5, 7):
        np.testing.assert_allclose(hermite_coeffs(r).evaluate(x), x ** r, rtol=1e-12, atol=1e-9)


def test_hermite_poly():
    assert hermite_poly(0, 2.0) == 1.0
    assert hermite_poly(2, 2.0) == 3.0
    assert hermite_poly(3, 2.0) == 2.0


def test_function_families():
    f = polynomial([1.0, 0.0, 2.0])
    assert f.degree == 2
    assert f.vanishes(3)
    assert not f.vanishes(2)
    assert f.constant_derivative(2) == 4.0
    assert f.constant_derivative(5) == 0.0
    assert f.constant_derivative(1) is None
    assert f.derivative(1, 3.0) == 12.0

    s = trig(2.0, 3.0, 0.0)
    assert s.derivative(1, 0.0) == pytest.approx(6.0)
    assert s.derivative(2, 0.5) == pytest.approx(-18.0 * math.sin(1.5))
    assert s.constant_derivative(3) is None

    g = gauss_mollified(1.0)
    assert g.derivative(1, 0.7) == pytest.approx(-0.7 * math.exp(-0.245))

    e = exponential(2.0, 0.5)
    assert e.derivative(3, 1.0) == pytest.approx(2.0 * 0.125 * math.exp(0.5))

    with pytest.raises(ValueError):
        gauss_mollified(0.5)


def test_declared_derivative_order():
    f = monomial(3, max_derivative_order=2)
    with pytest.raises(DerivativeOrderError):
        f.derivative(3, 0.0)
    path = SamplePath([0.0, 0.5, 0.2], n=2)
    with pytest.raises(DerivativeOrderError):
        decompose(path, f, trapezoid(), 1.0)


def test_parse_function():
    assert parse_function(None, ell=1) == monomial(3)
    assert parse_function(None, ell=2) == monomial(5)
    assert parse_function({"kind": "trig", "b": 2.0}).params == (1.0, 2.0, 0.0)
    assert parse_function({"kind": "polynomial", "coefficients": [0, 1]}).degree == 1
    with pytest.raises(ValueError):
        parse_function({"kind": "spline"})


def test_hand_built_path():
    path = SamplePath([0.0, 1.0, 3.0], n=1)
    f = monomial(3)
    assert nu_symmetric_sum(path, f, trapezoid(), 2.0) == pytest.approx(31.5)
    dec = decompose(path, f, trapezoid(), 2.0)
    assert dec.increment == pytest.approx(27.0)
    assert dec.error == pytest.approx(-4.5)
    assert dec.phi[1] == pytest.approx(-4.5)
    assert dec.phi[2] == 0.0
    assert dec.residual == pytest.approx(0.0, abs=1e-12)


def test_power_sums():
    path = SamplePath([0.0, 1.0, 3.0, 2.0], n=1)
    assert raw_power_sum(path, 1, 3.0) == pytest.approx(2.0)
    assert raw_power_sum(path, 3, 3.0) == pytest.approx(1.0 + 8.0 - 1.0)
    assert raw_power_sum(path, 3, 1.5) == pytest.approx(1.0)
    assert increment_power_sum(path, 2, 3.0) == pytest.approx(6.0)
    with pytest.raises(DomainError):
        raw_power_sum(path, 2, 1.0)
    with pytest.raises(DomainError):
        weighted_power_sum(path, monomial(3), 0, trapezoid(), 1.0)


def test_empty_sum_at_time_zero():
    path = SamplePath([0.0, 1.0], n=1)
    assert nu_symmetric_sum(path, monomial(3), trapezoid(), 0.0) == 0.0
    assert raw_power_sum(path, 3, 0.0) == 0.0


@pytest.mark.parametrize("measure", [trapezoid(), simpson(), midpoint(), beta_measure(2)])
@pytest.mark.parametrize("t", [0.3, 1.0])
def test_chain_rule_exact_up_to_degree_2l(measure, t):
    ell = int(ell_of(measure))
    batch = sample_paths(GridSpec(1.0 / (4 * ell + 2), 256), 100, seed=77)
    for degree in range(1, 2 * ell + 1):
        f = monomial(degree)
        b = batch.values[:, batch.steps(t)]
        err = np.asarray(f(b)) - nu_symmetric_sum(batch, f, measure, t)
        assert np.all(np.abs(err) <= 1e-9 * (1.0 + np.abs(f(b))))


def test_decomposition_identity_on_batch():
    batch = sample_paths(GridSpec(1.0 / 6.0, 128), 50, seed=8)
    f = trig()
    dec = decompose(batch, f, trapezoid(), 0.6)
    total = dec.nu_sum + dec.phi[1] + dec.phi[2] + dec.residual
    np.testing.assert_allclose(total, dec.increment, rtol=0, atol=1e-12)
    assert np.asarray(residual(batch, f, trapezoid(), 0.6)).shape == (50,)


def test_batch_matches_single_paths():
    batch = sample_paths(GridSpec(1.0 / 10.0, 64), 5, seed=4)
    f = exponential(1.0, 0.3)
    whole = decompose(batch, f, simpson(), 1.0)
    for row in range(5):
        single = decompose(batch[row], f, simpson(), 1.0)
        assert single.error == pytest.approx(whole.error[row], rel=1e-12, abs=1e-14)
        assert single.phi[3] == pytest.approx(whole.phi[3][row], rel=1e-12, abs=1e-14)


def test_cubic_kills_higher_phi():
    batch = sample_paths(GridSpec(1.0 / 6.0, 64), 20, seed=1)
    dec = decompose(batch, monomial(3), trapezoid(), 1.0)
    assert np.all(dec.phi[2] == 0.0)
    np.testing.assert_allclose(dec.residual, 0.0, atol=1e-12)


def test_infinite_ell_has_no_decomposition():
    path = SamplePath([0.0, 0.3, 0.1], n=2)
    with pytest.raises(InfiniteEll):
        decompose(path, monomial(3), lebesgue(), 1.0)


@pytest.fixture(scope="module")
def normals():
    return np.random.default_rng(2024).standard_normal(200_000)


def test_hermite_orthogonality(normals):
    for p in range(5):
        hp = hermite_poly(p, normals)
        for q in range(p, 5):
            prod = hp * hermite_poly(q, normals)
            se = prod.std(ddof=1) / math.sqrt(prod.size)
            target = math.factorial(p) if p == q else 0.0
            assert abs(prod.mean() - target) <= 5 * se


def test_gaussian_moments(normals):
    for k in range(1, 9):
        powers = normals ** k
        se = powers.std(ddof=1) / math.sqrt(powers.size)
        assert abs(powers.mean() - gaussian_moment(k)) <= 5 * se
    assert [gaussian_moment(k) for k in (1, 3, 5)] == [0, 0, 0]
    assert [gaussian_moment(k) for k in (2, 4, 6, 8)] == [1, 3, 15, 105]


def test_hand_built_path_going_down():
    path = SamplePath([0.0, 1.0, -1.0], n=1)
    assert nu_symmetric_sum(path, monomial(3), trapezoid(), 2.0) == pytest.approx(-4.5)
    assert raw_power_sum(path, 3, 2.0) == pytest.approx(-7.0)


def test_weighted_power_sum_single_step():
    path = SamplePath([0.0, 2.0], n=1)
    f = monomial(3)
    # f'''(1) * 2^3
    assert weighted_power_sum(path, f, 1, trapezoid(), 1.0, include_weight=False) == pytest.approx(48.0)
    assert weighted_power_sum(path, f, 1, trapezoid(), 1.0) == pytest.approx(-4.0)
