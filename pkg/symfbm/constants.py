"""
Limit constants and exact variance oracles.

All rho-power series are truncated at an index J chosen from an explicit
majorant: for j >= 2, |rho(H, j)| <= |2H(2H-1)| (j-1)^{2H-2}, integrated
analytically over both tails and doubled.
"""
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss

from .errors import DomainError, InfiniteEll, ScalingWarning
from .fbm import grid_index, rho
from .measure import ell_of, kv_constant
from .riemann import hermite_coeffs

log = logging.getLogger(__name__)

SERIES_TOL = 1e-12
SAFETY_FACTOR = 2.0
MAX_TERMS = 10_000_000
CRITICAL_TOL = 1e-12
LIMIT_QUADRATURE_NODES = 64


@dataclass(frozen=True)
class SeriesValue:
    """A truncated infinite series: value, number of terms and a rigorous tail bound."""
    value: float
    terms_used: int
    tail_bound: float

    def to_dict(self):
        return {"value": self.value, "terms_used": self.terms_used, "tail_bound": self.tail_bound}


def critical_hurst(ell):
    return 1.0 / (4 * ell + 2)


def _tail_bound(hurst, q, terms):
    """Two-sided majorant of sum_{|j| > J} |rho(H, j)|^q, safety factor included."""
    p = q * (2.0 - 2.0 * hurst)
    c = abs(2.0 * hurst * (2.0 * hurst - 1.0))
    if terms < 2:
        return math.inf
    return 2.0 * SAFETY_FACTOR * c ** q * (terms - 1.0) ** (1.0 - p) / (p - 1.0)


def _terms_for(hurst, q, tol):
    p = q * (2.0 - 2.0 * hurst)
    c = abs(2.0 * hurst * (2.0 * hurst - 1.0))
    need = (2.0 * SAFETY_FACTOR * c ** q / ((p - 1.0) * tol)) ** (1.0 / (p - 1.0))
    terms = max(2, int(math.ceil(need)) + 2)
    if terms > MAX_TERMS:
        raise ValueError(f"Tolerance {tol} needs {terms} terms for q={q}, H={hurst}; above {MAX_TERMS}.")
    while _tail_bound(hurst, q, terms) >= tol:
        terms += 1
    return terms


def rho_power_series(hurst, q, tol=SERIES_TOL, terms=None):
    """
    sum_{j in Z} rho(H, j)^q.

    q = 1 telescopes to exactly 0 over the whole line and is returned
    analytically; its truncations converge far too slowly to sum.
    """
    if q < 1:
        raise DomainError(f"Power q must be >= 1, got {q}")
    if q == 1:
        return SeriesValue(0.0, 0, 0.0)
    if terms is None:
        terms = _terms_for(hurst, q, tol)
    lags = np.arange(1, terms + 1)
    partial = math.fsum(np.asarray(rho(hurst, lags)) ** q)
    return SeriesValue(1.0 + 2.0 * partial, terms, _tail_bound(hurst, q, terms))


def sigma_sq(ell, tol=SERIES_TOL, terms=None):
    """
    sigma_l^2 = 1 + 4^{-l} sum_{j>=1} ((j+1)^a + (j-1)^a - 2 j^a)^{2l+1}, a = 1/(2l+1).

    Every term is negative, so the value lies in (0, 1] and partial sums
    decrease in J.
    """
    if ell < 1:
        raise DomainError(f"l must be >= 1, got {ell}")
    hurst = critical_hurst(ell)
    q = 2 * ell + 1
    a = 1.0 / q
    if terms is None:
        terms = _terms_for(hurst, q, tol)
    j = np.arange(1, terms + 1, dtype=float)
    second = (j + 1.0) ** a + (j - 1.0) ** a - 2.0 * j ** a
    value = 1.0 + 4.0 ** (-ell) * math.fsum(second ** q)
    return SeriesValue(value, terms, _tail_bound(hurst, q, terms))


def c_nu(measure):
    """c_nu = k_{nu,l} sigma_l. Signed; only |c_nu| matters in law."""
    ell = ell_of(measure)
    if ell.is_infinite:
        raise InfiniteEll(f"l({measure.name}) is infinite; c_nu is undefined.")
    ell = int(ell)
    return kv_constant(measure, ell) * math.sqrt(sigma_sq(ell).value)


def gaussian_moment(k):
    """mu_k = E[Z^k] for standard normal Z: 0 for odd k, (k-1)!! for even k."""
    if k < 0:
        raise DomainError(f"Moment order must be >= 0, got {k}")
    if k % 2:
        return 0
    return math.prod(range(k - 1, 0, -2))


def _chaos_weights(r):
    """(q, C_{r,u}^2 q!) for q = r - 2u."""
    expansion = hermite_coeffs(r)
    return [(r - 2 * u, c * c * math.factorial(r - 2 * u)) for u, c in enumerate(expansion.coefficients)]


def exact_power_sum_variance(hurst, r, n, t):
    """
    Var(sum_{j < floor(nt)} D_j^r), exact.

    Uses E[X^r Y^r] = sum_u C_{r,u}^2 (r-2u)! rho^{r-2u} for standard Gaussians
    with correlation rho, and counts lags: sum_{i,j<N} g(i-j) = N g(0) + 2 sum_d (N-d) g(d).
    """
    if r < 1 or r % 2 == 0:
        raise DomainError(f"Power must be odd and >= 1, got {r}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    steps = grid_index(n, t)
    if steps == 0:
        return 0.0
    lags = np.arange(steps)
    corr = np.atleast_1d(rho(hurst, lags))
    g = np.zeros(steps)
    for q, weight in _chaos_weights(r):
        g = g + weight * corr ** q
    counts = 2.0 * (steps - lags[1:])
    total = math.fsum(np.concatenate([[steps * g[0]], counts * g[1:]]))
    return n ** (-2.0 * r * hurst) * total


def power_sum_endpoint_covariance(hurst, r, n, t):
    """
    Cov(sum_{j < floor(nt)} D_j^r, B_{floor(nt)/n}), exact.

    Stein's lemma gives E[X^r Y] = r E[X^{r-1}] E[XY], so the sum collapses to
    r (r-2)!! n^{-(r-1)H} Var(B_{floor(nt)/n}). Only the first chaos of x^r
    correlates with B, and its weight vanishes as n grows.
    """
    if r < 1 or r % 2 == 0:
        raise DomainError(f"Power must be odd and >= 1, got {r}")
    steps = grid_index(n, t)
    return r * gaussian_moment(r - 1) * n ** (-(r - 1) * hurst) * (steps / n) ** (2.0 * hurst)


def power_sum_endpoint_correlation(hurst, r, n, t):
    """Finite-n corr(sum_j D_j^r, B_{floor(nt)/n}); 0 on an empty grid."""
    steps = grid_index(n, t)
    if steps == 0:
        return 0.0
    variance = exact_power_sum_variance(hurst, r, n, t)
    return power_sum_endpoint_covariance(hurst, r, n, t) / math.sqrt(variance * (steps / n) ** (2.0 * hurst))


def isserlis_moment(cov, indices):
    """E[prod_k X_{indices[k]}] for a centered Gaussian vector, by summing over all pairings."""
    indices = list(indices)
    if not indices:
        return 1.0
    if len(indices) % 2:
        return 0.0
    first, rest = indices[0], indices[1:]
    total = 0.0
    for k, other in enumerate(rest):
        total += cov[first][other] * isserlis_moment(cov, rest[:k] + rest[k + 1:])
    return total


def brute_force_power_sum_variance(hurst, r, n, t):
    """Same quantity as exact_power_sum_variance, by Isserlis pairing enumeration. Small N only."""
    steps = grid_index(n, t)
    lags = np.arange(steps)
    scale = n ** (-2.0 * hurst)
    cov = [[scale * rho(hurst, i - j) for j in lags] for i in lags]
    second = 0.0
    first = 0.0
    for i in range(steps):
        first += isserlis_moment(cov, [i] * r)
        for j in range(steps):
            second += isserlis_moment(cov, [i] * r + [j] * r)
    return second - first * first


def bm_limit_variance(hurst, r, tol=SERIES_TOL):
    """
    Per-unit-time limit of Var(sum_j D_j^r) at 2rH = 1:
    sum over chaos orders q = r - 2u >= 3 of C_{r,u}^2 q! sum_Z rho^q.

    Chaos order 1 contributes nothing in the limit and is dropped analytically.
    """
    if r < 1 or r % 2 == 0:
        raise DomainError(f"Power must be odd and >= 1, got {r}")
    if abs(2.0 * r * hurst - 1.0) > CRITICAL_TOL:
        warnings.warn(f"2rH = {2 * r * hurst:.6g} != 1: the n-scaling only balances at H = 1/(2r).",
                      ScalingWarning, stacklevel=2)
    orders = [(q, w) for q, w in _chaos_weights(r) if q >= 3]
    if not orders:
        return SeriesValue(0.0, 0, 0.0)
    parts, tails, terms = [], [], 0
    for q, weight in orders:
        series = rho_power_series(hurst, q, tol / (weight * len(orders)))
        parts.append(weight * series.value)
        tails.append(weight * series.tail_bound)
        terms = max(terms, series.terms_used)
    return SeriesValue(math.fsum(parts), terms, math.fsum(tails))


def normalization_ratio(ell):
    """bm_limit_variance / sigma_l^2: (2l+1)! at l = 1, plus lower chaos terms beyond."""
    r = 2 * ell + 1
    return bm_limit_variance(critical_hurst(ell), r).value / sigma_sq(ell).value


def limit_law_variance(f, measure, t, normalization="oracle"):
    """
    Variance of c int_0^t f^{(2l+1)}(B_s) dW_s with W independent of B:
    k_{nu,l}^2 sigma^2 int_0^t E[f^{(2l+1)}(B_s)^2] ds.

    ``normalization="series"`` uses sigma_l^2 from the closed series,
    ``"oracle"`` the Breuer-Major limit variance of sum D^{2l+1}.
    """
    ell = ell_of(measure)
    if ell.is_infinite:
        raise InfiniteEll(f"l({measure.name}) is infinite.")
    ell = int(ell)
    hurst = critical_hurst(ell)
    order = 2 * ell + 1
    if normalization == "series":
        sigma2 = sigma_sq(ell).value
    elif normalization == "oracle":
        sigma2 = bm_limit_variance(hurst, order).value
    else:
        raise ValueError(f"Unknown normalization '{normalization}'")
    k = kv_constant(measure, ell)
    constant = f.constant_derivative(order)
    if constant is not None:
        return (constant * k) ** 2 * sigma2 * t
    if t <= 0:
        return 0.0
    x, wx = hermegauss(LIMIT_QUADRATURE_NODES)
    wx = wx / math.sqrt(2.0 * math.pi)
    s, ws = leggauss(LIMIT_QUADRATURE_NODES)
    s = 0.5 * t * (s + 1.0)
    ws = 0.5 * t * ws
    inner = np.array([np.dot(wx, np.asarray(f.derivative(order, si ** hurst * x)) ** 2) for si in s])
    return k * k * sigma2 * float(np.dot(ws, inner))


def constants_table(measures):
    """One row per measure with every constant the limit theorem needs."""
    rows = []
    for measure in measures:
        ell = ell_of(measure)
        row = {"measure": measure.name, "ell": str(ell)}
        if ell.is_infinite:
            row.update({"hurst": None, "k": None, "sigma_sq": None, "sigma_sq_tail": None,
                        "bm_limit_variance": None, "bm_limit_tail": None, "ratio": None, "c_nu": None})
            rows.append(row)
            continue
        ell = int(ell)
        hurst = critical_hurst(ell)
        sig = sigma_sq(ell)
        limit = bm_limit_variance(hurst, 2 * ell + 1)
        k = kv_constant(measure, ell)
        row.update({
            "hurst": hurst,
            "k": k,
            "sigma_sq": sig.value,
            "sigma_sq_tail": sig.tail_bound,
            "bm_limit_variance": limit.value,
            "bm_limit_tail": limit.tail_bound,
            "ratio": limit.value / sig.value,
            "c_nu": k * math.sqrt(sig.value),
        })
        rows.append(row)
    return rows
