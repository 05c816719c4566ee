"""
Discrete functionals of a sampled path.

Every functional takes either a single path (SamplePath, or one row of a
PathBatch) or a whole PathBatch and reduces along the grid axis, so the same
call returns a float or one value per path. Sums run over j = 0..floor(nt)-1.
"""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DerivativeOrderError, DomainError, InfiniteEll
from .measure import ell_of, integrate, kv_constant

log = logging.getLogger(__name__)

DEFAULT_MAX_ORDER = 64
FUNCTION_KINDS = ("polynomial", "trig", "gauss", "exponential")


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def hermite_poly(q, x):
    """H_q(x) via H_{q+1} = x H_q - q H_{q-1}, H_0 = 1, H_1 = x."""
    if q < 0:
        raise DomainError(f"Hermite order must be >= 0, got {q}")
    x = np.asarray(x, dtype=float)
    prev, cur = np.ones_like(x), x.copy()
    if q == 0:
        return _scalar(prev)
    for k in range(1, q):
        prev, cur = cur, x * cur - k * prev
    return _scalar(cur)


@dataclass(frozen=True)
class HermiteExpansion:
    """x^r = sum_u C_{r,u} H_{r-2u}(x), u = 0..floor(r/2)."""
    r: int
    coefficients: tuple

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for u, c in enumerate(self.coefficients):
            total = total + c * np.asarray(hermite_poly(self.r - 2 * u, x))
        return _scalar(total)

    def closed_form(self):
        r = self.r
        return tuple(math.factorial(r) // (math.factorial(u) * math.factorial(r - 2 * u) * 2 ** u)
                     for u in range(r // 2 + 1))


def hermite_coeffs(r):
    """
    Hermite coefficients of x^r for odd r.

    Built by multiplying H_0 by x r times, using x H_q = H_{q+1} + q H_{q-1},
    then checked against r! / (u! (r-2u)! 2^u).
    """
    if r < 1 or r % 2 == 0:
        raise DomainError(f"Hermite expansion is defined here for odd r >= 1, got {r}")
    coeffs = {0: 1}
    for _ in range(r):
        nxt = defaultdict(int)
        for q, c in coeffs.items():
            nxt[q + 1] += c
            if q:
                nxt[q - 1] += q * c
        coeffs = nxt
    expansion = HermiteExpansion(r, tuple(coeffs.get(r - 2 * u, 0) for u in range(r // 2 + 1)))
    if expansion.coefficients != expansion.closed_form():
        raise RuntimeError(f"Hermite recursion disagrees with closed form for r={r}")
    return expansion


@dataclass(frozen=True)
class FunctionFamily:
    """
    A test function f with exact derivatives up to ``max_derivative_order``.

    Kinds and their ``params``:
        polynomial   (c_0, c_1, ..., c_d)
        trig         (a, b, c)        a sin(b x + c)
        gauss        (sigma,)         exp(-x^2 / (2 sigma^2)), sigma >= 1
        exponential  (a, b)           a exp(b x)
    """
    kind: str
    params: tuple
    max_derivative_order: int = DEFAULT_MAX_ORDER

    def __post_init__(self):
        if self.kind not in FUNCTION_KINDS:
            raise ValueError(f"Unknown function kind '{self.kind}'. Use one of {FUNCTION_KINDS}.")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind == "gauss" and self.params[0] < 1.0:
            raise ValueError(f"gauss kind needs sigma >= 1, got {self.params[0]}")
        if self.kind == "polynomial" and not self.params:
            raise ValueError("polynomial needs at least one coefficient")

    @property
    def degree(self):
        """Polynomial degree, or None for the transcendental kinds."""
        if self.kind != "polynomial":
            return None
        nonzero = [i for i, c in enumerate(self.params) if c != 0.0]
        return nonzero[-1] if nonzero else 0

    def vanishes(self, k):
        """True when f^{(k)} is identically zero."""
        degree = self.degree
        if degree is None:
            return False
        return k > degree or not any(self.params)

    def constant_derivative(self, k):
        """The value of f^{(k)} when it is constant, else None."""
        degree = self.degree
        if degree is None or k < degree:
            return None
        return float(self.params[k] * math.factorial(k)) if k == degree else 0.0

    def derivative(self, k, x):
        if k > self.max_derivative_order:
            raise DerivativeOrderError(
                f"{self.describe()} supports derivatives up to order {self.max_derivative_order}, asked for {k}"
            )
        x = np.asarray(x, dtype=float)
        if self.kind == "polynomial":
            if k >= len(self.params):
                return _scalar(np.zeros_like(x))
            coeffs = npoly.polyder(np.array(self.params), k) if k else np.array(self.params)
            return _scalar(npoly.polyval(x, coeffs))
        if self.kind == "trig":
            a, b, c = self.params
            phase = b * x + c
            cycle = (np.sin, np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v))[k % 4]
            return _scalar(a * b ** k * cycle(phase))
        if self.kind == "gauss":
            (sigma,) = self.params
            y = x / sigma
            return _scalar((-1.0 / sigma) ** k * np.asarray(hermite_poly(k, y)) * np.exp(-0.5 * y * y))
        a, b = self.params
        return _scalar(a * b ** k * np.exp(b * x))

    def __call__(self, x):
        return self.derivative(0, x)

    def describe(self):
        if self.kind == "polynomial":
            return f"polynomial{list(self.params)}"
        return f"{self.kind}{list(self.params)}"

    def to_dict(self):
        return {"kind": self.kind, "params": list(self.params),
                "max_derivative_order": self.max_derivative_order}


def polynomial(coefficients, max_derivative_order=DEFAULT_MAX_ORDER):
    return FunctionFamily("polynomial", tuple(coefficients), max_derivative_order)


def monomial(degree, max_derivative_order=DEFAULT_MAX_ORDER):
    return polynomial([0.0] * degree + [1.0], max_derivative_order)


def trig(a=1.0, b=1.0, c=0.0, max_derivative_order=DEFAULT_MAX_ORDER):
    return FunctionFamily("trig", (a, b, c), max_derivative_order)


def gauss_mollified(sigma=1.0, max_derivative_order=DEFAULT_MAX_ORDER):
    return FunctionFamily("gauss", (sigma,), max_derivative_order)


def exponential(a=1.0, b=1.0, max_derivative_order=DEFAULT_MAX_ORDER):
    return FunctionFamily("exponential", (a, b), max_derivative_order)


def parse_function(spec, ell=1):
    """
    Builds a FunctionFamily from a config value. ``None`` gives the default
    x^{2l+1}, whose (2l+1)-th derivative is the constant (2l+1)!.
    """
    if spec is None:
        return monomial(2 * ell + 1)
    if isinstance(spec, FunctionFamily):
        return spec
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError(f"Function spec must be an object with a 'kind', got {spec!r}")
    kind = spec["kind"]
    order = int(spec.get("max_derivative_order", DEFAULT_MAX_ORDER))
    if kind == "polynomial":
        return polynomial(spec["coefficients"], order)
    if kind == "monomial":
        return monomial(int(spec["degree"]), order)
    if kind == "trig":
        return trig(spec.get("a", 1.0), spec.get("b", 1.0), spec.get("c", 0.0), order)
    if kind == "gauss":
        return gauss_mollified(spec.get("sigma", 1.0), order)
    if kind == "exponential":
        return exponential(spec.get("a", 1.0), spec.get("b", 1.0), order)
    raise ValueError(f"Unknown function kind '{kind}'")


def require_order(f, k):
    if k > f.max_derivative_order:
        raise DerivativeOrderError(
            f"{f.describe()} supports derivatives up to order {f.max_derivative_order}, needs {k}"
        )


def _segments(path, t):
    values = path.values
    k = path.steps(t)
    a = values[..., :k]
    b = values[..., 1:k + 1]
    return a, b, b - a


def endpoint(path, t):
    """B_{floor(nt)/n}."""
    return _scalar(path.values[..., path.steps(t)])


def nu_symmetric_sum(path, f, measure, t):
    """S_n^nu(f', t) = sum_j D_j int_0^1 f'(B_j + alpha D_j) nu(d alpha)."""
    require_order(f, 1)
    a, _, d = _segments(path, t)
    inner = integrate(measure, lambda alpha: f.derivative(1, a + alpha * d))
    return _scalar(np.sum(d * inner, axis=-1))


def weighted_power_sum(path, f, h, measure, t, include_weight=True):
    """
    sum_j f^{(2h+1)}((B_j + B_{j+1}) / 2) D_j^{2h+1}, times k_{nu,h} when
    ``include_weight`` is set.
    """
    if h < 1:
        raise DomainError(f"h must be >= 1, got {h}")
    order = 2 * h + 1
    require_order(f, order)
    a, b, d = _segments(path, t)
    total = np.sum(f.derivative(order, 0.5 * (a + b)) * d ** order, axis=-1)
    if include_weight:
        total = kv_constant(measure, h) * total
    return _scalar(total)


def raw_power_sum(path, r, t):
    """sum_j D_j^r for odd r."""
    if r < 1 or r % 2 == 0:
        raise DomainError(f"Power must be odd and >= 1, got {r}")
    _, _, d = _segments(path, t)
    return _scalar(np.sum(d ** r, axis=-1))


def increment_power_sum(path, p, t):
    """sum_j D_j^p for any p >= 1; used for the D^{4l+2} remainder diagnostic."""
    _, _, d = _segments(path, t)
    return _scalar(np.sum(d ** p, axis=-1))


@dataclass(frozen=True)
class Decomposition:
    """
    f(B_{floor(nt)/n}) - f(0) = nu_sum + sum_h phi[h] + residual.

    ``phi`` maps h = l..2l to the weighted sums; ``residual`` is defined by the
    identity, never by evaluating the Taylor remainder directly.
    """
    ell: int
    increment: object
    nu_sum: object
    phi: dict = field(default_factory=dict)
    residual: object = 0.0

    @property
    def error(self):
        """E_n = f(B) - f(0) - S_n^nu(f', t)."""
        return self.increment - self.nu_sum


def _finite_ell(measure):
    ell = ell_of(measure)
    if ell.is_infinite:
        raise InfiniteEll(f"l({measure.name}) is infinite; the Taylor decomposition has no phi terms.")
    return int(ell)


def decompose(path, f, measure, t):
    """Every term of the Taylor decomposition at time t, for a path or a batch."""
    ell = _finite_ell(measure)
    require_order(f, 4 * ell + 1)
    k = path.steps(t)
    increment = np.asarray(f(path.values[..., k])) - f(0.0)
    nu_sum = np.asarray(nu_symmetric_sum(path, f, measure, t))
    phi = {h: np.asarray(weighted_power_sum(path, f, h, measure, t, include_weight=True))
           for h in range(ell, 2 * ell + 1)}
    residual = increment - nu_sum
    for h in range(ell, 2 * ell + 1):
        residual = residual - phi[h]
    return Decomposition(
        ell=ell,
        increment=_scalar(increment),
        nu_sum=_scalar(nu_sum),
        phi={h: _scalar(v) for h, v in phi.items()},
        residual=_scalar(residual),
    )


def residual(path, f, measure, t):
    """R_n(t) = f(B) - f(0) - S_n^nu(f', t) - sum_{h=l}^{2l} Phi_n^h(t)."""
    return decompose(path, f, measure, t).residual
