"""
Symmetric probability measures on [0, 1].

A measure is a finite list of atoms plus an optional density. Moments of the
atomic part are summed exactly (``math.fsum``); the density part goes through
a fixed 64-node Gauss-Legendre rule whose integrand is symmetrized as
0.5 * (g(a) + g(1 - a)) so that identities such as  int a dnu = 1/2  hold to
the last bit.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import beta as beta_function

from .errors import MassError, SymmetryViolation

log = logging.getLogger(__name__)

QUADRATURE_NODES = 64
SYMMETRY_TOL = 1e-12
MASS_TOL = 1e-12
DENSITY_MASS_TOL = 1e-10
ELL_TOL = 1e-12
ELL_MAX = 8

_raw_nodes, _raw_weights = leggauss(QUADRATURE_NODES)
NODES = 0.5 * (_raw_nodes + 1.0)
WEIGHTS = 0.5 * _raw_weights

INFINITE = math.inf

BUILTIN_NAMES = ("trapezoid", "simpson", "midpoint", "lebesgue")


def _uniform_density(alpha):
    return np.ones_like(np.asarray(alpha, dtype=float))


class BetaDensity:
    """Density of Beta(a, a) on [0, 1]. A plain class so worker processes can unpickle it."""

    def __init__(self, a):
        self.a = int(a)
        self.norm = 1.0 / beta_function(self.a, self.a)

    def __call__(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        return self.norm * (alpha * (1.0 - alpha)) ** (self.a - 1)

    def __repr__(self):
        return f"BetaDensity({self.a})"


@dataclass(frozen=True)
class SymmetricMeasure:
    """
    A symmetric probability measure nu on [0, 1].

    Atoms are stored sorted by location, so two measures built from permuted
    atom lists compare (and compute) identically.

    Args:
        atoms: (location, weight) pairs.
        density: Optional vectorized non-negative function on [0, 1].
        density_mass: Declared total mass of the density part.
        exact_moment_rule: ``"lebesgue"`` switches moments to their analytic values.
        name: Display string.
    """
    atoms: tuple = ()
    density: Optional[Callable] = field(default=None, compare=False)
    density_mass: float = 0.0
    exact_moment_rule: Optional[str] = None
    name: str = "custom"

    def __post_init__(self):
        atoms = tuple(sorted((float(loc), float(w)) for loc, w in self.atoms))
        object.__setattr__(self, "atoms", atoms)

        for loc, weight in atoms:
            if not 0.0 <= loc <= 1.0:
                raise ValueError(f"Atom location {loc} lies outside [0, 1].")
            if not weight > 0.0:
                raise ValueError(f"Atom weight {weight} at {loc} must be positive.")

        # Sorted atoms pair up outside-in: the k-th from the left mirrors the k-th from the right.
        for k in range((len(atoms) + 1) // 2):
            (loc_a, w_a), (loc_b, w_b) = atoms[k], atoms[-1 - k]
            if abs(loc_a + loc_b - 1.0) > SYMMETRY_TOL or abs(w_a - w_b) > SYMMETRY_TOL:
                raise SymmetryViolation(
                    f"Atom at {loc_a} (weight {w_a}) has no mirror at {1.0 - loc_a} with equal weight."
                )

        if self.density is not None:
            values = np.asarray(self.density(NODES), dtype=float)
            mirrored = np.asarray(self.density(1.0 - NODES), dtype=float)
            if np.any(values < 0.0):
                raise ValueError("Density must be non-negative on [0, 1].")
            if np.max(np.abs(values - mirrored)) > SYMMETRY_TOL:
                raise SymmetryViolation("Density is not symmetric under alpha -> 1 - alpha.")
            quadrature_mass = float(np.dot(WEIGHTS, values))
            if abs(quadrature_mass - self.density_mass) > DENSITY_MASS_TOL * max(1.0, self.density_mass):
                raise MassError(
                    f"Density integrates to {quadrature_mass!r}, declared mass is {self.density_mass!r}."
                )
        elif self.density_mass != 0.0:
            raise MassError("density_mass given without a density.")

        total = math.fsum([w for _, w in atoms] + [self.density_mass])
        if abs(total - 1.0) > MASS_TOL:
            raise MassError(f"Total mass is {total!r}, expected 1.")

    @property
    def has_density(self):
        return self.density is not None

    def to_dict(self):
        out = {"name": self.name, "atoms": [[loc, w] for loc, w in self.atoms]}
        if self.has_density:
            out["density"] = repr(self.density)
            out["density_mass"] = self.density_mass
        return out


@dataclass(frozen=True)
class EllResult:
    """Outcome of the l(nu) search. ``value`` is an int, or INFINITE past the cap."""
    value: float
    cap: int

    @property
    def is_infinite(self):
        return math.isinf(self.value)

    def __int__(self):
        if self.is_infinite:
            raise OverflowError("l(nu) is infinite.")
        return int(self.value)

    def __str__(self):
        return "Infinite" if self.is_infinite else str(int(self.value))


def make_measure(atoms, density=None, density_mass=None, exact_moment_rule=None, name="custom"):
    """
    Builds and validates a SymmetricMeasure.

    When a density is given without ``density_mass``, the mass left over by the
    atoms is assumed.
    """
    atoms = tuple((loc, w) for loc, w in atoms)
    if density is not None and density_mass is None:
        density_mass = 1.0 - math.fsum(w for _, w in atoms)
    return SymmetricMeasure(
        atoms=atoms,
        density=density,
        density_mass=0.0 if density_mass is None else float(density_mass),
        exact_moment_rule=exact_moment_rule,
        name=name,
    )


def trapezoid():
    return make_measure([(0.0, 0.5), (1.0, 0.5)], name="trapezoid")


def simpson():
    return make_measure([(0.0, 1.0 / 6.0), (0.5, 2.0 / 3.0), (1.0, 1.0 / 6.0)], name="simpson")


def midpoint():
    return make_measure([(0.5, 1.0)], name="midpoint")


def lebesgue():
    return make_measure([], density=_uniform_density, density_mass=1.0,
                        exact_moment_rule="lebesgue", name="lebesgue")


def beta_measure(a):
    """Symmetric Beta(a, a) density; integer a >= 1 keeps the 64-node rule exact."""
    if int(a) != a or a < 1:
        raise ValueError(f"Beta measure needs an integer a >= 1, got {a}")
    return make_measure([], density=BetaDensity(a), density_mass=1.0, name=f"beta({int(a)})")


_BUILTINS = {
    "trapezoid": trapezoid,
    "simpson": simpson,
    "midpoint": midpoint,
    "lebesgue": lebesgue,
}


def parse_measure(spec):
    """
    Turns a config value into a measure: a keyword, an atom list
    ``[[loc, weight], ...]``, ``{"beta": a}`` or ``{"atoms": [...], "name": ...}``.
    """
    if isinstance(spec, SymmetricMeasure):
        return spec
    if isinstance(spec, str):
        key = spec.strip().lower()
        if key not in _BUILTINS:
            raise ValueError(f"Unknown measure '{spec}'. Known: {', '.join(BUILTIN_NAMES)}")
        return _BUILTINS[key]()
    if isinstance(spec, dict):
        if "beta" in spec:
            return beta_measure(spec["beta"])
        if "atoms" in spec:
            return make_measure([tuple(a) for a in spec["atoms"]], name=spec.get("name", "custom"))
        raise ValueError(f"Cannot build a measure from {spec!r}")
    if isinstance(spec, (list, tuple)):
        pairs = []
        for item in spec:
            if len(item) != 2:
                raise ValueError(f"Atom {item!r} must be a [location, weight] pair.")
            pairs.append((float(item[0]), float(item[1])))
        return make_measure(pairs)
    raise ValueError(f"Cannot build a measure from {spec!r}")


def integrate(measure, integrand):
    """
    int_0^1 g(alpha) nu(d alpha) for a callable g that may return arrays.

    Atoms contribute w * g(loc) in location order; the density part uses the
    symmetrized Gauss-Legendre rule.
    """
    total = 0.0
    for loc, weight in measure.atoms:
        total = total + weight * integrand(loc)
    if measure.density is not None:
        dens = np.asarray(measure.density(NODES), dtype=float)
        for node, w, d in zip(NODES, WEIGHTS, dens):
            if d == 0.0:
                continue
            total = total + (w * d) * 0.5 * (integrand(node) + integrand(1.0 - node))
    return total


def _density_moment(measure, g):
    dens = np.asarray(measure.density(NODES), dtype=float)
    sym = 0.5 * (g(NODES) + g(1.0 - NODES))
    return float(np.dot(WEIGHTS * dens, sym))


def moment(measure, k):
    """int_0^1 alpha^k nu(d alpha)."""
    if k < 0 or int(k) != k:
        raise ValueError(f"Moment order must be a non-negative integer, got {k}")
    k = int(k)
    if measure.exact_moment_rule == "lebesgue":
        return 1.0 / (k + 1)
    parts = [w * loc ** k for loc, w in measure.atoms]
    if measure.density is not None:
        parts.append(_density_moment(measure, lambda a: a ** k))
    return math.fsum(parts)


def central_moment(measure, k):
    """int_0^1 (alpha - 1/2)^k nu(d alpha)."""
    if k < 0 or int(k) != k:
        raise ValueError(f"Moment order must be a non-negative integer, got {k}")
    k = int(k)
    if measure.exact_moment_rule == "lebesgue":
        return 0.0 if k % 2 else 1.0 / ((k + 1) * 2.0 ** k)
    parts = [w * (loc - 0.5) ** k for loc, w in measure.atoms]
    if measure.density is not None:
        parts.append(_density_moment(measure, lambda a: (a - 0.5) ** k))
    return math.fsum(parts)


def ell_of(measure, ell_max=ELL_MAX, tol=ELL_TOL):
    """
    Largest l <= ell_max such that the even moments match Lebesgue for j < l.

    Returns an EllResult whose value is INFINITE when every check up to
    j = ell_max - 1 passes.
    """
    if ell_max < 1:
        raise ValueError(f"ell_max must be >= 1, got {ell_max}")
    for j in range(ell_max):
        if abs(moment(measure, 2 * j) - 1.0 / (2 * j + 1)) > tol:
            log.debug("l(%s) = %d: moment %d misses 1/%d", measure.name, j, 2 * j, 2 * j + 1)
            return EllResult(j, ell_max)
    return EllResult(INFINITE, ell_max)


def kv_constant(measure, h):
    """k_{nu,h} = [1/((2h+1) 4^h) - int (alpha - 1/2)^{2h} dnu] / (2h)!"""
    if h < 1 or int(h) != h:
        raise ValueError(f"h must be a positive integer, got {h}")
    h = int(h)
    lebesgue_part = 1.0 / ((2 * h + 1) * 4.0 ** h)
    return (lebesgue_part - central_moment(measure, 2 * h)) / math.factorial(2 * h)
