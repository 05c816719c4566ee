"""
Fractional Brownian motion on uniform grids.

Two exact samplers share one counter-based noise source: path ``p`` of master
seed ``s`` draws its normals from ``Philox(SeedSequence(s, spawn_key=(p,)))``,
so a path never depends on how many other paths are generated alongside it or
on which worker generates it.

    circulant: Davies-Harte embedding of the fGn correlation, O(N log N) per path
    cholesky:  dense Toeplitz factor, O(N^3) once, capped at N = 8192 steps

Times enter only through the grid index floor(n t), computed exactly from the
decimal representation of t.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.linalg import cholesky, toeplitz

from .errors import DomainError, EmbeddingError, SizeError

log = logging.getLogger(__name__)

CHOLESKY_CAP = 8192
EMBEDDING_TOL = 1e-10
METHODS = ("circulant", "cholesky")
INNER_PRODUCT_KINDS = ("inc_ind", "inc_inc", "inc_tilde")


def grid_index(n, t):
    """floor(n t) without floating-point drift (0.29 * 100 gives 29, not 28)."""
    if t < 0:
        raise DomainError(f"Time must be non-negative, got {t}")
    return math.floor(n * Fraction(repr(float(t))))


def covariance(hurst, s, t):
    """R(s, t) = (s^{2H} + t^{2H} - |t - s|^{2H}) / 2. Vectorized over s and t."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise DomainError("Covariance is defined for non-negative times only.")
    h2 = 2.0 * hurst
    out = 0.5 * (s ** h2 + t ** h2 - np.abs(t - s) ** h2)
    return float(out) if out.ndim == 0 else out


def rho(hurst, j):
    """Lag-j correlation of unit-variance fBm increments. Even in j; rho(H, 0) = 1."""
    j = np.abs(np.asarray(j, dtype=float))
    h2 = 2.0 * hurst
    out = 0.5 * ((j + 1.0) ** h2 + np.abs(j - 1.0) ** h2 - 2.0 * j ** h2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid j/n, j = 0..floor(nT), for fBm with Hurst parameter H < 1/2."""
    hurst: float
    n: int
    horizon: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.hurst < 0.5:
            raise DomainError(f"Hurst parameter must lie in (0, 1/2), got {self.hurst}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not self.horizon > 0:
            raise ValueError(f"Horizon must be positive, got {self.horizon}")
        if self.steps < 1:
            raise ValueError(f"Grid n={self.n}, T={self.horizon} has fewer than two points.")

    @classmethod
    def critical(cls, ell, n, horizon=1.0):
        """Grid at the critical Hurst parameter H = 1/(4l + 2)."""
        return cls(hurst=1.0 / (4 * ell + 2), n=n, horizon=horizon)

    @property
    def steps(self):
        return grid_index(self.n, self.horizon)

    @property
    def points(self):
        return self.steps + 1

    @property
    def times(self):
        return np.arange(self.points) / self.n

    def index(self, t):
        if t > self.horizon:
            raise IndexError(f"Time {t} lies beyond the horizon {self.horizon}.")
        return grid_index(self.n, t)

    def to_dict(self):
        return {"hurst": self.hurst, "n": self.n, "horizon": self.horizon}


def _steps_in(values, n, t):
    k = grid_index(n, t)
    if k > values.shape[-1] - 1:
        raise IndexError(f"floor(n t) = {k} exceeds the {values.shape[-1] - 1} steps of the path.")
    return k


@dataclass(frozen=True)
class SamplePath:
    """One path B_{j/n}, j = 0..N. Also the way to hand-build small test paths."""
    values: np.ndarray
    n: int = 1

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("A path needs at least two grid values.")
        object.__setattr__(self, "values", values)

    def steps(self, t):
        return _steps_in(self.values, self.n, t)


@dataclass(frozen=True)
class PathBatch:
    """
    A batch of sampled paths, one row per path.

    Row ``r`` holds path index ``first + r``; ``values[:, 0]`` is zero.
    """
    grid: GridSpec
    values: np.ndarray = field(repr=False)
    seed: int = 0
    method: str = "circulant"
    first: int = 0

    @property
    def n(self):
        return self.grid.n

    @property
    def count(self):
        return self.values.shape[0]

    @property
    def path_indices(self):
        return range(self.first, self.first + self.count)

    def steps(self, t):
        return _steps_in(self.values, self.n, t)

    def increments(self):
        return np.diff(self.values, axis=1)

    def __len__(self):
        return self.count

    def __getitem__(self, row):
        return SamplePath(self.values[row], self.n)

    def to_csv(self, stream):
        """Writes ``path,j,t,value`` rows, one per grid point."""
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["path", "j", "t", "value"])
        times = self.grid.times
        for row, p in enumerate(self.path_indices):
            for j in range(self.grid.points):
                writer.writerow([p, j, repr(float(times[j])), repr(float(self.values[row, j]))])


def path_generator(seed, path_index):
    """Counter-based generator for one path: depends on (seed, path_index) only."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(path_index),))))


class CirculantSampler:
    """
    Davies-Harte sampler for N unit-variance fGn increments.

    The first row [rho(0), ..., rho(N-1), rho(N), rho(N-1), ..., rho(1)] is
    diagonalized by one FFT. Eigenvalues down to -1e-10 * max are clamped to
    zero; anything more negative is an EmbeddingError.
    """

    def __init__(self, hurst, steps):
        self.hurst = hurst
        self.steps = steps
        lags = rho(hurst, np.arange(steps + 1))
        lags = np.atleast_1d(lags)
        row = np.concatenate([lags, lags[-2:0:-1]])
        eigenvalues = np.fft.fft(row).real
        floor = -EMBEDDING_TOL * eigenvalues.max()
        if eigenvalues.min() < floor:
            raise EmbeddingError(
                f"Circulant embedding failed for H={hurst}, N={steps}: eigenvalue {eigenvalues.min():.3e}"
            )
        self.size = row.size
        self.scale = np.sqrt(np.maximum(eigenvalues, 0.0) / self.size)

    def increments(self, rng):
        z = rng.standard_normal(2 * self.size)
        w = self.scale * (z[: self.size] + 1j * z[self.size:])
        return np.fft.fft(w).real[: self.steps]


class CholeskySampler:
    """Reference sampler: lower Cholesky factor of the N x N fGn Toeplitz matrix."""

    def __init__(self, hurst, steps):
        if steps > CHOLESKY_CAP:
            raise SizeError(f"Cholesky sampler is capped at {CHOLESKY_CAP} steps, got {steps}")
        self.hurst = hurst
        self.steps = steps
        cov = toeplitz(np.atleast_1d(rho(hurst, np.arange(steps))))
        self.factor = cholesky(cov, lower=True)

    def increments(self, rng):
        return self.factor @ rng.standard_normal(self.steps)


@lru_cache(maxsize=16)
def get_sampler(method, hurst, steps):
    if method == "circulant":
        return CirculantSampler(hurst, steps)
    if method == "cholesky":
        return CholeskySampler(hurst, steps)
    raise ValueError(f"Unknown sampling method '{method}'. Use one of {METHODS}.")


def sample_paths(grid, count, seed, method="circulant", first=0):
    """
    Samples paths ``first .. first + count - 1`` of the master seed.

    Returns:
        PathBatch: read-only values of shape (count, floor(nT) + 1).
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    sampler = get_sampler(method, grid.hurst, grid.steps)
    scale = grid.n ** (-grid.hurst)
    values = np.zeros((count, grid.points))
    for row in range(count):
        inc = sampler.increments(path_generator(seed, first + row))
        np.cumsum(scale * inc, out=values[row, 1:])
    values.flags.writeable = False
    log.debug("sampled paths %d..%d (%s, H=%.6f, n=%d)", first, first + count - 1, method, grid.hurst, grid.n)
    return PathBatch(grid=grid, values=values, seed=seed, method=method, first=first)


def inc_ind_products(hurst, n, j, t):
    """<d_{j/n}, eps_t>_H = R((j+1)/n, t) - R(j/n, t), vectorized over j and t."""
    j = np.asarray(j, dtype=float)
    t = np.asarray(t, dtype=float)
    h2 = 2.0 * hurst
    a = j / n
    b = (j + 1.0) / n
    out = 0.5 * (b ** h2 - a ** h2 - np.abs(b - t) ** h2 + np.abs(a - t) ** h2)
    return float(out) if out.ndim == 0 else out


def grid_inner_product(kind, grid, j, arg):
    """
    Closed-form inner products in the Hilbert space of fBm.

    Args:
        kind: ``inc_ind`` for <d_j, eps_t>, ``inc_inc`` for <d_j, d_i>,
            ``inc_tilde`` for <d_j, (eps_{i/n} + eps_{(i+1)/n}) / 2>.
        grid: GridSpec giving H, n and the valid index range.
        j: Increment index, 0 <= j <= floor(nT) - 1.
        arg: A time t in [0, T] for ``inc_ind``; a grid index i otherwise.
    """
    if not 0 <= j <= grid.steps - 1:
        raise IndexError(f"Increment index {j} outside 0..{grid.steps - 1}")
    if kind == "inc_ind":
        if not 0.0 <= arg <= grid.horizon:
            raise IndexError(f"Time {arg} outside [0, {grid.horizon}]")
        return inc_ind_products(grid.hurst, grid.n, j, arg)
    if kind not in INNER_PRODUCT_KINDS:
        raise ValueError(f"Unknown inner product kind '{kind}'")
    if not 0 <= arg <= grid.steps - 1:
        raise IndexError(f"Grid index {arg} outside 0..{grid.steps - 1}")
    if kind == "inc_inc":
        return grid.n ** (-2.0 * grid.hurst) * rho(grid.hurst, arg - j)
    return 0.5 * (inc_ind_products(grid.hurst, grid.n, j, arg / grid.n)
                  + inc_ind_products(grid.hurst, grid.n, j, (arg + 1) / grid.n))
