"""
Exception types raised by symfbm.

Each one subclasses the builtin that callers would otherwise catch for the
same situation, so ``except ValueError`` keeps working around measure or
config parsing.
"""


class SymmetryViolation(ValueError):
    """An atom has no mirror partner at 1 - alpha, or the density is not symmetric."""


class MassError(ValueError):
    """Total mass of a measure differs from 1."""


class DomainError(ValueError):
    """An argument lies outside the domain of the formula (negative time, even r, ...)."""


class EmbeddingError(RuntimeError):
    """The circulant embedding has a genuinely negative eigenvalue."""


class SizeError(ValueError):
    """The requested grid is too large for the chosen sampler."""


class DerivativeOrderError(ValueError):
    """A FunctionFamily was asked for a derivative beyond its declared order."""


class InfiniteEll(ValueError):
    """The operation needs a finite l(nu) but the measure matches every moment checked."""


class SampleSizeError(ValueError):
    """Too few samples for the requested statistic."""


class GridError(ValueError):
    """Two-partition scans need n > m >= 2."""


class ConfigError(ValueError):
    """A config document failed validation. ``diagnostics`` holds one line per problem."""

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))

    def __reduce__(self):
        return (type(self), (self.diagnostics,))


class ControlFailure(RuntimeError):
    """An embedded control experiment missed its exact value."""


class ScalingWarning(UserWarning):
    """The power r and Hurst parameter H do not satisfy 2rH = 1."""
