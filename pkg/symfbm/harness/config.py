"""
Experiment configuration.

A config is a JSON object with ``schema_version: 1``. ``validate_dict`` returns
one human-readable line per problem (an empty list means the document is
usable); ``load_config`` raises ConfigError carrying those lines.
"""
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

from ..errors import ConfigError, GridError
from ..fbm import CHOLESKY_CAP, METHODS, grid_index
from ..measure import ell_of, parse_measure
from ..riemann import parse_function, trig

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EXPERIMENTS = ("clt", "limit", "lemmas", "residual", "simulate", "riemann")
LEMMAS = ("L21a", "L21b", "L22_26", "L22_27", "L22_28", "phi4moment")
TWO_PARTITION_LEMMAS = ("L22_26", "L22_27", "L22_28")
BACKENDS = ("cpu", "opencl")
STATISTICS = {
    "clt": ("variance", "ks", "independence", "skewness"),
    "limit": ("variance", "ks", "decomposition"),
    "residual": ("residual", "markov"),
    "riemann": ("decomposition",),
    "lemmas": (),
    "simulate": (),
}
# statistics that are driven by f^{(2l+1)}
DERIVATIVE_STATISTICS = ("variance", "ks")
CRITICAL_TOL = 1e-15
MAX_SEED = 2 ** 64

DEFAULT_PATHS = 1000
DEFAULT_N_VALUES = (1024,)
DEFAULT_SCAN_POINTS = 65

KEYS = ("schema_version", "experiment", "measure", "function", "ell", "hurst", "n_values",
        "m_values", "horizon", "times", "paths", "seed", "method", "statistics", "lemmas",
        "power", "h", "backend", "scan_points")


def _int_list(value, key):
    if isinstance(value, bool):
        raise ValueError(f"{key} must be an integer or a list of integers")
    if isinstance(value, (int, float)):
        value = [value]
    out = []
    for v in value:
        if isinstance(v, bool) or int(v) != v:
            raise ValueError(f"{key} must hold integers, got {v!r}")
        out.append(int(v))
    return tuple(out)


def _float_list(value):
    if isinstance(value, (int, float)):
        value = [value]
    return tuple(float(v) for v in value)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "clt"
    measure: object = "trapezoid"
    function: object = None
    ells: tuple = ()
    hurst: Optional[float] = None
    n_values: tuple = DEFAULT_N_VALUES
    m_values: tuple = ()
    horizon: float = 1.0
    times: tuple = ()
    paths: int = DEFAULT_PATHS
    seed: int = 0
    method: str = "circulant"
    statistics: tuple = ()
    lemmas: tuple = ()
    power: Optional[int] = None
    h: Optional[int] = None
    backend: str = "cpu"
    scan_points: int = DEFAULT_SCAN_POINTS
    schema_version: int = field(default=SCHEMA_VERSION)

    @classmethod
    def from_dict(cls, data, experiment=None):
        """Coerces types only; cross-field checks live in ``validate_dict``."""
        kwargs = {}
        try:
            if "experiment" in data or experiment:
                kwargs["experiment"] = experiment or str(data["experiment"])
            for key in ("measure", "function", "method", "backend"):
                if key in data:
                    kwargs[key] = data[key]
            if "ell" in data:
                kwargs["ells"] = _int_list(data["ell"], "ell")
            if data.get("hurst") is not None:
                kwargs["hurst"] = float(data["hurst"])
            if "n_values" in data:
                kwargs["n_values"] = _int_list(data["n_values"], "n_values")
            if "m_values" in data:
                kwargs["m_values"] = _int_list(data["m_values"], "m_values")
            if "horizon" in data:
                kwargs["horizon"] = float(data["horizon"])
            if "times" in data:
                kwargs["times"] = _float_list(data["times"])
            for key in ("paths", "seed", "scan_points", "power", "h", "schema_version"):
                if data.get(key) is not None:
                    (value,) = _int_list(data[key], key)
                    kwargs[key] = value
            if "statistics" in data:
                kwargs["statistics"] = tuple(str(s) for s in data["statistics"])
            if "lemmas" in data:
                kwargs["lemmas"] = tuple(str(s) for s in data["lemmas"])
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e))
        return cls(**kwargs)

    def to_dict(self):
        out = asdict(self)
        out["ell"] = list(out.pop("ells"))
        for key in ("n_values", "m_values", "times", "statistics", "lemmas"):
            out[key] = list(out[key])
        out["times"] = list(self.eval_times)
        out["statistics"] = list(self.selected_statistics)
        out["lemmas"] = list(self.selected_lemmas)
        return out

    def with_seed(self, seed):
        return replace(self, seed=int(seed))

    def get_measure(self):
        return parse_measure(self.measure)

    @property
    def ell(self):
        """
        The l in force: explicit ``ell``, else the one H is critical for,
        else l(nu) of the measure. None when nothing pins it down.
        """
        if self.ells:
            return self.ells[0]
        if self.hurst is not None:
            ell = round((1.0 / self.hurst - 2.0) / 4.0)
            if ell >= 1 and abs(self.hurst - 1.0 / (4 * ell + 2)) <= CRITICAL_TOL:
                return ell
            return None
        value = ell_of(self.get_measure())
        return None if value.is_infinite else int(value)

    @property
    def hurst_value(self):
        if self.hurst is not None:
            return self.hurst
        return 1.0 / (4 * self.ell + 2)

    @property
    def hurst_values(self):
        """Every H a lemma scan covers: one per listed l, or the single H."""
        if self.ells:
            return tuple(1.0 / (4 * ell + 2) for ell in self.ells)
        return (self.hurst_value,)

    def get_function(self):
        if self.function is None and self.experiment == "residual":
            return trig()
        return parse_function(self.function, self.ell or 1)

    @property
    def eval_times(self):
        return self.times or (self.horizon,)

    @property
    def selected_statistics(self):
        return self.statistics or STATISTICS.get(self.experiment, ())

    @property
    def selected_lemmas(self):
        if self.experiment != "lemmas":
            return self.lemmas
        return self.lemmas or LEMMAS


def _check_measure(config, diagnostics):
    try:
        return config.get_measure()
    except ValueError as e:
        diagnostics.append(f"measure: {type(e).__name__}: {e}")
        return None


def validate_dict(data, experiment=None):
    """Every problem with a config document, one line each. [] means valid."""
    if not isinstance(data, dict):
        return ["config must be a JSON object"]
    diagnostics = []
    if data.get("schema_version") != SCHEMA_VERSION:
        diagnostics.append(f"schema_version must be {SCHEMA_VERSION}, got {data.get('schema_version')!r}")
    unknown = sorted(set(data) - set(KEYS))
    if unknown:
        diagnostics.append(f"unknown keys: {', '.join(unknown)}")
    try:
        config = ExperimentConfig.from_dict(data, experiment)
    except ConfigError as e:
        return diagnostics + e.diagnostics

    if config.experiment not in EXPERIMENTS:
        diagnostics.append(f"experiment must be one of {', '.join(EXPERIMENTS)}, got '{config.experiment}'")
        return diagnostics

    measure = _check_measure(config, diagnostics)

    for ell in config.ells:
        if ell < 1:
            diagnostics.append(f"ell must be >= 1, got {ell}")
    if config.hurst is not None:
        if not 0.0 < config.hurst < 0.5:
            diagnostics.append(f"hurst must lie in (0, 1/2), got {config.hurst}")
        for ell in config.ells:
            critical = 1.0 / (4 * ell + 2)
            if ell >= 1 and abs(config.hurst - critical) > CRITICAL_TOL:
                diagnostics.append(f"H must equal 1/(4ℓ+2) = {critical!r} for ℓ={ell}, got H={config.hurst!r}")

    try:
        ell = config.ell
    except ValueError:
        ell = None
    off_critical = config.hurst is not None and (
        config.experiment in ("lemmas", "simulate") or (config.experiment == "clt" and config.power is not None))
    if ell is None and measure is not None and not off_critical:
        diagnostics.append("cannot determine ℓ: give 'ell', a critical 'hurst', or a measure with finite ℓ(ν)")

    if config.experiment in ("limit", "residual", "riemann") and measure is not None:
        nu_ell = ell_of(measure)
        if nu_ell.is_infinite:
            diagnostics.append(f"measure {measure.name} has infinite ℓ(ν); this experiment needs a finite one")
        elif ell is not None and ell != int(nu_ell):
            diagnostics.append(f"ℓ={ell} does not match ℓ(ν)={int(nu_ell)} of {measure.name}")

    if not config.n_values or any(n < 1 for n in config.n_values):
        diagnostics.append("n_values must be a non-empty list of positive integers")
    if any(m < 2 for m in config.m_values):
        diagnostics.append("m_values must all be >= 2")
    if not config.horizon > 0:
        diagnostics.append(f"horizon must be positive, got {config.horizon}")
    for t in config.times:
        if not 0.0 <= t <= config.horizon:
            diagnostics.append(f"time {t} lies outside [0, {config.horizon}]")
    if config.horizon > 0 and config.n_values:
        for n in config.n_values:
            if n >= 1 and grid_index(n, config.horizon) < 1:
                diagnostics.append(f"grid n={n}, T={config.horizon} has fewer than two points")
    if config.paths < 1:
        diagnostics.append(f"paths must be >= 1, got {config.paths}")
    if not 0 <= config.seed < MAX_SEED:
        diagnostics.append(f"seed must lie in [0, 2^64), got {config.seed}")
    if config.method not in METHODS:
        diagnostics.append(f"method must be one of {', '.join(METHODS)}, got '{config.method}'")
    elif config.method == "cholesky" and config.horizon > 0:
        for n in config.n_values:
            if n >= 1 and grid_index(n, config.horizon) > CHOLESKY_CAP:
                diagnostics.append(f"cholesky sampler is capped at {CHOLESKY_CAP} steps; n={n} gives more")
    if config.backend not in BACKENDS:
        diagnostics.append(f"backend must be one of {', '.join(BACKENDS)}, got '{config.backend}'")
    elif config.backend == "opencl" and config.experiment != "clt":
        diagnostics.append("backend 'opencl' is only available for the clt experiment")
    if config.power is not None and (config.power < 1 or config.power % 2 == 0):
        diagnostics.append(f"power must be odd and >= 1, got {config.power}")
    if config.h is not None and config.h < 1:
        diagnostics.append(f"h must be >= 1, got {config.h}")
    if config.scan_points < 2:
        diagnostics.append(f"scan_points must be >= 2, got {config.scan_points}")

    known = STATISTICS[config.experiment]
    for name in config.statistics:
        if name not in known:
            diagnostics.append(f"statistic '{name}' is not available for {config.experiment}")
    if "ks" in config.selected_statistics and config.paths < 100:
        diagnostics.append(f"the KS statistic needs paths >= 100, got {config.paths}")

    for name in config.lemmas:
        if name not in LEMMAS:
            diagnostics.append(f"unknown lemma '{name}'; use one of {', '.join(LEMMAS)}")
    if config.experiment == "lemmas":
        lemmas = config.selected_lemmas
        if any(name in TWO_PARTITION_LEMMAS for name in lemmas):
            if not config.m_values:
                diagnostics.append("two-partition scans need m_values")
            for n in config.n_values:
                for m in config.m_values:
                    if n <= m:
                        diagnostics.append(f"{GridError.__name__}: n={n} must exceed m={m}")
        if "phi4moment" in lemmas and config.paths < 2 * 20:
            diagnostics.append(f"phi4moment needs paths >= 40 for the jackknife, got {config.paths}")

    diagnostics.extend(_function_diagnostics(config, ell))
    return diagnostics


def _function_diagnostics(config, ell):
    try:
        f = config.get_function()
    except (ValueError, KeyError, TypeError) as e:
        return [f"function: {e}"]
    if ell is None:
        return []
    out = []
    if config.experiment in ("limit", "residual", "riemann"):
        need = 4 * ell + 1
        if f.max_derivative_order < need:
            out.append(f"{f.describe()} supports derivatives up to order {f.max_derivative_order}; "
                       f"ℓ={ell} needs {need}")
    if config.experiment == "limit":
        order = 2 * ell + 1
        degenerate = [s for s in config.selected_statistics if s in DERIVATIVE_STATISTICS]
        if f.vanishes(order) and degenerate:
            out.append(f"f^({order}) vanishes identically for {f.describe()}: statistics "
                       f"{', '.join(degenerate)} degenerate to 0")
    if config.experiment == "lemmas" and "phi4moment" in config.selected_lemmas:
        order = 2 * (config.h or ell) + 1
        if f.max_derivative_order < order:
            out.append(f"{f.describe()} cannot supply f^({order}) for phi4moment")
    return out


def load_config(path, experiment=None, seed=None):
    """
    Reads and validates a JSON config.

    Raises:
        OSError: the file cannot be read.
        ConfigError: the document is not valid JSON or fails validation.
    """
    with open(path) as f:
        text = f.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}")
    if seed is not None and isinstance(data, dict):
        data = dict(data, seed=seed)
    diagnostics = validate_dict(data, experiment)
    if diagnostics:
        raise ConfigError(diagnostics)
    config = ExperimentConfig.from_dict(data, experiment)
    log.debug("loaded config %s: %s", path, config)
    return config


def config_from_dict(data, experiment=None):
    """Validated ExperimentConfig from an in-memory dict (schema_version may be omitted)."""
    data = dict(data)
    data.setdefault("schema_version", SCHEMA_VERSION)
    diagnostics = validate_dict(data, experiment)
    if diagnostics:
        raise ConfigError(diagnostics)
    return ExperimentConfig.from_dict(data, experiment)
