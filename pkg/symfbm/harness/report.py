import csv
import io
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

log = logging.getLogger(__name__)

CSV_COLUMNS = ("name", "estimate", "se", "stat", "p", "pass", "target", "exact", "control")


def to_plain(value):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


@dataclass
class StatRecord:
    """One reported statistic. Every estimate has an SE unless it is exact."""
    name: str
    estimate: float
    se: Optional[float] = None
    statistic: Optional[float] = None
    p_value: Optional[float] = None
    passed: Optional[bool] = None
    exact: bool = False
    control: bool = False
    target: Optional[float] = None

    def __post_init__(self):
        if self.se is None and not self.exact:
            raise ValueError(f"Statistic '{self.name}' needs a standard error or the exact flag.")

    def to_dict(self):
        return {
            "name": self.name,
            "estimate": self.estimate,
            "se": self.se,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "passed": self.passed,
            "exact": self.exact,
            "control": self.control,
            "target": self.target,
        }


def atomic_write(path, text):
    """Writes ``text`` to a temp file next to ``path`` and renames it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=f".{os.path.basename(path)}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    records: list = field(default_factory=list)
    seeds: dict = field(default_factory=dict)
    version: str = ""
    wall_clock: Optional[float] = None

    def __post_init__(self):
        if not self.version:
            from .. import __version__
            self.version = __version__

    def add(self, name, estimate, **kwargs):
        record = StatRecord(name, estimate, **kwargs)
        self.records.append(record)
        return record

    def extend(self, other):
        self.records.extend(other.records)

    def get(self, name):
        for record in self.records:
            if record.name == name:
                return record
        raise KeyError(name)

    @property
    def failed_controls(self):
        return [r for r in self.records if r.control and not r.passed]

    @property
    def controls_passed(self):
        return not self.failed_controls

    @property
    def all_passed(self):
        return all(r.passed is not False for r in self.records)

    def to_dict(self, include_timing=False):
        out = {
            "experiment": self.experiment,
            "config": self.config,
            "records": [r.to_dict() for r in self.records],
            "seeds": self.seeds,
            "version": self.version,
        }
        if include_timing:
            out["wall_clock"] = self.wall_clock
        return to_plain(out)

    def to_json(self, include_timing=False):
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def to_csv(self):
        stream = io.StringIO()
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.records:
            row = to_plain([r.name, r.estimate, r.se, r.statistic, r.p_value, r.passed, r.target, r.exact, r.control])
            writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
        return stream.getvalue()

    def render(self, fmt="json", include_timing=False):
        if fmt == "json":
            return self.to_json(include_timing)
        if fmt == "csv":
            return self.to_csv()
        raise ValueError(f"Unknown report format '{fmt}'")

    def write(self, path, fmt="json", include_timing=False):
        atomic_write(path, self.render(fmt, include_timing))
        log.info("Report written to %s", path)
