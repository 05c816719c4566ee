import csv
import io
import json
import math
import os

import pytest

from symfbm import __version__
from symfbm.harness.report import ExperimentReport, StatRecord, atomic_write


def make_report():
    report = ExperimentReport("clt", {"seed": 1, "n_values": [8]}, seeds={"master": 1})
    report.add("n=8 variance", 0.5, se=0.01, statistic=1.2, passed=True, target=0.49)
    report.add("n=8 control", 0.0, exact=True, passed=True, control=True)
    report.add("n=8 ratio", math.inf, exact=True)
    return report


def test_record_needs_se_or_exact():
    with pytest.raises(ValueError):
        StatRecord("x", 1.0)
    assert StatRecord("x", 1.0, exact=True).se is None


def test_json_is_stable_and_valid():
    report = make_report()
    report.wall_clock = 12.5
    text = report.to_json()
    assert text == make_report().to_json()
    data = json.loads(text)
    assert data["version"] == __version__
    assert "wall_clock" not in data
    assert data["records"][2]["estimate"] is None
    assert json.loads(report.to_json(include_timing=True))["wall_clock"] == 12.5


def test_csv_rows():
    rows = list(csv.reader(io.StringIO(make_report().to_csv())))
    assert rows[0][:6] == ["name", "estimate", "se", "stat", "p", "pass"]
    assert rows[1][0] == "n=8 variance"
    assert rows[1][1] == "0.5"
    assert len(rows) == 4


def test_controls():
    report = make_report()
    assert report.controls_passed
    report.add("bad", 1.0, exact=True, passed=False, control=True)
    assert not report.controls_passed
    assert report.get("bad").control


def test_atomic_write(tmp_path):
    target = tmp_path / "report.json"
    make_report().write(str(target))
    assert json.loads(target.read_text())["experiment"] == "clt"
    assert os.listdir(tmp_path) == ["report.json"]


def test_atomic_write_leaves_nothing_on_failure(tmp_path):
    class Boom:
        def __str__(self):
            raise RuntimeError("boom")

    target = tmp_path / "out.txt"
    with pytest.raises(TypeError):
        atomic_write(str(target), Boom())
    assert os.listdir(tmp_path) == []
