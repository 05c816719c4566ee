import csv
import io
import json

import pytest

import amp
from symfbm import cli
from symfbm.cli import EXIT_CONFIG, EXIT_CONTROL, EXIT_OK, run
from symfbm.harness import experiments


@pytest.fixture(autouse=True)
def shutdown_pool():
    yield
    amp.shutdown_global()


@pytest.fixture
def clt_file(tmp_path):
    path = tmp_path / "clt.json"
    path.write_text(json.dumps({"schema_version": 1, "measure": "trapezoid", "ell": 1,
                                "n_values": [32], "paths": 600, "seed": 11}))
    return str(path)


def test_constants_table(capsys):
    assert run(["constants", "--measure", "trapezoid"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "trapezoid" in out
    assert "-0.0833" in out


def test_constants_json(capsys):
    assert run(["constants", "--measure", "simpson", "--measure", "lebesgue", "--format", "json"]) == EXIT_OK
    rows = json.loads(capsys.readouterr().out)
    assert [row["measure"] for row in rows] == ["simpson", "lebesgue"]
    assert rows[1]["ell"] == "Infinite"


def test_validate(clt_file, tmp_path, capsys):
    assert run(["validate", "-c", clt_file]) == EXIT_OK
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "ell": 1, "hurst": 0.2}))
    assert run(["validate", "-c", str(bad)]) == EXIT_CONFIG
    assert "H must equal" in capsys.readouterr().err


def test_grid_error_writes_nothing(tmp_path, capsys):
    config = tmp_path / "lemmas.json"
    config.write_text(json.dumps({"schema_version": 1, "ell": 1, "lemmas": ["L22_26"],
                                  "n_values": [8], "m_values": [16]}))
    output = tmp_path / "out.json"
    assert run(["verify-lemmas", "-c", str(config), "-o", str(output)]) == EXIT_CONFIG
    assert "GridError" in capsys.readouterr().err
    assert not output.exists()


def test_usage_errors():
    assert run(["no-such-command"]) == EXIT_CONFIG
    assert run(["verify-clt"]) == EXIT_CONFIG
    assert run(["verify-clt", "-c", "/nonexistent/config.json"]) == EXIT_CONFIG


def test_constants_table_shows_tail_bounds(capsys):
    assert run(["constants", "--measure", "trapezoid", "--measure", "lebesgue"]) == EXIT_OK
    header, trapezoid, lebesgue = capsys.readouterr().out.splitlines()[:3]
    assert "sigma_sq_tail" in header.split()
    assert "bm_limit_tail" in header.split()
    assert len(trapezoid.split()) == len(header.split())
    assert lebesgue.split().count("-") >= 2


@pytest.mark.parametrize("error", [RuntimeError("no OpenCL platform found"),
                                   TimeoutError("3 AMP tasks still pending after 1s")])
def test_runtime_errors_exit_with_config_code(clt_file, monkeypatch, capsys, error):
    def fail(config, workers=None):
        raise error

    monkeypatch.setitem(cli.RUNNERS, "clt", fail)
    assert run(["verify-clt", "-c", clt_file]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert f"error: {type(error).__name__}: {error}" in err


def test_verify_clt_is_byte_identical(clt_file, tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["verify-clt", "-c", clt_file, "-o", str(first)]) == EXIT_OK
    assert run(["verify-clt", "-c", clt_file, "-o", str(second), "--threads", "8"]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    report = json.loads(first.read_text())
    assert report["experiment"] == "clt"
    assert "wall_clock" not in report


@pytest.mark.parametrize("command,document", [
    ("verify-limit", {"measure": "trapezoid", "n_values": [32, 64], "paths": 600, "seed": 5}),
    ("verify-lemmas", {"ell": [1], "lemmas": ["L21b", "phi4moment"], "n_values": [16, 32], "paths": 600,
                       "seed": 5}),
])
def test_reports_do_not_depend_on_thread_count(command, document, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps(dict(document, schema_version=1)))
    outputs = []
    for threads in ("1", "8"):
        output = tmp_path / f"report-{threads}.json"
        assert run([command, "-c", str(config), "-o", str(output), "--threads", threads]) == EXIT_OK
        outputs.append(output.read_bytes())
    assert outputs[0] == outputs[1]


def test_seed_override_is_echoed(clt_file, capsys):
    assert run(["verify-clt", "-c", clt_file, "--seed", "123", "--timing"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["config"]["seed"] == 123
    assert report["seeds"]["master"] == 123
    assert report["wall_clock"] >= 0.0


def test_csv_output(clt_file, capsys):
    assert run(["verify-clt", "-c", clt_file, "--format", "csv"]) == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert any(row["name"] == "n=32 t=1 variance" for row in rows)


def test_control_failure_exit_code(clt_file, monkeypatch):
    monkeypatch.setattr(experiments, "TELESCOPE_TOL", -1.0)
    assert run(["verify-clt", "-c", clt_file]) == EXIT_CONTROL


def test_simulate_csv(tmp_path, capsys):
    config = tmp_path / "sim.json"
    config.write_text(json.dumps({"schema_version": 1, "ell": 1, "n_values": [4], "paths": 2, "seed": 0}))
    assert run(["simulate", "-c", str(config)]) == EXIT_OK
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["path", "j", "t", "value"]
    assert len(rows) == 1 + 2 * 5
