import json

import pytest

from symfbm.errors import ConfigError
from symfbm.harness.config import (
    ExperimentConfig,
    config_from_dict,
    load_config,
    validate_dict,
)


def doc(**kw):
    data = {"schema_version": 1, "experiment": "clt", "measure": "trapezoid", "ell": 1,
            "n_values": [64], "paths": 200, "seed": 7}
    data.update(kw)
    return data


def test_valid_document():
    assert validate_dict(doc()) == []
    config = config_from_dict(doc())
    assert config.ell == 1
    assert config.hurst_value == pytest.approx(1.0 / 6.0)
    assert config.selected_statistics == ("variance", "ks", "independence", "skewness")
    assert config.eval_times == (1.0,)


def test_ell_from_critical_hurst():
    config = ExperimentConfig.from_dict(doc(ell=[], hurst=0.1))
    assert config.ell == 2
    assert validate_dict(doc(ell=[], hurst=0.1, measure="simpson")) == []


def test_hurst_must_be_critical_for_the_given_ell():
    diagnostics = validate_dict(doc(hurst=0.2))
    assert any("H must equal 1/(4ℓ+2)" in line and "ℓ=1" in line for line in diagnostics)


def test_ell_from_the_measure():
    config = ExperimentConfig.from_dict(doc(ell=[], experiment="limit"))
    assert config.ell == 1
    assert validate_dict(doc(ell=[], measure="lebesgue")) != []


def test_schema_and_unknown_keys():
    data = doc(colour="blue")
    del data["schema_version"]
    diagnostics = validate_dict(data)
    assert any("schema_version" in line for line in diagnostics)
    assert any("colour" in line for line in diagnostics)


def test_every_problem_is_reported():
    diagnostics = validate_dict(doc(paths=0, seed=-1, method="magic", n_values=[0]))
    assert len(diagnostics) >= 4


def test_ks_needs_100_paths():
    assert any("KS" in line for line in validate_dict(doc(paths=50)))
    assert validate_dict(doc(paths=50, statistics=["variance"])) == []


def test_grid_error_for_two_partition_scans():
    data = doc(experiment="lemmas", lemmas=["L22_26"], n_values=[16], m_values=[16])
    assert any(line.startswith("GridError") for line in validate_dict(data))


def test_measure_errors_are_named():
    diagnostics = validate_dict(doc(measure=[[0.0, 0.7], [1.0, 0.3]]))
    assert any("SymmetryViolation" in line for line in diagnostics)
    diagnostics = validate_dict(doc(measure=[[0.0, 0.4], [1.0, 0.4]]))
    assert any("MassError" in line for line in diagnostics)


def test_limit_needs_a_matching_finite_ell():
    assert any("infinite" in line for line in validate_dict(doc(experiment="limit", measure="lebesgue")))
    assert any("does not match" in line for line in validate_dict(doc(experiment="limit", ell=2)))


def test_degenerate_function_is_flagged():
    data = doc(experiment="limit", function={"kind": "monomial", "degree": 2})
    assert any("vanishes identically" in line for line in validate_dict(data))
    data["statistics"] = ["decomposition"]
    assert validate_dict(data) == []


def test_opencl_backend_is_clt_only():
    assert any("opencl" in line for line in validate_dict(doc(experiment="limit", backend="opencl")))


def test_load_config(tmp_path):
    path = tmp_path / "clt.json"
    path.write_text(json.dumps(doc()))
    assert load_config(str(path), seed=99).seed == 99
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(path))
    path.write_text(json.dumps(doc(paths=0)))
    with pytest.raises(ConfigError) as info:
        load_config(str(path))
    assert info.value.diagnostics


def test_to_dict_echoes_resolved_values():
    out = config_from_dict(doc()).to_dict()
    assert out["ell"] == [1]
    assert out["times"] == [1.0]
    assert out["seed"] == 7
    assert json.dumps(out)
