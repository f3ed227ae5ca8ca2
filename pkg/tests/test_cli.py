import json
import math

import pytest

from scripts import run_pipeline
from scripts.report import CSV_HEADER, ReportRow, failures, render_csv, render_json
from scripts.run_config import RunConfig, merge_config, read_config_file
from scripts.run_pipeline import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, run


def test_help_exits_cleanly(capsys):
    assert run(["--help"]) == EXIT_PASS
    assert "renorm" in capsys.readouterr().out


def test_unknown_flag_is_usage_error():
    assert run(["renorm-volume", "--bogus", "1"]) == EXIT_USAGE


def test_unknown_command_is_usage_error():
    assert run(["renorm-everything"]) == EXIT_USAGE


def test_invalid_k_is_usage_error():
    assert run(["renorm-area", "--n", "2", "--k", "3"]) == EXIT_USAGE


def test_model_must_match_command():
    assert run(["renorm-volume", "--model", "torus"]) == EXIT_USAGE


def test_report_row_pass_rule():
    assert ReportRow(quantity="x", value=1.0, crosscheck=1.0 + 1e-6, tol=1e-5).passed
    assert not ReportRow(quantity="x", value=1.0, crosscheck=1.1, tol=1e-5).passed
    assert ReportRow(quantity="x", value=3.0, tol=1e-5).passed
    big = ReportRow(quantity="x", value=1000.0, crosscheck=1000.005, tol=1e-5)
    assert big.passed
    assert failures([big]) == []


def test_csv_layout():
    text = render_csv([ReportRow(quantity="V", value=0.1, crosscheck=0.1, tol=1e-5)])
    header, row = text.strip().split("\n")
    assert header.split(",") == CSV_HEADER
    assert row.split(",") == ["V", "0.10000000000000001", "0.10000000000000001", "0", "0", "1.0000000000000001e-05", "true"]


def test_config_file_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# hyperbolic runs\nn = 3\neps-count = 30\nformat = csv\n", encoding="utf-8")
    values = read_config_file(str(path))
    assert values == {"n": "3", "eps_count": "30", "format": "csv"}
    config = merge_config({"command": "renorm-volume", "n": 5, "tol": None}, values)
    assert isinstance(config, RunConfig)
    assert config.n == 5
    assert config.eps_count == 30
    assert config.format == "csv"
    assert config.model_name == "hyperbolic"


def test_malformed_config_file(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("n 3\n", encoding="utf-8")
    assert run(["renorm-volume", "--config", str(path)]) == EXIT_USAGE


def test_unknown_config_key(tmp_path):
    path = tmp_path / "extra.cfg"
    path.write_text("colour = blue\n", encoding="utf-8")
    assert run(["renorm-volume", "--config", str(path)]) == EXIT_USAGE


def _rows(text):
    lines = text.strip().split("\n")[1:]
    return {line.split(",")[0]: line.split(",") for line in lines}


def test_renorm_volume_h4(tmp_path):
    out = tmp_path / "volume.csv"
    assert run(["renorm-volume", "--model", "hyperbolic", "--n", "3", "--grid", "6", "--format", "csv", "--out", str(out)]) == EXIT_PASS
    rows = _rows(out.read_text(encoding="utf-8"))
    assert float(rows["V"][1]) == pytest.approx(4 * math.pi**2 / 3, rel=1e-6)
    assert rows["V"][-1] == "true"


def test_renorm_area_totally_geodesic(tmp_path):
    out = tmp_path / "area.csv"
    argv = ["renorm-area", "--model", "totally-geodesic", "--n", "3", "--k", "2", "--grid", "12", "--format", "csv", "--out", str(out)]
    assert run(argv) == EXIT_PASS
    rows = _rows(out.read_text(encoding="utf-8"))
    assert float(rows["K (K_formula)"][1]) == pytest.approx(-2 * math.pi, abs=1e-5)
    assert float(rows["K (K_formula)"][2]) == pytest.approx(-2 * math.pi, abs=1e-5)
    assert "K (K_closed)" in rows


def test_csv_output_is_deterministic(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (first, second):
        assert run(["renorm-volume", "--n", "2", "--grid", "8", "--format", "csv", "--out", str(path)]) == EXIT_PASS
    assert first.read_bytes() == second.read_bytes()


def test_tolerance_failure_exits_one(capsys):
    assert run(["renorm-volume", "--n", "3", "--grid", "4", "--tol", "1e-300", "--format", "csv"]) == EXIT_FAIL
    assert "failed checks" in capsys.readouterr().err


def test_fg_expand_sphere(capsys):
    assert run(["fg-expand", "--model", "sphere", "--n", "3", "--grid", "4", "--order", "3", "--format", "csv"]) == EXIT_PASS
    assert "einstein_residual" in capsys.readouterr().out


def test_identities_two_sphere():
    assert run(["identities", "--n", "2", "--grid", "8"]) == EXIT_PASS


def test_volume_anomaly_of_quarter_sphere():
    assert run(["anomaly", "--n", "2", "--grid", "16", "--tol", "1e-4"]) == EXIT_PASS


def test_json_layout():
    rows = json.loads(render_json([ReportRow(quantity="L", value=-6.0, crosscheck=-6.0, tol=1e-5)]))
    assert rows == [
        {"quantity": "L", "value": -6.0, "crosscheck": -6.0, "tol": 1e-5, "abs_err": 0.0, "rel_err": 0.0, "passed": True}
    ]


def test_renorm_area_latitude_circle():
    assert run(["renorm-area", "--model", "latitude", "--n", "2", "--tol", "1e-4"]) == EXIT_PASS


def test_numerical_failure_in_step_exits_one(monkeypatch, capsys):
    def singular(config):
        raise ValueError("singular matrix in radial fit")

    monkeypatch.setitem(run_pipeline.STEPS, "renorm-volume", singular)
    assert run(["renorm-volume", "--n", "3"]) == EXIT_FAIL
    assert "singular matrix" in capsys.readouterr().err


def test_non_zonal_upsilon_on_sphere_exits_one():
    assert run(["anomaly", "--n", "2", "--upsilon", "0.1*cos(x2)", "--grid", "8"]) == EXIT_FAIL


def test_malformed_upsilon_is_usage_error():
    assert run(["anomaly", "--n", "2", "--upsilon", "0.1*tan(x1)"]) == EXIT_USAGE


def test_anomaly_model_implies_k():
    assert RunConfig(command="anomaly", model="geodesic", n=2).anomaly_k == 0
    assert RunConfig(command="anomaly", model="totally-geodesic", n=3).anomaly_k == 2
    assert RunConfig(command="anomaly", model="torus", n=2).anomaly_k is None
    assert RunConfig(command="anomaly", n=3, k=2).anomaly_k == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["anomaly", "--model", "totally-geodesic", "--n", "3", "--k", "0"],
        ["anomaly", "--model", "torus", "--n", "3", "--k", "2"],
        ["anomaly", "--model", "totally-geodesic", "--n", "2"],
        ["anomaly", "--n", "3", "--k", "1"],
    ],
)
def test_anomaly_model_and_k_must_agree(argv):
    assert run(argv) == EXIT_USAGE


def test_renorm_volume_with_rescaled_boundary(tmp_path):
    out = tmp_path / "volume.csv"
    argv = ["renorm-volume", "--n", "2", "--grid", "16", "--upsilon", "0.1*cos(x1)", "--tol", "1e-4", "--format", "csv", "--out", str(out)]
    assert run(argv) == EXIT_PASS
    rows = _rows(out.read_text(encoding="utf-8"))
    assert abs(float(rows["L_hat_minus_L"][1])) < 5e-5
    assert rows["V_hat_minus_V"][-1] == "true"
    assert rows["V_hat_minus_V"][2] != ""
