#!/usr/bin/env python3
import csv
import io
import json
import math
import os

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from cli import RunConfig, cli, load_config, make_run_config, run
from export import OVERLAP_HEADER
from params import derive, parse_complex

REPO_CONFIG = os.path.join(os.path.dirname(os.path.abspath(__file__)), "config.yml")
MODEL_FLAGS = ["--alpha", "1.3i", "--alpha-star", "2.1i", "--phi", "0.17i", "--theta", "0.4"]


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def no_config(tmp_path):
    return ["--config-file", str(tmp_path / "missing.yml")]


def _split_runner():
    try:
        return CliRunner(mix_stderr=False)
    except TypeError:
        return CliRunner()


def _decode(pair):
    return complex(pair[0], pair[1])


def test_build_n1_matches_closed_form(runner, no_config, tmp_path):
    out = tmp_path / "w0.json"
    result = runner.invoke(cli, ["build", "--w", "0", "--n", "1", *MODEL_FLAGS, *no_config, "--out", str(out)])
    assert result.exit_code == 0, result.output
    payload = json.loads(out.read_text())
    assert payload["dim"] == 2
    entries = np.array([_decode(z) for z in payload["entries"]]).reshape(2, 2)
    params = RunConfig("build", payload["params"]).params()
    s = derive(params)
    expected = np.array([[s.q_half * math.cos(1.3), s.k_plus], [s.k_minus, math.cos(1.3) / s.q_half]])
    assert np.allclose(entries, expected)
    assert payload["params"]["alpha"] == [0.0, 1.3]


def test_build_to_stdout(runner, no_config):
    result = runner.invoke(cli, ["build", "--w", "1", "--n", "2", *MODEL_FLAGS, *no_config])
    assert result.exit_code == 0
    assert '"dim": 4' in result.output


def test_unparseable_complex_is_a_usage_error(runner, no_config):
    result = runner.invoke(cli, ["build", "--n", "1", "--alpha", "abc", "--alpha-star", "2.1i", "--phi", "0.17i",
                                 *no_config])
    assert result.exit_code == 2


@pytest.mark.parametrize("alpha", ["2e+i", "1e", "3E-i"])
def test_dangling_exponent_is_a_usage_error(runner, no_config, alpha):
    result = runner.invoke(cli, ["build", "--n", "1", "--alpha", alpha, "--alpha-star", "2.1i", "--phi", "0.17i",
                                 *no_config])
    assert result.exit_code == 2


def test_invalid_parameters_exit_3(runner, no_config):
    result = runner.invoke(cli, ["build", "--n", "2", "--alpha", "0", "--alpha-star", "2.1i", "--phi", "0.17i",
                                 *no_config])
    assert result.exit_code == 3
    assert "must be nonzero" in result.output


def test_missing_parameters_exit_3(runner, no_config):
    result = runner.invoke(cli, ["build", "--n", "2", *no_config])
    assert result.exit_code == 3


def test_basis_kinds(runner, no_config, tmp_path):
    out = tmp_path / "basis.json"
    result = runner.invoke(cli, ["basis", "--kind", "psi_tilde", "--ket", "--n", "2", *MODEL_FLAGS, *no_config,
                                 "--out", str(out)])
    assert result.exit_code == 0, result.output
    payload = json.loads(out.read_text())
    assert payload["as_bra"] is False
    assert [v["epsilons"] for v in payload["vectors"]] == [[1, 1], [-1, 1], [1, -1], [-1, -1]]
    assert [v["rank"] for v in payload["vectors"]] == [1, 1, 2, 1]


@pytest.mark.parametrize("which, method", [("direct", "recursive"), ("direct", "oracle"), ("dual", "recursive"),
                                           ("dual", "oracle")])
def test_blocks(runner, no_config, tmp_path, which, method):
    out = tmp_path / "blocks.json"
    result = runner.invoke(cli, ["blocks", "--which", which, "--method", method, "--n", "2", *MODEL_FLAGS,
                                 *no_config, "--out", str(out)])
    assert result.exit_code == 0, result.output
    payload = json.loads(out.read_text())
    assert [block["n"] for block in payload] == [0, 1, 2]
    assert len(payload[0]["B"]) == 2
    assert payload[2]["B"] == []
    assert payload[0]["C"] == []


def test_overlaps_csv_and_orthogonality_report(runner, no_config, tmp_path):
    out = tmp_path / "overlaps.csv"
    report_out = tmp_path / "gram.json"
    result = runner.invoke(cli, ["overlaps", "--n", "2", "--check", "orthogonality", *MODEL_FLAGS, *no_config,
                                 "--out", str(out), "--report-out", str(report_out)])
    assert result.exit_code == 0, result.output
    with open(out, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["n", "i", "k", "s", "re_F", "im_F"]
    assert len(rows) == 1 + 16
    assert all(float(row[4]) == pytest.approx(1.0) for row in rows[1:] if row[0] == "0")
    report = json.loads(report_out.read_text())
    assert len(report["orthogonality"]["gram"]) == 4
    assert report["orthogonality"]["off_diagonal"] <= 1e-8


def test_overlaps_closed_form_json(runner, no_config, tmp_path):
    out = tmp_path / "overlaps.json"
    report_out = tmp_path / "closed.json"
    result = runner.invoke(cli, ["overlaps", "--n", "2", "--closed-form", "--format", "json", *MODEL_FLAGS,
                                 *no_config, "--out", str(out), "--report-out", str(report_out)])
    assert result.exit_code == 0, result.output
    payload = json.loads(out.read_text())
    assert payload["N"] == 2
    assert len(payload["F"]) == 16
    closed = json.loads(report_out.read_text())["closed_form"]
    assert [entry["s"] for entry in closed] == [0, 1, 2]


def test_closed_form_needs_n2(runner, no_config, tmp_path):
    result = runner.invoke(cli, ["overlaps", "--n", "3", "--closed-form", *MODEL_FLAGS, *no_config,
                                 "--out", str(tmp_path / "o.csv")])
    assert result.exit_code == 3


def test_verify_tridiagonal(runner, no_config, tmp_path):
    out = tmp_path / "findings.json"
    result = runner.invoke(cli, ["verify", "--n", "4", "--check", "tridiagonal", *MODEL_FLAGS, *no_config,
                                 "--out", str(out)])
    assert result.exit_code == 0, result.output
    summary = json.loads(out.read_text())
    assert summary["passed"] is True
    assert {f["check"] for f in summary["findings"]} == {"tridiagonal"}
    assert "Verification Summary" in result.output


def test_verify_breach_exits_1(runner, tmp_path):
    config_file = tmp_path / "config.yml"
    config_file.write_text(yaml.safe_dump({"tolerances": {"overrides": {"aw_non_leonard": 1e6}}}))
    result = runner.invoke(cli, ["verify", "--n", "2", "--check", "aw", *MODEL_FLAGS,
                                 "--config-file", str(config_file)])
    assert result.exit_code == 1


def test_report_summary(runner, no_config, tmp_path):
    out = tmp_path / "summary.json"
    result = runner.invoke(cli, ["report", "--n", "2", *MODEL_FLAGS, *no_config, "--out", str(out)])
    assert result.exit_code == 0, result.output
    summary = json.loads(out.read_text())
    assert set(summary) == {"params", "tolerances", "findings", "passed"}
    assert {f["check"] for f in summary["findings"]} >= {"tridiagonal", "orthogonality", "closed_form"}


def test_config_file_supplies_the_model(runner, tmp_path):
    config_file = tmp_path / "config.json"
    config_file.write_text(json.dumps({"model": {"N": 1, "alpha": [0, 1.3], "alpha_star": "2.1i",
                                                 "phi": [0, 0.17], "theta": 0.4}}))
    out = tmp_path / "w1.json"
    result = runner.invoke(cli, ["build", "--w", "1", "--config-file", str(config_file), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert json.loads(out.read_text())["dim"] == 2


def test_flags_override_config(tmp_path):
    config_file = tmp_path / "config.yml"
    config_file.write_text(yaml.safe_dump({"model": {"N": 1, "alpha": [0, 1.3], "alpha_star": [0, 2.1],
                                                     "phi": [0, 0.17]},
                                           "tolerances": {"profile": "strict"},
                                           "output": {"format": "json"}}))
    config = make_run_config("build", str(config_file), {"N": 3, "alpha": None}, profile="loose")
    assert config.model["N"] == 3
    assert config.params().alpha == 1.3j
    assert config.profile == "loose"
    assert config.output_format == "json"
    assert make_run_config("build", str(config_file), {}).profile == "strict"


def test_malformed_config_falls_back(tmp_path):
    config_file = tmp_path / "config.yml"
    config_file.write_text("model: [unclosed\n")
    assert load_config(str(config_file)) == {}
    assert load_config(str(tmp_path / "absent.yml")) == {}


def test_run_reports_unknown_profile():
    config = RunConfig("build", {"N": 1, "alpha": "1.3i", "alpha_star": "2.1i", "phi": "0.17i"},
                       profile="paranoid", options={"w": 0})
    assert run(config) == 0
    config.command = "verify"
    config.options = {"checks": ["tridiagonal"]}
    assert run(config) == 3


def test_configure_writes_config(runner, tmp_path):
    target = tmp_path / "generated.yml"
    answers = "\n".join(["1", "1.3i", "2.1i", "0.17i", "0.4", "strict", "json", "n", str(target)]) + "\n"
    result = runner.invoke(cli, ["configure"], input=answers)
    assert result.exit_code == 0, result.output
    data = yaml.safe_load(target.read_text())
    assert data["model"]["N"] == 1
    assert parse_complex(data["model"]["alpha"]) == pytest.approx(1.3j)
    assert data["tolerances"]["profile"] == "strict"
    assert data["output"]["format"] == "json"


@pytest.mark.parametrize("N", ["4", "5"])
def test_shipped_config_supports_larger_sizes(runner, N):
    result = runner.invoke(cli, ["verify", "--n", N, "--check", "tridiagonal", "--config-file", REPO_CONFIG])
    assert result.exit_code == 0, result.output
    assert "All checks are within tolerance." in result.output


def test_overlaps_csv_on_stdout_keeps_tables_on_stderr(no_config):
    result = _split_runner().invoke(cli, ["overlaps", "--n", "2", "--closed-form", "--check", "orthogonality",
                                          *MODEL_FLAGS, *no_config])
    assert result.exit_code == 0, result.output
    rows = list(csv.reader(io.StringIO(result.stdout)))
    assert rows[0] == OVERLAP_HEADER
    assert len(rows) == 1 + 16
    assert "Closed-form overlaps" in result.stderr
    assert "orthogonality:" in result.stderr


def test_overlaps_json_on_stdout_is_parseable(no_config):
    result = _split_runner().invoke(cli, ["overlaps", "--n", "2", "--format", "json", "--check", "recurrence",
                                          *MODEL_FLAGS, *no_config])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.stdout)
    assert payload["N"] == 2
    assert "recurrence:" in result.stderr


def test_basis_tilde_kind_defaults_to_bras(runner, no_config, tmp_path):
    out = tmp_path / "bras.json"
    result = runner.invoke(cli, ["basis", "--kind", "phi_tilde", "--n", "1", *MODEL_FLAGS, *no_config,
                                 "--out", str(out)])
    assert result.exit_code == 0, result.output
    payload = json.loads(out.read_text())
    assert payload["kind"] == "phi_tilde"
    assert payload["as_bra"] is True
    assert len(payload["vectors"]) == 2
