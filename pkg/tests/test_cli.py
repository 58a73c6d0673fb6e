import json

import pytest

from confsym.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_rates_flex_pairing_is_zero(capsys):
    code, out, _ = run(capsys, "rates", "--system", "flex", "-n", "100")
    data = json.loads(out)
    assert code == 0 and data["format_version"] == "1.0"
    assert data["results"]["pairing"]["res_lambda"] <= 1e-12
    assert data["results"]["pairing"]["res_mu"] <= 1e-12


def test_cohomology_example(capsys):
    code, out, _ = run(capsys, "cohomology", "--dim", "3", "--matrix", "0 1 0 0 0 1 1 1 0")
    data = json.loads(out)
    assert code == 0
    assert data["results"]["wedge_square"] == [[0, -1, 0], [0, 0, -1], [1, 0, -1]]


def test_bad_matrix_is_input_error(capsys):
    code, _, err = run(capsys, "cohomology", "--dim", "2", "--matrix", "1 2 3")
    assert code == 2 and "invalid input" in err


def test_failed_verdict_names_the_check(capsys):
    code, _, err = run(capsys, "pairing", "--system", "degenerate")
    assert code == 1 and "pairing" in err


def test_unknown_system_is_input_error(capsys):
    code, _, _ = run(capsys, "check-conformal", "--system", "nosuch")
    assert code == 2


def test_config_schema_error_exit(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[system]\nname = dsm\n[sampling]\ncount = lots\n")
    code, _, err = run(capsys, "check-conformal", "--config", str(cfg))
    assert code == 2 and "line 4" in err


def test_flags_override_config(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[system]\nname = flex\n[sampling]\ncount = 7\n")
    code, out, _ = run(capsys, "check-conformal", "--config", str(cfg), "--samples", "5", "--tol-conformal", "1e-11")
    data = json.loads(out)
    assert code == 0 and data["results"]["samples"] == 5
    assert data["config"]["system"] == "flex" and data["config"]["tolerances"]["conformal"] == 1e-11


def test_artifacts_are_reproducible(capsys, tmp_path):
    for d in ("a", "b"):
        assert main(["check-conformal", "--system", "dsm", "--samples", "20", "--seed", "4",
                     "--out", str(tmp_path / d), "--format", "both"]) == 0
    for name in ("check_conformal.json", "check_conformal_residuals.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header = (tmp_path / "a" / "check_conformal_residuals.csv").read_text().splitlines()[0]
    assert header == "x0,x1,residual"


def test_exactness_reports_non_exact_case(capsys):
    code, out, _ = run(capsys, "exactness", "--system", "dsm", "--param", "sigma=0.0", "--samples", "10")
    data = json.loads(out)
    assert code == 0 and data["results"]["classification"] == "non-exact"


def test_primitive_csv_columns(capsys):
    code, out, _ = run(capsys, "primitive", "--system", "coupled_test", "-n", "4", "--format", "csv")
    assert code == 0
    assert "# series_plus\nN,boundary,partial_sum,value\n" in out


def test_scatter_writes_json_lines(capsys, tmp_path):
    code = main(["scatter", "--system", "coupled_test", "--grid", "2", "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "scatter.jsonl").read_text().splitlines()
    assert len(lines) == 4 and "x_plus" in json.loads(lines[0])


@pytest.mark.parametrize("argv", [
    ["vanishing", "--system", "flex"],
    ["graph", "--system", "skew_graph", "--samples", "20"],
    ["fiber", "--system", "coupled_test"],
    ["converge", "--system", "flex", "-n", "20"],
    ["suite", "--criteria", "2,10"],
])
def test_subcommands_pass(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0 and json.loads(out)["passed"]


def test_help_documents_csv_columns(capsys):
    with pytest.raises(SystemExit):
        main(["primitive", "--help"])
    assert "N, boundary, partial_sum, value" in capsys.readouterr().out
