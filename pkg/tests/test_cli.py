import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from gauss_maxtail import cli, exact


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def payload(text):
    report = json.loads(text)
    assert report["schema"] == "gauss-maxtail/1"
    assert "generated_at" in report["metadata"]
    return report["payload"]


@pytest.fixture
def matrix_csv(tmp_path):
    R = np.array([[1, 0.2, 0.1, 0.0], [0.2, 1, 0.3, 0.1], [0.1, 0.3, 1, 0.2], [0.0, 0.1, 0.2, 1]])
    p = tmp_path / "R.csv"
    p.write_text("\n".join(",".join(repr(float(v)) for v in row) for row in R) + "\n")
    return str(p)


def test_exact(capsys):
    code, out, _ = run(capsys, "exact", "--n", "4", "--rho0", "0.5", "--t", "1.0")
    assert code == 0
    lt = payload(out)["lower_tail"]
    assert lt["abs_error_bound"] <= 1e-10
    assert lt["value"] == pytest.approx(exact.lower_tail_exact(4, 0.5, 1.0).value)


def test_exact_single_variable(capsys):
    code, out, _ = run(capsys, "exact", "--n", "1", "--rho0", "0.5", "--t", "0")
    assert payload(out)["lower_tail"]["value"] == 0.5


def test_exact_from_delta(capsys):
    code, out, _ = run(capsys, "exact", "--n", "100", "--rho0", "0.5", "--delta0", "0.5",
                       "--small-ball")
    p = payload(out)
    assert p["threshold"]["t"] == pytest.approx(1.072983, abs=1e-6)
    assert p["lower_tail"]["value"] == pytest.approx(
        exact.lower_tail_exact(100, 0.5, p["threshold"]["t"]).value)
    assert 0 < p["small_ball"]["value"] < p["lower_tail"]["value"]


@pytest.mark.parametrize("argv", [
    ["exact", "--n", "4", "--rho0", "0.5"],
    ["exact", "--n", "4", "--rho0", "0.5", "--t", "1", "--delta0", "0.5"],
    ["exact", "--n", "4", "--rho0", "1.5", "--t", "1"],
    ["exact", "--rho0", "0.5", "--t", "1"],
    ["sharpness", "--n-grid", "1000,100", "--delta0", "0.5", "--rho0", "0.5"],
    ["mc", "--n", "4", "--rho0", "0.5", "--t", "1", "--samples", "10"],
    ["mc", "--matrix", "/nonexistent.csv", "--t", "1"],
    ["median", "--n", "4", "--rho0", "0.5", "--format", "csv"],
])
def test_config_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("gauss-maxtail:")
    assert out == ""


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["exact", "--n", "abc"])
    assert exc.value.code == 2


def test_matrix_parse_error_names_cell(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,0.2\n0.2,oops\n")
    code, _, err = run(capsys, "mc", "--matrix", str(p), "--t", "1")
    assert code == 2
    assert "row 2, column 2" in err


def test_accuracy_not_reached_exit_3(capsys, monkeypatch):
    real = exact.lower_tail_exact
    monkeypatch.setattr(exact, "lower_tail_exact",
                        lambda n, rho, t: real(n, rho, t, abs_tol=1e-300, rel_tol=1e-300))
    code, out, _ = run(capsys, "exact", "--n", "1000", "--rho0", "0.5", "--t", "1")
    assert code == 3
    assert payload(out)["lower_tail"]["converged"] is False


def test_bound_table(capsys):
    code, out, _ = run(capsys, "bound", "--n", "1000", "--rho0", "0.5", "--delta0", "0.5",
                       "--samples", "100000")
    assert code == 0
    rows = {r["name"]: r for r in payload(out)["rows"]}
    for name in ("borell_tis", "pv_fixed_ratio", "hartigan", "main_rate", "reference_level"):
        assert name in rows
    for r in rows.values():
        if r["applicable"] and r["kind"] == "probability-bound":
            assert r["value"] >= r["exact_at_threshold"]


def test_bound_hartigan_absent_with_reason(capsys):
    code, out, _ = run(capsys, "bound", "--n", "100", "--rho0", "0.5", "--delta0", "0.5",
                       "--epsilon", "0.1", "--samples", "10000")
    rows = {r["name"]: r for r in payload(out)["rows"]}
    assert rows["hartigan"]["applicable"] is False
    assert "kappa" in rows["hartigan"]["reason"]
    assert rows["hartigan"]["value"] is None


def test_bound_single_variable(capsys):
    code, out, _ = run(capsys, "bound", "--n", "1", "--rho0", "0.5", "--delta0", "0.5")
    rows = payload(out)["rows"]
    assert rows and not any(r["applicable"] for r in rows)


def test_bound_dense_matrix(capsys, matrix_csv):
    code, out, _ = run(capsys, "bound", "--matrix", matrix_csv, "--delta0", "0.4",
                       "--rho0", "0.5", "--samples", "20000", "--rho-tilde", "0.15")
    p = payload(out)
    assert p["statistics"]["source"] == "monte carlo"
    names = [r["name"] for r in p["rows"]]
    assert "subset_rate" in names


def test_sharpness_csv_round_trip(capsys):
    code, out, _ = run(capsys, "sharpness", "--n-grid", "100,1000,10000", "--delta0", "0.5",
                       "--rho0", "0.5", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[-1].startswith("# band_min=")
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[:-1]))))
    assert list(rows[0]) == cli.SHARPNESS_FIELDS
    code, out_json, _ = run(capsys, "sharpness", "--n-grid", "100,1000,10000", "--delta0",
                            "0.5", "--rho0", "0.5")
    ref = payload(out_json)["rows"]
    for got, want in zip(rows, ref):
        for key in cli.SHARPNESS_FIELDS[1:]:
            assert float(got[key]) == want[key]


def test_sharpness_single_point(capsys):
    code, out, _ = run(capsys, "sharpness", "--n-grid", "1000", "--delta0", "0.5",
                       "--rho0", "0.5")
    assert payload(out)["summary"]["band_ratio"] == 1.0


def test_mc_deterministic(capsys, matrix_csv):
    argv = ["mc", "--matrix", matrix_csv, "--t", "1.0", "--samples", "1000000", "--seed", "7"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert json.loads(a)["payload"] == json.loads(b)["payload"]
    assert json.dumps(json.loads(a)["payload"]) == json.dumps(json.loads(b)["payload"])


def test_slepian_check_identity(capsys):
    code, out, _ = run(capsys, "slepian-check", "--n", "8", "--rho0", "0.5", "--t", "1")
    assert code == 0
    assert payload(out)["report"]["verdict"] == "consistent"


def test_slepian_check_hypothesis_failure_exit_4(capsys, matrix_csv):
    code, out, _ = run(capsys, "slepian-check", "--matrix", matrix_csv, "--rho0", "0.1",
                       "--t", "1")
    assert code == 4
    assert payload(out)["report"]["verdict"] == "hypothesis-fails"


def test_median_exact(capsys):
    code, out, _ = run(capsys, "median", "--n", "10000", "--rho0", "0.5")
    p = payload(out)
    assert p["source"] == "exact"
    assert p["median"] <= 3.034854


def test_median_dense(capsys, matrix_csv):
    code, out, _ = run(capsys, "median", "--matrix", matrix_csv, "--samples", "20000")
    p = payload(out)
    assert p["source"] == "monte carlo"
    assert p["median"]["ci_low"] <= p["median"]["value"] <= p["median"]["ci_high"]


def test_out_file(capsys, tmp_path):
    dest = tmp_path / "r.json"
    code, out, _ = run(capsys, "exact", "--n", "4", "--rho0", "0.5", "--t", "1", "--out",
                       str(dest))
    assert out == ""
    assert payload(dest.read_text())["lower_tail"]["converged"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gauss_maxtail", "exact", "--n", "3",
                           "--rho0", "0.2", "--t", "0.5"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert payload(proc.stdout)["lower_tail"]["value"] > 0
