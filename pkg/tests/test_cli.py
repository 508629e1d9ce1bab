"""End-to-end tests for the command line surface.

Commands run in-process through ``main`` so exit codes and output can be
asserted without spawning subprocesses.  Output values are cross-checked
against the library layers the commands wrap.
"""

from __future__ import annotations

import json
import math

import pytest

from sudler import PeriodSpec, c_k_closed, spectral
from sudler.cli import main


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def csv_rows(out):
    lines = out.strip().split("\n")
    assert lines[0] == "# schema=1"
    header = lines[1].split(",")
    body = [ln for ln in lines[2:] if not ln.startswith("#")]
    footers = [ln for ln in lines[2:] if ln.startswith("#")]
    rows = [ln.split(",") for ln in body]
    return header, rows, footers


def test_limit_fn_default_grid(capsys):
    code, out, err = run_cli(["limit-fn", "--period", "1,2"], capsys)
    assert code == 0
    header, rows, _ = csv_rows(out)
    assert header == ["eps", "value", "T", "tail_bound", "flags"]
    assert len(rows) == 201
    assert rows[0][0] == "-1"
    assert rows[-1][0] == "1"
    mid = rows[100]
    assert mid[0] == "0"
    closed = c_k_closed(spectral(PeriodSpec((1, 2), 1))).value
    assert abs(float(mid[1]) - float(closed)) < 1e-9


def test_limit_fn_single_point_matches_closed_form(capsys):
    code, out, err = run_cli(
        ["limit-fn", "--period", "1,4", "--k", "2", "--eps", "0:0:1"], capsys
    )
    assert code == 0
    header, rows, _ = csv_rows(out)
    assert len(rows) == 1
    value = float(rows[0][1])
    closed = float(c_k_closed(spectral(PeriodSpec((1, 4), 2))).value)
    assert abs(value - closed) < 1e-12
    assert value < 1.0


def test_limit_fn_vanishing_point_sets_zero_flag(capsys):
    code, out, err = run_cli(
        ["limit-fn", "--period", "1,2", "--eps=-ckek"], capsys
    )
    assert code == 0
    header, rows, _ = csv_rows(out)
    assert len(rows) == 1
    assert rows[0][4] == "zero"
    assert float(rows[0][1]) == 0.0


def test_limit_fn_json_format(capsys):
    code, out, err = run_cli(
        ["limit-fn", "--period", "1,2", "--eps", "0:0:1", "--format", "json"],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == 1
    assert len(doc["rows"]) == 1
    row = doc["rows"][0]
    assert set(row) == {"eps", "value", "T", "tail_bound", "flags"}
    assert row["eps"] == 0.0
    assert isinstance(row["T"], int)


def test_constants_gap_small(capsys):
    code, out, err = run_cli(["constants", "--period", "2,3"], capsys)
    assert code == 0
    header, rows, _ = csv_rows(out)
    assert header == ["k", "C_closed", "C_empirical", "gap", "q_n_used"]
    assert [r[0] for r in rows] == ["1", "2"]
    for row in rows:
        assert float(row[3]) < 1e-4
        assert int(row[4]) <= 100000
    closed_1 = float(c_k_closed(spectral(PeriodSpec((2, 3), 1))).value)
    assert abs(float(rows[0][1]) - closed_1) < 1e-12


def test_constants_single_offset(capsys):
    code, out, err = run_cli(
        ["constants", "--period", "2,3", "--k", "2"], capsys
    )
    assert code == 0
    header, rows, _ = csv_rows(out)
    assert len(rows) == 1
    assert rows[0][0] == "2"


def test_scan_period_two_verdicts(capsys):
    code, out, err = run_cli(
        ["scan", "--ell", "2", "--max-digit", "4"], capsys
    )
    assert code == 0
    header, rows, footers = csv_rows(out)
    assert header == ["digits", "k_max", "q_ell", "C_kmax", "upper_bound",
                      "verdict"]
    assert len(rows) == 10
    digits = [r[0] for r in rows]
    assert digits == sorted(digits)
    verdicts = {r[0]: r[5] for r in rows}
    assert verdicts["1-4"] == "lt_1_numeric"
    assert verdicts["1-3"] == "ge_1_numeric"
    assert all(r[4] == "" for r in rows)
    assert len(footers) == 1
    counts = dict(
        part.split("=")
        for part in footers[0].split(": ", 1)[1].split(",")
    )
    assert int(counts["certified_lt_1"]) == 0
    assert sum(int(v) for v in counts.values()) == 10


def test_scan_single_digit_classification(capsys):
    code, out, err = run_cli(
        ["scan", "--ell", "1", "--max-digit", "7"], capsys
    )
    assert code == 0
    header, rows, _ = csv_rows(out)
    assert len(rows) == 7
    verdicts = {r[0]: r[5] for r in rows}
    for b in range(1, 7):
        assert verdicts[str(b)] == "ge_1_numeric"
    assert verdicts["7"] == "lt_1_numeric"
    by_digits = {r[0]: r for r in rows}
    assert abs(float(by_digits["6"][3]) - 1.081399613) < 1e-6
    assert abs(float(by_digits["7"][3]) - 0.945853799) < 1e-6
    for b in range(1, 6):
        assert by_digits[str(b)][4] == ""
    assert by_digits["6"][4] != ""
    assert by_digits["7"][4] != ""


def test_verify_single_suite(capsys):
    code, out, err = run_cli(["verify", "--suite", "qnrel"], capsys)
    assert code == 0
    report = json.loads(out)
    assert set(report) == {"qnrel"}
    entry = report["qnrel"]
    assert entry["pass"] is True
    assert entry["worst_residual"] == 0.0
    assert entry["cases"] > 0


def test_verify_failure_exit_code(capsys, monkeypatch):
    def fake(**kwargs):
        return {"qnrel": {"pass": False, "worst_residual": 1.0, "cases": 1}}

    monkeypatch.setattr("sudler.cli.run_suites", fake)
    code, out, err = run_cli(["verify", "--suite", "qnrel"], capsys)
    assert code == 2
    report = json.loads(out)
    assert report["qnrel"]["pass"] is False


@pytest.mark.parametrize(
    "argv",
    [
        ["limit-fn", "--period", "1,x"],
        ["limit-fn", "--period", "1,2", "--eps", "0:1"],
        ["limit-fn", "--period", "1,2", "--eps", "1:0:0.5"],
        ["verify", "--suite", "nope"],
        ["scan", "--ell", "0", "--max-digit", "3"],
        ["sudler", "--period", "1,2"],
        ["sudler", "--period", "1,2", "--N", "0:5", "--subseq"],
        ["sudler", "--period", "1,2", "--N", "5:1"],
        ["constants", "--period", "2,3", "--k", "7"],
    ],
)
def test_usage_errors_exit_one(argv, capsys):
    code, out, err = run_cli(argv, capsys)
    assert code == 1
    assert "error" in err.lower() or "Error" in err


def test_out_file_and_determinism(tmp_path, capsys):
    f1 = tmp_path / "a.csv"
    f2 = tmp_path / "b.csv"
    for path in (f1, f2):
        code, out, err = run_cli(
            ["scan", "--ell", "1", "--max-digit", "4", "--out", str(path)],
            capsys,
        )
        assert code == 0
        assert out == ""
    assert f1.read_bytes() == f2.read_bytes()
    assert f1.read_text().startswith("# schema=1\n")


def test_sudler_plain_range(capsys):
    code, out, err = run_cli(
        ["sudler", "--period", "1,2", "--N", "0:8"], capsys
    )
    assert code == 0
    header, rows, _ = csv_rows(out)
    assert header == ["N", "P", "logP"]
    assert len(rows) == 9
    assert rows[0] == ["0", "1", "0"]
    for row in rows[1:]:
        p = float(row[1])
        logp = float(row[2])
        assert p > 0
        assert math.isclose(math.log(p), logp, rel_tol=1e-12, abs_tol=1e-12)


def test_sudler_subsequence_golden_denominators(capsys):
    code, out, err = run_cli(
        ["sudler", "--period", "1", "--subseq", "--m", "1:8"], capsys
    )
    assert code == 0
    header, rows, _ = csv_rows(out)
    assert header == ["m", "q_n", "P", "logP"]
    assert [int(r[1]) for r in rows] == [1, 2, 3, 5, 8, 13, 21, 34]
