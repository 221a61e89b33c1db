import csv
import io
import json
from pathlib import Path

import pytest

from chapter11 import value_engine as ve
from chapter11.cli import main

MODELS = Path(__file__).resolve().parents[1] / "models"
REF = str(MODELS / "reference.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    lines = text.split("\r\n")
    assert lines[0].startswith("# ")
    return list(csv.reader(io.StringIO("\n".join(lines[1:]))))


def test_validate_ok(capsys):
    code, out, _ = run(capsys, "model", "validate", REF)
    assert code == 0 and "POSITIVE" in out


def test_validate_bad_weights(capsys):
    code, _, err = run(capsys, "model", "validate", str(MODELS / "bad_weights.json"))
    assert code == 1
    assert "solvent.jumps.components[].weight" in err


def test_validate_syntax_error(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text('{\n  "c": 1.0,\n  "q": oops\n}\n')
    code, _, err = run(capsys, "model", "validate", str(bad))
    assert code == 1 and "line 3" in err


def test_missing_file(capsys):
    code, _, err = run(capsys, "barrier", "/nonexistent/model.json")
    assert code == 1


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == 64
    assert run(capsys, "barrier", REF, "--bogus")[0] == 64
    assert run(capsys, "simulate", REF, "--x0", "1.0")[0] == 64  # --seed is mandatory
    assert run(capsys, "simulate", REF, "--x0", "1.0", "--seed", "1", "--quantity", "exit")[0] == 64


def test_barrier_output(capsys):
    code, out, _ = run(capsys, "barrier", REF)
    assert code == 0
    assert out.endswith("\r\n")
    header, row = rows_of(out)[:2]
    rec = dict(zip(header, row))
    assert rec["regime_case"] == "POSITIVE"
    assert float(rec["closed_form_delta"]) <= 1e-6
    assert len(row[0].replace(".", "").lstrip("0")) >= 16  # full precision


def test_barrier_json_meta(capsys):
    code, out, _ = run(capsys, "barrier", REF, "--format", "json")
    doc = json.loads(out)
    assert doc["meta"]["command"] == "barrier" and "sha256" in doc["meta"]
    assert doc["rows"][0]["regime_case"] == "POSITIVE"


def test_sweep_plateau(capsys):
    code, out, _ = run(capsys, "sweep", REF, "--param", "c", "--from", "0.5", "--to", "6", "--steps", "12")
    assert code == 0
    header, *rows = rows_of(out)
    rows = [r for r in rows if r]
    assert len(rows) == 13
    gap = [float(r[header.index("d_star_minus_c")]) for r in rows]
    flat = [g == 0.0 for g in gap]
    k = flat.index(True)
    assert all(flat[k:]) and not any(flat[:k]) and k > 0


def test_sweep_lambda_and_q(capsys):
    for param in ("lambda", "q"):
        code, out, _ = run(capsys, "sweep", REF, "--param", param, "--from", "0.05", "--to", "2", "--steps", "3")
        assert code == 0 and rows_of(out)[0][0] == param


def test_value_table(capsys, ref_sol):
    code, out, _ = run(capsys, "value", REF, "--from", "-1", "--to", "6", "--steps", "7")
    header, *rows = [r for r in rows_of(out) if r]
    assert header == ["x", "V", "V_tilde"]
    assert float(rows[0][1]) == pytest.approx(ref_sol.V(-1.0), rel=1e-15)
    assert rows[-1][2] == ""  # V_tilde only defined below c


def test_moments_and_exit(capsys, ref, ref_sol):
    code, out, _ = run(capsys, "moments", REF, "--x", "2", "--n", "2")
    rows = [r for r in rows_of(out) if r][1:]
    assert float(rows[1][2]) == pytest.approx(ve.moment(ref, 2, 2.0, ref_sol.d_star), rel=1e-15)
    code, out, _ = run(capsys, "exit", REF, "--z", "3", "--from", "0.5", "--to", "3", "--steps", "5")
    rows = [r for r in rows_of(out) if r][1:]
    assert float(rows[-1][1]) == pytest.approx(1.0)


def test_scale_table(capsys):
    code, out, _ = run(capsys, "scale", REF, "--from", "0", "--to", "2", "--steps", "4")
    header, first = rows_of(out)[:2]
    assert header[:2] == ["x", "W"] and float(first[1]) == pytest.approx(1 / 1.5)


def test_simulate_deterministic(tmp_path, capsys):
    args = ["simulate", REF, "--seed", "11", "--x0", "2", "--n-paths", "3000"]
    code, a, _ = run(capsys, *args, "--workers", "1")
    code2, b, _ = run(capsys, *args, "--workers", "2")
    assert code == code2 == 0 and a == b
    header, row = rows_of(a)[:2]
    assert abs(float(row[header.index("z_score")])) < 4
    paths = tmp_path / "p.csv"
    run(capsys, *args, "--paths-csv", str(paths))
    lines = paths.read_text().splitlines()
    assert lines[0] == "path,status,T_D,payoff" and len(lines) == 3001


def test_simulate_other_quantities(capsys):
    code, out, _ = run(capsys, "simulate", REF, "--seed", "1", "--x0", "0.5", "--quantity", "exit", "--z", "3",
                       "--n-paths", "2000")
    assert code == 0
    code, out, _ = run(capsys, "simulate", REF, "--seed", "1", "--x0", "2", "--quantity", "bankruptcy",
                       "--n-paths", "2000")
    assert code == 0 and "frac_bankrupt" in out
    code, out, _ = run(capsys, "simulate", REF, "--seed", "1", "--x0", "1", "--quantity", "exit", "--z", "2",
                       "--no-regime-switching", "--n-paths", "2000")
    assert code == 0
    code, out, _ = run(capsys, "simulate", REF, "--seed", "1", "--x0", "2", "--dt-halving", "2", "--dt", "0.05",
                       "--eps-trunc", "0.01", "--n-paths", "200")
    assert code == 0 and len([r for r in rows_of(out) if r]) == 3


def test_simulate_domain_error(capsys):
    code, _, err = run(capsys, "simulate", REF, "--seed", "1", "--x0", "2", "--state", "insolvent")
    assert code == 1 and "insolvent" in err


def test_verify(tmp_path, capsys):
    res = tmp_path / "res.csv"
    code, out, _ = run(capsys, "verify", REF, "--n-interior", "40", "--n-above", "10", "--n-insolvent", "20",
                       "--residuals-csv", str(res))
    assert code == 0
    statuses = [r[3] for r in rows_of(out)[1:] if r]
    assert statuses == ["PASS"] * 4
    assert res.read_text().startswith("region,x,residual")


def test_verify_failure_exit_code(capsys):
    code, out, _ = run(capsys, "verify", REF, "--barrier", "1.5", "--n-interior", "20", "--n-above", "20",
                       "--n-insolvent", "5")
    assert code == 3 and "FAIL" in out


def test_output_file(tmp_path, capsys):
    target = tmp_path / "b.csv"
    code, out, _ = run(capsys, "barrier", REF, "-o", str(target))
    assert code == 0 and out == ""
    assert target.read_bytes().count(b"\r\n") == 3


def test_numerical_failure_exit_code(tmp_path, capsys, monkeypatch):
    from chapter11 import cli
    from chapter11.errors import BracketError

    def boom(model):
        raise BracketError("no bracket")

    monkeypatch.setattr(cli.ve, "optimal_barrier", boom)
    assert run(capsys, "barrier", REF)[0] == 2
