from __future__ import annotations

import json
import subprocess
import sys

import pytest

from gptcommit import cli
from gptcommit import commitment as cm


def _gen(tmp_path, preset, *extra):
    out = tmp_path / f"{preset}.json"
    assert cli.main(["generate", preset, "-o", str(out), *extra]) == 0
    return out


def _analyze(path, tmp_path, *extra):
    rep = tmp_path / "report.json"
    code = cli.main(["analyze", str(path), "--report", "json", "--no-timings", "-o", str(rep), *extra])
    return code, json.loads(rep.read_text())


def test_identical_preset_passes(tmp_path):
    path = _gen(tmp_path, "identical", "--n", "3")
    code, rep = _analyze(path, tmp_path)
    assert code == cli.EXIT_OK
    res = rep["result"]
    assert abs(res["pb_dual"] - 1 / 3) < 1e-6
    assert abs(res["product"] - res["alpha"] / 3) < 1e-6


def test_helstrom_preset_with_oracle(tmp_path):
    code, rep = _analyze(_gen(tmp_path, "qubit_helstrom"), tmp_path, "--oracle")
    assert code == cli.EXIT_OK
    assert rep["oracle"]["method"] == "helstrom_closed_form" and rep["oracle"]["agree"]
    assert abs(rep["result"]["pb_dual"] - 0.853553390593) < 1e-5


@pytest.mark.parametrize("preset", ["gbit_pair", "classical_orthogonal", "bb84_style"])
def test_other_presets_pass_with_oracle(tmp_path, preset):
    code, rep = _analyze(_gen(tmp_path, preset), tmp_path, "--oracle")
    assert code == cli.EXIT_OK, rep["exit_reason"]


def test_declared_low_alpha_is_invalid(tmp_path):
    path = _gen(tmp_path, "qubit_helstrom", "--declare-alpha")
    d = json.loads(path.read_text())
    assert d["alpha"] == pytest.approx(1.0)
    d["alpha"] = 0.4
    path.write_text(json.dumps(d))
    code, rep = _analyze(path, tmp_path)
    assert code == cli.EXIT_INVALID and rep["exit_reason"] == "invalid_protocol"


def test_true_low_alpha_is_invalid(tmp_path):
    path = _gen(tmp_path, "qubit_helstrom")
    d = json.loads(path.read_text())
    half = {"re": [[0.5, 0.0], [0.0, 0.5]], "im": [[0.0, 0.0], [0.0, 0.0]]}
    d["accept_effects"] = [half, half]
    path.write_text(json.dumps(d))
    assert _analyze(path, tmp_path)[0] == cli.EXIT_INVALID


def test_restricted_effects_exit_code(tmp_path):
    code, rep = _analyze(_gen(tmp_path, "restricted"), tmp_path)
    assert code == cli.EXIT_INAPPLICABLE
    assert rep["result"]["failure"] == "impossibility_inapplicable"


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"version": "gptcommit-protocol/1", "theory": ')
    code, rep = _analyze(bad, tmp_path)
    assert code == cli.EXIT_PARSE and "line 1" in rep["message"]
    code, _ = _analyze(tmp_path / "missing.json", tmp_path)
    assert code == cli.EXIT_PARSE


def test_solver_failure_exit_code(tmp_path):
    code, rep = _analyze(_gen(tmp_path, "qubit_helstrom"), tmp_path, "--max-iter", "5")
    assert code == cli.EXIT_SOLVER and rep["result"]["failure"] == "solver_failure"


def test_bound_violation_exit_code(tmp_path, monkeypatch):
    # A negative slack makes the product check impossible to meet.
    monkeypatch.setattr(cm, "PRODUCT_TOL", -1.0)
    code, rep = _analyze(_gen(tmp_path, "identical"), tmp_path)
    assert code == cli.EXIT_BOUND and rep["exit_reason"] == "bound_violation"


def test_oracle_mismatch_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "ORACLE_TOL", -1.0)
    code, rep = _analyze(_gen(tmp_path, "qubit_helstrom"), tmp_path, "--oracle")
    assert code == cli.EXIT_ORACLE


def test_generate_is_deterministic(tmp_path, capsys):
    args = ["generate", "random_quantum", "--seed", "7", "--dim-a", "2", "--dim-b", "2", "--n", "2"]
    assert cli.main(args) == 0
    first = capsys.readouterr().out
    assert cli.main(args) == 0
    assert capsys.readouterr().out == first


def test_generate_rejects_foreign_parameters(capsys):
    assert cli.main(["generate", "qubit_helstrom", "--n", "3"]) == cli.EXIT_PARSE
    with pytest.raises(SystemExit) as err:
        cli.main(["generate", "no_such_preset"])
    assert err.value.code == 2


def test_analyze_is_byte_deterministic(tmp_path):
    path = _gen(tmp_path, "random_quantum", "--seed", "3", "--dim-a", "2", "--dim-b", "3", "--n", "3")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert cli.main(["analyze", str(path), "--report", "json", "--no-timings", "-o", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("which,key", [("bob-primal", "pb_primal"), ("bob-dual", "pb_dual_solver")])
def test_pipeline_consistency(tmp_path, which, key):
    path = _gen(tmp_path, "random_quantum", "--seed", "1", "--dim-a", "2", "--dim-b", "2", "--n", "2")
    _, rep = _analyze(path, tmp_path)
    prog = tmp_path / "prog.json"
    sol_a = tmp_path / "sa.json"
    sol_b = tmp_path / "sb.json"
    assert cli.main(["solve", str(path), "--extract", which, "--write-program", str(prog),
                     "--report", "json", "-o", str(sol_a)]) == 0
    assert cli.main(["solve", str(prog), "--report", "json", "-o", str(sol_b)]) == 0
    va = json.loads(sol_a.read_text())["solution"]["primal_value"]
    vb = json.loads(sol_b.read_text())["solution"]["primal_value"]
    assert abs(va - rep["result"][key]) <= 1e-8
    assert abs(vb - rep["result"][key]) <= 1e-8
    if which == "bob-dual":
        repaired = json.loads(sol_a.read_text())["solution"]["repaired_value"]
        assert abs(repaired - rep["result"]["pb_dual"]) <= 1e-8


def test_solve_tiny_lp_and_infeasible(tmp_path):
    lp = tmp_path / "lp.json"
    lp.write_text(json.dumps({"version": "gptcommit-coneprog/1", "sense": "sup", "phi": [[1, 1]],
                              "b": [1], "c": [1, 1], "cone": {"kind": "orthant", "dim": 2}}))
    out = tmp_path / "out.json"
    assert cli.main(["solve", str(lp), "--report", "json", "-o", str(out)]) == 0
    sol = json.loads(out.read_text())["solution"]
    assert abs(sol["primal_value"] - 1) < 1e-6 and sol["gap"] < 1e-7 and sol["slater_point_found"]
    inf = tmp_path / "inf.json"
    inf.write_text(json.dumps({"version": "gptcommit-coneprog/1", "phi": [[1, 1]], "b": [-1],
                               "c": [1, 0], "cone": {"kind": "orthant", "dim": 2}}))
    assert cli.main(["solve", str(inf), "--report", "json", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["solution"]["status"] == "infeasible_detected"


def test_solve_protocol_needs_extract(tmp_path):
    path = _gen(tmp_path, "qubit_helstrom")
    assert cli.main(["solve", str(path), "--report", "json", "-o", str(tmp_path / "o.json")]) == cli.EXIT_PARSE


def test_text_report(tmp_path, capsys):
    path = _gen(tmp_path, "identical")
    assert cli.main(["analyze", str(path)]) == 0
    out = capsys.readouterr().out
    assert "result.product_bound_check: True" in out and "exit_code: 0" in out


def test_console_script_entry_point(tmp_path):
    path = _gen(tmp_path, "identical")
    proc = subprocess.run([sys.executable, "-m", "gptcommit.cli", "analyze", str(path), "--report", "json"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["exit_reason"] == "pass"
