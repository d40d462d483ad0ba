import json
import subprocess
import sys

import pytest

from amrcontrol.cli import PARAM_FLAGS, build_parser, main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_equilibria_report(capsys):
    code, out, err = run(["equilibria", "--scenario", "south-amoxicillin"], capsys)
    assert code == 0 and err == ""
    data = json.loads(out)
    p0 = data["equilibria"][0]
    assert p0["kind"] == "P0" and p0["residual"] == 0.0


def test_regions_atlas(tmp_path, capsys):
    out = tmp_path / "atlas.csv"
    code, _, _ = run(["regions", "--hs", "1.31", "--grid", "200", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# ") and "hs=1.31" in lines[0] and "grid=200" in lines[0]
    assert lines[1] == "R_s,R_r,h_s,region"
    rows = lines[2:]
    assert len(rows) == 40000
    assert "1.05,0.71,1.31,R5" in rows


def test_control_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for f in (a, b):
        code, _, _ = run(["control", "--scenario", "south-amoxicillin", "--T", "10", "--out", str(f)], capsys)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    header, cols = a.read_text().splitlines()[:2]
    assert cols == "t,S,R,lambda1,lambda2,h1,h2"
    for token in ("T=10.0", "c=1.0", "w2=10.0", "n_grid=1001", "omega=0.5"):
        assert token in header.split()


def test_control_summary(tmp_path, capsys):
    s = tmp_path / "s.json"
    code, _, _ = run(["control", "--scenario", "south-gentamicin", "--n-grid", "201", "--out",
                      str(tmp_path / "c.csv"), "--summary", str(s)], capsys)
    assert code == 0
    summary = json.loads(s.read_text())
    assert summary["converged"] is True and {"J", "iterations"} <= set(summary)


def test_simulate_to_stdout(capsys):
    code, out, _ = run(["simulate", "--scenario", "north-gentamicin", "--n-out", "11"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "t,S,R" and len(lines) == 13
    assert "alpha_bar=0.92" in lines[0] and "n_out=11" in lines[0]


def test_simulate_dimensionless(capsys):
    code, out, _ = run(["simulate", "--formulation", "dimensionless", "--n-out", "3"], capsys)
    assert code == 0 and out.splitlines()[1] == "tau,x,y"


def test_flag_precedence(tmp_path, capsys):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"region": "North", "antibiotic": "gentamicin", "overrides": {"Lambda": 6.0,
                                                                                         "alpha_bar": 0.5}}))
    code, out, _ = run(["simulate", "--scenario-file", str(f), "--alpha-bar", "0.7", "--n-out", "2"], capsys)
    assert code == 0
    header = out.splitlines()[0].split()
    assert "alpha_bar=0.7" in header and "Lambda=6.0" in header and "q_bar=0.088" in header


def test_classify_output(capsys):
    code, out, _ = run(["classify", "--scenario", "south-amoxicillin"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("region ")
    assert [ln.split()[0] for ln in lines[1:4]] == ["P0", "P1", "Pstar"]


def test_classify_basin_seeded(capsys):
    outs = []
    for _ in range(2):
        code, out, _ = run(["--seed", "7", "classify", "--scenario", "south-amoxicillin", "--basin", "4"], capsys)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1] and "basin" in outs[0]


def test_oracle_table(tmp_path, capsys):
    f = tmp_path / "o.csv"
    code, _, _ = run(["oracle", "--scenario", "south-gentamicin", "--resolution", "3", "--n-grid", "101",
                      "--out", str(f)], capsys)
    assert code == 0
    lines = f.read_text().splitlines()
    assert lines[1] == "h1,h2,J" and len(lines) == 2 + 9


def test_figure_command(tmp_path, capsys):
    code, out, _ = run(["figure", "fig6", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    assert len(out.splitlines()) == 5
    term = json.loads((tmp_path / "fig6_terminal.json").read_text())
    assert set(term) == {"south-amoxicillin-RISH", "south-amoxicillin-CISH", "south-amoxicillin-SCISH"}


@pytest.mark.parametrize("argv", [
    ["simulate", "--bogus"],
    ["regions", "--hs", "1", "--grd", "3"],
    ["regions"],
    ["figure", "fig9"],
    [],
    ["simulate", "--scenario", "south-amoxicillin", "--scenario-file", "x.json"],
    ["simulate", "--sc", "south-amoxicillin"],
])
def test_usage_errors_exit_1(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 1 and out == "" and err


@pytest.mark.parametrize("argv,field", [
    (["simulate", "--alpha-bar", "2"], "alpha_bar"),
    (["simulate", "--beta-R", "9"], "beta_R"),
    (["simulate", "--scenario", "west-amoxicillin"], "region"),
    (["regions", "--hs", "-1"], "hs"),
    (["control", "--w2", "0"], "w2"),
    (["control", "--omega", "1.5"], "relaxation"),
    (["simulate", "--scenario-file", "/nonexistent/s.json"], "s.json"),
])
def test_validation_errors_exit_1(argv, field, capsys):
    code, out, err = run(argv, capsys)
    assert code == 1 and out == ""
    assert field in err


def test_non_convergence_exit_2(capsys):
    code, out, err = run(["control", "--scenario", "south-gentamicin", "--c", "100", "--max-iter", "2",
                          "--n-grid", "201"], capsys)
    assert code == 2 and out == "" and "did not converge" in err


def test_step_budget_exit_2(capsys):
    code, _, err = run(["simulate", "--max-steps", "3"], capsys)
    assert code == 2 and "StepBudgetExceeded" in err


def test_help_lists_commands_and_flags():
    parser = build_parser()
    text = parser.format_help()
    for cmd in ("simulate", "equilibria", "classify", "regions", "control", "oracle", "figure"):
        assert cmd in text
    sub = parser._subparsers._group_actions[0].choices["simulate"].format_help()
    for flag in list(PARAM_FLAGS) + ["--scenario", "--scenario-file", "--method", "--rel-tol", "--out"]:
        assert flag in sub


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "amrcontrol", "regions", "--hs", "0.5", "--grid", "2"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.splitlines()[1:] == ["R_s,R_r,h_s,region", "1.0,1.0,0.5,boundary", "1.0,2.0,0.5,boundary",
                                         "2.0,1.0,0.5,boundary", "2.0,2.0,0.5,R3"]
