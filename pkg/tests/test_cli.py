import io
import json
import subprocess
import sys

import pytest

from conftest import FIXTURES, SAFE_KNIFE, UNSAFE_KNIFE
from safeplan.cli import main

ROOT = FIXTURES.parent
KNIFE = str(FIXTURES / "knife_child")


def run(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_check_plan_exit_codes(tmp_path, capsys):
    (tmp_path / "safe.plan").write_text(SAFE_KNIFE)
    (tmp_path / "unsafe.plan").write_text(UNSAFE_KNIFE)
    code, out, _ = run(capsys, "check-plan", KNIFE, "--plan", str(tmp_path / "safe.plan"))
    assert code == 0 and out.startswith("Safe")
    code, out, _ = run(capsys, "check-plan", KNIFE, "--plan", str(tmp_path / "unsafe.plan"))
    assert code == 1 and "FeasibleUnsafe" in out and "step 2" in out


def test_check_plan_json_and_stdin(capsys, monkeypatch):
    code, out, _ = run(capsys, "check-plan", KNIFE, "--plan", "-", "--format", "json",
                       stdin=UNSAFE_KNIFE, monkeypatch=monkeypatch)
    data = json.loads(out)
    assert code == 1
    assert (data["verdict"], data["F"], data["S"]) == ("feasible_unsafe", 1, 0)
    assert data["danger_events"][0]["step"] == 2


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "check-plan", KNIFE)[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "check-plan", str(tmp_path / "missing"), "--plan", "-")[0] == 2
    bad = tmp_path / "bad"
    bad.mkdir()
    (bad / "domain.pddl").write_text("(define (domain x")
    (bad / "problem.pddl").write_text("")
    (bad / "danger.json").write_text("{}")
    (bad / "meta.json").write_text("{}")
    code, _, err = run(capsys, "solve", str(bad))
    assert code == 2 and err.startswith("safeplan:")
    assert run(capsys, "--version")[0] == 0


def test_solve_pipes_into_check_plan():
    solve = subprocess.run([sys.executable, "-m", "safeplan", "solve", KNIFE], capture_output=True, text=True)
    assert solve.returncode == 0 and solve.stdout.startswith(";")
    check = subprocess.run([sys.executable, "-m", "safeplan", "check-plan", KNIFE, "--plan", "-"],
                           input=solve.stdout, capture_output=True, text=True)
    assert check.returncode == 0, check.stdout + check.stderr


def test_validate_fixtures(capsys):
    code, out, _ = run(capsys, "validate-task", str(FIXTURES), "--format", "json")
    assert code == 0
    assert len(json.loads(out)["tasks"]) == 15


def test_config_file_supplies_defaults(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('format = "json"\nmode = "basic"\n')
    code, out, _ = run(capsys, "solve", KNIFE, "--config", str(cfg))
    assert code == 0 and json.loads(out)["mode"] == "basic"
    code, out, _ = run(capsys, "solve", KNIFE, "--config", str(cfg), "--format", "text")
    assert out.startswith("; knife_child")
    (tmp_path / "broken.toml").write_text("format = ")
    assert run(capsys, "solve", KNIFE, "--config", str(tmp_path / "broken.toml"))[0] == 2


def test_evaluate_analyze_deterministic(tmp_path, capsys):
    outs = []
    for i, par in enumerate(("1", "8")):
        out = tmp_path / f"run{i}"
        assert run(capsys, "evaluate", str(FIXTURES), "--provider", f"directory:{ROOT / 'plans'}",
                   "--parallel", par, "--out", str(out))[0] == 0
        assert run(capsys, "analyze", "--results", str(out / "results.jsonl"), "--models",
                   str(ROOT / "models.csv"), "--bundles", str(FIXTURES), "--resamples", "500",
                   "--seed", "3", "--out", str(out / "analysis"))[0] == 0
        outs.append(out)
    for rel in ("results.jsonl", "report.json", "report.csv", "analysis/report.json"):
        assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes(), rel
    rep = json.loads((outs[0] / "analysis" / "report.json").read_text())
    assert rep["analysis"]["fits"]["S"]["n"] == 7
    assert len((outs[0] / "results.jsonl").read_text().splitlines()) == 7 * 15


def test_evaluate_needs_provider(tmp_path, capsys):
    assert run(capsys, "evaluate", KNIFE, "--out", str(tmp_path))[0] == 2


def test_report_slice(tmp_path, capsys):
    out = tmp_path / "r"
    run(capsys, "evaluate", str(FIXTURES), "--provider", f"directory:{ROOT / 'plans'}", "--out", str(out))
    code, text, _ = run(capsys, "report", "--results", str(out / "results.jsonl"), "--slice-by", "entity",
                        "--format", "json")
    rows = json.loads(text)["summaries"]
    assert code == 0 and {r["slice_key"] for r in rows} == {"entity"}


def test_inject_noise_check(tmp_path, capsys):
    code, out, _ = run(capsys, "inject-noise", KNIFE, str(FIXTURES / "wet_floor"), "--levels", "2,16",
                       "--check", "--out", str(tmp_path), "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["mismatches"] == 0 and len(data["bundles"]) == 4
    assert (tmp_path / "noise_16" / "knife_child" / "domain.pddl").exists()
    assert run(capsys, "inject-noise", KNIFE, "--levels", "3")[0] == 2
    assert run(capsys, "inject-noise", KNIFE, "--levels", "3", "--allow-any-count")[0] == 0
