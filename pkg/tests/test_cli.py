"""End-to-end checks of the command line, driven in-process through
main(argv) so exit codes and printed output are asserted exactly."""

import csv
import json
import shutil
import subprocess

import numpy as np
import pytest

from gateforge.cli import main
from gateforge.gates import builtin_gate, gate_to_file

CONVERGING_FREDKIN_SEED = 15793235383387715774


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------- verify

def test_verify_bundled_solution(capsys):
    assert main(["verify", "fredkin_eq7"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["solution"] == "bundled:fredkin_eq7"
    assert doc["gate"] == "fredkin"
    assert doc["verdicts"] == {"physical": True, "commutes": True,
                               "lattice": True, "matches_gate": True}
    assert max(doc["residuals"]) <= 1e-8


def test_verify_accepts_dot_json_suffix(capsys):
    assert main(["verify", "toffoli_nu1.json"]) == 0
    assert json.loads(capsys.readouterr().out)["gate"] == "toffoli"


def test_verify_report_file(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["verify", "toffoli_alt_sm", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "matches_gate: pass" in text
    assert f"report written to {out}" in text
    assert json.loads(out.read_text())["verdicts"]["lattice"] is True
    # a second run must refuse to clobber the report
    assert main(["verify", "toffoli_alt_sm", "--out", str(out)]) == 2
    assert main(["verify", "toffoli_alt_sm", "--out", str(out),
                 "--force"]) == 0


def test_verify_wrong_gate_fails_honestly(tmp_path, capsys):
    assert main(["verify", "toffoli_nu1", "--gate", "ccy"]) == 1
    doc = json.loads(capsys.readouterr().out)
    assert doc["verdicts"]["matches_gate"] is False


def test_verify_zero_solution_fails(tmp_path, capsys):
    sol = {"gate": "cnot", "basis_family": "one_local", "reduced": False,
           "basis": [["1 * ZI"], ["1 * IX"]], "lambda": [0.0, 0.0],
           "seed": None, "epochs": 0}
    path = tmp_path / "zero.json"
    path.write_text(json.dumps(sol))
    assert main(["verify", str(path)]) == 1
    doc = json.loads(capsys.readouterr().out)
    assert doc["solution"] == str(path)
    assert doc["verdicts"]["matches_gate"] is False


def test_verify_gate_file(tmp_path, capsys):
    gpath = tmp_path / "toffoli.txt"
    gate_to_file(builtin_gate("toffoli"), gpath)
    assert main(["verify", "toffoli_nu1", "--gate-file", str(gpath)]) == 0


def test_verify_missing_and_malformed(tmp_path, capsys):
    assert main(["verify", "no_such_solution"]) == 2
    assert "no solution file or bundled fixture" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["verify", str(bad)]) == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------- reduce

def test_reduce_cnot_one_local(capsys):
    assert main(["reduce", "--gate", "cnot", "--basis", "one_local"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "family one_local on 2 qubits: 7 elements"
    assert lines[1] == "commutant of the cnot generator: 3 dimensions"
    assert [l.strip() for l in lines[2:]] == ["1 * II", "1 * ZI", "1 * IX"]


def test_reduce_toffoli_two_local(capsys):
    assert main(["reduce", "--gate", "toffoli",
                 "--basis", "full_two_local"]) == 0
    out = capsys.readouterr().out
    assert "37 elements" in out
    assert "25 dimensions" in out


def test_reduce_requires_gate():
    with pytest.raises(SystemExit) as exc:
        main(["reduce", "--basis", "one_local"])
    assert exc.value.code == 2


def test_reduce_rejects_unknown_gate(capsys):
    assert main(["reduce", "--gate", "swap", "--basis", "one_local"]) == 2
    assert "swap" in capsys.readouterr().err


# ------------------------------------------------------------------ scan

def test_scan_cnot_is_infeasible(capsys):
    assert main(["scan", "--gate", "cnot", "--basis", "one_local"]) == 1
    out = capsys.readouterr().out
    assert "infeasible" in out
    assert "exhaustive" in out
    assert "obstruction:" in out
    assert "has no integer solution" in out


def test_scan_trivial_gate_is_feasible(capsys):
    assert main(["scan", "--gate", "identity:1",
                 "--basis", "one_local"]) == 0
    out = capsys.readouterr().out
    assert "feasible" in out
    assert "witness verifies: True" in out


# ----------------------------------------------------------------- train

def test_train_rejects_bad_batch_size(capsys):
    code = main(["train", "--gate", "toffoli", "--basis",
                 "diagonal_pairwise", "--batch-size", "3"])
    assert code == 2
    assert "multiple of batch_size" in capsys.readouterr().err


def test_train_short_run_writes_files(tmp_path, capsys):
    args = ["train", "--gate", "toffoli", "--basis", "diagonal_pairwise",
            "--epochs", "2", "--seed", "7", "--out", str(tmp_path)]
    assert main(args) == 1            # two epochs cannot converge here
    out = capsys.readouterr().out
    assert "restart 1: converged=False epochs=2" in out
    assert "best average gate fidelity:" in out
    assert "(9 parameters" in out
    sol = json.loads((tmp_path / "solution.json").read_text())
    assert sol["seed"] == 7
    hist = read_csv(tmp_path / "history.csv")
    assert [r["epoch"] for r in hist] == ["1", "2"]

    # overwrite protection, then explicit --force
    assert main(args) == 2
    assert "refusing to overwrite" in capsys.readouterr().err
    assert main(args + ["--force"]) == 1


def test_train_restart_files(tmp_path, capsys):
    args = ["train", "--gate", "toffoli", "--basis", "diagonal_pairwise",
            "--epochs", "1", "--seed", "0", "--restarts", "2",
            "--jobs", "2", "--out", str(tmp_path)]
    assert main(args) == 1
    out = capsys.readouterr().out
    assert "restart 1:" in out and "restart 2:" in out
    for name in ("solution_r1.json", "solution_r2.json",
                 "history_r1.csv", "history_r2.csv"):
        assert (tmp_path / name).exists(), name


def test_train_converged_run_exits_zero(tmp_path, capsys):
    args = ["train", "--gate", "fredkin", "--basis", "diagonal_pairwise",
            "--seed", str(CONVERGING_FREDKIN_SEED),
            "--target-fidelity", "0.99999", "--epochs", "300",
            "--out", str(tmp_path)]
    assert main(args) == 0
    assert "converged=True" in capsys.readouterr().out
    # the exported file must verify at the residual scale this
    # fidelity target warrants
    assert main(["verify", str(tmp_path / "solution.json"),
                 "--tol", "0.05"]) == 0


def test_train_seed_env_fallback(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("GATEFORGE_SEED", "123")
    assert main(["train", "--gate", "toffoli", "--basis",
                 "diagonal_pairwise", "--epochs", "1",
                 "--out", str(tmp_path)]) == 1
    sol = json.loads((tmp_path / "solution.json").read_text())
    assert sol["seed"] == 123

    monkeypatch.setenv("GATEFORGE_SEED", "abc")
    assert main(["train", "--gate", "toffoli", "--basis",
                 "diagonal_pairwise", "--epochs", "1",
                 "--out", str(tmp_path), "--force"]) == 2
    assert "GATEFORGE_SEED" in capsys.readouterr().err


# ----------------------------------------------------------------- sweep

def test_sweep_default_set(tmp_path, capsys):
    assert main(["sweep", "toffoli_nu1", "--points", "5",
                 "--out", str(tmp_path)]) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    expected = ["sweep_global_fine.csv", "sweep_global_wide.csv"] + [
        f"sweep_param_{i:02d}.csv" for i in range(9)]
    assert names == sorted(expected)
    rows = read_csv(tmp_path / "sweep_global_fine.csv")
    assert len(rows) == 5 * 5         # 5 grid points x 5 states


def test_sweep_global_peaks_at_unit_scale(tmp_path):
    assert main(["sweep", "fredkin_eq7", "--mode", "global",
                 "--range", "0.9:1.1", "--points", "3",
                 "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "sweep_global.csv")
    at_one = [float(r["fidelity"]) for r in rows if r["grid_value"] == "1"]
    assert len(at_one) == 5
    assert min(at_one) >= 1 - 1e-9
    away = [float(r["fidelity"]) for r in rows if r["grid_value"] != "1"]
    assert max(away) < 1 - 1e-3


def test_sweep_single_requires_index(tmp_path, capsys):
    assert main(["sweep", "toffoli_nu1", "--mode", "single",
                 "--out", str(tmp_path)]) == 2
    assert "--index" in capsys.readouterr().err
    assert main(["sweep", "toffoli_nu1", "--mode", "single", "--index", "0",
                 "--points", "3", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "sweep_param_00.csv").exists()


def test_sweep_seed_controls_states(tmp_path):
    for k, seed in enumerate(("5", "5", "6")):
        out = tmp_path / str(k)
        assert main(["sweep", "toffoli_nu1", "--mode", "global",
                     "--points", "3", "--seed", seed,
                     "--out", str(out)]) == 0
    a, b, c = (read_csv(tmp_path / str(k) / "sweep_global.csv")
               for k in range(3))
    assert a == b
    assert a != c


# ------------------------------------------------------------------- pst

def test_pst_known_transfer_time(capsys):
    assert main(["pst", "--krawtchouk", "4", "--time",
                 str(np.pi / 2)]) == 0
    assert "-> transfer" in capsys.readouterr().out


def test_pst_grid_scan_finds_transfer(capsys):
    assert main(["pst", "--krawtchouk", "5", "--as-gate"]) == 0
    out = capsys.readouterr().out
    assert "-> transfer" in out
    assert "commutes=True lattice=True matches=True" in out


def test_pst_uniform_chain_fails(tmp_path, capsys):
    path = tmp_path / "uniform.json"
    path.write_text('{"N": 4, "J": [1.0, 1.0, 1.0]}\n')
    assert main(["pst", "--chain", str(path), "--grid-points", "400"]) == 1
    assert "-> no transfer" in capsys.readouterr().out


def test_pst_asymmetric_chain(tmp_path, capsys):
    path = tmp_path / "lopsided.json"
    path.write_text('{"N": 3, "J": [1.0, 2.0]}\n')
    assert main(["pst", "--chain", str(path)]) == 1
    assert "not mirror-symmetric" in capsys.readouterr().out


def test_pst_save_chain(tmp_path, capsys):
    out = tmp_path / "chain.json"
    args = ["pst", "--krawtchouk", "3", "--time", str(np.pi / 2),
            "--save-chain", str(out)]
    assert main(args) == 0
    saved = json.loads(out.read_text())
    assert saved["N"] == 3
    assert np.allclose(saved["J"], [np.sqrt(2), np.sqrt(2)])
    capsys.readouterr()
    assert main(args) == 2            # refuses to clobber without --force
    assert "refusing to overwrite" in capsys.readouterr().err


def test_pst_rejects_short_chain(capsys):
    assert main(["pst", "--krawtchouk", "1"]) == 2
    assert "at least 2" in capsys.readouterr().err


# ------------------------------------------------------------- entry point

@pytest.mark.skipif(shutil.which("gateforge") is None,
                    reason="console script not on PATH")
def test_console_script():
    proc = subprocess.run(["gateforge", "verify", "fredkin_eq7"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["gate"] == "fredkin"
