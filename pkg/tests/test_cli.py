import json
import os

import numpy as np
import pytest

import biharm as bh
from biharm.cli import (EXIT_CONFIG, EXIT_OK, RunConfig, dump_report,
                        load_field_csv, main, save_field_csv)


def run_cli(args, tmp_path, sub="out"):
    out = tmp_path / sub
    return main(args + ["--out-dir", str(out)]), out


def test_field_csv_roundtrip(tmp_path):
    g = bh.build_grid(20.0, 512, 4)
    rng = np.random.default_rng(0)
    u = bh.RadialField(g, rng.normal(size=512))
    path = str(tmp_path / "f.csv")
    save_field_csv(path, u)
    back = load_field_csv(path, 4)
    assert np.array_equal(back.values, u.values)
    assert np.array_equal(back.grid.nodes, g.nodes)


def test_runconfig_roundtrip():
    rc = RunConfig(command="solve", gamma=1.25, lam=0.4, grid_n=512,
                   sweep_values=(0.1, 0.2))
    rc2 = RunConfig.from_json(rc.to_json())
    assert rc2.to_json() == rc.to_json()


def test_check_command(tmp_path):
    code, out = run_cli(["check", "--g", "t", "--K", "1"], tmp_path)
    assert code == EXIT_OK
    rep = json.loads((out / "check.json").read_text())
    assert rep["growth"]["bounded_verdict"] == "fails"


def test_check_conditions_output(tmp_path):
    code, out = run_cli(["check", "--theta", "1.0"], tmp_path)
    assert code == EXIT_OK
    rep = json.loads((out / "check.json").read_text())
    assert rep["conditions"]["ar_holds"] is True


def test_solve_command(tmp_path):
    code, out = run_cli(["solve", "--gamma", "1", "--lambda", "0.5",
                         "--grid", "20:512", "--max-iters", "200"], tmp_path)
    assert code == EXIT_OK
    rep = json.loads((out / "solve.json").read_text())
    s = rep["solve"]
    assert s["constraint_residual"] <= 1e-9 * (1 + abs(s["objective"]))
    assert s["recovered_residual_weak"] <= 1e-5
    assert (out / "solution.csv").exists()


def test_rearrange_command(tmp_path):
    g = bh.build_grid(20.0, 2048, 4)
    u = bh.RadialField(g, 0.5 * (g.nodes / 1.5) ** 2 * np.exp(-((g.nodes / 1.5) ** 2)))
    src = str(tmp_path / "in.csv")
    save_field_csv(src, u)
    code, out = run_cli(["rearrange", "--input", src], tmp_path)
    assert code == EXIT_OK
    rep = json.loads((out / "rearrange.json").read_text())
    assert rep["rearrange"]["flagged"] is False
    assert (out / "rearrange_output.csv").exists()


def test_gap_command(tmp_path):
    code, out = run_cli(["gap", "--V", "1-0.4*exp(-t^2)", "--lambda", "0.3",
                         "--grid", "20:1024"], tmp_path)
    assert code == EXIT_OK
    rep = json.loads((out / "gap.json").read_text())
    assert rep["gap"]["gap"] > 0


def test_moser_command(tmp_path):
    code, out = run_cli(["moser", "--b-values", "3,4", "--K", "1"], tmp_path)
    assert code == EXIT_OK
    rep = json.loads((out / "moser.json").read_text())
    assert len(rep["moser"]["rows"]) == 2
    assert (out / "moser.csv").exists()


def test_ratio_command(tmp_path):
    code, out = run_cli(["ratio", "--gamma", "1", "--lambda", "0.5",
                         "--L", "1.0", "--budget", "60"], tmp_path)
    assert code == EXIT_OK
    rep = json.loads((out / "ratio.json").read_text())
    assert rep["ratio"]["verdict"] in ("finite_evidence", "divergence_evidence")


def test_sweep_command(tmp_path):
    code, out = run_cli(["sweep", "--sweep-param", "lambda",
                         "--sweep-values", "0.4,0.6", "--grid", "20:512",
                         "--jobs", "2"], tmp_path)
    assert code == EXIT_OK
    rep = json.loads((out / "sweep.json").read_text())
    objs = [r["objective"] for r in rep["sweep"]["results"]]
    assert objs[0] > objs[1]     # larger lambda relaxes the constraint


def test_config_error_exit_code(tmp_path):
    code, _ = run_cli(["check", "--g", "t*+2", "--K", "1"], tmp_path)
    assert code == EXIT_CONFIG
    code, _ = run_cli(["gap", "--lambda", "0.3"], tmp_path)   # missing --V
    assert code == EXIT_CONFIG


def test_determinism_byte_identical(tmp_path):
    args = ["check", "--g", "t^4", "--K", "1"]
    _, out1 = run_cli(args, tmp_path, "a")
    _, out2 = run_cli(args, tmp_path, "b")
    assert (out1 / "check.json").read_bytes() == (out2 / "check.json").read_bytes()

    args = ["solve", "--gamma", "1", "--lambda", "0.5", "--grid", "20:512"]
    _, s1 = run_cli(args, tmp_path, "s1")
    _, s2 = run_cli(args, tmp_path, "s2")
    assert (s1 / "solve.json").read_bytes() == (s2 / "solve.json").read_bytes()
    assert (s1 / "solution.csv").read_bytes() == (s2 / "solution.csv").read_bytes()


def test_float_serialization_17g():
    text = dump_report({"x": 0.1 + 0.2})
    assert "0.30000000000000004" in text
