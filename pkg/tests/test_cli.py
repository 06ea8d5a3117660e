"""Command-line interface: subcommands, exit codes, output contracts."""

import json

import pytest

from bagsched.cli import main


def run_cli(*argv):
    return main(list(argv))


def gen_instance(tmp_path, *argv):
    path = tmp_path / "instance.json"
    assert run_cli("gen", *argv, "--out", str(path)) == 0
    return path


def test_gen_lower_writes_instance(tmp_path, capsys):
    path = gen_instance(tmp_path, "lower", "--k", "2")
    data = json.loads(path.read_text())
    assert [c["sigma"] for c in data["classes"]] == [64, 1]
    assert [c["count"] for c in data["classes"]] == [1, 128]
    assert len(data["jobs"]) == 1


def test_gen_speeds_profile(tmp_path):
    path = tmp_path / "speeds.json"
    assert run_cli("gen", "speeds", "--profile", "geometric", "--seed", "4",
                   "--count", "6", "--out", str(path)) == 0
    data = json.loads(path.read_text())
    assert data["profile"] == "geometric"
    assert len(data["speeds"]) == 6


def test_simulate_prints_objective(tmp_path, capsys):
    path = gen_instance(tmp_path, "lower", "--k", "2")
    assert run_cli("simulate", str(path)) == 0
    out = capsys.readouterr().out
    assert "objective=" in out and "makespan=" in out
    assert "1.65625" in out


def test_simulate_writes_trace_and_verify_reads_it(tmp_path, capsys):
    inst = gen_instance(tmp_path, "lower", "--k", "2")
    trace = tmp_path / "trace.jsonl"
    assert run_cli("simulate", str(inst), "--gamma", "4", "--realize",
                   "--out", str(trace)) == 0
    capsys.readouterr()
    cert = tmp_path / "cert.json"
    assert run_cli("verify", str(trace), "--family", "single",
                   "--out", str(cert)) == 0
    out = capsys.readouterr().out
    assert "feasible=True" in out
    doc = json.loads(cert.read_text())
    assert doc["family"] == "single_job"
    assert doc["gamma"] == 4.0
    assert doc["feasible"] is True


def test_verify_exit_codes(tmp_path, capsys):
    inst = gen_instance(tmp_path, "lower", "--k", "2")
    # infeasible below threshold: exit 1 and a warning on stderr
    code = run_cli("verify", str(inst), "--family", "weaker", "--gamma", "1")
    err = capsys.readouterr().err
    assert code == 1
    assert "below" in err.lower() or "threshold" in err.lower() or err

    # feasible at the proper speedup: exit 0
    assert run_cli("verify", str(inst), "--family", "single",
                   "--gamma", "4") == 0

    # two jobs cannot use the single-job family: precondition exit 3
    multi = gen_instance(tmp_path, "random", "--k", "2", "--jobs", "2",
                         "--max-tasks", "2", "--seed", "1")
    capsys.readouterr()
    assert run_cli("verify", str(multi), "--family", "single",
                   "--gamma", "4") == 3


def test_missing_file_is_io_error(capsys):
    assert run_cli("simulate", "/nonexistent/instance.json") == 2


def test_malformed_json_is_io_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli("simulate", str(bad)) == 2


def test_emit_lp_and_solution_flow(tmp_path, capsys):
    inst = tmp_path / "unit.json"
    inst.write_text(json.dumps({
        "classes": [{"sigma": 1, "count": 1}],
        "jobs": [{"weight": 1, "release": 0, "sizes": [1]}],
        "speedup": 1,
    }))
    lp_path = tmp_path / "model.lp"
    assert run_cli("emit-lp", str(inst), "--horizon", "2",
                   "--out", str(lp_path)) == 0
    text = lp_path.read_text()
    assert "Minimize" in text and "x_1_1_0" in text

    good = tmp_path / "good.sol"
    good.write_text("x_1_1_0 1\nC_1 1\nU_1_0 1\n")
    capsys.readouterr()
    assert run_cli("emit-lp", str(inst), "--horizon", "2",
                   "--solution", str(good)) == 0
    out = capsys.readouterr().out
    assert "objective" in out

    bad = tmp_path / "bad.sol"
    bad.write_text("x_1_1_0 0.25\nC_1 0.25\nU_1_0 1\n")
    assert run_cli("emit-lp", str(inst), "--horizon", "2",
                   "--solution", str(bad)) == 1


def test_bench_csv_contract(tmp_path, capsys):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    for out in (out_a, out_b):
        assert run_cli("bench", "--family", "both", "--k-min", "1",
                       "--k-max", "2", "--seeds", "0,1", "--jobs", "2",
                       "--max-tasks", "3", "--out", str(out)) == 0
    assert out_a.read_bytes() == out_b.read_bytes()  # deterministic
    lines = out_a.read_text().strip().splitlines()
    assert lines[0] == "K,n,seed,gamma,makespan,objective,lp_lb,dual_lb,ratio"
    # 2 lower-bound rows (K=1,2) + 2 K-values * 2 seeds random rows
    assert len(lines) == 1 + 2 + 4


def test_bench_empty_seeds_header_only(tmp_path):
    out = tmp_path / "empty.csv"
    assert run_cli("bench", "--family", "random", "--seeds", "",
                   "--out", str(out)) == 0
    lines = out.read_text().strip().splitlines()
    assert lines == ["K,n,seed,gamma,makespan,objective,lp_lb,dual_lb,ratio"]


def test_out_dir_env_redirects_relative_paths(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BAGSCHED_OUT_DIR", str(tmp_path))
    assert run_cli("gen", "lower", "--k", "1", "--out", "inst.json") == 0
    assert (tmp_path / "inst.json").exists()
