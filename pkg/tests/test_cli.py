"""Command-line behavior: configs, reports, determinism, and exit codes."""

import json

import pytest

from choquard import load_field
from choquard.cli import (
    UsageError,
    config_json,
    default_config,
    load_config_file,
    main,
    merge_config,
)


def _write_config(tmp_path, name="cfg.json", **solver_overrides):
    solver = {"restarts": 1, "residual_tol": 1e-10}
    solver.update(solver_overrides)
    path = tmp_path / name
    path.write_text(json.dumps({"solver": solver}))
    return str(path)


def test_default_config_is_merge_fixed_point():
    assert merge_config(None) == default_config()
    text = config_json(default_config())
    merged = merge_config(json.loads(text))
    assert config_json(merged) == text


def test_merge_config_rejects_unknown_and_mistyped_entries():
    with pytest.raises(UsageError, match="section"):
        merge_config({"solvers": {}})
    with pytest.raises(UsageError, match="problem.radiuss"):
        merge_config({"problem": {"radiuss": 4}})
    with pytest.raises(UsageError, match="must be an integer"):
        merge_config({"problem": {"radius": 2.5}})
    with pytest.raises(UsageError, match="must be a number"):
        merge_config({"problem": {"alpha": "one"}})
    with pytest.raises(UsageError, match="must be a string"):
        merge_config({"problem": {"mode": 3}})
    with pytest.raises(UsageError, match="non-empty list"):
        merge_config({"problem": {"lambda_grid": []}})
    with pytest.raises(UsageError, match="strings only"):
        merge_config({"verify": {"suites": [1, 2]}})
    with pytest.raises(UsageError):
        merge_config({"problem": "radius=4"})
    with pytest.raises(UsageError):
        merge_config([1, 2])


def test_load_config_file_errors(tmp_path):
    with pytest.raises(UsageError, match="not found"):
        load_config_file(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(UsageError, match="valid JSON"):
        load_config_file(str(bad))
    array = tmp_path / "arr.json"
    array.write_text("[1, 2]")
    with pytest.raises(UsageError, match="JSON object"):
        load_config_file(str(array))


def test_flags_override_config_file(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"problem": {"radius": 6, "alpha": 1.0}}))
    code = main(["kernel", "--config", str(cfg_path), "--radius", "5"])
    assert code == 0
    out = capsys.readouterr().out
    assert "radius=5" in out


def test_kernel_command_builds_then_reuses_cache(tmp_path, capsys):
    cache = str(tmp_path / "cache")
    assert main(["kernel", "--radius", "6", "--cache-dir", cache]) == 0
    first = capsys.readouterr().out
    assert "kernel table: kind=green alpha=1.0 dim=2 radius=6 m_max=12" in first
    assert "built and cached table" in first
    assert "asymptotic envelope on 5 <= |v|_1 <= 12" in first
    assert "cross-method deviation" in first
    assert main(["kernel", "--radius", "6", "--cache-dir", cache]) == 0
    second = capsys.readouterr().out
    assert "reused cached table" in second


def test_kernel_command_rejects_out_of_range_alpha(capsys):
    assert main(["kernel", "--radius", "6", "--alpha", "2.0"]) == 1
    err = capsys.readouterr().err
    assert "alpha must lie in (0, N)" in err


def test_solve_writes_deterministic_report_and_field(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    out = tmp_path / "run" / "report.json"
    argv = [
        "solve", "--config", cfg, "--radius", "6", "--lambda", "5",
        "--omega-radius", "1", "--out", str(out),
    ]
    assert main(argv) == 0
    stdout = capsys.readouterr().out
    assert "ground-state level m = " in stdout
    payload = json.loads(out.read_text())
    assert payload["command"] == "solve"
    assert payload["config"]["problem"]["radius"] == 6
    assert payload["result"]["converged"] is True
    assert payload["field_file"] == "report.field.txt"
    field_path = out.parent / "report.field.txt"
    field = load_field(field_path)
    assert field.window.radius == 6
    report_bytes = out.read_bytes()
    field_bytes = field_path.read_bytes()
    assert main(argv) == 0
    capsys.readouterr()
    assert out.read_bytes() == report_bytes
    assert field_path.read_bytes() == field_bytes


def test_solve_dirichlet_mode(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    argv = ["solve", "--config", cfg, "--radius", "6", "--omega-radius", "1", "--mode", "dirichlet"]
    assert main(argv) == 0
    assert "mode=dirichlet lambda=None" in capsys.readouterr().out


def test_solve_reports_convergence_failure(tmp_path, capsys):
    cfg = _write_config(tmp_path, max_iterations=1, restarts=0, residual_tol=1e-14)
    argv = ["solve", "--config", cfg, "--radius", "6", "--lambda", "5", "--omega-radius", "1"]
    assert main(argv) == 2
    assert "solve failed" in capsys.readouterr().err


def test_sweep_writes_table_and_plot_data(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    out = tmp_path / "sw" / "rep.json"
    argv = [
        "sweep", "--config", cfg, "--radius", "6", "--lambda-grid", "1,10",
        "--omega-radius", "1", "--out", str(out),
    ]
    assert main(argv) == 0
    stdout = capsys.readouterr().out
    assert "well level m_omega = " in stdout
    assert "verdict level_at_most_well: True" in stdout
    payload = json.loads(out.read_text())
    assert payload["command"] == "sweep"
    assert [row["lambda"] for row in payload["report"]["rows"]] == [1.0, 10.0]
    csv_lines = (out.parent / "rep.csv").read_text().strip().split("\n")
    assert csv_lines[0] == "lambda,m_lambda,w22_dist,outside_mass,iterations,residual"
    assert len(csv_lines) == 4 and csv_lines[-1].startswith("# m_omega = ")
    for stem, column in (("rep.m_lambda.dat", "m_lambda"), ("rep.w22_dist.dat", "w22_dist")):
        lines = (out.parent / stem).read_text().strip().split("\n")
        assert lines[0] == f"# log10_lambda {column}"
        assert len(lines) == 3
        assert [float(row.split()[0]) for row in lines[1:]] == [0.0, 1.0]


def test_sweep_convergence_failure_exit_code(tmp_path, capsys):
    cfg = _write_config(tmp_path, max_iterations=1, restarts=0, residual_tol=1e-14)
    argv = ["sweep", "--config", cfg, "--radius", "6", "--lambda-grid", "1,10", "--omega-radius", "1"]
    assert main(argv) == 2
    assert "convergence failure" in capsys.readouterr().err


def test_verify_subset_passes(tmp_path, capsys):
    out = tmp_path / "verify.json"
    argv = ["verify", "--radius", "6", "--suites", "ops,lions", "--out", str(out)]
    assert main(argv) == 0
    stdout = capsys.readouterr().out
    assert "ops: PASS" in stdout and "lions: PASS" in stdout
    payload = json.loads(out.read_text())
    assert [suite["name"] for suite in payload["suites"]] == ["ops", "lions"]
    assert all(suite["passed"] for suite in payload["suites"])


def test_verify_detects_tampered_kernel_cache(tmp_path, capsys):
    cache = str(tmp_path / "cache")
    assert main(["kernel", "--radius", "16", "--cache-dir", cache]) == 0
    capsys.readouterr()
    assert main(["verify", "--radius", "16", "--suites", "green", "--cache-dir", cache]) == 0
    assert "green: PASS" in capsys.readouterr().out
    table_file = next((tmp_path / "cache").iterdir())
    lines = table_file.read_text().split("\n")
    for i, line in enumerate(lines):
        parts = line.split()
        if parts[:2] == ["1", "0"] and len(parts) == 3:
            lines[i] = f"1 0 {float(parts[2]) * 1.001!r}"
            break
    else:
        raise AssertionError("no nearest-neighbor row in the cached table")
    table_file.write_text("\n".join(lines))
    assert main(["verify", "--radius", "16", "--suites", "green", "--cache-dir", cache]) == 3
    captured = capsys.readouterr()
    assert "green: FAIL" in captured.out
    assert "failed suites: green" in captured.err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["orbit"],
        ["kernel", "--kernel", "bessel"],
        ["solve", "--config", "/nonexistent/cfg.json"],
        ["kernel", "--lambda-grid", "a,b"],
    ],
)
def test_usage_errors_exit_one(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err


def test_unknown_suite_and_bad_grid_order_exit_one(tmp_path, capsys):
    assert main(["verify", "--radius", "6", "--suites", "nope"]) == 1
    assert "unknown" in capsys.readouterr().err
    cfg = _write_config(tmp_path)
    assert main(["sweep", "--config", cfg, "--radius", "6", "--lambda-grid", "10,1", "--omega-radius", "1"]) == 1
    assert "increasing" in capsys.readouterr().err
