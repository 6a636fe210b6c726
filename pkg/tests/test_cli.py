"""End-to-end tests of the command line driver."""

import json
import shutil
import subprocess
import sys

import pytest

from banach_coupling import cli


def _write_config(path, doc):
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return str(path)


def _tiny_maximality(tmp_path, replicates=300, seed=11):
    return _write_config(tmp_path / "cfg.json", {
        "schema": 1,
        "kind": "maximality",
        "model": {"kind": "DiagonalSequence", "sigmas": [1.0], "ambient": "L2"},
        "displacement": {"coeffs": [1.0]},
        "grid": {"horizon": 1.0, "step": 0.01},
        "replicates": replicates,
        "seed": seed,
    })


def test_validate_ok(tmp_path, capsys):
    cfg = _tiny_maximality(tmp_path)
    assert cli.main(["validate", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert out.startswith("OK")
    assert "maximality" in out
    assert "replicates: 300" in out


def test_validate_previews_family_plan(tmp_path, capsys):
    cfg = _write_config(tmp_path / "inf.json", {
        "schema": 1,
        "kind": "infinity",
        "displacement": {"family": "h-divergent-geometric(0.5)", "count": 20},
        "grid": {"checkpoints": [1.0, 4.0]},
        "replicates": 5,
        "seed": 3,
    })
    assert cli.main(["validate", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "h-divergent" in out.lower()
    assert "block" in out.lower()
    # first coefficients of the displacement are previewed
    assert "1" in out


def test_validate_rejects_unknown_field(tmp_path, capsys):
    cfg = _write_config(tmp_path / "bad.json", {
        "schema": 1,
        "kind": "maximality",
        "model": {"kind": "DiagonalSequence", "sigmas": [1.0], "ambient": "L2"},
        "displacement": {"coeffs": [1.0]},
        "grid": {"horizon": 1.0, "step": 0.01},
        "replicates": 10,
        "seed": 1,
        "surprise": True,
    })
    assert cli.main(["validate", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "surprise" in err


def test_validate_rejects_bad_sigma(tmp_path, capsys):
    cfg = _write_config(tmp_path / "bad.json", {
        "schema": 1,
        "kind": "maximality",
        "model": {"kind": "DiagonalSequence", "sigmas": [1.0, 0.0], "ambient": "L2"},
        "displacement": {"coeffs": [1.0, 1.0]},
        "grid": {"horizon": 1.0, "step": 0.01},
        "replicates": 10,
        "seed": 1,
    })
    assert cli.main(["validate", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "sigma" in err.lower()


def test_run_zero_replicates_is_usage_error(tmp_path, capsys):
    cfg = _write_config(tmp_path / "zero.json", {
        "schema": 1,
        "kind": "maximality",
        "model": {"kind": "DiagonalSequence", "sigmas": [1.0], "ambient": "L2"},
        "displacement": {"coeffs": [1.0]},
        "grid": {"horizon": 1.0, "step": 0.01},
        "replicates": 0,
        "seed": 1,
    })
    out_dir = tmp_path / "out"
    assert cli.main(["run", "--config", cfg, "--out", str(out_dir)]) == 2
    assert "replicates" in capsys.readouterr().err
    assert not out_dir.exists()


def test_run_missing_config_file(tmp_path, capsys):
    code = cli.main(["run", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "out")])
    assert code == 2
    assert capsys.readouterr().err


def test_run_writes_artifacts(tmp_path, capsys):
    cfg = _tiny_maximality(tmp_path, replicates=500)
    out_dir = tmp_path / "out"
    code = cli.main(["run", "--config", cfg, "--out", str(out_dir)])
    out = capsys.readouterr().out
    assert code in (0, 1)
    assert (out_dir / "results.csv").exists()
    assert (out_dir / "summary.json").exists()
    assert (out_dir / "law.csv").exists()
    assert "wrote" in out and ("[pass]" in out or "[FAIL]" in out)
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["schema"] == 1
    assert summary["kind"] == "maximality"
    assert (code == 0) == summary["pass"]
    header = (out_dir / "results.csv").read_text().splitlines()[0]
    assert header == "replicate,coupled"


def test_run_seed_override_changes_results(tmp_path):
    cfg = _tiny_maximality(tmp_path, replicates=200)
    a, b, c = (tmp_path / d for d in ("a", "b", "c"))
    cli.main(["run", "--config", cfg, "--out", str(a)])
    cli.main(["run", "--config", cfg, "--out", str(b), "--seed", "999"])
    cli.main(["run", "--config", cfg, "--out", str(c)])
    ra, rb, rc = ((d / "results.csv").read_bytes() for d in (a, b, c))
    assert ra != rb  # the override takes effect
    assert ra == rc  # reruns are byte-identical
    sb = json.loads((b / "summary.json").read_text())
    assert sb["seed"] == 999


def test_run_thread_count_does_not_change_bytes(tmp_path):
    cfg = _tiny_maximality(tmp_path, replicates=400)
    one, many = tmp_path / "one", tmp_path / "many"
    assert cli.main(["run", "--config", cfg, "--out", str(one), "--threads", "1"]) in (0, 1)
    assert cli.main(["run", "--config", cfg, "--out", str(many), "--threads", "3"]) in (0, 1)
    assert (one / "results.csv").read_bytes() == (many / "results.csv").read_bytes()
    assert (one / "law.csv").read_bytes() == (many / "law.csv").read_bytes()
    s1 = json.loads((one / "summary.json").read_text())
    s3 = json.loads((many / "summary.json").read_text())
    assert s1["threads"] == 1 and s3["threads"] == 3
    s1.pop("runtime_s"), s3.pop("runtime_s")
    s1.pop("threads"), s3.pop("threads")
    assert s1 == s3


def test_run_rejects_bad_thread_count(tmp_path, capsys):
    cfg = _tiny_maximality(tmp_path)
    code = cli.main(["run", "--config", cfg, "--out", str(tmp_path / "o"),
                     "--threads", "0"])
    assert code == 2
    assert "threads" in capsys.readouterr().err


def test_bc_threads_env(tmp_path, monkeypatch):
    cfg = _tiny_maximality(tmp_path, replicates=150)
    monkeypatch.setenv("BC_THREADS", "2")
    out_dir = tmp_path / "env"
    assert cli.main(["run", "--config", cfg, "--out", str(out_dir)]) in (0, 1)
    assert json.loads((out_dir / "summary.json").read_text())["threads"] == 2
    monkeypatch.setenv("BC_THREADS", "banana")
    out2 = tmp_path / "env2"
    assert cli.main(["run", "--config", cfg, "--out", str(out2)]) in (0, 1)
    assert json.loads((out2 / "summary.json").read_text())["threads"] == 1


def test_results_csv_is_rfc4180(tmp_path):
    import csv
    import io

    cfg = _tiny_maximality(tmp_path, replicates=50)
    out_dir = tmp_path / "fmt"
    cli.main(["run", "--config", cfg, "--out", str(out_dir)])
    raw = (out_dir / "results.csv").read_bytes()
    assert b"\r\n" in raw  # RFC 4180 line endings
    rows = list(csv.reader(io.StringIO(raw.decode("ascii"))))
    assert rows[0] == ["replicate", "coupled"]
    assert len(rows) == 51
    assert all(len(r) == 2 for r in rows)


def test_entry_point_installed():
    exe = shutil.which("bc")
    if exe is None:
        pytest.skip("console script not on PATH")
    proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "run" in proc.stdout and "validate" in proc.stdout


def test_report_renders_figures(tmp_path):
    cfg = _tiny_maximality(tmp_path, replicates=120)
    out_dir = tmp_path / "res"
    cli.main(["run", "--config", cfg, "--out", str(out_dir)])
    figs = tmp_path / "figs"
    assert cli.main(["report", "--results", str(out_dir), "--out", str(figs)]) == 0
    pngs = list(figs.glob("*.png"))
    assert pngs, "report should write at least one figure"


def test_report_missing_results(tmp_path, capsys):
    code = cli.main(["report", "--results", str(tmp_path / "nothing")])
    assert code == 2
    assert capsys.readouterr().err


def test_main_module_invocation():
    proc = subprocess.run(
        [sys.executable, "-m", "banach_coupling.cli", "validate", "--config", "/nonexistent.json"],
        capture_output=True, text=True)
    assert proc.returncode == 2
