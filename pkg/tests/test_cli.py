import shutil
import subprocess
import sys

import pytest
import yaml

from bevpsm.cli import main
from bevpsm.harness import results_digest

SMALL_EXPERIMENT = {"experiment": {
    "name": "cli", "pool": {"size": 5, "base_seed": 3}, "sizes": [2], "samples_per_size": 2,
    "execution": {"mode": "sequential"}}}


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def week_pool(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "pool"
    assert run("gen-pool", "--n", 4, "--seed", 11, "--system", "desk", "--out", out) == 0
    return out


def test_gen_pool_writes_manifests(week_pool):
    doc = yaml.safe_load((week_pool / "manifest.yaml").read_text())
    assert doc["horizon_steps"] == 168 * 4 and len(doc["profiles"]) == 4
    gen = yaml.safe_load((week_pool / "generation_manifest.yaml").read_text())
    assert gen["command"] == "gen-pool" and gen["seeds"]["base_seed"] == 11


def test_gen_pool_from_manifest_reproduces(week_pool, tmp_path):
    out = tmp_path / "again"
    assert run("gen-pool", "--from-manifest", week_pool / "generation_manifest.yaml", "--out", out) == 0
    assert (out / "manifest.yaml").read_bytes() == (week_pool / "manifest.yaml").read_bytes()


def test_sample_writes_csv(week_pool, tmp_path):
    assert run("sample", "--pool", week_pool, "--sizes", "1,2", "--samples", 3, "--out", tmp_path) == 0
    lines = (tmp_path / "samples.csv").read_text().splitlines()
    # one line per (sample, profile)
    assert lines[0] == "n_profiles,sample_id,profile_id"
    assert len(lines) == 1 + 3 * 1 + 3 * 2


def test_run_reference_and_validate(tmp_path, capsys):
    assert run("run", "--config", "desk", "--profiles", 0, "--out", tmp_path) == 0
    res = yaml.safe_load((tmp_path / "result.yaml").read_text())
    assert res["status"] == "optimal" and res["feasibility"]["passed"]
    assert run("validate", "--model", tmp_path / "model.mps", "--solution", tmp_path / "solution.csv") == 0
    # corrupt one value far beyond tolerance
    lines = (tmp_path / "solution.csv").read_text().splitlines()
    k = next(i for i, ln in enumerate(lines) if ln.startswith("gen@"))
    name, val = lines[k].split()
    lines[k] = f"{name} {float(val) + 1e4}"
    (tmp_path / "bad.csv").write_text("\n".join(lines) + "\n")
    assert run("validate", "--model", tmp_path / "model.mps", "--solution", tmp_path / "bad.csv") == 7
    assert "error[validation]" in capsys.readouterr().err


def test_run_with_profiles_reproduces_from_manifest(week_pool, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("run", "--config", "desk", "--profiles", 2, "--pool", week_pool, "--strategy", "bidirectional",
               "--fleet", 2_000_000, "--out", a) == 0
    assert run("run", "--from-manifest", a / "manifest.yaml", "--out", b) == 0
    assert (a / "solution.csv").read_bytes() == (b / "solution.csv").read_bytes()


@pytest.mark.parametrize("argv, code", [
    (["run", "--out", "x"], 2),  # missing --config
    (["frobnicate"], 2),
    (["run", "--config", "no-such-system", "--out", "x"], 3),
    (["run", "--config", "desk", "--set", "nodes.DE.bogus=1", "--out", "x"], 3),
    (["sample", "--pool", "no/such/pool", "--out", "x"], 4),
    (["validate", "--model", "no.mps", "--solution", "no.csv"], 4),
])
def test_exit_codes(argv, code, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == code
    assert capsys.readouterr().err.startswith("error[")


def test_config_dir_environment(tmp_path, monkeypatch):
    from bevpsm.model.config import data_dir
    cfg_dir = tmp_path / "configs"
    cfg_dir.mkdir()
    shutil.copy(data_dir() / "system_desk.yaml", cfg_dir / "mydesk.yaml")
    text = (cfg_dir / "mydesk.yaml").read_text().replace("name: desk", "name: mydesk")
    (cfg_dir / "mydesk.yaml").write_text(text)
    monkeypatch.setenv("BEVPSM_CONFIG_DIR", str(cfg_dir))
    assert run("run", "--config", "mydesk", "--set", "horizon_hours=24", "--out", tmp_path / "o") == 0
    assert yaml.safe_load((tmp_path / "o" / "result.yaml").read_text())["scenario"]["setting"] == "mydesk"


def test_sweep_report_and_manifest_reproduction(tmp_path):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(yaml.safe_dump(SMALL_EXPERIMENT))
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("-q", "sweep", "--config", cfg, "--out", a) == 0
    for f in ("results.csv", "summary.csv", "samples.csv", "manifest.yaml", "cost_delta_vs_profiles_smart.svg"):
        assert (a / f).exists()
    man = yaml.safe_load((a / "manifest.yaml").read_text())
    assert man["seeds"]["master_seed"] == 2024 and man["files"]["results.csv"]
    assert run("-q", "sweep", "--from-manifest", a / "manifest.yaml", "--out", b) == 0
    assert results_digest(a / "results.csv") == results_digest(b / "results.csv")
    rep = tmp_path / "rep"
    assert run("report", "--results", a, "--out", rep) == 0
    assert (rep / "results.csv").read_bytes() == (a / "results.csv").read_bytes()
    assert (rep / "report_manifest.yaml").exists()


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "bevpsm.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "gen-pool" in proc.stdout
    bin_ = shutil.which("bevpsm")
    if bin_:
        proc = subprocess.run([bin_, "run", "--out", str(tmp_path)], capture_output=True, text=True)
        assert proc.returncode == 2 and proc.stderr.startswith("error[usage]")
