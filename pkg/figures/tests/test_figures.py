import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from qrcfigures import FIGURES, ManifestError, SchemaError, render
from qrcfigures.cli import main as plot_main


def run_bench(subcommand, out_dir, *overrides, seeds="0..2"):
    """Drive the simulation package through its public CLI."""
    cmd = [sys.executable, "-m", "qrcbench.cli", subcommand,
           "--seeds", seeds, "--threads", "1", "--out", str(out_dir)]
    for item in overrides:
        cmd += ["--override", item]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, f"{subcommand} failed: {proc.stderr}"
    return Path(out_dir)


TINY_MC = ("washout=40", "l_train=150", "l_test=60", "delays=[0,1,2]")


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("runs")
    out = {}
    out["mc_qubit"] = run_bench("mc", base / "mc_qubit", *TINY_MC)
    out["mc_fermion"] = run_bench("mc", base / "mc_fermion", "statistics=fermion", *TINY_MC)
    out["mc_n3"] = run_bench("mc", base / "mc_n3", "n_sites=3", *TINY_MC)
    out["mc_occ"] = run_bench("mc", base / "mc_occ", "observables=occupations", *TINY_MC)
    out["nmc_qubit"] = run_bench("nmc", base / "nmc_qubit", "degrees=[2,3]", *TINY_MC)
    out["conv_qubit"] = run_bench("converge", base / "conv_qubit", "n_steps=60")
    out["conv_fermion"] = run_bench("converge", base / "conv_fermion",
                                    "statistics=fermion", "n_steps=60")
    out["cutoff"] = run_bench("cutoff", base / "cutoff", "statistics=boson", "n_sites=2",
                              "cutoff=5", "validation_washout=10", "validation_samples=20",
                              seeds="0..1")
    out["chain"] = run_bench("spread-chain", base / "chain", "statistics=fermion",
                             "n_steps=30", seeds="0")
    out["spread_all"] = run_bench("spread-all", base / "spread_all", seeds="0..5")
    out["trace"] = run_bench("trace", base / "trace", "statistics=fermion",
                             "n_steps=15", "virtual_nodes=2", seeds="0")
    out["ipc"] = run_bench("ipc", base / "ipc", "n_sites=2", "encoding=symmetric",
                           "washout=60", "ipc_length=400", "q_max=2",
                           "max_delay_window=4", "surrogates=30", seeds="0..1")
    return out


CASES = {
    "mc-delay": ["mc_qubit", "mc_fermion"],
    "mc-size": ["mc_qubit", "mc_n3"],
    "mc-observables": ["mc_qubit", "mc_occ"],
    "nmc": ["nmc_qubit"],
    "convergence": ["conv_qubit", "conv_fermion"],
    "cutoff": ["cutoff"],
    "spread-chain": ["chain"],
    "spread-all": ["spread_all"],
    "trace": ["trace"],
    "ipc": ["ipc"],
}


@pytest.mark.parametrize("figure_id", sorted(FIGURES))
def test_every_figure_renders_nonempty(figure_id, runs, tmp_path):
    sources = [runs[name] for name in CASES[figure_id]]
    paths = render(figure_id, sources, tmp_path)
    exts = {p.suffix for p in paths}
    assert exts == {".svg", ".png"}
    for path in paths:
        assert path.exists() and path.stat().st_size > 500
    svg = next(p for p in paths if p.suffix == ".svg").read_text()
    assert "<svg" in svg


def test_rendering_is_idempotent(runs, tmp_path):
    first = render("mc-delay", [runs["mc_qubit"]], tmp_path / "a")
    second = render("mc-delay", [runs["mc_qubit"]], tmp_path / "b")
    svg_a = next(p for p in first if p.suffix == ".svg").read_bytes()
    svg_b = next(p for p in second if p.suffix == ".svg").read_bytes()
    assert svg_a == svg_b


def test_schema_mismatch_rejected(runs, tmp_path):
    with pytest.raises(SchemaError):
        render("mc-delay", [runs["conv_qubit"]], tmp_path)
    assert not list(tmp_path.glob("*.svg"))


def test_missing_manifest_rejected(runs, tmp_path):
    bare = tmp_path / "bare"
    bare.mkdir()
    shutil.copy(runs["mc_qubit"] / "mc.csv", bare / "mc.csv")
    with pytest.raises(ManifestError):
        render("mc-delay", [bare], tmp_path / "out")


def test_digest_mismatch_rejected(runs, tmp_path):
    tampered = tmp_path / "tampered"
    shutil.copytree(runs["mc_qubit"], tampered)
    with open(tampered / "mc.csv", "a", encoding="utf-8") as fh:
        fh.write("qubit,4,1,10.0,1,linear_delay,0,1,99,0.5,ok\r\n")
    with pytest.raises(ManifestError):
        render("mc-delay", [tampered], tmp_path / "out")


def test_empty_csv_rejected(runs, tmp_path):
    import hashlib

    empty = tmp_path / "empty"
    shutil.copytree(runs["mc_qubit"], empty)
    header = (empty / "mc.csv").read_text().splitlines()[0]
    (empty / "mc.csv").write_text(header + "\r\n", newline="")
    manifest = json.loads((empty / "manifest.json").read_text())
    manifest["outputs"]["mc.csv"] = hashlib.sha256((empty / "mc.csv").read_bytes()).hexdigest()
    (empty / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(SchemaError, match="no data rows"):
        render("mc-delay", [empty], tmp_path / "out")
    assert not (tmp_path / "out").exists()


def test_unknown_figure_id(runs, tmp_path):
    with pytest.raises(ValueError, match="unknown figure id"):
        render("heatmap", [runs["mc_qubit"]], tmp_path)


def test_cli_happy_path(runs, tmp_path, capsys):
    plot_main(["mc-delay", "--in", str(runs["mc_qubit"]), "--out", str(tmp_path)])
    printed = capsys.readouterr().out.strip().splitlines()
    assert len(printed) == 2
    assert all(Path(line).exists() for line in printed)


def test_cli_schema_error_exit_code(runs, tmp_path):
    with pytest.raises(SystemExit) as exc:
        plot_main(["convergence", "--in", str(runs["mc_qubit"]), "--out", str(tmp_path)])
    assert exc.value.code == 1
