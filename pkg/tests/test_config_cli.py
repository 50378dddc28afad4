import json
import hashlib
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from qrcbench import tasks
from qrcbench.cli import main
from qrcbench.config import (
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    load_config,
    parse_seed_spec,
)
from qrcbench.sweep import run_sweep


class TestConfig:
    def test_minimal_config_gets_defaults(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("statistics: qubit\n")
        cfg = load_config(path)
        assert cfg.n_sites == 4
        assert cfg.dt == 10.0
        assert cfg.virtual_nodes == 1
        assert cfg.resolved_washout == 1000
        assert cfg.resolved_l_train == 1200 and cfg.resolved_l_test == 300
        assert cfg.observables == "cross_real"

    def test_fermion_washout_default(self):
        assert ExperimentConfig(statistics="fermion").resolved_washout == 3000

    def test_virtual_node_length_defaults(self):
        cfg = ExperimentConfig(virtual_nodes=3)
        assert cfg.resolved_l_train == 2000 and cfg.resolved_l_test == 500

    def test_fermion_excitation_two_rejected(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("statistics: fermion\nexcitation: 2\n")
        with pytest.raises(ConfigError, match="excitation"):
            load_config(path)

    def test_boson_cutoff_too_low_rejected(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("statistics: boson\ncutoff: 5\nexcitation: 2\n")
        with pytest.raises(ConfigError, match="cutoff"):
            load_config(path)

    def test_boson_cutoff_defaults_follow_excitation(self):
        assert ExperimentConfig(statistics="boson", excitation=1).resolved_cutoff == 5
        assert ExperimentConfig(statistics="boson", excitation=2).resolved_cutoff == 6

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("statistics: qubit\ncutofff: 9\n")
        with pytest.raises(ConfigError, match="cutofff"):
            load_config(path)

    def test_overrides_parse_yaml_scalars(self):
        data = apply_overrides({"statistics": "qubit"}, ["dt=2.5", "delays=[0,1]", "seeds=0..3"])
        cfg = ExperimentConfig(**data)
        assert cfg.dt == 2.5 and cfg.delays == [0, 1] and cfg.seeds == [0, 1, 2, 3]

    def test_seed_specs(self):
        assert parse_seed_spec("4..7") == [4, 5, 6, 7]
        assert parse_seed_spec([3, 1]) == [3, 1]
        assert parse_seed_spec(9) == [9]
        with pytest.raises(ConfigError):
            parse_seed_spec("7..4")

    def test_hash_stable_and_sensitive(self):
        a = ExperimentConfig(statistics="qubit")
        b = ExperimentConfig(statistics="qubit")
        c = ExperimentConfig(statistics="fermion")
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != c.config_hash()


def tiny_overrides():
    return dict(washout=40, l_train=150, l_test=60, delays=[0, 1])


class TestSweep:
    def test_mc_outputs_and_manifest(self, tmp_path):
        cfg = ExperimentConfig(statistics="qubit", seeds=[0, 1, 2], **tiny_overrides())
        manifest, code = run_sweep(cfg, "mc", tmp_path)
        assert code == 0
        csv_path = tmp_path / "mc.csv"
        assert csv_path.exists()
        payload = json.loads((tmp_path / "manifest.json").read_text())
        digest = hashlib.sha256(csv_path.read_bytes()).hexdigest()
        assert payload["outputs"]["mc.csv"] == digest
        assert payload["seed_status"] == {"0": "ok", "1": "ok", "2": "ok"}
        assert payload["config"]["washout"] == 40
        header = csv_path.read_text().splitlines()[0]
        assert header == "statistics,N,e,dt,V,task_kind,tau,q,seed,C,flags"

    def test_thread_count_invariance(self, tmp_path):
        cfg1 = ExperimentConfig(statistics="qubit", seeds=[0, 1, 2, 3], threads=1, **tiny_overrides())
        cfg8 = ExperimentConfig(statistics="qubit", seeds=[0, 1, 2, 3], threads=8, **tiny_overrides())
        run_sweep(cfg1, "mc", tmp_path / "a")
        run_sweep(cfg8, "mc", tmp_path / "b")
        assert (tmp_path / "a/mc.csv").read_bytes() == (tmp_path / "b/mc.csv").read_bytes()

    def test_rerun_byte_identical(self, tmp_path):
        cfg = ExperimentConfig(statistics="fermion", seeds=[0, 1], washout=60,
                               l_train=100, l_test=50, delays=[0])
        run_sweep(cfg, "mc", tmp_path / "a")
        run_sweep(cfg, "mc", tmp_path / "b")
        assert (tmp_path / "a/mc.csv").read_bytes() == (tmp_path / "b/mc.csv").read_bytes()

    def test_failed_seed_marked_and_excluded(self, tmp_path, monkeypatch):
        real = tasks.seed_design

        def flaky(config, seed, length=None):
            if seed == 1:
                return real(config, seed, length)[0], np.full((210, 10), np.nan)
            return real(config, seed, length)

        monkeypatch.setattr(tasks, "seed_design", flaky)
        cfg = ExperimentConfig(statistics="qubit", seeds=[0, 1, 2], **tiny_overrides())
        manifest, code = run_sweep(cfg, "mc", tmp_path)
        assert code == 2
        assert manifest.seed_status[1] != "ok"
        assert manifest.seed_status[0] == "ok"
        rows = (tmp_path / "mc.csv").read_text().splitlines()[1:]
        assert all(f",{1}," not in f",{r.split(',')[8]}," for r in rows)

    def test_spectrum_schema(self, tmp_path):
        cfg = ExperimentConfig(statistics="qubit", n_sites=3, seeds=[0, 1],
                               u_grid=[0.25, 0.75])
        manifest, code = run_sweep(cfg, "spectrum", tmp_path)
        assert code == 0
        lines = (tmp_path / "spectrum.csv").read_text().splitlines()
        assert lines[0] == "seed,u,statistics,N,spectral_radius,second_modulus"
        assert len(lines) == 1 + 4

    def test_unknown_subcommand(self, tmp_path):
        with pytest.raises(ValueError):
            run_sweep(ExperimentConfig(), "explode", tmp_path)


class TestCli:
    def test_mc_end_to_end(self, tmp_path):
        runner = CliRunner()
        out = tmp_path / "run"
        result = runner.invoke(main, [
            "mc", "--seeds", "0..2", "--threads", "2", "--out", str(out),
            "--override", "washout=40", "--override", "l_train=150",
            "--override", "l_test=60", "--override", "delays=[0]",
        ])
        assert result.exit_code == 0, result.output
        assert (out / "mc.csv").exists() and (out / "manifest.json").exists()

    def test_config_file_plus_cli_seed_override(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(
            "statistics: qubit\nwashout: 40\nl_train: 120\nl_test: 50\n"
            "delays: [0]\nseeds: 0..9\nout_dir: unused\n"
        )
        out = tmp_path / "run"
        result = CliRunner().invoke(main, [
            "mc", "--config", str(cfg), "--seeds", "3,5", "--out", str(out)])
        assert result.exit_code == 0, result.output
        payload = json.loads((out / "manifest.json").read_text())
        assert payload["seeds"] == [3, 5]

    def test_invalid_config_exits_fatal(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("statistics: fermion\nexcitation: 2\n")
        result = CliRunner().invoke(main, ["mc", "--config", str(cfg)])
        assert result.exit_code == 1
        assert "excitation" in result.output

    def test_spread_chain_and_trace_cli(self, tmp_path):
        runner = CliRunner()
        res = runner.invoke(main, [
            "spread-chain", "--seeds", "0", "--out", str(tmp_path / "sc"),
            "--override", "n_steps=10"])
        assert res.exit_code == 0, res.output
        res = runner.invoke(main, [
            "trace", "--seeds", "0", "--out", str(tmp_path / "tr"),
            "--override", "n_steps=5", "--override", "statistics=fermion"])
        assert res.exit_code == 0, res.output
        text = (tmp_path / "tr" / "trace.csv").read_text()
        assert text.splitlines()[0] == "step,substep,observable,value"

    def test_partial_failure_exit_code(self, tmp_path, monkeypatch):
        real = tasks.seed_design

        def flaky(config, seed, length=None):
            if seed == 0:
                raise RuntimeError("boom")
            return real(config, seed, length)

        monkeypatch.setattr(tasks, "seed_design", flaky)
        result = CliRunner().invoke(main, [
            "mc", "--seeds", "0..1", "--out", str(tmp_path),
            "--override", "washout=40", "--override", "l_train=100",
            "--override", "l_test=50", "--override", "delays=[0]"])
        assert result.exit_code == 2
