"""Command line interface: one subcommand per benchmark sweep."""

from __future__ import annotations

import sys

import click

from .config import ConfigError, ExperimentConfig, apply_overrides, config_from_dict, parse_seed_spec
from .sweep import EXIT_FATAL, SUBCOMMANDS, run_sweep

import yaml


def _build_config(config_path, overrides, seeds, threads) -> ExperimentConfig:
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
    else:
        data = {}
    data = apply_overrides(data, overrides)
    if seeds:
        data["seeds"] = [s for part in seeds.split(",") for s in parse_seed_spec(part)]
    if threads:
        data["threads"] = threads
    return config_from_dict(data)


def _common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                      default=None, help="YAML/JSON experiment config.")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                      help="Output directory (default: config out_dir).")(fn)
    fn = click.option("--seeds", default=None,
                      help="Seed list, e.g. 0..99 or 1,5,9 (overrides config).")(fn)
    fn = click.option("--threads", type=int, default=None,
                      help="Worker threads (overrides config).")(fn)
    fn = click.option("--override", "overrides", multiple=True, metavar="KEY=VALUE",
                      help="Override any config key; repeatable.")(fn)
    return fn


@click.group()
def main():
    """Quantum reservoir computing benchmarks over particle statistics."""


def _make_command(name: str):
    @main.command(name=name)
    @_common_options
    def _cmd(config_path, out_dir, seeds, threads, overrides):
        try:
            config = _build_config(config_path, overrides, seeds, threads)
        except (ConfigError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_FATAL)
        target = out_dir or config.out_dir
        try:
            manifest, code = run_sweep(config, name, target, threads=config.threads)
        except Exception as exc:  # noqa: BLE001 - fatal errors map to exit 1
            click.echo(f"fatal: {exc}", err=True)
            sys.exit(EXIT_FATAL)
        n_failed = sum(1 for s in manifest.seed_status.values() if s != "ok")
        click.echo(
            f"{name}: {len(manifest.seeds)} seeds ({n_failed} failed), "
            f"{manifest.wall_clock_s:.1f}s -> {target}"
        )
        sys.exit(code)

    _cmd.__name__ = f"cmd_{name.replace('-', '_')}"
    return _cmd


for _name in SUBCOMMANDS:
    _make_command(_name)


if __name__ == "__main__":
    main()
