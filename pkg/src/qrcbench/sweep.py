"""Sweep execution: runs a subcommand over seeds, persists CSV + manifest.

CSV files are RFC 4180 (CRLF, UTF-8, '.' decimal) with floats in full
precision scientific notation, so reruns with identical configs and seeds
are byte-identical regardless of worker count.  The JSON manifest carries
the resolved config, per-seed status and a digest of every emitted file.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .dynamics import InputSpec, Propagator
from .kraus import kraus_family, spectrum, transfer_matrix
from .operators import build_hamiltonian, build_ladder_ops, sample_couplings
from .pool import JobFailure, parallel_map
from . import tasks

SUBCOMMANDS = (
    "cutoff",
    "converge",
    "mc",
    "nmc",
    "ipc",
    "spread-chain",
    "spread-all",
    "trace",
    "spectrum",
)

EXIT_CLEAN = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def format_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17e}"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    subcommand: str
    version: str
    config_hash: str
    config: dict
    seeds: list[int]
    seed_status: dict[int, str]
    wall_clock_s: float
    outputs: dict[str, str] = field(default_factory=dict)

    def write(self, out_dir: Path) -> Path:
        path = Path(out_dir) / "manifest.json"
        payload = asdict(self)
        payload["seed_status"] = {str(k): v for k, v in self.seed_status.items()}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def _status_from(failed: dict[int, str], seeds) -> dict[int, str]:
    return {seed: failed.get(seed, "ok") for seed in seeds}


# ---------------------------------------------------------------------------
# per-subcommand runners: return ({filename: (header, rows)}, seed_status)
# ---------------------------------------------------------------------------


def _common(config: ExperimentConfig):
    return (
        config.statistics,
        config.n_sites,
        config.excitation,
        config.dt,
        config.virtual_nodes,
    )


def _run_mc(config, threads, kind):
    results = tasks.memory_capacity_sweep(config, kind=kind, threads=threads)
    stat, n, e, dt, v = _common(config)
    rows = []
    failed = {}
    for res in results:
        failed = res.failed
        for seed in sorted(res.per_seed):
            rows.append(
                (stat, n, e, dt, v, res.task.kind, res.task.tau, res.task.q,
                 seed, res.per_seed[seed], res.flags[seed])
            )
    rows.sort(key=lambda r: (r[6], r[7], r[8]))
    name = "mc.csv" if kind == tasks.LINEAR_DELAY else "nmc.csv"
    header = ["statistics", "N", "e", "dt", "V", "task_kind", "tau", "q", "seed", "C", "flags"]
    return {name: (header, rows)}, _status_from(failed, config.seeds)


def _run_converge(config, threads):
    res = tasks.convergence_test(config, threads=threads)
    rows = []
    for k, step in enumerate(res.steps):
        for label, series in (("0.25", res.q25), ("0.5", res.median), ("0.75", res.q75)):
            rows.append((int(step), label, series[k]))
    header = ["step", "quantile", "distance"]
    return {"converge.csv": (header, rows)}, _status_from(res.failed, config.seeds)


def _run_cutoff(config, threads):
    res = tasks.cutoff_histogram(config, threads=threads)
    stat, n, e, dt, _ = _common(config)
    rows = []
    for seed in sorted(res.per_seed):
        for level, prob in zip(res.levels, res.per_seed[seed]):
            rows.append((stat, n, e, dt, config.resolved_cutoff, seed, int(level), prob))
    header = ["statistics", "N", "e", "dt", "n_co", "seed", "level", "probability"]
    return {"cutoff.csv": (header, rows)}, _status_from(res.failed, config.seeds)


def _run_ipc(config, threads):
    res = tasks.ipc(config, threads=threads)
    rows = []
    for seed in sorted(res.per_seed):
        for degree, profile, cap in res.per_seed[seed].records:
            rows.append((config.statistics, seed, degree, profile, cap))
    header = ["statistics", "seed", "degree", "delay_profile", "capacity"]
    return {"ipc.csv": (header, rows)}, _status_from(res.failed, config.seeds)


def _run_spread_chain(config, threads):
    labels, series, _ = tasks.spreading_chain(config)
    rows = []
    for k in range(series.shape[0]):
        for j, lab in enumerate(labels):
            rows.append((k + 1, lab, series[k, j]))
    header = ["step", "observable", "value"]
    return {"spread_chain.csv": (header, rows)}, {config.seeds[0]: "ok"}


def _run_spread_all(config, threads):
    res = tasks.spreading_alltoall(config, threads=threads)
    rows = [
        (seed, res.step_index, res.per_seed_nondiag[seed], res.per_seed_diag[seed])
        for seed in sorted(res.per_seed_nondiag)
    ]
    header = ["seed", "step_index", "nondiagonal_sum", "diagonal_sum"]
    return {"spread_all.csv": (header, rows)}, _status_from(res.failed, config.seeds)


def _run_trace(config, threads):
    records = tasks.observable_dynamics_trace(config)
    header = ["step", "substep", "observable", "value"]
    return {"trace.csv": (header, records)}, {config.seeds[0]: "ok"}


def _run_spectrum(config, threads):
    spec = InputSpec(config.excitation, config.encoding)

    def one_seed(seed):
        ops = build_ladder_ops(config.stat(), config.n_sites)
        ham = build_hamiltonian(sample_couplings(config.n_sites, seed, config.include_diagonal), ops)
        prop = Propagator(ham, ops.dims, config.dt)
        unitary = prop.unitary
        out = []
        for u in config.u_grid:
            family = kraus_family(unitary, u, spec, ops.dims)
            sp = spectrum(transfer_matrix(family))
            moduli = ";".join(f"{m:.17e}" for m in np.abs(sp.eigenvalues)) if config.emit_moduli else ""
            out.append((u, sp.spectral_radius, sp.second_modulus, moduli))
        return out

    results = parallel_map(one_seed, config.seeds, threads, keys=config.seeds)
    rows, failed = [], {}
    for seed, res in zip(config.seeds, results):
        if isinstance(res, JobFailure):
            failed[seed] = res.message
            continue
        for u, radius, second, moduli in res:
            row = [seed, u, config.statistics, config.n_sites, radius, second]
            if config.emit_moduli:
                row.append(moduli)
            rows.append(tuple(row))
    header = ["seed", "u", "statistics", "N", "spectral_radius", "second_modulus"]
    if config.emit_moduli:
        header.append("moduli")
    return {"spectrum.csv": (header, rows)}, _status_from(failed, config.seeds)


_RUNNERS = {
    "mc": lambda cfg, th: _run_mc(cfg, th, tasks.LINEAR_DELAY),
    "nmc": lambda cfg, th: _run_mc(cfg, th, tasks.POWER_DELAY),
    "converge": _run_converge,
    "cutoff": _run_cutoff,
    "ipc": _run_ipc,
    "spread-chain": _run_spread_chain,
    "spread-all": _run_spread_all,
    "trace": _run_trace,
    "spectrum": _run_spectrum,
}


def run_sweep(
    config: ExperimentConfig,
    subcommand: str,
    out_dir,
    threads: int | None = None,
) -> tuple[RunManifest, int]:
    """Execute one subcommand, write its CSVs and manifest into ``out_dir``."""
    if subcommand not in _RUNNERS:
        raise ValueError(f"unknown subcommand {subcommand!r}, expected one of {SUBCOMMANDS}")
    threads = threads or config.threads
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.monotonic()
    files, seed_status = _RUNNERS[subcommand](config, threads)
    outputs = {}
    for name, (header, rows) in files.items():
        path = out_dir / name
        write_csv(path, header, rows)
        outputs[name] = sha256_file(path)
    manifest = RunManifest(
        subcommand=subcommand,
        version=__version__,
        config_hash=config.config_hash(),
        config=config.resolved_dict(),
        seeds=list(config.seeds),
        seed_status=seed_status,
        wall_clock_s=time.monotonic() - start,
        outputs=outputs,
    )
    manifest.write(out_dir)
    failed = [s for s, status in seed_status.items() if status != "ok"]
    return manifest, (EXIT_PARTIAL if failed else EXIT_CLEAN)
