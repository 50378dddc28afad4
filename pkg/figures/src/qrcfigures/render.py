"""Renderers for the benchmark figures, one per figure id.

Every renderer consumes one or more validated run directories and draws the
run's aggregate statistics in the house style: median lines with first/third
quartile bands or error bars.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "qrcbench"

import matplotlib.pyplot as plt
import numpy as np

from .loading import RunData, load_run

_COLORS = ["tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple", "tab:brown"]


def _quartiles(values):
    arr = np.asarray(values, dtype=float)
    return np.quantile(arr, 0.5), np.quantile(arr, 0.25), np.quantile(arr, 0.75)


def _grouped(rows, key_cols, value_col, key_cast=int):
    groups = defaultdict(list)
    for row in rows:
        key = tuple(key_cast(row[c]) for c in key_cols)
        groups[key[0] if len(key_cols) == 1 else key].append(float(row[value_col]))
    return dict(sorted(groups.items()))


def _save(fig, out_dir: Path, name: str) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for ext in ("svg", "png"):
        path = out_dir / f"{name}.{ext}"
        fig.savefig(path, metadata={"Date": None} if ext == "svg" else None, dpi=150)
        paths.append(path)
    plt.close(fig)
    return paths


def _capacity_profile(ax, run: RunData, color, x_col="tau"):
    groups = _grouped(run.rows, [x_col], "C")
    xs = np.array(list(groups))
    med, q25, q75 = zip(*(_quartiles(v) for v in groups.values()))
    med, q25, q75 = map(np.array, (med, q25, q75))
    ax.errorbar(xs, med, yerr=[med - q25, q75 - med], marker="o", ls=":",
                color=color, capsize=3, label=run.label())
    return xs


def render_mc_delay(runs, out_dir):
    fig, ax = plt.subplots(figsize=(6, 4))
    for run, color in zip(runs, _COLORS):
        _capacity_profile(ax, run, color)
    ax.set_xlabel(r"delay $\tau$")
    ax.set_ylabel("memory capacity")
    ax.set_ylim(0, 1.05)
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "mc_delay")


def render_mc_size(runs, out_dir):
    fig, ax = plt.subplots(figsize=(6, 4))
    by_stat = defaultdict(list)
    for run in runs:
        tau_groups = _grouped(run.rows, ["tau"], "C")
        tau = max(tau_groups)
        by_stat[run.config.get("statistics", "?")].append(
            (int(run.config.get("n_sites", 0)), tau_groups[tau], tau)
        )
    for (stat, entries), color in zip(sorted(by_stat.items()), _COLORS):
        entries.sort()
        xs = [n for n, _, _ in entries]
        med, q25, q75 = zip(*(_quartiles(v) for _, v, _ in entries))
        med, q25, q75 = map(np.array, (med, q25, q75))
        ax.errorbar(xs, med, yerr=[med - q25, q75 - med], marker="s", ls=":",
                    color=color, capsize=3, label=stat)
    ax.set_xlabel("number of sites N")
    ax.set_ylabel(f"memory capacity")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "mc_size")


def render_mc_observables(runs, out_dir):
    fig, ax = plt.subplots(figsize=(7, 4))
    kinds = []
    width = 0.8 / max(len(runs), 1)
    stats = sorted({run.config.get("statistics", "?") for run in runs})
    offsets = {stat: (i - (len(stats) - 1) / 2) * width for i, stat in enumerate(stats)}
    seen = {}
    for run in runs:
        kind = run.config.get("observables", "?")
        if kind not in kinds:
            kinds.append(kind)
        stat = run.config.get("statistics", "?")
        vals = [float(r["C"]) for r in run.rows]
        med, q25, q75 = _quartiles(vals)
        pos = kinds.index(kind) + offsets[stat]
        label = stat if stat not in seen else None
        seen[stat] = True
        ax.bar(pos, med, width=width, yerr=[[med - q25], [q75 - med]], capsize=3,
               color=_COLORS[stats.index(stat)], label=label)
        ax.plot([pos], [np.mean(vals)], marker="o", color="black", ms=3)
    ax.set_xticks(range(len(kinds)))
    ax.set_xticklabels(kinds, rotation=20, ha="right")
    ax.set_ylabel("memory capacity")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "mc_observables")


def render_nmc(runs, out_dir):
    n = len(runs)
    fig, axes = plt.subplots(1, n, figsize=(4 * n, 3.5), squeeze=False)
    for ax, run in zip(axes[0], runs):
        groups = _grouped(run.rows, ["q", "tau"], "C", key_cast=int)
        by_q = defaultdict(dict)
        for (q, tau), vals in groups.items():
            by_q[q][tau] = _quartiles(vals)
        for q, color in zip(sorted(by_q), _COLORS):
            taus = np.array(sorted(by_q[q]))
            med = np.array([by_q[q][t][0] for t in taus])
            lo = np.array([by_q[q][t][1] for t in taus])
            hi = np.array([by_q[q][t][2] for t in taus])
            ax.errorbar(taus, med, yerr=[med - lo, hi - med], marker="o", ls=":",
                        color=color, capsize=2, label=f"q={q}")
        ax.set_title(run.label())
        ax.set_xlabel(r"delay $\tau$")
        ax.set_ylim(0, 1.05)
        ax.legend(fontsize=8)
    axes[0][0].set_ylabel("nonlinear memory capacity")
    fig.tight_layout()
    return _save(fig, out_dir, "nmc")


def render_convergence(runs, out_dir):
    fig, ax = plt.subplots(figsize=(6, 4))
    for run, color in zip(runs, _COLORS):
        series = {q: {} for q in ("0.25", "0.5", "0.75")}
        for row in run.rows:
            series[row["quantile"]][int(row["step"])] = float(row["distance"])
        steps = np.array(sorted(series["0.5"]))
        med = np.array([series["0.5"][s] for s in steps])
        lo = np.array([series["0.25"][s] for s in steps])
        hi = np.array([series["0.75"][s] for s in steps])
        ax.plot(steps, med, ls=":", color=color, label=run.label())
        ax.fill_between(steps, lo, hi, color=color, alpha=0.25, lw=0)
    floor = 1e-18
    ax.set_yscale("log")
    ax.set_ylim(bottom=max(floor, ax.get_ylim()[0]))
    ax.set_xlabel("iterations")
    ax.set_ylabel("Frobenius distance")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "convergence")


def render_cutoff(runs, out_dir):
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.8 / max(len(runs), 1)
    for i, (run, color) in enumerate(zip(runs, _COLORS)):
        groups = _grouped(run.rows, ["level"], "probability")
        levels = np.array(list(groups))
        means = np.array([np.mean(v) for v in groups.values()])
        stds = np.array([np.std(v) for v in groups.values()])
        ax.bar(levels + (i - (len(runs) - 1) / 2) * width, means, width=width,
               yerr=stds, capsize=2, color=color,
               label=f"{run.label()}, e={run.config.get('excitation')}")
    ax.set_yscale("log")
    ax.set_xlabel("energy level n")
    ax.set_ylabel("occupation probability P(n)")
    ax.axhline(0.01, color="gray", lw=0.8, ls="--")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "cutoff")


def render_spread_chain(runs, out_dir):
    n = len(runs)
    fig, axes = plt.subplots(n, 1, figsize=(7, 2.8 * n), squeeze=False, sharex=True)
    for ax, run in zip(axes[:, 0], runs):
        series = defaultdict(dict)
        for row in run.rows:
            series[row["observable"]][int(row["step"])] = float(row["value"])
        for label, color in zip(sorted(series), _COLORS):
            steps = np.array(sorted(series[label]))
            ax.plot(steps, [series[label][s] for s in steps], color=color, lw=1,
                    label=label)
        ax.set_title(run.label())
        ax.set_ylabel("two-site signal")
        ax.legend(fontsize=8)
    axes[-1, 0].set_xlabel("step")
    fig.tight_layout()
    return _save(fig, out_dir, "spread_chain")


def render_spread_all(runs, out_dir):
    fig, axes = plt.subplots(1, 2, figsize=(8, 4))
    for idx, (col, title) in enumerate((("nondiagonal_sum", "two-site terms"),
                                        ("diagonal_sum", "occupation terms"))):
        ax = axes[idx]
        for i, (run, color) in enumerate(zip(runs, _COLORS)):
            med, q25, q75 = _quartiles([float(r[col]) for r in run.rows])
            ax.bar(i, med, yerr=[[med - q25], [q75 - med]], capsize=4, color=color)
        ax.set_xticks(range(len(runs)))
        ax.set_xticklabels([run.label() for run in runs])
        ax.set_title(title)
    axes[0].set_ylabel("summed |signal|")
    fig.tight_layout()
    return _save(fig, out_dir, "spread_all")


def render_trace(runs, out_dir):
    n = len(runs)
    fig, axes = plt.subplots(n, 1, figsize=(8, 3 * n), squeeze=False, sharex=True)
    for ax, run in zip(axes[:, 0], runs):
        v_count = max(int(r["substep"]) for r in run.rows)
        series = defaultdict(dict)
        inputs = {}
        for row in run.rows:
            step, sub = int(row["step"]), int(row["substep"])
            if row["observable"] == "input":
                inputs[step] = float(row["value"])
            else:
                series[row["observable"]][step + (sub - 1) / max(v_count, 1)] = float(row["value"])
        for label, color in zip(sorted(series), _COLORS):
            ts = np.array(sorted(series[label]))
            ax.plot(ts, [series[label][t] for t in ts], lw=1, color=color, label=label)
        steps = np.array(sorted(inputs))
        ax.step(steps, [inputs[s] for s in steps], where="post", color="black",
                lw=0.8, alpha=0.6, label="input")
        ax.set_title(run.label())
        ax.legend(fontsize=7, ncol=4)
    axes[-1, 0].set_xlabel("step")
    fig.tight_layout()
    return _save(fig, out_dir, "trace")


def render_ipc(runs, out_dir):
    fig, ax = plt.subplots(figsize=(6, 4))
    degrees = sorted({int(r["degree"]) for run in runs for r in run.rows})
    for i, run in enumerate(runs):
        per_seed = defaultdict(lambda: defaultdict(float))
        for row in run.rows:
            per_seed[row["seed"]][int(row["degree"])] += float(row["capacity"])
        totals = [sum(d.values()) for d in per_seed.values()]
        med, q25, q75 = _quartiles(totals)
        bottom = 0.0
        for q, color in zip(degrees, _COLORS):
            contrib = float(np.median([d.get(q, 0.0) for d in per_seed.values()]))
            ax.bar(i, contrib, bottom=bottom, color=color,
                   label=f"degree {q}" if i == 0 else None)
            bottom += contrib
        ax.errorbar([i], [med], yerr=[[med - q25], [q75 - med]], color="black", capsize=4)
    ax.set_xticks(range(len(runs)))
    ax.set_xticklabels([run.label() for run in runs])
    ax.set_ylabel("information processing capacity")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out_dir, "ipc")


MC_COLS = ["statistics", "N", "e", "dt", "V", "task_kind", "tau", "q", "seed", "C", "flags"]

FIGURES = {
    "cutoff": ("cutoff.csv", ["statistics", "e", "seed", "level", "probability"], render_cutoff),
    "convergence": ("converge.csv", ["step", "quantile", "distance"], render_convergence),
    "mc-delay": ("mc.csv", MC_COLS, render_mc_delay),
    "mc-size": ("mc.csv", MC_COLS, render_mc_size),
    "mc-observables": ("mc.csv", MC_COLS, render_mc_observables),
    "nmc": ("nmc.csv", MC_COLS, render_nmc),
    "spread-chain": ("spread_chain.csv", ["step", "observable", "value"], render_spread_chain),
    "spread-all": ("spread_all.csv", ["seed", "step_index", "nondiagonal_sum", "diagonal_sum"],
                   render_spread_all),
    "trace": ("trace.csv", ["step", "substep", "observable", "value"], render_trace),
    "ipc": ("ipc.csv", ["statistics", "seed", "degree", "delay_profile", "capacity"], render_ipc),
}


def render(figure_id: str, run_dirs, out_dir) -> list[Path]:
    """Render one figure id from one or more validated run directories."""
    if figure_id not in FIGURES:
        raise ValueError(f"unknown figure id {figure_id!r}; known: {sorted(FIGURES)}")
    csv_name, required, fn = FIGURES[figure_id]
    runs = [load_run(d, csv_name, required) for d in run_dirs]
    return fn(runs, Path(out_dir))


@dataclass
class PlotSpec:
    """A renderable figure: id, validated input runs and the output directory."""

    figure_id: str
    run_dirs: list
    out_dir: str

    def render(self) -> list[Path]:
        return render(self.figure_id, self.run_dirs, self.out_dir)
