"""Experiment configuration: defaults, file loading, validation.

Benchmarks default to the reference operating point: N = 4 sites, dt = 10,
one virtual node, the M = 10 symmetrized two-site observables, train/test
lengths 1200/300 (2000/500 once three or more virtual nodes are in play) and
a washout of 1000 steps for bosons and qubits, 3000 for fermions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

import yaml

from .dynamics import ENCODINGS, OBSERVABLE_KINDS, UNIT_INTERVAL
from .operators import BOSON, FERMION, QUBIT, STATISTICS_KINDS, Statistics

# bosonic Fock cutoffs known to keep truncation error negligible per injection level
MIN_TASK_CUTOFF_MARGIN = 4  # cutoff >= excitation + 4, i.e. 5 for e=1, 6 for e=2


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def parse_seed_spec(spec) -> list[int]:
    """Seed lists: explicit list, single int, or an inclusive "A..B" range."""
    if isinstance(spec, int):
        return [spec]
    if isinstance(spec, str):
        if ".." not in spec:
            return [int(spec)]
        lo, hi = spec.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ConfigError(f"empty seed range {spec!r}")
        return list(range(lo, hi + 1))
    if isinstance(spec, (list, tuple)):
        return [int(s) for s in spec]
    raise ConfigError(f"cannot parse seeds from {spec!r}")


@dataclass
class ExperimentConfig:
    statistics: str = QUBIT
    n_sites: int = 4
    cutoff: int | None = None  # boson Fock cutoff; default excitation + 4
    excitation: int = 1
    dt: float = 10.0
    virtual_nodes: int = 1
    observables: str = "cross_real"
    encoding: str = UNIT_INTERVAL
    l_train: int | None = None
    l_test: int | None = None
    washout: int | None = None
    seeds: list[int] = field(default_factory=lambda: list(range(100)))
    delays: list[int] = field(default_factory=lambda: list(range(7)))
    degrees: list[int] = field(default_factory=lambda: [2, 3, 4, 5])
    ridge: float = 0.0
    include_diagonal: bool = True
    threads: int = 1
    out_dir: str = "out"
    # convergence / spreading / trace controls
    n_steps: int = 1000
    step_index: int = 20
    pairs: list[tuple[int, int]] = field(default_factory=lambda: [(1, 3), (1, 4), (1, 5)])
    trace_kinds: list[str] = field(default_factory=lambda: ["cross_offdiag", "quadrature_plus"])
    # information processing capacity controls
    ipc_length: int = 10000
    q_max: int = 6
    max_delay_window: int = 20
    surrogates: int = 200
    surrogate_quantile: float = 0.999
    # cutoff-validation controls
    validation_cutoff: int = 7
    validation_washout: int = 60
    validation_samples: int = 120
    # channel-spectrum controls
    u_grid: list[float] = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9])
    emit_moduli: bool = False

    def __post_init__(self):
        self.seeds = parse_seed_spec(self.seeds)
        self.pairs = [tuple(p) for p in self.pairs]
        self.validate()

    # -- derived defaults -------------------------------------------------
    @property
    def resolved_cutoff(self) -> int:
        if self.statistics != BOSON:
            return 1
        return self.cutoff if self.cutoff is not None else self.excitation + MIN_TASK_CUTOFF_MARGIN

    @property
    def resolved_washout(self) -> int:
        if self.washout is not None:
            return self.washout
        return 3000 if self.statistics == FERMION else 1000

    @property
    def resolved_l_train(self) -> int:
        if self.l_train is not None:
            return self.l_train
        return 2000 if self.virtual_nodes >= 3 else 1200

    @property
    def resolved_l_test(self) -> int:
        if self.l_test is not None:
            return self.l_test
        return 500 if self.virtual_nodes >= 3 else 300

    def stat(self) -> Statistics:
        return Statistics(self.statistics, self.resolved_cutoff)

    # -- validation --------------------------------------------------------
    def validate(self) -> None:
        if self.statistics not in STATISTICS_KINDS:
            raise ConfigError(
                f"statistics must be one of {STATISTICS_KINDS}, got {self.statistics!r}"
            )
        if self.n_sites < 1:
            raise ConfigError("n_sites must be >= 1")
        if self.excitation < 1:
            raise ConfigError("excitation must be >= 1")
        if self.statistics in (FERMION, QUBIT) and self.excitation != 1:
            raise ConfigError(
                f"{self.statistics} reservoirs only support excitation 1 "
                f"(got {self.excitation}); only bosons can be injected higher"
            )
        if self.statistics == BOSON:
            floor = self.excitation + MIN_TASK_CUTOFF_MARGIN
            if self.resolved_cutoff < floor:
                raise ConfigError(
                    f"boson cutoff {self.resolved_cutoff} too low for excitation "
                    f"{self.excitation}; levels above the cutoff stay populated — "
                    f"use cutoff >= {floor}"
                )
        if self.encoding not in ENCODINGS:
            raise ConfigError(f"encoding must be one of {ENCODINGS}")
        if self.observables not in OBSERVABLE_KINDS:
            raise ConfigError(f"observables must be one of {OBSERVABLE_KINDS}")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.virtual_nodes < 1:
            raise ConfigError("virtual_nodes must be >= 1")
        if self.washout is not None and self.washout < 0:
            raise ConfigError("washout must be >= 0")
        if not self.seeds:
            raise ConfigError("seed list must be non-empty")
        if self.ridge < 0:
            raise ConfigError("ridge must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if any(tau < 0 for tau in self.delays):
            raise ConfigError("delays must be >= 0")
        if any(q < 1 for q in self.degrees):
            raise ConfigError("degrees must be >= 1")

    # -- serialization -----------------------------------------------------
    def resolved_dict(self) -> dict:
        out = asdict(self)
        out["cutoff"] = self.resolved_cutoff if self.statistics == BOSON else None
        out["washout"] = self.resolved_washout
        out["l_train"] = self.resolved_l_train
        out["l_test"] = self.resolved_l_test
        out["pairs"] = [list(p) for p in self.pairs]
        return out

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def replace(self, **kwargs) -> "ExperimentConfig":
        data = asdict(self)
        data.update(kwargs)
        return ExperimentConfig(**data)


_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key=value`` override strings, values parsed as YAML scalars."""
    out = dict(data)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        out[key] = yaml.safe_load(raw)
    return out


def config_from_dict(data: dict) -> ExperimentConfig:
    unknown = set(data) - _FIELD_NAMES
    if unknown:
        raise ConfigError(
            f"unknown config keys {sorted(unknown)}; valid keys are {sorted(_FIELD_NAMES)}"
        )
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, overrides=()) -> ExperimentConfig:
    """Load a YAML/JSON config file, apply overrides, validate."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
    return config_from_dict(apply_overrides(data, overrides))
