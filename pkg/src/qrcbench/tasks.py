"""Benchmark tasks: memory capacity, information processing capacity,
convergence, information spreading and observable traces.

Every task follows the paired-seed protocol: for a given seed, the coupling
matrix and the input series are drawn from fixed substreams, so different
statistics (or encodings) run against identical (J, inputs) pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .dynamics import (
    SYMMETRIC,
    DensityMatrix,
    InputSpec,
    ObservableSet,
    Propagator,
    ReservoirEngine,
)
from .operators import (
    BOSON,
    Statistics,
    build_chain_hamiltonian,
    build_hamiltonian,
    build_ladder_ops,
    misc_rng,
    sample_couplings,
)
from .pool import JobFailure, parallel_map
from .readout import (
    capacity_detail,
    delayed_power_target,
    generate_inputs,
    legendre_product_target,
    train_readout,
)

LINEAR_DELAY = "linear_delay"
POWER_DELAY = "power_delay"
LEGENDRE_PRODUCT = "legendre_product"


@dataclass(frozen=True)
class TaskSpec:
    """A target family member: a delayed input, a power of it, or a Legendre product."""

    kind: str
    tau: int = 0
    q: int = 1
    profile: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.kind not in (LINEAR_DELAY, POWER_DELAY, LEGENDRE_PRODUCT):
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.kind == LEGENDRE_PRODUCT and not self.profile:
            raise ValueError("legendre_product tasks need a delay profile")


def quartiles(values) -> tuple[float, float, float]:
    arr = np.asarray(values, dtype=float)
    return (
        float(np.quantile(arr, 0.25)),
        float(np.quantile(arr, 0.5)),
        float(np.quantile(arr, 0.75)),
    )


@dataclass
class CapacityResult:
    """Per-seed and aggregate capacity for one task."""

    task: TaskSpec
    per_seed: dict[int, float]
    flags: dict[int, str]
    failed: dict[int, str]
    median: float
    q25: float
    q75: float
    n_train: int
    n_test: int
    washout: int

    @classmethod
    def from_scores(cls, task, scores, flags, failed, n_train, n_test, washout):
        vals = list(scores.values())
        q25, med, q75 = quartiles(vals) if vals else (float("nan"),) * 3
        return cls(
            task=task,
            per_seed=scores,
            flags=flags,
            failed=failed,
            median=med,
            q25=q25,
            q75=q75,
            n_train=n_train,
            n_test=n_test,
            washout=washout,
        )


# ---------------------------------------------------------------------------
# shared per-seed plumbing
# ---------------------------------------------------------------------------


def seed_hamiltonian(config: ExperimentConfig, seed: int):
    """Operators and the all-to-all Hamiltonian paired to ``seed``."""
    stat = config.stat()
    ops = build_ladder_ops(stat, config.n_sites)
    couplings = sample_couplings(config.n_sites, seed, config.include_diagonal)
    return ops, build_hamiltonian(couplings, ops)


def seed_engine(config: ExperimentConfig, seed: int, observables="config"):
    """Engine driving the seed's reservoir, plus its operator set."""
    ops, ham = seed_hamiltonian(config, seed)
    prop = Propagator(ham, ops.dims, config.dt, config.virtual_nodes)
    spec = InputSpec(config.excitation, config.encoding)
    if observables == "config":
        observables = ObservableSet.build(config.observables, ops)
    engine = ReservoirEngine(prop, ops.stat, spec, observables)
    return engine, ops


def seed_design(config: ExperimentConfig, seed: int, length: int | None = None):
    """Inputs and post-washout design matrix for one seed."""
    washout = config.resolved_washout
    n_rows = length if length is not None else config.resolved_l_train + config.resolved_l_test
    inputs = generate_inputs(washout + n_rows, config.encoding, seed)
    engine, _ = seed_engine(config, seed)
    traj = engine.run(inputs, washout=washout)
    return inputs, traj.design


# ---------------------------------------------------------------------------
# memory capacity
# ---------------------------------------------------------------------------


def score_design(design, inputs, washout, n_train, tasks, ridge):
    """Fit each task on the train rows and score capacity on the test rows."""
    out = []
    for task in tasks:
        if task.kind == LEGENDRE_PRODUCT:
            target = legendre_product_target(inputs, washout, design.shape[0], task.profile)
        else:
            target = delayed_power_target(inputs, washout, design.shape[0], task.tau, task.q)
        model = train_readout(design[:n_train], target[:n_train], ridge=ridge)
        score = capacity_detail(model.predict(design[n_train:]), target[n_train:])
        flag = "degenerate" if (score.degenerate or model.degenerate) else "ok"
        out.append((task, score.value, flag))
    return out


def memory_capacity_sweep(
    config: ExperimentConfig,
    kind: str = LINEAR_DELAY,
    delays=None,
    degrees=None,
    threads: int | None = None,
) -> list[CapacityResult]:
    """Linear (kind=linear_delay) or nonlinear (power_delay) memory capacity.

    The reservoir runs once per seed; every (tau, q) target reuses the same
    design matrix, which is exactly the per-task protocol since targets only
    reindex the shared input series.
    """
    delays = list(config.delays if delays is None else delays)
    if kind == LINEAR_DELAY:
        tasks = [TaskSpec(LINEAR_DELAY, tau=tau) for tau in delays]
    elif kind == POWER_DELAY:
        degrees = list(config.degrees if degrees is None else degrees)
        tasks = [TaskSpec(POWER_DELAY, tau=tau, q=q) for tau in delays for q in degrees]
    else:
        raise ValueError(f"memory capacity kinds are {LINEAR_DELAY!r} and {POWER_DELAY!r}")
    max_tau = max(delays)
    washout = config.resolved_washout
    if washout < max_tau:
        raise ValueError(f"washout {washout} shorter than max delay {max_tau}")
    n_train, n_test = config.resolved_l_train, config.resolved_l_test

    def one_seed(seed):
        inputs, design = seed_design(config, seed)
        return score_design(design, inputs, washout, n_train, tasks, config.ridge)

    results = parallel_map(one_seed, config.seeds, threads or config.threads, keys=config.seeds)
    scores = {task: {} for task in tasks}
    flags = {task: {} for task in tasks}
    failed = {}
    for seed, res in zip(config.seeds, results):
        if isinstance(res, JobFailure):
            failed[seed] = res.message
            continue
        for task, value, flag in res:
            scores[task][seed] = value
            flags[task][seed] = flag
    return [
        CapacityResult.from_scores(task, scores[task], flags[task], failed, n_train, n_test, washout)
        for task in tasks
    ]


# ---------------------------------------------------------------------------
# convergence (echo-state) test
# ---------------------------------------------------------------------------


def default_convergence_states(dims) -> tuple[DensityMatrix, DensityMatrix]:
    """Product states differing in which of sites 2 and 3 holds one excitation."""
    n = len(dims)
    if n < 3:
        raise ValueError("convergence test needs at least 3 sites")
    levels_a = [0] * n
    levels_a[1] = 1
    levels_b = [0] * n
    levels_b[2] = 1
    return (
        DensityMatrix.product_of_levels(levels_a, dims),
        DensityMatrix.product_of_levels(levels_b, dims),
    )


@dataclass
class ConvergenceResult:
    per_seed: dict[int, np.ndarray]
    failed: dict[int, str]
    steps: np.ndarray
    q25: np.ndarray
    median: np.ndarray
    q75: np.ndarray


def convergence_test(
    config: ExperimentConfig,
    n_steps: int | None = None,
    rho_a: DensityMatrix | None = None,
    rho_b: DensityMatrix | None = None,
    threads: int | None = None,
) -> ConvergenceResult:
    """Frobenius distance between two reservoir copies driven identically.

    The distance after k injections equals the distance of the reduced states
    after k-1 steps (the injected site-1 factor is common to both copies and
    the unitary preserves the norm), so the trace is computed on the reduced
    dynamics directly.
    """
    n_steps = n_steps or config.n_steps

    def one_seed(seed):
        engine, _ = seed_engine(config, seed, observables=None)
        dims = engine.dims
        a, b = (rho_a, rho_b) if rho_a is not None else default_convergence_states(dims)
        sigma_a = engine.initial_sigma(a)
        sigma_b = engine.initial_sigma(b)
        inputs = generate_inputs(n_steps, config.encoding, seed)
        dist = np.empty(n_steps)
        for k, u in enumerate(inputs):
            dist[k] = np.linalg.norm(sigma_a - sigma_b)
            sigma_a, _ = engine.step(sigma_a, u)
            sigma_b, _ = engine.step(sigma_b, u)
        return dist

    results = parallel_map(one_seed, config.seeds, threads or config.threads, keys=config.seeds)
    per_seed, failed = {}, {}
    for seed, res in zip(config.seeds, results):
        if isinstance(res, JobFailure):
            failed[seed] = res.message
        else:
            per_seed[seed] = res
    if not per_seed:
        raise RuntimeError("all convergence seeds failed")
    stacked = np.stack(list(per_seed.values()))
    return ConvergenceResult(
        per_seed=per_seed,
        failed=failed,
        steps=np.arange(1, n_steps + 1),
        q25=np.quantile(stacked, 0.25, axis=0),
        median=np.quantile(stacked, 0.5, axis=0),
        q75=np.quantile(stacked, 0.75, axis=0),
    )


# ---------------------------------------------------------------------------
# information spreading
# ---------------------------------------------------------------------------


def spreading_chain(
    config: ExperimentConfig, pairs=None, n_steps: int | None = None, n_sites: int = 5
):
    """Two-site correlations <a_i^dag a_j + h.c.> along a homogeneous chain.

    Drives the chain through site 1 with one seed's input series and returns
    (step, label, value) records per configured pair.
    """
    pairs = [tuple(p) for p in (pairs or config.pairs)]
    n_steps = n_steps or config.n_steps
    stat = config.stat()
    ops = build_ladder_ops(stat, n_sites)
    ham = build_chain_hamiltonian(n_sites, ops)
    prop = Propagator(ham, ops.dims, config.dt, config.virtual_nodes)
    spec = InputSpec(config.excitation, config.encoding)
    obs = ObservableSet.build("cross_offdiag", ops, pairs=pairs)
    engine = ReservoirEngine(prop, stat, spec, obs)
    seed = config.seeds[0]
    inputs = generate_inputs(n_steps, config.encoding, seed)
    traj = engine.run(inputs, washout=0)
    labels = [f"re_ad{i}_a{j}_sym" for i, j in pairs]
    # cross_offdiag measures Re<a_i^dag a_j>; the symmetrized pair correlation is twice that
    series = 2.0 * traj.design[:, -len(pairs):]
    return labels, series, inputs


@dataclass
class SpreadingSums:
    per_seed_nondiag: dict[int, float]
    per_seed_diag: dict[int, float]
    failed: dict[int, str]
    step_index: int


def spreading_alltoall(
    config: ExperimentConfig, step_index: int | None = None, threads: int | None = None
) -> SpreadingSums:
    """Summed |two-site| and |occupation| signals at one instant, per seed."""
    step_index = step_index or config.step_index

    def one_seed(seed):
        ops, ham = seed_hamiltonian(config, seed)
        prop = Propagator(ham, ops.dims, config.dt, 1)
        spec = InputSpec(config.excitation, config.encoding)
        offdiag = ObservableSet.build("cross_offdiag", ops)
        occ = ObservableSet.build("occupations", ops)
        engine = ReservoirEngine(prop, ops.stat, spec, [offdiag, occ])
        inputs = generate_inputs(step_index, config.encoding, seed)
        traj = engine.run(inputs, washout=step_index - 1)
        row = traj.design[0]
        nondiag = float(np.abs(2.0 * row[: len(offdiag)]).sum())
        diag = float(np.abs(row[len(offdiag):]).sum())
        return nondiag, diag

    results = parallel_map(one_seed, config.seeds, threads or config.threads, keys=config.seeds)
    nondiag, diag, failed = {}, {}, {}
    for seed, res in zip(config.seeds, results):
        if isinstance(res, JobFailure):
            failed[seed] = res.message
        else:
            nondiag[seed], diag[seed] = res
    return SpreadingSums(nondiag, diag, failed, step_index)


def observable_dynamics_trace(
    config: ExperimentConfig, kinds=None, n_steps: int | None = None
):
    """Raw observable time series (per substep) plus the injected inputs."""
    kinds = list(kinds or config.trace_kinds)
    n_steps = n_steps or config.n_steps
    seed = config.seeds[0]
    ops, ham = seed_hamiltonian(config, seed)
    prop = Propagator(ham, ops.dims, config.dt, config.virtual_nodes)
    spec = InputSpec(config.excitation, config.encoding)
    obs_sets = [ObservableSet.build(k, ops) for k in kinds]
    engine = ReservoirEngine(prop, ops.stat, spec, obs_sets)
    inputs = generate_inputs(n_steps, config.encoding, seed)
    traj = engine.run(inputs, washout=0)
    labels = engine.labels
    records = []
    v_count = config.virtual_nodes
    for k in range(n_steps):
        records.append((k + 1, 0, "input", float(inputs[k])))
        for v in range(v_count):
            for j, lab in enumerate(labels):
                records.append((k + 1, v + 1, lab, float(traj.design[k, v * len(labels) + j])))
    return records


# ---------------------------------------------------------------------------
# bosonic Fock-level histogram (cutoff validation)
# ---------------------------------------------------------------------------


@dataclass
class CutoffHistogram:
    levels: np.ndarray
    per_seed: dict[int, np.ndarray]  # site- and step-averaged P(n) per seed
    failed: dict[int, str]
    mean: np.ndarray
    std: np.ndarray


def cutoff_histogram(
    config: ExperimentConfig,
    washout: int | None = None,
    samples: int | None = None,
    threads: int | None = None,
) -> CutoffHistogram:
    """Site-averaged Fock-level occupation P(n) of a driven bosonic reservoir.

    Site 1 marginals come from precomputed level kernels on the reduced
    state; the remaining sites read off the diagonal of the post-step reduced
    state directly.
    """
    if config.statistics != BOSON:
        raise ValueError("cutoff validation only applies to bosonic reservoirs")
    washout = config.validation_washout if washout is None else washout
    samples = config.validation_samples if samples is None else samples
    d = config.resolved_cutoff + 1

    def one_seed(seed):
        engine, ops = seed_engine(config, seed, observables=None)
        rest = engine.rest_dim
        slabs = {0: engine._slab0, config.excitation: engine._slabe}
        kernels = {}
        for n in range(d):
            rows = slice(n * rest, (n + 1) * rest)
            b0, be = slabs[0][rows], slabs[config.excitation][rows]
            kernels[n] = (b0.conj().T @ b0, be.conj().T @ be, b0.conj().T @ be)
        inputs = generate_inputs(washout + samples, config.encoding, seed)
        sigma = engine.initial_sigma()
        rest_dims = ops.dims[1:]
        acc = np.zeros(d)
        for k, u in enumerate(inputs):
            c0, ce = engine.spec.amplitudes(u)
            sigma_prev = sigma
            sigma, _ = engine.step(sigma, u)
            if k < washout:
                continue
            # site 1 of the full state, via the level kernels
            for n in range(d):
                w00, wee, w0e = kernels[n]
                p = (
                    c0 * c0 * np.einsum("ij,ji->", w00, sigma_prev).real
                    + ce * ce * np.einsum("ij,ji->", wee, sigma_prev).real
                    + 2.0 * c0 * ce * np.einsum("ij,ji->", w0e, sigma_prev).real
                )
                acc[n] += p
            # sites 2..N directly from the post-step reduced state
            marg = sigma.diagonal().real.reshape(rest_dims)
            for s in range(len(rest_dims)):
                axes = tuple(a for a in range(len(rest_dims)) if a != s)
                acc += marg.sum(axis=axes)
        return acc / (samples * config.n_sites)

    results = parallel_map(one_seed, config.seeds, threads or config.threads, keys=config.seeds)
    per_seed, failed = {}, {}
    for seed, res in zip(config.seeds, results):
        if isinstance(res, JobFailure):
            failed[seed] = res.message
        else:
            per_seed[seed] = res
    if not per_seed:
        raise RuntimeError("all cutoff-validation seeds failed")
    stacked = np.stack(list(per_seed.values()))
    return CutoffHistogram(
        levels=np.arange(d),
        per_seed=per_seed,
        failed=failed,
        mean=stacked.mean(axis=0),
        std=stacked.std(axis=0),
    )


# ---------------------------------------------------------------------------
# information processing capacity
# ---------------------------------------------------------------------------


def _partitions(n: int):
    """Integer partitions of n in decreasing-lex order, parts descending."""
    if n == 0:
        yield ()
        return

    def rec(remaining, cap):
        if remaining == 0:
            yield ()
            return
        for first in range(min(remaining, cap), 0, -1):
            for rest in rec(remaining - first, first):
                yield (first,) + rest

    yield from rec(n, n)


def _degree_assignments(partition):
    """Distinct orderings of a degree multiset, deterministic order."""
    return sorted(set(itertools.permutations(partition)), reverse=True)


@dataclass
class IpcSeedResult:
    seed: int
    records: list[tuple[int, str, float]] = field(default_factory=list)  # (degree, profile, C)
    total: float = 0.0
    per_degree: dict[int, float] = field(default_factory=dict)
    n_features: int = 0
    truncated: bool = False


@dataclass
class IpcResult:
    per_seed: dict[int, IpcSeedResult]
    failed: dict[int, str]
    bound: int


def _profile_string(profile) -> str:
    return ";".join(f"{tau}:{q}" for tau, q in profile)


def ipc(
    config: ExperimentConfig,
    threads: int | None = None,
    max_targets: int = 4000,
) -> IpcResult:
    """Information processing capacity over normalized Legendre product targets.

    Per target, capacity is the fraction of target variance captured by the
    linear readout (one minus normalized minimum MSE).  Estimates below the
    99.9th percentile of shuffled-target surrogates are zeroed.  Surviving
    targets are orthonormalized in sample, in canonical enumeration order,
    before scoring; this removes finite-sample double counting and keeps the
    per-seed total provably below the feature count.
    """
    if config.encoding != SYMMETRIC:
        raise ValueError(
            "information processing capacity needs encoding: symmetric "
            "(Legendre targets are orthogonal for inputs on [-1, 1])"
        )
    washout = config.resolved_washout
    if washout < config.max_delay_window:
        raise ValueError("washout shorter than the delay window")
    length = config.ipc_length

    def one_seed(seed) -> IpcSeedResult:
        inputs, design = seed_design(config, seed, length=length)
        rng = misc_rng(seed)
        centered = design - design.mean(axis=0)
        u, s, _ = np.linalg.svd(centered, full_matrices=False)
        rank = int((s > s[0] * 1e-10).sum()) if s.size and s[0] > 0 else 0
        basis_q = u[:, :rank]
        result = IpcSeedResult(seed=seed, n_features=design.shape[1])
        survivors: list[np.ndarray] = []
        n_targets = 0

        def evaluate(profile) -> float:
            nonlocal n_targets
            n_targets += 1
            target = legendre_product_target(inputs, washout, length, profile)
            target = target - target.mean()
            norm = np.linalg.norm(target)
            if norm == 0.0:
                return 0.0
            unit = target / norm
            # raw surrogate threshold for this target
            shuffles = np.tile(unit, (config.surrogates, 1))
            shuffles = rng.permuted(shuffles, axis=1)
            null = ((shuffles @ basis_q) ** 2).sum(axis=1)
            threshold = float(np.quantile(null, config.surrogate_quantile))
            # orthogonalize against previously surviving targets (twice, MGS)
            vec = unit
            for _ in range(2):
                for sv in survivors:
                    vec = vec - (sv @ vec) * sv
            rnorm = np.linalg.norm(vec)
            if rnorm < 0.3:
                return 0.0  # direction already claimed in sample
            vec = vec / rnorm
            cap = float(((basis_q.T @ vec) ** 2).sum())
            if cap <= threshold:
                return 0.0
            survivors.append(vec)
            return cap

        for qtot in range(1, config.q_max + 1):
            for partition in _partitions(qtot):
                n_parts = len(partition)
                dead_streak = 0
                for max_delay in range(n_parts - 1, config.max_delay_window):
                    if n_targets >= max_targets:
                        result.truncated = True
                        break
                    found = 0.0
                    for others in itertools.combinations(range(max_delay), n_parts - 1):
                        delays = others + (max_delay,)
                        for degrees in _degree_assignments(partition):
                            profile = tuple(zip(delays, degrees))
                            cap = evaluate(profile)
                            if cap > 0.0:
                                found += cap
                                result.records.append((qtot, _profile_string(profile), cap))
                    dead_streak = 0 if found > 0.0 else dead_streak + 1
                    if dead_streak >= 3:
                        break
                if result.truncated:
                    break
            if result.truncated:
                break
        for qtot, _, cap in result.records:
            result.per_degree[qtot] = result.per_degree.get(qtot, 0.0) + cap
        result.total = sum(result.per_degree.values())
        return result

    results = parallel_map(one_seed, config.seeds, threads or config.threads, keys=config.seeds)
    per_seed, failed = {}, {}
    for seed, res in zip(config.seeds, results):
        if isinstance(res, JobFailure):
            failed[seed] = res.message
        else:
            per_seed[seed] = res
    bound = config.virtual_nodes * _feature_count(config)
    return IpcResult(per_seed=per_seed, failed=failed, bound=bound)


def _feature_count(config: ExperimentConfig) -> int:
    n = config.n_sites
    return {
        "cross_real": n * (n + 1) // 2,
        "occupations": n,
        "cross_offdiag": n * (n - 1) // 2,
        "density_density": n * (n - 1) // 2,
        "quadrature_plus": n,
        "quadrature_minus": n,
        "quadrature_sq": 2 * n,
    }[config.observables]
