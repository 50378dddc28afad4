"""Reservoir dynamics: input injection, unitary propagation and measurement.

The reservoir map replaces the state of site 1 with a freshly encoded input
state and then evolves the whole network unitarily:

    rho_k = U [ |psi(u_k)><psi(u_k)| (x) Tr_1 rho_{k-1} ] U^dag,   U = exp(-i H dt).

``inject_and_evolve`` implements this literally on dense density matrices.
``ReservoirEngine`` implements the same map on the reduced state of sites
2..N, using the block columns of U as Kraus operators; this is algebraically
identical and avoids ever forming the full density matrix, which is what
makes long bosonic trajectories affordable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .operators import (
    BOSON,
    FERMION,
    QUBIT,
    OperatorSet,
    Statistics,
    check_dimension_budget,
    occupation_table,
)

UNIT_INTERVAL = "unit_interval"
SYMMETRIC = "symmetric"
ENCODINGS = (UNIT_INTERVAL, SYMMETRIC)

OBSERVABLE_KINDS = (
    "cross_real",
    "occupations",
    "cross_offdiag",
    "density_density",
    "quadrature_plus",
    "quadrature_minus",
    "quadrature_sq",
)

HERMITICITY_ATOL = 1e-10
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-9
MEASURE_IMAG_ATOL = 1e-10


class InvalidStateError(ValueError):
    """A density matrix violated one of its invariants."""


class ReservoirRunError(RuntimeError):
    """A trajectory produced non-finite signals and was aborted."""


@dataclass
class DensityMatrix:
    """Dense density matrix together with the per-site local dimensions."""

    data: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        self.dims = tuple(self.dims)
        dim = int(np.prod(self.dims))
        if self.data.shape != (dim, dim):
            raise ValueError(f"state shape {self.data.shape} does not match dims {self.dims}")

    @property
    def n_sites(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def purity(self) -> float:
        return float(np.vdot(self.data, self.data).real)

    def validate(self) -> "DensityMatrix":
        herm = np.linalg.norm(self.data - self.data.conj().T)
        if herm > HERMITICITY_ATOL:
            raise InvalidStateError(f"hermiticity residual {herm:.2e}")
        tr = np.trace(self.data)
        if abs(tr - 1.0) > TRACE_ATOL:
            raise InvalidStateError(f"trace deviates from 1 by {abs(tr - 1.0):.2e}")
        lo = float(np.linalg.eigvalsh(self.data).min())
        if lo < -PSD_ATOL:
            raise InvalidStateError(f"negative eigenvalue {lo:.2e}")
        return self

    @classmethod
    def vacuum(cls, dims) -> "DensityMatrix":
        dim = int(np.prod(dims))
        data = np.zeros((dim, dim), dtype=complex)
        data[0, 0] = 1.0
        return cls(data, tuple(dims))

    @classmethod
    def from_pure(cls, vec: np.ndarray, dims) -> "DensityMatrix":
        vec = np.asarray(vec, dtype=complex)
        vec = vec / np.linalg.norm(vec)
        return cls(np.outer(vec, vec.conj()), tuple(dims))

    @classmethod
    def product_of_levels(cls, levels, dims) -> "DensityMatrix":
        """Product state |n_1 n_2 ... n_N> given per-site levels."""
        dims = tuple(dims)
        idx = 0
        for lvl, d in zip(levels, dims):
            if not 0 <= lvl < d:
                raise ValueError(f"level {lvl} outside local dimension {d}")
            idx = idx * d + lvl
        dim = int(np.prod(dims))
        data = np.zeros((dim, dim), dtype=complex)
        data[idx, idx] = 1.0
        return cls(data, dims)

    @classmethod
    def maximally_mixed(cls, dims) -> "DensityMatrix":
        dim = int(np.prod(dims))
        return cls(np.eye(dim, dtype=complex) / dim, tuple(dims))


@dataclass(frozen=True)
class InputSpec:
    """How scalar inputs are encoded into the state of site 1."""

    excitation_level: int = 1
    encoding: str = UNIT_INTERVAL

    def __post_init__(self):
        if self.excitation_level < 1:
            raise ValueError("excitation level must be >= 1")
        if self.encoding not in ENCODINGS:
            raise ValueError(f"unknown encoding {self.encoding!r}, expected one of {ENCODINGS}")

    def validate_for(self, stat: Statistics) -> None:
        if stat.kind in (FERMION, QUBIT) and self.excitation_level != 1:
            raise ValueError(f"{stat.kind} reservoirs only support excitation level 1")
        if stat.kind == BOSON and self.excitation_level > stat.cutoff:
            raise ValueError(
                f"excitation level {self.excitation_level} exceeds boson cutoff {stat.cutoff}"
            )

    def amplitudes(self, value: float) -> tuple[float, float]:
        """Amplitudes (c0, ce) on |0> and |e> for one input value."""
        if self.encoding == UNIT_INTERVAL:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"input {value} outside [0, 1]")
            return float(np.sqrt(value)), float(np.sqrt(1.0 - value))
        if not -1.0 <= value <= 1.0:
            raise ValueError(f"input {value} outside [-1, 1]")
        return float(np.sqrt(0.5 * (1.0 + value))), float(np.sqrt(0.5 * (1.0 - value)))


def input_state(value: float, spec: InputSpec, local_dim: int) -> np.ndarray:
    """Encoded single-site state c0 |0> + ce |e>."""
    e = spec.excitation_level
    if e >= local_dim:
        raise ValueError(f"excitation level {e} does not fit local dimension {local_dim}")
    c0, ce = spec.amplitudes(value)
    vec = np.zeros(local_dim, dtype=complex)
    vec[0] = c0
    vec[e] = ce
    return vec


def partial_trace_first(rho: DensityMatrix) -> DensityMatrix:
    """Trace out the first site."""
    if rho.n_sites < 2:
        raise ValueError("cannot trace out the only site")
    d = rho.dims[0]
    rest = rho.dim // d
    sigma = np.einsum("isit->st", rho.data.reshape(d, rest, d, rest))
    return DensityMatrix(sigma, rho.dims[1:])


class Propagator:
    """Cached unitary propagation exp(-i H t) via per-sector eigendecomposition.

    The hopping Hamiltonians used here conserve total excitation number, so H
    is block diagonal over the number sectors of the product basis; working
    sector by sector makes the eigendecomposition cheap even at dimensions of
    several thousand.  Falls back to a single full eigendecomposition when H
    is not block diagonal.
    """

    def __init__(self, ham: np.ndarray, dims, dt: float, virtual_nodes: int = 1):
        ham = np.asarray(ham)
        self.dims = tuple(dims)
        self.dim = int(np.prod(self.dims))
        if ham.shape != (self.dim, self.dim):
            raise ValueError("Hamiltonian does not match the given dimensions")
        herm = np.linalg.norm(ham - ham.conj().T)
        if herm > 1e-10 * max(1.0, np.linalg.norm(ham)):
            raise ValueError(f"Hamiltonian is not Hermitian (residual {herm:.2e})")
        if virtual_nodes < 1:
            raise ValueError("virtual_nodes must be >= 1")
        self.dt = float(dt)
        self.virtual_nodes = int(virtual_nodes)
        self._sectors = self._decompose(ham)
        self._cache: dict[float, np.ndarray] = {}

    def _decompose(self, ham: np.ndarray):
        labels = occupation_table(self.dims).sum(axis=1)
        groups = [np.flatnonzero(labels == n) for n in np.unique(labels)]
        if len(groups) > 1:
            # off-block residual measured directly (a norm difference would
            # drown in cancellation at large dimension)
            resid = ham.copy()
            for ix in groups:
                resid[np.ix_(ix, ix)] = 0.0
            if np.linalg.norm(resid) > 1e-12 * (1.0 + np.linalg.norm(ham)):
                groups = [np.arange(self.dim)]
        sectors = []
        for ix in groups:
            w, q = np.linalg.eigh(ham[np.ix_(ix, ix)])
            sectors.append((ix, w, q))
        return sectors

    def unitary_at(self, t: float) -> np.ndarray:
        """Dense exp(-i H t), cached per time argument."""
        t = float(t)
        if t not in self._cache:
            u = np.zeros((self.dim, self.dim), dtype=complex)
            for ix, w, q in self._sectors:
                u[np.ix_(ix, ix)] = (q * np.exp(-1j * w * t)) @ q.conj().T
            self._cache[t] = u
        return self._cache[t]

    @property
    def unitary(self) -> np.ndarray:
        return self.unitary_at(self.dt)

    @property
    def substep_unitary(self) -> np.ndarray:
        return self.unitary_at(self.dt / self.virtual_nodes)

    def block_columns(self, t: float, local_index: int) -> np.ndarray:
        """Slab U(t) (|alpha> (x) I) of shape (D, D/d) for site-1 level ``alpha``."""
        d = self.dims[0]
        rest = self.dim // d
        lo = local_index * rest
        hi = lo + rest
        out = np.zeros((self.dim, rest), dtype=complex)
        for ix, w, q in self._sectors:
            mask = (ix >= lo) & (ix < hi)
            if not mask.any():
                continue
            phase = np.exp(-1j * w * t)
            out[np.ix_(ix, ix[mask] - lo)] = (q * phase) @ q[mask].conj().T
        return out


def inject_and_evolve(
    rho: DensityMatrix, value: float, spec: InputSpec, prop: Propagator
) -> DensityMatrix:
    """One application of the reservoir map on the full density matrix."""
    sigma = partial_trace_first(rho)
    psi = input_state(value, spec, rho.dims[0])
    injected = np.kron(np.outer(psi, psi.conj()), sigma.data)
    u = prop.unitary
    return DensityMatrix(u @ injected @ u.conj().T, rho.dims)


def _pair_list(n_sites: int, include_diagonal: bool) -> list[tuple[int, int]]:
    return [
        (i, j)
        for i in range(1, n_sites + 1)
        for j in range(i if include_diagonal else i + 1, n_sites + 1)
    ]


@dataclass
class ObservableSet:
    """A family of Hermitian observables, stored as ladder-operator products.

    Each observable is a list of ``(coefficient, product)`` terms, a product
    being a tuple of ``(site, raising?)`` factors in left-to-right operator
    order.  Dense matrices are only materialized on demand.
    """

    kind: str
    ops: OperatorSet
    labels: list[str]
    terms: list[list[tuple[complex, tuple[tuple[int, bool], ...]]]]

    @classmethod
    def build(cls, kind: str, ops: OperatorSet, pairs=None) -> "ObservableSet":
        n = ops.n_sites
        labels: list[str] = []
        terms: list[list[tuple[complex, tuple]]] = []

        def add(label, termlist):
            labels.append(label)
            terms.append(termlist)

        if kind == "cross_real":
            for i, j in pairs or _pair_list(n, include_diagonal=True):
                if i == j:
                    add(f"n{i}", [(1.0, ((i, True), (i, False)))])
                else:
                    add(
                        f"re_ad{i}_a{j}",
                        [(0.5, ((i, True), (j, False))), (0.5, ((j, True), (i, False)))],
                    )
        elif kind == "occupations":
            for i in range(1, n + 1):
                add(f"n{i}", [(1.0, ((i, True), (i, False)))])
        elif kind == "cross_offdiag":
            for i, j in pairs or _pair_list(n, include_diagonal=False):
                add(
                    f"re_ad{i}_a{j}",
                    [(0.5, ((i, True), (j, False))), (0.5, ((j, True), (i, False)))],
                )
        elif kind == "density_density":
            for i, j in pairs or _pair_list(n, include_diagonal=False):
                add(f"n{i}_n{j}", [(1.0, ((i, True), (i, False), (j, True), (j, False)))])
        elif kind == "quadrature_plus":
            for i in range(1, n + 1):
                add(f"qp{i}", [(1.0, ((i, True),)), (1.0, ((i, False),))])
        elif kind == "quadrature_minus":
            # i (a^dag - a): the Hermitian quadrature carrying Im<a^dag - a>
            for i in range(1, n + 1):
                add(f"qm{i}", [(1j, ((i, True),)), (-1j, ((i, False),))])
        elif kind == "quadrature_sq":
            for i in range(1, n + 1):
                up, dn = (i, True), (i, False)
                add(
                    f"qsp{i}",
                    [(1.0, (up, up)), (1.0, (up, dn)), (1.0, (dn, up)), (1.0, (dn, dn))],
                )
                add(
                    f"qsm{i}",
                    [(1.0, (up, up)), (-1.0, (up, dn)), (-1.0, (dn, up)), (1.0, (dn, dn))],
                )
        else:
            raise ValueError(f"unknown observable kind {kind!r}, expected one of {OBSERVABLE_KINDS}")
        return cls(kind=kind, ops=ops, labels=labels, terms=terms)

    def __len__(self) -> int:
        return len(self.labels)

    def apply(self, index: int, arr: np.ndarray) -> np.ndarray:
        """O_index @ arr without forming O_index densely."""
        out = np.zeros(arr.shape, dtype=complex)
        for coef, product in self.terms[index]:
            cur = arr
            for site, raising in reversed(product):
                cur = self.ops.apply_raising(site, cur) if raising else self.ops.apply_lowering(site, cur)
            out += coef * cur
        return out

    @cached_property
    def matrices(self) -> list[np.ndarray]:
        check_dimension_budget(self.ops.total_dim, what="observable")
        eye = np.eye(self.ops.total_dim, dtype=complex)
        return [self.apply(j, eye) for j in range(len(self))]


def measure(obs: ObservableSet, rho: DensityMatrix) -> np.ndarray:
    """Expectation values Tr[O_j rho], validated to be real."""
    if rho.dim != obs.ops.total_dim:
        raise ValueError("observable and state dimensions do not match")
    values = np.empty(len(obs))
    for j in range(len(obs)):
        x = np.trace(obs.apply(j, rho.data))
        if abs(x.imag) > MEASURE_IMAG_ATOL:
            raise InvalidStateError(
                f"observable {obs.labels[j]} returned imaginary part {x.imag:.2e}"
            )
        values[j] = x.real
    return values


def level_occupation_histogram(rho: DensityMatrix, site: int) -> np.ndarray:
    """Occupation probabilities P(n) of one site of a bosonic reservoir."""
    d = rho.dims[site - 1]
    if d <= 2:
        raise ValueError("level histograms are only meaningful for bosonic sites")
    probs = rho.data.diagonal().real.reshape(rho.dims)
    axes = tuple(k for k in range(rho.n_sites) if k != site - 1)
    return probs.sum(axis=axes)


def site_marginals(diagonal: np.ndarray, dims) -> list[np.ndarray]:
    """Per-site occupation distributions from a state's diagonal."""
    dims = tuple(dims)
    probs = diagonal.real.reshape(dims)
    out = []
    for k in range(len(dims)):
        axes = tuple(a for a in range(len(dims)) if a != k)
        out.append(probs.sum(axis=axes))
    return out


@dataclass
class Trajectory:
    """Result of driving a reservoir with an input sequence."""

    design: np.ndarray  # (recorded steps, M * V), substep-major columns
    sigma: np.ndarray  # reduced state on sites 2..N after the last step
    sigma_before_last: np.ndarray | None
    last_value: float | None
    labels: list[str]


class ReservoirEngine:
    """Fast trajectory driver working on the reduced state of sites 2..N.

    Per step, the reduced state advances through the Kraus operators
    K_s = (<s| (x) I) U (|psi_k> (x) I), and every observable expectation on
    the full state is recovered from precomputed D' x D' kernels, one per
    (observable, substep, pair of injected levels).
    """

    def __init__(
        self,
        prop: Propagator,
        stat: Statistics,
        spec: InputSpec,
        observables: ObservableSet | list[ObservableSet] | None = None,
    ):
        spec.validate_for(stat)
        self.prop = prop
        self.stat = stat
        self.spec = spec
        self.dims = prop.dims
        d = self.dims[0]
        if spec.excitation_level >= d:
            raise ValueError("excitation level does not fit the local dimension")
        self.rest_dim = prop.dim // d
        e = spec.excitation_level

        self._slab0 = prop.block_columns(prop.dt, 0)
        self._slabe = prop.block_columns(prop.dt, e)
        # step Kraus blocks in two layouts: stacked (d*D', D') for K sigma and
        # conjugated row-major (D', d*D') for the closing contraction
        rest = self.rest_dim
        self._k0v = np.ascontiguousarray(self._slab0)
        self._kev = np.ascontiguousarray(self._slabe)
        self._k0hc = np.ascontiguousarray(
            self._slab0.reshape(d, rest, rest).transpose(1, 0, 2)
        ).reshape(rest, d * rest).conj()
        self._kehc = np.ascontiguousarray(
            self._slabe.reshape(d, rest, rest).transpose(1, 0, 2)
        ).reshape(rest, d * rest).conj()

        if observables is None:
            observables = []
        elif isinstance(observables, ObservableSet):
            observables = [observables]
        self.observables = observables
        self.labels = [lab for obs in observables for lab in obs.labels]
        self.n_obs = len(self.labels)
        self._gstack = self._build_kernels()

    def _build_kernels(self):
        """Expectation kernels G = B_beta^dag O B_alpha, stacked so that one
        matrix-vector product per step yields every observable at once."""
        v_count = self.prop.virtual_nodes
        if self.n_obs == 0:
            return None
        g00, gee, g0e = [], [], []
        for v in range(1, v_count + 1):
            t = v * self.prop.dt / v_count
            b0 = self._slab0 if v == v_count else self.prop.block_columns(t, 0)
            be = self._slabe if v == v_count else self.prop.block_columns(t, self.spec.excitation_level)
            b0h, beh = b0.conj().T, be.conj().T
            for obs in self.observables:
                for j in range(len(obs)):
                    a0 = obs.apply(j, b0)
                    ae = obs.apply(j, be)
                    g00.append(b0h @ a0)
                    gee.append(beh @ ae)
                    g0e.append(b0h @ ae)
        stacked = np.array(g00 + gee + g0e)
        # trace against sigma becomes a dot product with vec(sigma)
        return np.ascontiguousarray(stacked.transpose(0, 2, 1)).reshape(len(stacked), -1)

    @property
    def columns(self) -> int:
        return self.n_obs * self.prop.virtual_nodes

    def column_labels(self) -> list[str]:
        return [
            f"v{v}_{lab}"
            for v in range(1, self.prop.virtual_nodes + 1)
            for lab in self.labels
        ]

    def initial_sigma(self, rho: DensityMatrix | None = None) -> np.ndarray:
        if rho is None:
            rho = DensityMatrix.vacuum(self.dims)
        if tuple(rho.dims) != self.dims:
            raise ValueError("initial state dimensions do not match the propagator")
        return partial_trace_first(rho).data

    def step(self, sigma: np.ndarray, value: float) -> tuple[np.ndarray, np.ndarray | None]:
        """Advance the reduced state by one injection + full dt, measuring on the way."""
        c0, ce = self.spec.amplitudes(value)
        row = None
        if self.n_obs:
            traces = (self._gstack @ sigma.ravel()).real
            n_cols = self.columns
            t00, tee, t0e = traces[:n_cols], traces[n_cols : 2 * n_cols], traces[2 * n_cols :]
            row = c0 * c0 * t00 + ce * ce * tee + 2.0 * c0 * ce * t0e
        d, rest = self.dims[0], self.rest_dim
        kv = c0 * self._k0v + ce * self._kev
        tmp = (kv @ sigma).reshape(d, rest, rest)
        gathered = np.ascontiguousarray(tmp.transpose(1, 0, 2)).reshape(rest, d * rest)
        khc = c0 * self._k0hc + ce * self._kehc
        sigma_next = gathered @ khc.T
        return sigma_next, row

    def run(
        self,
        values: np.ndarray,
        washout: int = 0,
        initial: DensityMatrix | None = None,
        record: bool = True,
    ) -> Trajectory:
        sigma = self.initial_sigma(initial)
        n = len(values)
        design = np.empty((max(n - washout, 0), self.columns)) if record else None
        sigma_prev = None
        for k, value in enumerate(values):
            sigma_prev = sigma
            sigma, row = self.step(sigma, float(value))
            if record and row is not None and k >= washout:
                if not np.all(np.isfinite(row)):
                    raise ReservoirRunError(f"non-finite observables at step {k + 1}")
                design[k - washout] = row
        if record and self.columns == 0:
            design = np.empty((max(n - washout, 0), 0))
        return Trajectory(
            design=design,
            sigma=sigma,
            sigma_before_last=sigma_prev,
            last_value=float(values[-1]) if n else None,
            labels=self.column_labels(),
        )

    def full_state(self, sigma_before: np.ndarray, value: float) -> DensityMatrix:
        """Reconstruct the full density matrix after injecting ``value`` into ``sigma_before``."""
        c0, ce = self.spec.amplitudes(value)
        slab = c0 * self._slab0 + ce * self._slabe
        return DensityMatrix(slab @ sigma_before @ slab.conj().T, self.dims)


def run_reservoir(
    config,
    inputs: np.ndarray,
    ham: np.ndarray,
    ops: OperatorSet,
    observables: ObservableSet | list[ObservableSet],
    initial: DensityMatrix | None = None,
) -> tuple[np.ndarray, DensityMatrix]:
    """Drive the reservoir with ``inputs`` and collect the readout design matrix.

    Returns the post-washout design matrix (one row per input, M*V columns,
    substep-major) and the final full density matrix.
    """
    spec = InputSpec(excitation_level=config.excitation, encoding=config.encoding)
    prop = Propagator(ham, ops.dims, config.dt, config.virtual_nodes)
    engine = ReservoirEngine(prop, ops.stat, spec, observables)
    traj = engine.run(np.asarray(inputs, dtype=float), washout=config.washout, initial=initial)
    final = engine.full_state(traj.sigma_before_last, traj.last_value)
    return traj.design, final
