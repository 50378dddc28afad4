"""Ladder operators and hopping Hamiltonians for boson, fermion and qubit networks.

All operators live on the full many-body Hilbert space, represented as dense
complex matrices in the occupation-number product basis.  Site 1 is the first
(slowest-varying) tensor factor, so a basis index decodes as base-d digits
``(n_1, n_2, ..., n_N)``.  Fermions are mapped onto this qubit space with
Jordan-Wigner sign strings, site 1 carrying no string.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

BOSON = "boson"
FERMION = "fermion"
QUBIT = "qubit"
STATISTICS_KINDS = (BOSON, FERMION, QUBIT)

DEFAULT_MEMORY_BUDGET_MB = 4096
MEMORY_BUDGET_ENV = "QRCBENCH_MEMORY_BUDGET_MB"


class DimensionBudgetError(RuntimeError):
    """Raised when a requested Hilbert space would blow the memory budget."""


def memory_budget_bytes() -> int:
    """Memory budget for dense matrices, overridable via the environment."""
    mb = int(os.environ.get(MEMORY_BUDGET_ENV, DEFAULT_MEMORY_BUDGET_MB))
    return mb * 1024 * 1024


def check_dimension_budget(total_dim: int, what: str = "operator") -> None:
    """Reject dimensions whose dense D x D representation exceeds the budget."""
    need = 16 * total_dim * total_dim  # one complex128 D x D matrix
    budget = memory_budget_bytes()
    if need > budget:
        raise DimensionBudgetError(
            f"dense {what} of dimension {total_dim} needs {need / 2**20:.0f} MiB "
            f"per matrix, over the budget of {budget / 2**20:.0f} MiB "
            f"(set {MEMORY_BUDGET_ENV} to raise it)"
        )


@dataclass(frozen=True)
class Statistics:
    """Particle statistics of a reservoir: boson (with Fock cutoff), fermion or qubit."""

    kind: str
    cutoff: int = 1

    def __post_init__(self):
        if self.kind not in STATISTICS_KINDS:
            raise ValueError(f"unknown statistics kind {self.kind!r}, expected one of {STATISTICS_KINDS}")
        if self.kind == BOSON and self.cutoff < 1:
            raise ValueError("boson cutoff must be >= 1")

    @classmethod
    def boson(cls, cutoff: int) -> "Statistics":
        return cls(BOSON, cutoff)

    @classmethod
    def fermion(cls) -> "Statistics":
        return cls(FERMION)

    @classmethod
    def qubit(cls) -> "Statistics":
        return cls(QUBIT)

    @property
    def local_dim(self) -> int:
        return self.cutoff + 1 if self.kind == BOSON else 2


def local_lowering(stat: Statistics) -> np.ndarray:
    """Single-site lowering matrix: sqrt(n) on the (n-1, n) entries."""
    d = stat.local_dim
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)


def occupation_table(dims: tuple[int, ...]) -> np.ndarray:
    """(D, N) table of per-site occupation numbers for each basis index."""
    grids = np.indices(dims).reshape(len(dims), -1)
    return grids.T.astype(np.int64)


@dataclass
class OperatorSet:
    """Per-site lowering/raising operators on the full product space.

    Dense matrices are materialized lazily through :attr:`lowering`; the
    structured ``apply_*`` methods act in O(D * d) without building them,
    which is what the trajectory engine uses at large dimension.
    """

    stat: Statistics
    n_sites: int
    local: np.ndarray = field(repr=False)
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.dims:
            self.dims = (self.stat.local_dim,) * self.n_sites

    @property
    def local_dim(self) -> int:
        return self.stat.local_dim

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @cached_property
    def occupations(self) -> np.ndarray:
        return occupation_table(self.dims)

    @cached_property
    def total_number_diagonal(self) -> np.ndarray:
        return self.occupations.sum(axis=1)

    def _string_signs(self, site: int) -> np.ndarray | None:
        """Jordan-Wigner sign over the factors preceding ``site`` (1-based)."""
        if self.stat.kind != FERMION or site == 1:
            return None
        pre = occupation_table(self.dims[: site - 1]).sum(axis=1)
        return np.where(pre % 2 == 0, 1.0, -1.0)

    @cached_property
    def _signs(self) -> list[np.ndarray | None]:
        return [self._string_signs(i) for i in range(1, self.n_sites + 1)]

    def _apply(self, site: int, mat: np.ndarray, arr: np.ndarray) -> np.ndarray:
        """Apply a single-site matrix (with the site's JW string) to rows of ``arr``."""
        d = self.local_dim
        pre = d ** (site - 1)
        shape = arr.shape
        x = arr.reshape(pre, d, -1)
        out = np.einsum("mn,pnr->pmr", mat, x)
        signs = self._signs[site - 1]
        if signs is not None:
            out *= signs[:, None, None]
        return out.reshape(shape)

    def apply_lowering(self, site: int, arr: np.ndarray) -> np.ndarray:
        return self._apply(site, self.local, arr)

    def apply_raising(self, site: int, arr: np.ndarray) -> np.ndarray:
        return self._apply(site, self.local.conj().T, arr)

    def lowering_matrix(self, site: int) -> np.ndarray:
        check_dimension_budget(self.total_dim)
        return self.apply_lowering(site, np.eye(self.total_dim, dtype=complex))

    @cached_property
    def lowering(self) -> list[np.ndarray]:
        return [self.lowering_matrix(i) for i in range(1, self.n_sites + 1)]

    @cached_property
    def raising(self) -> list[np.ndarray]:
        return [a.conj().T for a in self.lowering]

    def number_diagonal(self, site: int) -> np.ndarray:
        """Diagonal of a_i^dag a_i (diagonal for every statistics)."""
        return self.occupations[:, site - 1].astype(float)

    def total_number_matrix(self) -> np.ndarray:
        check_dimension_budget(self.total_dim)
        return np.diag(self.total_number_diagonal.astype(complex))


def build_ladder_ops(stat: Statistics, n_sites: int) -> OperatorSet:
    """Construct the site-resolved lowering/raising operators for ``stat``."""
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    d = stat.local_dim
    check_dimension_budget(d**n_sites)
    return OperatorSet(stat=stat, n_sites=n_sites, local=local_lowering(stat))


@dataclass(frozen=True)
class CouplingMatrix:
    """Symmetric coupling matrix with entries drawn uniformly from [0, 1]."""

    entries: np.ndarray
    seed: int
    include_diagonal: bool = True

    @property
    def n_sites(self) -> int:
        return self.entries.shape[0]


def coupling_rng(seed: int) -> np.random.Generator:
    """Dedicated substream for couplings so J never depends on sequence length."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[0])


def input_rng(seed: int) -> np.random.Generator:
    """Substream for the injected input series, paired with :func:`coupling_rng`."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[1])


def misc_rng(seed: int) -> np.random.Generator:
    """Substream for auxiliary draws (surrogates, random states)."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[2])


def sample_couplings(n_sites: int, seed: int, include_diagonal: bool = True) -> CouplingMatrix:
    """Draw a random symmetric J with uniform [0, 1] entries, reproducibly."""
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    raw = coupling_rng(seed).uniform(0.0, 1.0, size=(n_sites, n_sites))
    upper = np.triu(raw)
    entries = upper + np.triu(raw, k=1).T
    if not include_diagonal:
        np.fill_diagonal(entries, 0.0)
    entries.setflags(write=False)
    return CouplingMatrix(entries=entries, seed=seed, include_diagonal=include_diagonal)


def chain_couplings(n_sites: int) -> np.ndarray:
    """Nearest-neighbour homogeneous couplings of a 1D open chain."""
    j = np.zeros((n_sites, n_sites))
    idx = np.arange(n_sites - 1)
    j[idx, idx + 1] = 1.0
    j[idx + 1, idx] = 1.0
    return j


def build_hamiltonian(couplings: CouplingMatrix | np.ndarray, ops: OperatorSet) -> np.ndarray:
    """Hopping Hamiltonian H = sum_ij J_ij a_i^dag a_j as a dense matrix.

    J must be real symmetric; H then comes out exactly Hermitian and commutes
    with the total number operator for every statistics (on the retained
    space, in the truncated-boson case).  Built by index arithmetic over the
    occupation table, O(N^2 D) rather than dense operator products.
    """
    j = couplings.entries if isinstance(couplings, CouplingMatrix) else np.asarray(couplings, dtype=float)
    n = ops.n_sites
    if j.shape != (n, n):
        raise ValueError(f"coupling matrix shape {j.shape} does not match {n} sites")
    if not np.allclose(j, j.T):
        raise ValueError("coupling matrix must be symmetric")
    dim = ops.total_dim
    check_dimension_budget(dim, what="Hamiltonian")
    d = ops.local_dim
    occ = ops.occupations
    fermionic = ops.stat.kind == FERMION
    prefix = np.cumsum(occ, axis=1) - occ  # sum of occupations left of each site
    ham = np.zeros((dim, dim), dtype=complex)
    diag = sum(j[i, i] * ops.number_diagonal(i + 1) for i in range(n))
    ham[np.diag_indices(dim)] = diag
    strides = d ** np.arange(n - 1, -1, -1)
    for a in range(n):
        for b in range(a + 1, n):
            if j[a, b] == 0.0:
                continue
            # a_a^dag a_b sends |..n_a..n_b..> to |..n_a+1..n_b-1..>
            cols = np.flatnonzero((occ[:, b] >= 1) & (occ[:, a] <= d - 2))
            rows = cols + strides[a] - strides[b]
            amp = j[a, b] * np.sqrt(occ[cols, b] * (occ[cols, a] + 1.0))
            if fermionic:
                amp = amp * np.where((prefix[cols, a] + prefix[cols, b]) % 2 == 0, 1.0, -1.0)
            ham[rows, cols] += amp
            ham[cols, rows] += amp
    return ham


def build_chain_hamiltonian(n_sites: int, ops: OperatorSet) -> np.ndarray:
    """Nearest-neighbour chain H = sum_i (a_i^dag a_{i+1} + h.c.)."""
    if n_sites < 2:
        raise ValueError("a chain needs at least 2 sites")
    if ops.n_sites != n_sites:
        raise ValueError("operator set size does not match n_sites")
    return build_hamiltonian(chain_couplings(n_sites), ops)
