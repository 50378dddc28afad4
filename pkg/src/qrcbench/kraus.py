"""Kraus form of the injection channel and its transfer-matrix spectrum.

For a single-step input value u the reservoir map is a fixed CPTP channel;
with a two-level injection (excitation level 1) it is generated by the pair

    K1 = U (|psi><psi| (x) I),   K2 = U (|psi><psi_perp| (x) I),

and for higher boson injection levels by the isometry family with one Kraus
operator per basis vector completing |psi>.  The channel eigenvalues are the
eigenvalues of T = sum_i K_i (x) conj(K_i), acting on row-major vectorized
density matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import InputSpec, Propagator
from .operators import memory_budget_bytes

TRANSFER_DIM_LIMIT = 65536  # largest D^2 we will diagonalize densely
COMPLETENESS_ATOL = 1e-10


class SpectralBudgetError(RuntimeError):
    """Requested transfer matrix too large for dense spectral analysis."""


@dataclass
class KrausPair:
    """Two-operator Kraus representation of the injection channel (e = 1)."""

    k1: np.ndarray
    k2: np.ndarray
    input_value: float
    psi: np.ndarray
    psi_perp: np.ndarray

    def completeness_residual(self) -> float:
        dim = self.k1.shape[0]
        acc = self.k1.conj().T @ self.k1 + self.k2.conj().T @ self.k2
        return float(np.linalg.norm(acc - np.eye(dim)))

    @property
    def operators(self) -> list[np.ndarray]:
        return [self.k1, self.k2]


@dataclass
class TransferSpectrum:
    """Eigenvalues of the channel, sorted by decreasing modulus."""

    eigenvalues: np.ndarray
    spectral_radius: float
    second_modulus: float


def _injection_slab(unitary: np.ndarray, dims) -> tuple[int, int]:
    d = dims[0]
    rest = unitary.shape[0] // d
    return d, rest


def _embed(unitary: np.ndarray, ket: np.ndarray, bra: np.ndarray, dims) -> np.ndarray:
    """U (|ket><bra| (x) I) over the non-injected sites."""
    d, rest = _injection_slab(unitary, dims)
    return unitary @ np.kron(np.outer(ket, bra.conj()), np.eye(rest))


def kraus_pair(unitary: np.ndarray, value: float, spec: InputSpec, dims) -> KrausPair:
    """The two-operator Kraus pair; only defined for excitation level 1."""
    if spec.excitation_level != 1:
        raise ValueError(
            "the two-operator Kraus pair needs excitation level 1; "
            "use kraus_family for higher injection levels"
        )
    d = dims[0]
    c0, ce = spec.amplitudes(value)
    psi = np.zeros(d, dtype=complex)
    psi[0], psi[1] = c0, ce
    # orthogonal partner c0 |1> - ce |0| within the injected two-level subspace
    perp = np.zeros(d, dtype=complex)
    perp[0], perp[1] = -ce, c0
    k1 = _embed(unitary, psi, psi, dims)
    k2 = _embed(unitary, psi, perp, dims)
    return KrausPair(k1=k1, k2=k2, input_value=float(value), psi=psi, psi_perp=perp)


def kraus_family(unitary: np.ndarray, value: float, spec: InputSpec, dims) -> list[np.ndarray]:
    """Complete Kraus family, one operator per basis vector extending |psi>.

    For excitation level 1 the first two members coincide (up to a sign of
    psi_perp) with :func:`kraus_pair`; for boson injection into level e >= 2
    the remaining local levels contribute one operator each.
    """
    d = dims[0]
    e = spec.excitation_level
    if e >= d:
        raise ValueError("excitation level does not fit the local dimension")
    c0, ce = spec.amplitudes(value)
    psi = np.zeros(d, dtype=complex)
    psi[0], psi[e] = c0, ce
    basis = [psi]
    perp = np.zeros(d, dtype=complex)
    perp[0], perp[e] = -ce, c0
    basis.append(perp)
    for m in range(d):
        if m in (0, e):
            continue
        vec = np.zeros(d, dtype=complex)
        vec[m] = 1.0
        basis.append(vec)
    return [_embed(unitary, psi, phi, dims) for phi in basis]


def apply_kraus(operators, rho: np.ndarray) -> np.ndarray:
    """sum_i K_i rho K_i^dag."""
    out = np.zeros_like(rho)
    for k in operators:
        out += k @ rho @ k.conj().T
    return out


def completeness_residual(operators) -> float:
    dim = operators[0].shape[0]
    acc = sum(k.conj().T @ k for k in operators)
    return float(np.linalg.norm(acc - np.eye(dim)))


def transfer_matrix(kraus) -> np.ndarray:
    """T = sum_i K_i (x) conj(K_i) on row-major vectorized states.

    With vec(rho) = rho.reshape(-1) (row stacking), vec(K rho K^dag) equals
    (K (x) conj(K)) vec(rho), so this T both matches the channel action and
    carries its spectrum.
    """
    operators = kraus.operators if isinstance(kraus, KrausPair) else list(kraus)
    dim = operators[0].shape[0]
    if dim * dim > TRANSFER_DIM_LIMIT:
        raise SpectralBudgetError(
            f"transfer matrix dimension {dim * dim} exceeds the limit {TRANSFER_DIM_LIMIT}"
        )
    if 16 * dim**4 > memory_budget_bytes():
        raise SpectralBudgetError(
            f"transfer matrix would need {16 * dim**4 / 2**20:.0f} MiB, over the memory budget"
        )
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for k in operators:
        out += np.kron(k, k.conj())
    return out


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Row-major vectorization matching :func:`transfer_matrix`."""
    return rho.reshape(-1)


def unvectorize(vec: np.ndarray) -> np.ndarray:
    dim = int(round(np.sqrt(vec.size)))
    return vec.reshape(dim, dim)


def spectrum(transfer: np.ndarray) -> TransferSpectrum:
    """Full dense eigenvalue set; radius and second-largest modulus."""
    eigs = np.linalg.eigvals(transfer)
    order = np.argsort(-np.abs(eigs), kind="stable")
    eigs = eigs[order]
    moduli = np.abs(eigs)
    radius = float(moduli[0])
    if radius > 1.0 + 1e-8:
        raise ValueError(f"spectral radius {radius} exceeds 1; not a CPTP channel")
    second = float(moduli[1]) if len(moduli) > 1 else 0.0
    return TransferSpectrum(eigenvalues=eigs, spectral_radius=radius, second_modulus=second)


def channel_spectrum(
    ham: np.ndarray, dims, dt: float, value: float, spec: InputSpec
) -> TransferSpectrum:
    """Spectrum of the fixed-input injection channel for Hamiltonian ``ham``."""
    unitary = Propagator(ham, dims, dt).unitary
    family = kraus_family(unitary, value, spec, dims)
    return spectrum(transfer_matrix(family))
