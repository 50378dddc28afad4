import numpy as np
import pytest

from qrcbench.operators import (
    CouplingMatrix,
    DimensionBudgetError,
    Statistics,
    build_chain_hamiltonian,
    build_hamiltonian,
    build_ladder_ops,
    chain_couplings,
    sample_couplings,
)

ALL_STATS = [Statistics.qubit(), Statistics.fermion(), Statistics.boson(2), Statistics.boson(3)]


def frob(mat):
    return np.linalg.norm(mat)


class TestLadderOps:
    def test_qubit_single_site_lowering(self):
        ops = build_ladder_ops(Statistics.qubit(), 1)
        assert np.array_equal(ops.lowering[0], np.array([[0, 1], [0, 0]], dtype=complex))

    def test_boson_ladder_elements(self):
        ops = build_ladder_ops(Statistics.boson(2), 1)
        low = ops.lowering[0]
        assert low[0, 1] == 1.0
        assert low[1, 2] == pytest.approx(np.sqrt(2))
        assert np.count_nonzero(low) == 2

    def test_fermion_anticommutators(self):
        ops = build_ladder_ops(Statistics.fermion(), 2)
        a1, a2 = ops.lowering
        a1d, a2d = ops.raising
        assert frob(a1 @ a2d + a2d @ a1) < 1e-12
        assert frob(a2 @ a2d + a2d @ a2 - np.eye(4)) < 1e-12

    def test_raising_is_conjugate_transpose(self):
        for stat in ALL_STATS:
            ops = build_ladder_ops(stat, 2)
            for low, high in zip(ops.lowering, ops.raising):
                assert np.array_equal(high, low.conj().T)

    @pytest.mark.parametrize("n_sites", [2, 3, 4])
    def test_fermion_algebra_exact(self, n_sites):
        ops = build_ladder_ops(Statistics.fermion(), n_sites)
        eye = np.eye(ops.total_dim)
        for i in range(n_sites):
            for j in range(n_sites):
                anti = ops.lowering[i] @ ops.raising[j] + ops.raising[j] @ ops.lowering[i]
                assert frob(anti - (eye if i == j else 0)) < 1e-12
                aa = ops.lowering[i] @ ops.lowering[j] + ops.lowering[j] @ ops.lowering[i]
                assert frob(aa) < 1e-12

    @pytest.mark.parametrize("n_sites", [2, 3, 4])
    def test_qubit_cross_site_commutators(self, n_sites):
        ops = build_ladder_ops(Statistics.qubit(), n_sites)
        for i in range(n_sites):
            for j in range(n_sites):
                if i == j:
                    continue
                comm = ops.lowering[i] @ ops.raising[j] - ops.raising[j] @ ops.lowering[i]
                assert frob(comm) < 1e-12

    @pytest.mark.parametrize("cutoff,n_sites", [(2, 2), (3, 2), (2, 3), (3, 3)])
    def test_boson_truncated_commutator(self, cutoff, n_sites):
        stat = Statistics.boson(cutoff)
        ops = build_ladder_ops(stat, n_sites)
        d = stat.local_dim
        eye = np.eye(ops.total_dim)
        for i in range(n_sites):
            comm = ops.lowering[i] @ ops.raising[i] - ops.raising[i] @ ops.lowering[i]
            # canonical on the subspace below the top retained level of site i
            top = ops.occupations[:, i] == cutoff
            proj = np.diag(top.astype(float))
            expected = eye - (cutoff + 1) * proj
            assert frob(comm - expected) < 1e-12
            keep = np.diag((~top).astype(float))
            assert frob(keep @ (comm - eye) @ keep) < 1e-12

    def test_boson_cross_site_commutes(self):
        ops = build_ladder_ops(Statistics.boson(2), 2)
        comm = ops.lowering[0] @ ops.raising[1] - ops.raising[1] @ ops.lowering[0]
        assert frob(comm) < 1e-12

    def test_structured_apply_matches_dense(self):
        for stat in ALL_STATS:
            ops = build_ladder_ops(stat, 3)
            rng = np.random.default_rng(0)
            mat = rng.normal(size=(ops.total_dim, 5)) + 1j * rng.normal(size=(ops.total_dim, 5))
            for i in range(1, 4):
                assert np.allclose(ops.apply_lowering(i, mat), ops.lowering[i - 1] @ mat)
                assert np.allclose(ops.apply_raising(i, mat), ops.raising[i - 1] @ mat)

    def test_dimension_budget_guard(self, monkeypatch):
        monkeypatch.setenv("QRCBENCH_MEMORY_BUDGET_MB", "1")
        with pytest.raises(DimensionBudgetError):
            build_ladder_ops(Statistics.boson(9), 4)

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            build_ladder_ops(Statistics.qubit(), 0)
        with pytest.raises(ValueError):
            Statistics.boson(0)
        with pytest.raises(ValueError):
            Statistics("anyon")


class TestCouplings:
    def test_deterministic_per_seed(self):
        j1 = sample_couplings(4, 123)
        j2 = sample_couplings(4, 123)
        assert np.array_equal(j1.entries, j2.entries)

    def test_different_seeds_differ(self):
        assert not np.array_equal(sample_couplings(4, 1).entries, sample_couplings(4, 2).entries)

    def test_symmetric_and_in_range(self):
        j = sample_couplings(6, 7).entries
        assert np.array_equal(j, j.T)
        assert j.min() >= 0.0 and j.max() <= 1.0

    def test_diagonal_flag_preserves_offdiagonal(self):
        with_diag = sample_couplings(4, 5, include_diagonal=True).entries
        without = sample_couplings(4, 5, include_diagonal=False).entries
        assert np.all(np.diag(without) == 0.0)
        off = ~np.eye(4, dtype=bool)
        assert np.array_equal(with_diag[off], without[off])


class TestHamiltonians:
    def test_zero_couplings_zero_hamiltonian(self):
        ops = build_ladder_ops(Statistics.qubit(), 3)
        ham = build_hamiltonian(np.zeros((3, 3)), ops)
        assert frob(ham) == 0.0

    def test_two_site_single_excitation_block(self):
        ops = build_ladder_ops(Statistics.qubit(), 2)
        j = np.array([[0.0, 1.0], [1.0, 0.0]])
        ham = build_hamiltonian(j, ops)
        # basis |10> = index 2, |01> = index 1
        block = ham[np.ix_([2, 1], [2, 1])]
        assert np.allclose(block, [[0, 1], [1, 0]])

    @pytest.mark.parametrize("stat", ALL_STATS, ids=lambda s: f"{s.kind}{s.cutoff}")
    def test_hermitian_and_number_conserving(self, stat):
        ops = build_ladder_ops(stat, 3)
        ham = build_hamiltonian(sample_couplings(3, 42), ops)
        assert frob(ham - ham.conj().T) < 1e-12
        n_tot = ops.total_number_matrix()
        assert frob(ham @ n_tot - n_tot @ ham) < 1e-12

    @pytest.mark.parametrize("stat", ALL_STATS, ids=lambda s: f"{s.kind}{s.cutoff}")
    def test_matches_dense_operator_sum(self, stat):
        ops = build_ladder_ops(stat, 3)
        j = sample_couplings(3, 13).entries
        ham = build_hamiltonian(j, ops)
        direct = sum(
            j[a, b] * ops.raising[a] @ ops.lowering[b] for a in range(3) for b in range(3)
        )
        assert np.linalg.norm(ham - direct) < 1e-13

    def test_seed_determinism_of_hamiltonian(self):
        ops = build_ladder_ops(Statistics.fermion(), 3)
        h1 = build_hamiltonian(sample_couplings(3, 9), ops)
        h2 = build_hamiltonian(sample_couplings(3, 9), ops)
        assert np.array_equal(h1, h2)

    def test_chain_matches_alltoall_pattern(self):
        ops = build_ladder_ops(Statistics.qubit(), 2)
        chain = build_chain_hamiltonian(2, ops)
        alltoall = build_hamiltonian(np.array([[0.0, 1.0], [1.0, 0.0]]), ops)
        assert np.array_equal(chain, alltoall)

    def test_chain_hermiticity(self):
        ops = build_ladder_ops(Statistics.qubit(), 5)
        ham = build_chain_hamiltonian(5, ops)
        assert frob(ham - ham.conj().T) < 1e-14

    def test_chain_single_excitation_tridiagonal(self):
        for stat in [Statistics.qubit(), Statistics.fermion()]:
            ops = build_ladder_ops(stat, 3)
            ham = build_chain_hamiltonian(3, ops)
            # single-excitation states |100>, |010>, |001>
            idx = [4, 2, 1]
            block = ham[np.ix_(idx, idx)]
            assert np.allclose(block, [[0, 1, 0], [1, 0, 1], [0, 1, 0]])

    def test_dimension_mismatch(self):
        ops = build_ladder_ops(Statistics.qubit(), 3)
        with pytest.raises(ValueError):
            build_hamiltonian(np.zeros((2, 2)), ops)

    def test_coupling_matrix_type(self):
        j = sample_couplings(2, 3)
        assert isinstance(j, CouplingMatrix)
        assert j.n_sites == 2
        assert np.array_equal(chain_couplings(3), [[0, 1, 0], [1, 0, 1], [0, 1, 0]])
