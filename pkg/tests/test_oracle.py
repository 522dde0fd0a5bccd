import numpy as np
import pytest
from numpy.testing import assert_allclose

from lpdoprune import gates, lpdo, oracle


class TestLpdoToDense:
    def test_maximally_mixed_two_sites(self):
        rho = oracle.lpdo_to_dense(lpdo.maximally_mixed_lpdo(2))
        assert_allclose(rho.matrix, np.eye(4) / 4, atol=1e-14)

    def test_pure_chain_is_rank_one(self):
        chain = lpdo.random_pure_lpdo(4, 4, seed=2)
        rho = oracle.lpdo_to_dense(chain)
        vals = np.linalg.eigvalsh(rho.matrix)
        assert_allclose(vals[-1], 1.0, atol=1e-10)
        assert np.all(vals[:-1] < 1e-10)

    def test_hermitian_psd_trace_one(self):
        chain = lpdo.depolarize(lpdo.random_pure_lpdo(5, 4, seed=9), 0.3, 0.2)
        rho = oracle.lpdo_to_dense(chain)
        assert_allclose(rho.matrix, rho.matrix.conj().T, atol=1e-12)
        assert abs(np.trace(rho.matrix).real - 1.0) < 1e-10
        assert oracle.min_eigenvalue(rho) >= -1e-10

    def test_size_cap(self):
        chain = lpdo.maximally_mixed_lpdo(13)
        with pytest.raises(oracle.OracleSizeError):
            oracle.lpdo_to_dense(chain)

    def test_basis_convention_site0_most_significant(self):
        # |0...0> flipped at site 0 puts weight on index 2^(N-1)
        n = 3
        chain = lpdo.random_pure_lpdo(n, 1, seed=1)
        # overwrite with the product |000>
        from lpdoprune.lpdo import _site

        data = np.zeros((2, 1, 1, 1), dtype=complex)
        data[0, 0, 0, 0] = 1.0
        chain = lpdo.LpdoChain(tuple(_site(i, data.copy()) for i in range(n)), None)
        flipped = lpdo.apply_unitary(chain, 0, gates.PAULI_X)
        rho = oracle.lpdo_to_dense(flipped)
        expect = np.zeros((8, 8))
        expect[4, 4] = 1.0
        assert_allclose(rho.matrix, expect, atol=1e-14)


class TestDenseApply:
    def zero_state(self, n):
        dim = 2**n
        m = np.zeros((dim, dim), dtype=complex)
        m[0, 0] = 1.0
        return oracle.DenseRho(n, m)

    def test_bitflip_half_fully_mixes_zero(self):
        rho = self.zero_state(1)
        out = oracle.dense_apply(rho, lpdo.bitflip_channel(0.5), 0)
        assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-14)

    def test_unitary_leaves_identity_invariant(self):
        n = 3
        rho = oracle.DenseRho(n, np.eye(8) / 8)
        u = gates.random_unitary(4, np.random.default_rng(0))
        out = oracle.dense_apply(rho, u, (1, 2))
        assert_allclose(out.matrix, rho.matrix, atol=1e-12)

    def test_dephasing_scales_off_diagonals(self):
        # |+><+| off-diagonals shrink by (1 - 2 gamma)
        gamma = 0.3
        plus = np.full((2, 2), 0.5, dtype=complex)
        out = oracle.dense_apply(oracle.DenseRho(1, plus), lpdo.dephasing_channel(gamma), 0)
        expect = np.array([[0.5, 0.5 * (1 - 2 * gamma)], [0.5 * (1 - 2 * gamma), 0.5]])
        assert_allclose(out.matrix, expect, atol=1e-14)

    def test_cnot_on_plus_zero(self):
        # CNOT (control site 0) on |+0> gives a Bell state
        n = 2
        plus0 = np.kron(np.full((2, 2), 0.5), [[1, 0], [0, 0]]).astype(complex)
        out = oracle.dense_apply(oracle.DenseRho(n, plus0), gates.CNOT, (0, 1))
        bell = np.zeros(4, dtype=complex)
        bell[0] = bell[3] = 1 / np.sqrt(2)  # (|00> + |11>)/sqrt2
        assert_allclose(out.matrix, np.outer(bell, bell.conj()), atol=1e-14)

    def test_rejects_non_adjacent(self):
        rho = self.zero_state(3)
        with pytest.raises(ValueError):
            oracle.dense_apply(rho, gates.CNOT, (0, 2))

    def test_rejects_non_unitary(self):
        rho = self.zero_state(1)
        with pytest.raises(ValueError):
            oracle.dense_apply(rho, np.array([[1.0, 0.0], [0.0, 2.0]]), 0)


class TestDenseMeasures:
    def test_self_fidelity(self):
        rho = oracle.lpdo_to_dense(lpdo.random_pure_lpdo(3, 2, seed=4))
        m = oracle.dense_measures(rho, rho)
        assert m.fidelity == pytest.approx(1.0, abs=1e-12)

    def test_purity_of_maximally_mixed(self):
        n = 4
        rho = oracle.DenseRho(n, np.eye(2**n) / 2**n)
        m = oracle.dense_measures(rho)
        assert m.purity_a == pytest.approx(2.0**-n, abs=1e-14)

    def test_pure_vs_mixed_hand_value(self):
        # F = Tr[rho_f rho_i]/max purity = 0.5 for |0><0| against 1/2
        a = oracle.DenseRho(1, np.diag([1.0, 0.0]).astype(complex))
        b = oracle.DenseRho(1, np.eye(2) / 2)
        m = oracle.dense_measures(a, b)
        assert m.fidelity == pytest.approx(0.5, abs=1e-14)

    def test_bell_half_chain_entropy(self):
        bell = np.zeros(4, dtype=complex)
        bell[0] = bell[3] = 1 / np.sqrt(2)
        rho = oracle.DenseRho(2, np.outer(bell, bell.conj()))
        assert oracle.vn_entropy(rho, [0]) == pytest.approx(np.log(2), abs=1e-12)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            oracle.dense_measures(
                oracle.DenseRho(1, np.eye(2) / 2), oracle.DenseRho(2, np.eye(4) / 4)
            )
