import numpy as np
import pytest
from numpy.testing import assert_allclose

from lpdoprune import gates, lpdo, oracle
from lpdoprune.injectivity import (
    apply_kappa_isometry,
    check_weak_injectivity,
    disentangler_for,
    prune_via_injectivity,
)
from lpdoprune.stiefel import OptimizerConfig, objective_renyi2, objective_von_neumann, optimize_isometry
from lpdoprune.tensor import TruncationPolicy

TINY = TruncationPolicy(cutoff=1e-8, norm_mode="L2")


class TestDisentanglerClosedForm:
    def test_single_qubit_x(self):
        v, phase = disentangler_for(gates.PAULI_X)
        assert phase == 0.0
        assert_allclose(v, gates.PAULI_X)
        a = np.eye(2) / np.sqrt(2)
        assert_allclose(gates.PAULI_X @ a, a @ v, atol=1e-15)

    def test_cnot_residual_zero(self):
        w = check_weak_injectivity(gates.CNOT)
        assert w.residual <= 1e-12

    def test_swap_residual_zero(self):
        assert check_weak_injectivity(gates.SWAP).residual <= 1e-12

    def test_hadamard_pair(self):
        hh = np.kron(gates.HADAMARD, gates.HADAMARD)
        assert check_weak_injectivity(hh).residual <= 1e-12

    def test_global_phase_invisible_in_state(self):
        # v = u keeps the phase; the witness is phase-blind and the state
        # itself is untouched by a pure phase
        u = np.exp(1j * 0.7) * np.eye(4)
        w = check_weak_injectivity(u)
        assert w.residual <= 1e-12
        assert w.phase == pytest.approx(0.0, abs=1e-12)
        chain = lpdo.maximally_mixed_lpdo(4)
        out = prune_via_injectivity(chain, u, (1, 2), cutoff=1e-8)
        assert lpdo.fidelity(out, chain).fidelity == pytest.approx(1.0, abs=1e-12)

    def test_commutation_identity_random_unitaries(self):
        # the analytic core: U (A x A) = (A x A) U exactly for A prop identity
        rng = np.random.default_rng(0)
        a = np.eye(4) / 2
        for _ in range(20):
            u = gates.random_unitary(4, rng)
            assert_allclose(u @ a, a @ u, atol=1e-14)
            assert check_weak_injectivity(u).residual <= 1e-12

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            disentangler_for(np.ones((2, 2)))


class TestApplyKappaIsometry:
    def test_identity_noop(self):
        chain = lpdo.canonicalize(lpdo.maximally_mixed_lpdo(3), 1)
        out = apply_kappa_isometry(chain, (1, 2), np.eye(4), TINY)
        assert lpdo.fidelity(out, chain).fidelity == pytest.approx(1.0, abs=1e-12)

    def test_random_pair_isometry_is_gauge(self):
        chain = lpdo.maximally_mixed_lpdo(4)
        u = gates.random_unitary(4, np.random.default_rng(5))
        out = apply_kappa_isometry(chain, (1, 2), u, TINY)
        rep = lpdo.fidelity(out, chain)
        assert rep.fidelity == pytest.approx(1.0, abs=1e-10)
        assert lpdo.trace(out) == pytest.approx(1.0, abs=1e-10)
        assert lpdo.purity(out) == pytest.approx(lpdo.purity(chain), abs=1e-10)

    def test_rho_elementwise_invariant(self):
        chain = lpdo.depolarize(lpdo.random_pure_lpdo(4, 2, seed=8))
        kc = chain.kraus_dims[1] * chain.kraus_dims[2]
        u = gates.random_unitary(kc, np.random.default_rng(11))
        out = apply_kappa_isometry(chain, (1, 2), u, TruncationPolicy(cutoff=0.0))
        assert_allclose(
            oracle.lpdo_to_dense(out).matrix,
            oracle.lpdo_to_dense(chain).matrix,
            atol=1e-10,
        )

    def test_dim_mismatch_rejected(self):
        chain = lpdo.maximally_mixed_lpdo(3)
        with pytest.raises(ValueError):
            apply_kappa_isometry(chain, (0, 1), np.eye(3), TINY)

    def test_non_isometry_rejected(self):
        chain = lpdo.maximally_mixed_lpdo(3)
        with pytest.raises(ValueError):
            apply_kappa_isometry(chain, (0, 1), np.diag([1.0, 1.0, 1.0, 0.0]), TINY)


class TestPruneViaInjectivity:
    def test_cnot_round_trip(self):
        chain = lpdo.maximally_mixed_lpdo(4)
        after_u = lpdo.apply_unitary(chain, (1, 2), gates.CNOT, TINY)
        assert after_u.bond_dims == (1, 2, 1)
        out = prune_via_injectivity(chain, gates.CNOT, (1, 2), cutoff=1e-8)
        assert out.bond_dims == (1, 1, 1)
        assert lpdo.fidelity(out, chain).fidelity == pytest.approx(1.0, abs=1e-10)
        assert_allclose(
            oracle.lpdo_to_dense(out).matrix, np.eye(16) / 16, atol=1e-12
        )

    def test_twenty_seeded_random_unitaries(self):
        chain = lpdo.maximally_mixed_lpdo(4)
        for seed in range(20):
            u = gates.random_unitary(4, np.random.default_rng(seed))
            mid = lpdo.apply_unitary(chain, (1, 2), u, TINY)
            assert 1 <= mid.bond_dims[1] <= 4
            out = prune_via_injectivity(chain, u, (1, 2), cutoff=1e-8)
            assert out.bond_dims == (1, 1, 1)
            assert lpdo.fidelity(out, chain).fidelity == pytest.approx(1.0, abs=1e-10)

    def test_identity_is_noop(self):
        chain = lpdo.maximally_mixed_lpdo(4)
        out = prune_via_injectivity(chain, np.eye(4), (1, 2), cutoff=1e-8)
        assert out.bond_dims == (1, 1, 1)
        assert lpdo.fidelity(out, chain).fidelity == pytest.approx(1.0, abs=1e-12)

    def test_one_qubit_gate(self):
        chain = lpdo.maximally_mixed_lpdo(3)
        out = prune_via_injectivity(chain, gates.HADAMARD, 1, cutoff=1e-8)
        assert lpdo.fidelity(out, chain).fidelity == pytest.approx(1.0, abs=1e-12)

    def test_precondition_enforced(self):
        chain = lpdo.depolarize(lpdo.random_pure_lpdo(4, 4, seed=2))
        with pytest.raises(ValueError):
            prune_via_injectivity(chain, gates.CNOT, (1, 2))  # chi > 1

    def test_disentangled_blocks_have_zero_entropy(self):
        chain = lpdo.maximally_mixed_lpdo(4)
        u = gates.random_unitary(4, np.random.default_rng(33))
        out = prune_via_injectivity(chain, u, (1, 2), cutoff=1e-8)
        out = lpdo.canonicalize(out, 1)
        block = lpdo.two_site_block(out, 1)
        kc = block.data.shape[4] * block.data.shape[5]
        eye = np.eye(kc)
        assert objective_renyi2(block, eye).value <= 1e-9
        assert objective_von_neumann(block, eye).value <= 1e-9


class TestOptimizerAnalyticConsistency:
    def test_optimizer_matches_closed_form_on_cnot_block(self):
        # the analytic disentangler reaches exactly zero; the descent must
        # match it to 1e-6 within the iteration budget
        chain = lpdo.apply_unitary(
            lpdo.maximally_mixed_lpdo(4), (1, 2), gates.CNOT, TINY
        )
        block = lpdo.two_site_block(lpdo.canonicalize(chain, 1), 1)
        analytic = objective_renyi2(block, gates.CNOT.conj().T).value
        assert analytic <= 1e-12
        cfg = OptimizerConfig(
            objective="renyi2", n_iter=500, grad_tol=1e-10,
            n_restarts=1, restart_seed=3,
        )
        point, history = optimize_isometry(block, cfg)
        assert len(history) - 1 <= 500
        assert abs(history[-1].value - analytic) <= 1e-6
