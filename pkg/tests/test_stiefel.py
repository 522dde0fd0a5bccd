import numpy as np
import pytest
from numpy.testing import assert_allclose

from lpdoprune import gates, lpdo, stiefel
from lpdoprune.stiefel import (
    OptimizerConfig,
    PairBlockProblem,
    StiefelPoint,
    _fd_gradient_batched,
    bond_spectrum,
    fd_gradient,
    objective_renyi2,
    objective_von_neumann,
    optimize_bond,
    optimize_isometry,
    project_tangent,
    retract,
    riemann_sweep,
)
from lpdoprune.tensor import DenseTensor, Index, TruncationPolicy

TINY = TruncationPolicy(cutoff=1e-8, norm_mode="L2")


def cnot_block():
    chain = lpdo.apply_unitary(
        lpdo.maximally_mixed_lpdo(4), (1, 2), gates.CNOT, TINY
    )
    return lpdo.two_site_block(lpdo.canonicalize(chain, 1), 1)


def planted_block(singular_values):
    """A two-site-shaped block whose bipartition spectrum is planted.

    Left group (s_i, l, k_i) and right group (s_j, r, k_j) each have dim 4;
    the block is sum_k sigma_k |k><k| across that split.
    """
    sv = np.asarray(singular_values, dtype=float)
    mat = np.zeros((4, 4), dtype=complex)
    mat[: len(sv), : len(sv)] = np.diag(sv)
    data = mat.reshape(2, 1, 2, 2, 1, 2).transpose(0, 3, 1, 4, 2, 5)
    idx = (
        Index("s0", 2, "physical"),
        Index("s1", 2, "physical"),
        Index("b-1", 1, "bond"),
        Index("b1", 1, "bond"),
        Index("k0", 2, "kraus"),
        Index("k1", 2, "kraus"),
    )
    return DenseTensor(idx, data)


class TestProjectTangent:
    def test_hermitian_direction_killed_at_identity(self):
        rng = np.random.default_rng(0)
        h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = (h + h.conj().T) / 2
        assert_allclose(project_tangent(np.eye(4), h), 0, atol=1e-14)

    def test_skew_direction_preserved_at_identity(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        skew = (a - a.conj().T) / 2
        assert_allclose(project_tangent(np.eye(4), skew), skew, atol=1e-14)

    def test_tangency_condition(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            v = gates.random_unitary(5, rng)
            d = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
            xi = project_tangent(v, d)
            vhxi = v.conj().T @ xi
            assert_allclose(vhxi + vhxi.conj().T, 0, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            project_tangent(np.eye(3), np.zeros((2, 2)))


class TestRetract:
    def test_zero_step_exact(self):
        rng = np.random.default_rng(3)
        v = gates.random_unitary(4, rng)
        xi = project_tangent(v, rng.standard_normal((4, 4)) + 0j)
        assert np.array_equal(retract(v, xi, 0.0).v, v)

    def test_isometry_on_random_inputs(self):
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(100):
            v = gates.random_unitary(4, rng)
            xi = project_tangent(
                v, rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            )
            t = float(rng.uniform(0, 2))
            out = retract(v, xi, t).v
            worst = max(worst, np.linalg.norm(out.conj().T @ out - np.eye(4)))
        assert worst <= 1e-10

    def test_first_order_agreement_with_exponential(self):
        # at the identity with skew xi the exact curve is expm(t xi)
        rng = np.random.default_rng(5)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        xi = (a - a.conj().T) / 2
        h, lam = np.linalg.eigh(-1j * xi)

        def expm(t):
            return lam @ np.diag(np.exp(1j * t * h)) @ lam.conj().T

        errs = []
        for t in (1e-2, 1e-3):
            errs.append(np.linalg.norm(retract(np.eye(4), xi, t).v - expm(t)))
        # second order in t: shrinking t by 10 shrinks the error ~100x
        assert errs[1] <= errs[0] * 1e-1
        assert errs[0] <= 10 * 1e-4

    def test_straight_line_deviation_is_second_order(self):
        rng = np.random.default_rng(6)
        v = gates.random_unitary(4, rng)
        xi = project_tangent(v, rng.standard_normal((4, 4)) + 0j)
        d1 = np.linalg.norm(retract(v, xi, 1e-2).v - (v + 1e-2 * xi))
        d2 = np.linalg.norm(retract(v, xi, 1e-3).v - (v + 1e-3 * xi))
        assert d2 <= d1 * 2e-2


class TestFdGradient:
    def test_linear_objective_recovers_coefficient(self):
        rng = np.random.default_rng(7)
        c = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))

        def f(v):
            return float(np.trace(c.conj().T @ v).real)

        d = fd_gradient(f, np.eye(3), eps=1e-6)
        assert_allclose(d, c, atol=1e-9)

    def test_constant_objective_gives_zero(self):
        d = fd_gradient(lambda v: 1.5, np.eye(3), eps=1e-6)
        assert_allclose(d, 0, atol=1e-9)

    def test_second_order_convergence_on_cubic(self):
        # central differences are exact through quadratics; a cubic term
        # makes the truncation error eps^2 visible and the 4x ratio testable
        rng = np.random.default_rng(8)
        c = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        d0 = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))

        def f(v):
            t = float(np.trace(d0.conj().T @ v).real)
            return float(np.trace(c.conj().T @ v).real) + t**3

        v0 = gates.random_unitary(3, rng)
        t0 = float(np.trace(d0.conj().T @ v0).real)
        analytic = c + 3 * t0**2 * d0
        errs = [
            np.max(np.abs(fd_gradient(f, v0, eps=e) - analytic))
            for e in (1e-3, 5e-4)
        ]
        assert errs[1] > 0
        assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.5)

    def test_batched_matches_entrywise(self):
        block = cnot_block()
        prob = PairBlockProblem(block)
        rng = np.random.default_rng(9)
        v = gates.random_unitary(prob.kc, rng)
        loop = fd_gradient(lambda m: prob.value("renyi2", m), v, eps=1e-6)
        batched = _fd_gradient_batched(prob.renyi2_batch, v, 1e-6)
        assert_allclose(batched, loop, atol=1e-10)

    def test_fast_renyi2_path_matches_batched(self):
        block = cnot_block()
        prob = PairBlockProblem(block)
        rng = np.random.default_rng(10)
        v = gates.random_unitary(prob.kc, rng)
        fast = prob.renyi2_fd_gradient(v, 1e-6)
        brute = _fd_gradient_batched(prob.renyi2_batch, v, 1e-6)
        assert_allclose(fast, brute, atol=1e-8)

    def test_non_finite_reported(self):
        def f(v):
            return float("nan")

        with pytest.raises(FloatingPointError):
            fd_gradient(f, np.eye(2), eps=1e-6)


class TestObjectives:
    def test_minimal_block_has_zero_entropy(self):
        chain = lpdo.canonicalize(lpdo.maximally_mixed_lpdo(3), 1)
        block = lpdo.two_site_block(chain, 1)
        eye = np.eye(4)
        assert objective_renyi2(block, eye).value == pytest.approx(0.0, abs=1e-12)
        assert objective_von_neumann(block, eye).value == pytest.approx(0.0, abs=1e-12)

    def test_uniform_spectrum_gives_ln2(self):
        block = planted_block([1 / np.sqrt(2), 1 / np.sqrt(2)])
        eye = np.eye(4)
        assert objective_renyi2(block, eye).value == pytest.approx(np.log(2), abs=1e-12)
        assert objective_von_neumann(block, eye).value == pytest.approx(
            np.log(2), abs=1e-12
        )

    def test_planted_spectrum_closed_forms(self):
        # lambda = (0.75, 0.25): S2 = -ln(0.625), Svn = -sum lambda ln lambda
        block = planted_block([np.sqrt(0.75), np.sqrt(0.25)])
        eye = np.eye(4)
        s2 = -np.log(0.75**2 + 0.25**2)
        svn = -(0.75 * np.log(0.75) + 0.25 * np.log(0.25))
        assert objective_renyi2(block, eye).value == pytest.approx(s2, abs=1e-10)
        assert objective_von_neumann(block, eye).value == pytest.approx(svn, abs=1e-10)

    def test_cnot_block_at_identity_is_ln2(self):
        assert objective_renyi2(cnot_block(), np.eye(4)).value == pytest.approx(
            np.log(2), abs=1e-10
        )

    def test_renyi2_lower_bounds_von_neumann(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            sv = rng.uniform(0.05, 1.0, size=4)
            block = planted_block(sv / np.linalg.norm(sv))
            v = gates.random_unitary(4, rng)
            s2 = objective_renyi2(block, v).value
            svn = objective_von_neumann(block, v).value
            assert s2 <= svn + 1e-9

    def test_rejects_non_isometric(self):
        block = cnot_block()
        with pytest.raises(ValueError):
            objective_renyi2(block, 2.0 * np.eye(4))
        with pytest.raises(ValueError):
            objective_von_neumann(block, np.ones((4, 4)))

    def test_rejects_wrong_shape(self):
        block = cnot_block()
        with pytest.raises(ValueError):
            objective_renyi2(block, np.eye(3))


class TestOptimizeIsometry:
    def test_minimal_block_stays_at_zero(self):
        chain = lpdo.canonicalize(lpdo.maximally_mixed_lpdo(3), 1)
        block = lpdo.two_site_block(chain, 1)
        point, history = optimize_isometry(
            block, OptimizerConfig(objective="renyi2", n_iter=10)
        )
        assert history[-1].value <= 1e-12
        assert len(history) == 1  # gradient tolerance hit immediately

    def test_cnot_block_disentangled_with_restart(self):
        # identity is a saddle for the CNOT block; a seeded restart escapes
        cfg = OptimizerConfig(
            objective="renyi2", n_iter=500, grad_tol=1e-10, n_restarts=1, restart_seed=1
        )
        point, history = optimize_isometry(cnot_block(), cfg)
        assert history[-1].value <= 1e-6
        assert len(history) - 1 <= 500

    def test_history_non_increasing(self):
        cfg = OptimizerConfig(
            objective="von_neumann", n_iter=60, n_restarts=1, restart_seed=2
        )
        _, history = optimize_isometry(cnot_block(), cfg)
        values = [h.value for h in history]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))

    def test_returns_isometric_point(self):
        cfg = OptimizerConfig(objective="renyi2", n_iter=30)
        point, _ = optimize_isometry(cnot_block(), cfg)
        assert isinstance(point, StiefelPoint)


class TestOptimizeBond:
    def stalled_chain(self):
        from lpdoprune import prune

        chain = lpdo.depolarize(lpdo.random_pure_lpdo(6, 4, seed=3))
        chain, _ = prune.run_truncation_schedule(chain, 1e-8, 4)
        return chain

    def test_reduces_bond_when_entropy_drops(self):
        chain = self.stalled_chain()
        chain = lpdo.canonicalize(chain, 2)
        cfg = OptimizerConfig(
            objective="renyi2", n_iter=80, n_restarts=1, restart_seed=4,
            rel_tol=1e-8, patience=5,
        )
        before = chain.bond_dims[2]
        out, report = optimize_bond(chain, 2, 0.1, cfg)
        assert report.objective_after <= report.objective_before + 1e-12
        assert out.bond_dims[2] <= before
        assert abs(lpdo.trace(out) - 1.0) <= 1e-10

    def test_skip_below_tolerance_equals_plain_truncation(self):
        from lpdoprune.prune import truncate_bond

        chain = lpdo.canonicalize(lpdo.maximally_mixed_lpdo(4), 1)
        cfg = OptimizerConfig(objective="renyi2", n_iter=10)
        out, report = optimize_bond(chain, 1, 0.3, cfg)
        assert report.iterations == 0
        plain = truncate_bond(chain, 1, 0.3)
        for a, b in zip(out.sites, plain.sites):
            assert_allclose(a.data, b.data, atol=1e-14)


class TestRiemannSweep:
    def test_small_chain_prunes_to_one(self):
        from lpdoprune import prune

        chain = lpdo.depolarize(lpdo.random_pure_lpdo(6, 4, seed=3))
        chain, _ = prune.run_truncation_schedule(chain, 1e-8, 4)
        assert chain.chi_mean() > 1.0
        cfg = OptimizerConfig(
            objective="renyi2", n_iter=100, grad_tol=1e-7, n_restarts=1,
            restart_seed=5, rel_tol=1e-8, patience=5,
        )
        out, stats = riemann_sweep(chain, 0.2, cfg, 8)
        assert out.chi_mean() == 1.0
        assert abs(stats[-1].fidelity_vs_initial - 1.0) <= 1e-4
        assert stats[-1].trace_deviation <= 1e-8
        chis = [s.chi_mean for s in stats]
        assert all(b <= a for a, b in zip(chis, chis[1:]))

    def test_spectrum_tail_is_truncation_safe(self):
        # post-optimization singular tails below the cutoff carry little weight
        from lpdoprune import prune

        chain = lpdo.depolarize(lpdo.random_pure_lpdo(6, 4, seed=9))
        chain, _ = prune.run_truncation_schedule(chain, 1e-8, 3)
        chain = lpdo.canonicalize(chain, 2)
        block = lpdo.two_site_block(chain, 2)
        cfg = OptimizerConfig(
            objective="renyi2", n_iter=60, n_restarts=1, restart_seed=6,
            rel_tol=1e-8, patience=5,
        )
        cutoff = 0.1
        point, _ = optimize_isometry(block, cfg)
        sv = bond_spectrum(block, point.v)
        sv = sv / np.linalg.norm(sv)
        tail = sv[sv < cutoff]
        kept = int((sv >= cutoff).sum())
        assert np.linalg.norm(tail) <= cutoff * np.sqrt(max(kept, 1))
