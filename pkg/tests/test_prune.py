import numpy as np
import pytest
from numpy.testing import assert_allclose

from lpdoprune import lpdo, oracle
from lpdoprune.prune import run_truncation_schedule, sweep_truncate, truncate_bond


def suboptimal_chain(n=8, chi_max=4, seed=3):
    return lpdo.depolarize(lpdo.random_pure_lpdo(n, chi_max, seed))


class TestTruncateBond:
    def test_requires_center(self):
        chain = lpdo.depolarize(lpdo.random_pure_lpdo(4, 4, seed=1))
        chain = lpdo.canonicalize(chain, 3)
        with pytest.raises(ValueError):
            truncate_bond(chain, 0, 0.1)

    def test_minimal_chain_is_fixed_point(self):
        chain = lpdo.canonicalize(lpdo.maximally_mixed_lpdo(4), 1)
        out = truncate_bond(chain, 1, 0.5)
        assert out.bond_dims == (1, 1, 1)
        assert lpdo.fidelity(out, chain).fidelity == pytest.approx(1.0, abs=1e-12)

    def test_zero_cutoff_preserves_rho(self):
        chain = lpdo.canonicalize(suboptimal_chain(4), 1)
        before = oracle.lpdo_to_dense(chain).matrix
        out = truncate_bond(chain, 1, 0.0)
        assert_allclose(oracle.lpdo_to_dense(out).matrix, before, atol=1e-10)

    def test_reduces_spurious_bond_with_unit_fidelity(self):
        chain = lpdo.canonicalize(suboptimal_chain(6, 4, seed=5), 2)
        before = chain.bond_dims[2]
        out = truncate_bond(chain, 2, 0.5)
        assert out.bond_dims[2] < before
        assert abs(lpdo.fidelity(out, chain).fidelity - 1.0) <= 1e-8

    def test_bond_never_grows(self):
        chain = lpdo.canonicalize(suboptimal_chain(5, 4, seed=7), 1)
        out = truncate_bond(chain, 1, 0.0)
        assert out.bond_dims[1] <= chain.bond_dims[1]


class TestSweepTruncate:
    def test_stats_fields(self):
        chain = suboptimal_chain(6)
        out, stats = sweep_truncate(chain, 0.3, sweep_index=4)
        assert stats.sweep_index == 4
        assert stats.chi_mean == out.chi_mean()
        assert stats.trace_deviation <= 1e-10
        assert stats.wall_time_ms >= 0

    def test_fidelity_vs_reference(self):
        chain = suboptimal_chain(6)
        _, stats = sweep_truncate(chain, 0.4)
        assert abs(stats.fidelity_vs_initial - 1.0) <= 1e-8


class TestSchedule:
    def test_zero_sweeps(self):
        chain = suboptimal_chain(4)
        out, series = run_truncation_schedule(chain, 0.3, 0)
        assert series == []
        for a, b in zip(out.sites, chain.sites):
            assert np.array_equal(a.data, b.data)

    def test_monotone_chi_mean(self):
        chain = suboptimal_chain(8, 4, seed=11)
        _, series = run_truncation_schedule(chain, 0.2, 8)
        chis = [s.chi_mean for s in series]
        assert all(b <= a for a, b in zip(chis, chis[1:]))

    def test_aggressive_cutoff_collapses_to_one(self):
        chain = suboptimal_chain(8, 4, seed=2)
        out, series = run_truncation_schedule(chain, 0.5, 12)
        assert out.chi_mean() == 1.0
        assert abs(series[-1].fidelity_vs_initial - 1.0) <= 1e-8
        assert series[-1].trace_deviation <= 1e-10

    def test_tiny_cutoff_stalls_above_one(self):
        chain = suboptimal_chain(8, 4, seed=2)
        out, series = run_truncation_schedule(chain, 1e-8, 8)
        assert out.chi_mean() > 1.0
        # stationary tail once the singular-value distribution freezes
        assert series[-1].chi_mean == series[-2].chi_mean

    def test_cutoff_ordering(self):
        chain = suboptimal_chain(8, 4, seed=6)
        finals = []
        for cutoff in (0.05, 0.2, 0.5):
            out, _ = run_truncation_schedule(chain, cutoff, 10)
            finals.append(out.chi_mean())
        assert finals[0] >= finals[1] >= finals[2]

    def test_rho_preserved_through_schedule(self):
        chain = suboptimal_chain(6, 4, seed=4)
        out, _ = run_truncation_schedule(chain, 0.5, 8)
        rep = lpdo.fidelity(out, chain)
        assert abs(rep.fidelity - 1.0) <= 1e-8
        assert abs(lpdo.trace(out) - 1.0) <= 1e-10
