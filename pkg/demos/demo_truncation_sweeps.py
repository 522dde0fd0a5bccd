"""Aggressive bond truncation on a depolarized chain.

Ordinary MPS practice keeps the SVD cutoff tiny because the truncation error
is proportional to it. For a fully depolarized (separable) state the bond
content is pure gauge, so the cutoff can be pushed far higher: the bond
dimension collapses while fidelity with the initial state stays at 1.
Small cutoffs, by contrast, stall above chi_mean = 1 once the local singular
value distributions freeze.
"""

from lpdoprune import depolarize, random_pure_lpdo
from lpdoprune.prune import run_truncation_schedule

N = 16
CHI_MAX = 8
SWEEPS = 12

chain = depolarize(random_pure_lpdo(N, CHI_MAX, seed=5))
print(f"depolarized chain: chi = {chain.bond_dims}\n")

for cutoff in (1e-8, 0.05, 0.2, 0.5):
    _, series = run_truncation_schedule(chain, cutoff, SWEEPS)
    trail = " ".join(f"{s.chi_mean:5.2f}" for s in series)
    final = series[-1]
    print(f"cutoff {cutoff:>7}: chi_mean per sweep  {trail}")
    print(
        f"{'':>16} final |F-1| = {abs(final.fidelity_vs_initial - 1):.2e}, "
        f"|tr-1| = {final.trace_deviation:.2e}\n"
    )

print("high cutoffs prune to 1; tiny cutoffs flatten out above 1.")
