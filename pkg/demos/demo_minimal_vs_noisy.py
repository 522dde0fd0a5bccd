"""Two routes to the same maximally mixed state, one cheap and one bloated.

The minimal chain stores the N-qubit maximally mixed state with bond
dimension 1 and kraus dimension 2 everywhere (2N nonzero numbers in total).
Depolarizing a random entangled pure state produces the *same* density
operator, with unit fidelity, but inherits the pure state's bond dimensions:
the representation is sub-optimal even though the state is separable.
"""

import numpy as np

from lpdoprune import depolarize, fidelity, maximally_mixed_lpdo, purity, random_pure_lpdo, trace

N = 10
CHI_MAX = 8
SEED = 7

minimal = maximally_mixed_lpdo(N)
print(f"minimal chain:     chi = {minimal.bond_dims}")
print(f"                   kappa = {minimal.kraus_dims}")
print(f"                   trace = {trace(minimal):.12f}, purity = {purity(minimal):.3e}")
print(f"                   (2^-N = {2.0**-N:.3e})")

pure = random_pure_lpdo(N, CHI_MAX, SEED)
print(f"\nrandom pure chain: chi = {pure.bond_dims}, purity = {purity(pure):.6f}")

noisy = depolarize(pure, gamma_dephasing=0.5, gamma_bitflip=0.5)
print(f"\nafter maximal bitflip+dephasing noise at every site:")
print(f"  chi   = {noisy.bond_dims}   (unchanged -- the sub-optimality)")
print(f"  kappa = {noisy.kraus_dims}   (inflated by the channels)")
print(f"  purity = {purity(noisy):.3e}")

rep = fidelity(noisy, minimal)
print(f"\nfidelity with the minimal chain: {rep.fidelity:.15f}")
print("same state, very different memory footprint:")
count = lambda c: sum(t.data.size for t in c.sites)
print(f"  minimal {count(minimal)} complex entries vs noisy {count(noisy)}")
