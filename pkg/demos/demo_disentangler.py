"""The closed-form kraus-space disentangler for gates on the mixed chain.

The maximally mixed state commutes with every unitary, so a gate cannot
change it -- but the gate still inflates the bond dimension of the minimal
chain. Because the minimal site tensors are proportional to the identity,
the gate on the physical legs equals the same matrix acting on the kraus
legs; applying its dagger there undoes the inflation exactly, no numerical
optimization needed.
"""

import numpy as np

from lpdoprune import apply_unitary, fidelity, maximally_mixed_lpdo
from lpdoprune.gates import CNOT, SWAP, random_unitary
from lpdoprune.injectivity import apply_kappa_isometry, check_weak_injectivity
from lpdoprune.tensor import TruncationPolicy

N = 6
PAIR = (2, 3)
POLICY = TruncationPolicy(cutoff=1e-8, norm_mode="L2")

chain = maximally_mixed_lpdo(N)
gates_to_try = [
    ("CNOT", CNOT),
    ("SWAP", SWAP),
    ("random", random_unitary(4, np.random.default_rng(12))),
]

for name, u in gates_to_try:
    witness = check_weak_injectivity(u)
    grown = apply_unitary(chain, PAIR, u, POLICY)
    undone = apply_kappa_isometry(grown, PAIR, witness.v.conj().T, POLICY)
    rep = fidelity(undone, chain)
    print(f"{name:>7}: chi {chain.bond_dims} -> {grown.bond_dims} -> {undone.bond_dims}")
    print(f"{'':>7}  witness residual {witness.residual:.1e}, "
          f"|F-1| = {abs(rep.fidelity - 1):.1e}\n")

print("the kraus-leg dagger of the gate is the exact disentangler.")
