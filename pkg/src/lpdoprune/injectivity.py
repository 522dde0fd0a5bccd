"""Analytic kraus-space gauge tools for the maximally mixed chain.

The maximally mixed density operator commutes with every unitary, so a gate
applied to the physical legs of the minimal chain can be undone exactly by an
isometry on the kraus legs: the site tensors are proportional to the identity,
hence U (A x ... x A) = (A x ... x A) U holds as a matrix identity and the
equivalent kraus-space isometry is U itself (up to a global phase). This
module provides that closed form, generic kraus-leg gauge insertion, and the
end-to-end pruning routine built on it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gates import require_unitary
from .lpdo import (
    LpdoChain,
    PHYS_DIM,
    LpdoChain as _Chain,
    _site,
    apply_unitary,
    canonicalize,
    fidelity,
    maximally_mixed_lpdo,
    split_pair_block,
    two_site_block,
)
from .tensor import TruncationPolicy


@dataclass(frozen=True)
class InjectivityWitness:
    """Evidence that a physical gate equals a kraus-space isometry on the
    minimal maximally-mixed site tensors, up to the recorded phase."""

    u: np.ndarray
    v: np.ndarray
    phase: float
    residual: float


def disentangler_for(u: np.ndarray) -> tuple[np.ndarray, float]:
    """Closed-form kraus-space disentangler for a gate on the minimal chain.

    Because the site tensors are proportional to the identity, the equivalent
    isometry is the gate itself; the global phase is fixed to 0 (phases are
    unobservable in rho). Applying v^dagger on the fused kraus legs undoes the
    physical action of ``u``.
    """
    u = require_unitary(u)
    return u.copy(), 0.0


def check_weak_injectivity(u: np.ndarray) -> InjectivityWitness:
    """Evaluate || u A - e^{i phi} A v ||_F on the minimal site tensors.

    A is the m-qubit product of identity/sqrt(2) factors; v comes from
    :func:`disentangler_for` and phi is chosen optimally (phase-blind check).
    """
    u = require_unitary(u)
    v, _ = disentangler_for(u)
    dim = u.shape[0]
    m = int(np.log2(dim))
    if 2**m != dim:
        raise ValueError(f"gate dimension {dim} is not a power of two")
    a = np.eye(dim, dtype=np.complex128) / (2 ** (m / 2))
    lhs = u @ a
    rhs = a @ v
    z = np.vdot(rhs, lhs)
    phase = float(np.angle(z)) if abs(z) > 0 else 0.0
    residual = float(np.linalg.norm(lhs - np.exp(1j * phase) * rhs))
    return InjectivityWitness(u, v, phase, residual)


def apply_kappa_isometry(
    chain: LpdoChain,
    sites,
    v: np.ndarray,
    policy: TruncationPolicy | None = None,
) -> LpdoChain:
    """Insert an isometry into the kraus legs of one site or an adjacent pair.

    The represented rho is gauge invariant under this move (v v^dagger = 1);
    only the tensors change. For a pair, ``v`` acts on the fused kraus legs
    (first site's leg fastest) and the block is re-split by a truncated SVD
    with ``policy``, so the bond dimension may change.
    """
    if isinstance(sites, int):
        sites = (sites,)
    sites = tuple(sites)
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim != 2:
        raise ValueError("isometry must be a matrix")
    if not np.allclose(v @ v.conj().T, np.eye(v.shape[0]), atol=1e-10):
        raise ValueError("kraus-space insertion needs v v^dagger = 1")
    if len(sites) == 1:
        i = sites[0]
        t = chain.sites[i]
        dk = t.data.shape[3]
        if v.shape[0] != dk:
            raise ValueError(f"isometry rows {v.shape[0]} != kraus dim {dk}")
        new = np.tensordot(t.data, v, axes=(3, 0))
        out = list(chain.sites)
        out[i] = _site(i, new)
        return LpdoChain(tuple(out), chain.ortho_center)
    if len(sites) == 2 and sites[1] == sites[0] + 1:
        i = sites[0]
        if policy is None:
            policy = TruncationPolicy(cutoff=0.0, norm_mode="L2")
        if chain.ortho_center not in (i, i + 1):
            chain = canonicalize(chain, i)
        center = chain.ortho_center
        block = two_site_block(chain, i).data
        si, sj, dl, dr, dki, dkj = block.shape
        kc = dki * dkj
        if v.shape != (kc, kc):
            raise ValueError(
                f"pair isometry must be {kc}x{kc} for kraus dims ({dki},{dkj})"
            )
        fused = block.transpose(0, 1, 2, 3, 5, 4).reshape(-1, kc)
        out = (fused @ v).reshape(si, sj, dl, dr, dkj, dki).transpose(0, 1, 2, 3, 5, 4)
        return split_pair_block(chain, i, out, policy, center)
    raise ValueError("sites must be one site or an adjacent pair")


def assert_minimal_mixed(chain: LpdoChain, tol: float = 1e-8) -> None:
    """Check the chain is the minimal maximally-mixed form (chi=1, F=1)."""
    if chain.n_sites > 1 and chain.chi_max() != 1:
        raise ValueError(
            f"chain has bond dims {chain.bond_dims}; the closed-form "
            "disentangler is only proven for the minimal chi=1 form"
        )
    rep = fidelity(chain, maximally_mixed_lpdo(chain.n_sites))
    if abs(rep.fidelity - 1.0) > tol:
        raise ValueError(
            f"chain is not maximally mixed (fidelity {rep.fidelity} with the "
            "minimal form)"
        )


def prune_via_injectivity(
    chain: LpdoChain,
    u: np.ndarray,
    sites,
    cutoff: float = 1e-8,
) -> LpdoChain:
    """Apply a gate to the minimal maximally-mixed chain, then undo its
    representational damage with the analytic kraus-space disentangler.

    The gate inflates the touched bond; applying v^dagger = u^dagger on the
    fused kraus legs followed by truncation at ``cutoff`` returns every bond
    to dimension 1 while rho stays exactly maximally mixed.
    """
    assert_minimal_mixed(chain)
    if isinstance(sites, int):
        sites = (sites,)
    sites = tuple(sites)
    policy = TruncationPolicy(cutoff=cutoff, norm_mode="L2")
    v, _ = disentangler_for(u)
    out = apply_unitary(chain, sites, u, policy)
    return apply_kappa_isometry(out, sites, v.conj().T, policy)
