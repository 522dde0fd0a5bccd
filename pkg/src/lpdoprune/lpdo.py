"""Locally purified density operator chains and their physical operations.

A chain of N site tensors represents rho = A A^dagger. Site i carries four
legs in the fixed internal order (s_i, chi_{i-1}, chi_i, kappa_i) with ids
``s{i}``, ``b{i-1}``, ``b{i}``, ``k{i}``; boundary bonds have dimension 1.
The kraus leg kappa_i carries the local statistical mixture, the bonds carry
coherent correlations. Positivity of rho holds by construction.

All operations are pure: they return new chains. Every public operation
leaves the represented rho with trace 1 (within 1e-10).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gates import pair_matrix_to_tensor, require_unitary
from .tensor import (
    ROLE_BOND,
    ROLE_KRAUS,
    ROLE_PHYSICAL,
    DenseTensor,
    Index,
    TruncationPolicy,
    _phase_fixed_qr,
    truncate_spectrum,
)

PHYS_DIM = 2

#: always dropped from the kraus spectrum, regardless of the policy cutoff
ZERO_PROBABILITY_TOL = 1e-14

DEFAULT_CHI_POLICY = TruncationPolicy(cutoff=0.0, norm_mode="L2")
DEFAULT_KAPPA_POLICY = TruncationPolicy(cutoff=1e-12, norm_mode="L1")


def _site_indices(i: int, dl: int, dr: int, dk: int) -> tuple[Index, ...]:
    return (
        Index(f"s{i}", PHYS_DIM, ROLE_PHYSICAL),
        Index(f"b{i - 1}", dl, ROLE_BOND),
        Index(f"b{i}", dr, ROLE_BOND),
        Index(f"k{i}", dk, ROLE_KRAUS),
    )


def _site(i: int, data: np.ndarray) -> DenseTensor:
    s, dl, dr, dk = data.shape
    assert s == PHYS_DIM
    return DenseTensor(_site_indices(i, dl, dr, dk), data)


@dataclass(frozen=True)
class LpdoChain:
    """An ordered chain of purified site tensors plus an orthogonality marker.

    ``ortho_center`` is the position of the one non-isometric site (or None if
    the gauge has not been fixed). Chains are immutable; operations in this
    module return new chains.
    """

    sites: tuple[DenseTensor, ...]
    ortho_center: int | None = None

    def __post_init__(self):
        n = len(self.sites)
        if n == 0:
            raise ValueError("chain needs at least one site")
        for i, t in enumerate(self.sites):
            if t.data.ndim != 4:
                raise ValueError(f"site {i} must have 4 legs")
        if self.sites[0].data.shape[1] != 1 or self.sites[-1].data.shape[2] != 1:
            raise ValueError("boundary bonds must have dimension 1")
        for i in range(n - 1):
            r = self.sites[i].indices[2]
            l = self.sites[i + 1].indices[1]
            if r.id != l.id or r.dim != l.dim:
                raise ValueError(
                    f"bond mismatch between sites {i} and {i + 1}: "
                    f"{r.id}:{r.dim} vs {l.id}:{l.dim}"
                )
        if self.ortho_center is not None and not (0 <= self.ortho_center < n):
            raise ValueError(f"ortho_center {self.ortho_center} out of range")

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        """Interior bond dimensions (N-1 values)."""
        return tuple(t.data.shape[2] for t in self.sites[:-1])

    @property
    def kraus_dims(self) -> tuple[int, ...]:
        return tuple(t.data.shape[3] for t in self.sites)

    def chi_mean(self) -> float:
        if self.n_sites == 1:
            return 1.0
        return float(np.mean(self.bond_dims))

    def chi_max(self) -> int:
        return max(self.bond_dims) if self.n_sites > 1 else 1


@dataclass(frozen=True)
class FidelityReport:
    """Purity-normalized overlap of two represented density operators."""

    overlap: float
    purity_a: float
    purity_b: float
    fidelity: float


# ---------------------------------------------------------------------------
# construction


def maximally_mixed_lpdo(n_sites: int) -> LpdoChain:
    """The minimal-resource chain for rho = identity / 2^N.

    Every site tensor is delta_{s,kappa}/sqrt(2): all bonds have chi=1 and all
    kraus legs kappa=2. Trace is 1 and purity 2^-N.
    """
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    data = np.zeros((PHYS_DIM, 1, 1, PHYS_DIM), dtype=np.complex128)
    for s in range(PHYS_DIM):
        data[s, 0, 0, s] = 1.0 / np.sqrt(PHYS_DIM)
    return LpdoChain(tuple(_site(i, data.copy()) for i in range(n_sites)), None)


def _pure_bond_dims(n: int, chi_max: int) -> list[int]:
    # interior bond i (between sites i and i+1) capped by both light cones
    return [min(chi_max, 2 ** (i + 1), 2 ** (n - 1 - i)) for i in range(n - 1)]


def random_pure_lpdo(n_sites: int, chi_max: int, seed: int) -> LpdoChain:
    """A random pure chain (all kappa=1) with bonds capped at ``chi_max``.

    Per-site complex Gaussian tensors are isometrized by a left-to-right QR
    sweep and the last site normalized, so the global norm is 1 and the
    orthogonality center sits on the last site. Deterministic in ``seed``.
    """
    if chi_max < 1:
        raise ValueError("chi_max must be >= 1")
    rng = np.random.default_rng(seed)
    dims = [1] + _pure_bond_dims(n_sites, chi_max) + [1]
    raw = []
    for i in range(n_sites):
        shape = (PHYS_DIM, dims[i], dims[i + 1], 1)
        raw.append(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    sites = [_site(i, a) for i, a in enumerate(raw)]
    for i in range(n_sites - 1):
        sites = _move_center_right(sites, i)
    last = sites[-1].data
    sites[-1] = _site(n_sites - 1, last / np.linalg.norm(last))
    return LpdoChain(tuple(sites), n_sites - 1)


# ---------------------------------------------------------------------------
# gauge


def _move_center_right(sites: list[DenseTensor], i: int) -> list[DenseTensor]:
    """QR site i into left-isometric form, absorbing R into site i+1."""
    a = sites[i].data
    s, dl, dr, dk = a.shape
    q, r = _phase_fixed_qr(a.transpose(0, 1, 3, 2).reshape(s * dl * dk, dr))
    newr = q.shape[1]
    out = list(sites)
    out[i] = _site(i, q.reshape(s, dl, dk, newr).transpose(0, 1, 3, 2))
    b = sites[i + 1].data
    out[i + 1] = _site(i + 1, np.tensordot(r, b, axes=(1, 1)).transpose(1, 0, 2, 3))
    return out


def _move_center_left(sites: list[DenseTensor], i: int) -> list[DenseTensor]:
    """QR site i into right-isometric form, absorbing R into site i-1."""
    a = sites[i].data
    s, dl, dr, dk = a.shape
    q, r = _phase_fixed_qr(a.transpose(0, 2, 3, 1).reshape(s * dr * dk, dl))
    newl = q.shape[1]
    out = list(sites)
    out[i] = _site(i, q.reshape(s, dr, dk, newl).transpose(0, 3, 1, 2))
    b = sites[i - 1].data
    out[i - 1] = _site(i - 1, np.tensordot(b, r, axes=(2, 1)).transpose(0, 1, 3, 2))
    return out


def canonicalize(chain: LpdoChain, center: int) -> LpdoChain:
    """Gauge the chain so all sites left (right) of ``center`` are left-
    (right-) isometric over their (s, kappa, inner-bond) legs.

    Pure gauge: the represented rho is unchanged.
    """
    n = chain.n_sites
    if not (0 <= center < n):
        raise ValueError(f"center {center} out of range for N={n}")
    sites = list(chain.sites)
    if chain.ortho_center is None:
        for i in range(center):
            sites = _move_center_right(sites, i)
        for i in range(n - 1, center, -1):
            sites = _move_center_left(sites, i)
    else:
        pos = chain.ortho_center
        while pos < center:
            sites = _move_center_right(sites, pos)
            pos += 1
        while pos > center:
            sites = _move_center_left(sites, pos)
            pos -= 1
    return LpdoChain(tuple(sites), center)


# ---------------------------------------------------------------------------
# scalar measures (transfer contractions, polynomial in N, chi, kappa)


def trace(chain: LpdoChain) -> float:
    """Tr rho, evaluated by a single two-layer transfer sweep."""
    env = np.ones((1, 1), dtype=np.complex128)
    for t in chain.sites:
        a = t.data
        tmp = np.tensordot(env, a, axes=(0, 1))  # (l2, s, r, k)
        env = np.tensordot(tmp, a.conj(), axes=([0, 1, 3], [1, 0, 3]))
    return float(env[0, 0].real)


def overlap_trace(chain_a: LpdoChain, chain_b: LpdoChain) -> float:
    """Tr[rho_a rho_b] via a four-layer transfer sweep."""
    if chain_a.n_sites != chain_b.n_sites:
        raise ValueError("chains must have the same length")
    env = np.ones((1, 1, 1, 1), dtype=np.complex128)
    for ta, tb in zip(chain_a.sites, chain_b.sites):
        f, g = ta.data, tb.data
        t1 = np.tensordot(env, f, axes=(0, 1))  # (bf, ai, bi, s, cf, kf)
        t2 = np.tensordot(t1, f.conj(), axes=([0, 5], [1, 3]))  # (ai,bi,s,cf,s2,df)
        t3 = np.tensordot(t2, g, axes=([0, 4], [1, 0]))  # (bi, s, cf, df, ci, ki)
        env = np.tensordot(t3, g.conj(), axes=([0, 1, 5], [1, 0, 3]))
    return float(env[0, 0, 0, 0].real)


def purity(chain: LpdoChain) -> float:
    """Tr rho^2."""
    return overlap_trace(chain, chain)


def fidelity(chain_a: LpdoChain, chain_b: LpdoChain) -> FidelityReport:
    """Purity-normalized fidelity Tr[rho_a rho_b] / max(P_a, P_b)."""
    ov = overlap_trace(chain_a, chain_b)
    pa = purity(chain_a)
    pb = purity(chain_b)
    return FidelityReport(ov, pa, pb, ov / max(pa, pb))


# ---------------------------------------------------------------------------
# kraus channels


@dataclass(frozen=True)
class KrausChannel:
    """A CPTP map given by its Kraus operators (sum_i K_i^dag K_i = 1)."""

    operators: tuple[np.ndarray, ...]
    label: str = ""

    def __post_init__(self):
        if not self.operators:
            raise ValueError("channel needs at least one Kraus operator")
        d = self.operators[0].shape[0]
        acc = np.zeros((d, d), dtype=np.complex128)
        for k in self.operators:
            if k.shape != (d, d):
                raise ValueError("Kraus operators must share one square shape")
            acc += k.conj().T @ k
        if not np.allclose(acc, np.eye(d), atol=1e-12):
            raise ValueError(f"channel {self.label!r} is not trace preserving")


def dephasing_channel(gamma: float) -> KrausChannel:
    """Phase noise: K0 = sqrt(gamma) Z, K1 = sqrt(1-gamma) I."""
    from .gates import PAULI_Z

    return KrausChannel(
        (np.sqrt(gamma) * PAULI_Z, np.sqrt(1.0 - gamma) * np.eye(2)),
        label=f"dephasing({gamma})",
    )


def bitflip_channel(gamma: float) -> KrausChannel:
    """Bit flips: K0 = sqrt(gamma) X, K1 = sqrt(1-gamma) I."""
    from .gates import PAULI_X

    return KrausChannel(
        (np.sqrt(gamma) * PAULI_X, np.sqrt(1.0 - gamma) * np.eye(2)),
        label=f"bitflip({gamma})",
    )


def apply_channel(
    chain: LpdoChain,
    site: int,
    channel: KrausChannel,
    policy: TruncationPolicy | None = None,
) -> LpdoChain:
    """Apply a single-site channel, refreshing the site's kraus leg.

    The channel and site tensors are contracted into a composite
    (s chi^2) x (s chi^2) Hermitian PSD matrix whose eigendecomposition gives
    the local mixture probabilities; eigenvalues below ZERO_PROBABILITY_TOL
    are always discarded, the rest are thresholded and renormalized in L1 per
    the policy. Bond dimensions are untouched and the trace is preserved.
    """
    if policy is None:
        policy = DEFAULT_KAPPA_POLICY
    if policy.norm_mode != "L1":
        raise ValueError("kraus-space truncation must use the L1 norm mode")
    chain = canonicalize(chain, site)
    a = chain.sites[site].data
    s, dl, dr, dk = a.shape
    ks = np.stack([np.asarray(k, dtype=np.complex128) for k in channel.operators])
    c = np.einsum("jst,tlrk->slrjk", ks, a).reshape(s * dl * dr, len(ks) * dk)
    composite = c @ c.conj().T
    w, vecs = np.linalg.eigh(composite)
    order = np.argsort(w)[::-1]
    p = np.clip(w[order], 0.0, None)
    vecs = vecs[:, order]

    total = float(p.sum())
    keep = (p >= ZERO_PROBABILITY_TOL) & (p / total >= policy.cutoff)
    if not keep.any():
        keep[0] = True
    kept_idx = np.flatnonzero(keep)
    if policy.max_rank is not None:
        kept_idx = kept_idx[: policy.max_rank]
    p_kept = p[kept_idx]
    p_kept = p_kept / p_kept.sum()  # equals p / (N_kappa - delta)

    new = (vecs[:, kept_idx] * np.sqrt(p_kept)).reshape(s, dl, dr, len(kept_idx))
    sites = list(chain.sites)
    sites[site] = _site(site, new)
    return LpdoChain(tuple(sites), site)


def depolarize(
    chain: LpdoChain,
    gamma_dephasing: float = 0.5,
    gamma_bitflip: float = 0.5,
    policy: TruncationPolicy | None = None,
) -> LpdoChain:
    """One pass of bitflip-then-dephasing noise over every site.

    At the maximal rates (0.5, 0.5) this fully depolarizes the state into the
    maximally mixed one; the kraus legs inflate while every bond dimension is
    left exactly as in the input.
    """
    bf = bitflip_channel(gamma_bitflip)
    dp = dephasing_channel(gamma_dephasing)
    for i in range(chain.n_sites):
        chain = apply_channel(chain, i, bf, policy)
        chain = apply_channel(chain, i, dp, policy)
    return chain


# ---------------------------------------------------------------------------
# two-site blocks and unitaries


def two_site_block(chain: LpdoChain, i: int) -> DenseTensor:
    """Contract sites (i, i+1) over their shared bond.

    Requires the orthogonality center on one of the two sites, so the block
    norm equals the represented trace. The block carries indices
    (s_i, s_{i+1}, b_{i-1}, b_{i+1}, k_i, k_{i+1}).
    """
    if not (0 <= i < chain.n_sites - 1):
        raise ValueError(f"bond {i} out of range")
    if chain.ortho_center not in (i, i + 1):
        raise ValueError(
            f"orthogonality center must sit on site {i} or {i + 1}, "
            f"found {chain.ortho_center}"
        )
    a, b = chain.sites[i], chain.sites[i + 1]
    data = np.tensordot(a.data, b.data, axes=(2, 1))  # (s_i, l, k_i, s_j, r, k_j)
    data = data.transpose(0, 3, 1, 4, 2, 5)
    idx = (
        a.indices[0],
        b.indices[0],
        a.indices[1],
        b.indices[2],
        a.indices[3],
        b.indices[3],
    )
    return DenseTensor(idx, data)


def split_pair_block(
    chain: LpdoChain,
    i: int,
    block_data: np.ndarray,
    policy: TruncationPolicy,
    center_on: int,
) -> LpdoChain:
    """Split a (s_i, s_j, l, r, k_i, k_j) block back into sites i and i+1.

    SVD across the bond bipartition rows=(s_i, l, k_i), truncated and
    L2-renormalized per the policy, with the singular values merged into the
    tensor at ``center_on`` (i or i+1). The bond dimension never increases
    beyond the SVD rank of the block.
    """
    if policy.norm_mode != "L2":
        raise ValueError("bond truncation must use the L2 norm mode")
    if center_on not in (i, i + 1):
        raise ValueError("center_on must be i or i+1")
    si, sj, dl, dr, dki, dkj = block_data.shape
    mat = block_data.transpose(0, 2, 4, 1, 3, 5).reshape(si * dl * dki, sj * dr * dkj)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    kept, k, _ = truncate_spectrum(s, policy)
    u = u[:, :k]
    vh = vh[:k, :]
    if center_on == i:
        u = u * kept
    else:
        vh = kept[:, None] * vh
    left = u.reshape(si, dl, dki, k).transpose(0, 1, 3, 2)
    right = vh.reshape(k, sj, dr, dkj).transpose(1, 0, 2, 3)
    sites = list(chain.sites)
    sites[i] = _site(i, left)
    sites[i + 1] = _site(i + 1, right)
    return LpdoChain(tuple(sites), center_on)


def apply_unitary(
    chain: LpdoChain,
    sites,
    u: np.ndarray,
    policy: TruncationPolicy | None = None,
) -> LpdoChain:
    """Conjugate rho by a 1-site (2x2) or adjacent 2-site (4x4) unitary.

    One-site updates touch only the site tensor (bonds and kraus legs keep
    their dimensions). Two-site updates contract the shared bond, apply the
    gate, and restore the chain by a truncated SVD with the given L2 policy
    (default: keep everything).
    """
    if policy is None:
        policy = DEFAULT_CHI_POLICY
    u = require_unitary(u)
    if isinstance(sites, int):
        sites = (sites,)
    sites = tuple(sites)
    if len(sites) == 1:
        if u.shape != (2, 2):
            raise ValueError("one-site unitary must be 2x2")
        i = sites[0]
        new = np.einsum("st,tlrk->slrk", u, chain.sites[i].data)
        out = list(chain.sites)
        out[i] = _site(i, new)
        return LpdoChain(tuple(out), chain.ortho_center)
    if len(sites) == 2:
        i, j = sites
        if j != i + 1:
            raise ValueError(f"two-site unitary needs an adjacent pair, got {sites}")
        if u.shape != (4, 4):
            raise ValueError("two-site unitary must be 4x4")
        if chain.ortho_center not in (i, j):
            chain = canonicalize(chain, i)
        center = chain.ortho_center
        block = two_site_block(chain, i).data
        u4 = pair_matrix_to_tensor(u)
        block = np.tensordot(u4, block, axes=([2, 3], [0, 1]))
        return split_pair_block(chain, i, block, policy, center)
    raise ValueError("sites must be one site or an adjacent pair")
