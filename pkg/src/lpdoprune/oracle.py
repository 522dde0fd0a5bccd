"""Brute-force dense density-matrix simulator (the independent test oracle).

Basis convention: site 0 (the first chain site) is the most significant bit
of the computational-basis index. The hard size cap keeps a 2^N x 2^N complex
matrix within desk memory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gates import pair_matrix_to_tensor, require_unitary

MAX_ORACLE_QUBITS = 12


class OracleSizeError(ValueError):
    """Chain too large for the dense oracle."""


@dataclass(frozen=True)
class DenseRho:
    """A dense N-qubit density matrix (Hermitian, trace ~1)."""

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        dim = 2**self.n_qubits
        if self.matrix.shape != (dim, dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match N={self.n_qubits}"
            )


@dataclass(frozen=True)
class DenseMeasures:
    trace_a: float
    trace_b: float
    purity_a: float
    purity_b: float
    overlap: float
    fidelity: float


def _check_size(n_qubits: int):
    if n_qubits > MAX_ORACLE_QUBITS:
        raise OracleSizeError(
            f"dense oracle capped at N={MAX_ORACLE_QUBITS}, got N={n_qubits}"
        )


def lpdo_to_dense(chain) -> DenseRho:
    """Contract a purified chain into the exact dense rho = A A^dagger."""
    n = chain.n_sites
    _check_size(n)
    # accumulate rho as a (2^i, 2^i, chi, chi*) tensor, site 0 most significant
    acc = np.ones((1, 1, 1, 1), dtype=np.complex128)
    for t in chain.sites:
        a = t.data  # axes (s, l, r, k)
        w = np.einsum("slrk,tmqk->stlmrq", a, a.conj())
        acc = np.tensordot(acc, w, axes=([2, 3], [2, 3]))  # p q s t r q'
        p, q = acc.shape[0], acc.shape[1]
        acc = acc.transpose(0, 2, 1, 3, 4, 5).reshape(
            2 * p, 2 * q, w.shape[4], w.shape[5]
        )
    rho = acc[:, :, 0, 0]
    return DenseRho(n, rho)


def _as_axes_tensor(rho: DenseRho) -> np.ndarray:
    n = rho.n_qubits
    return rho.matrix.reshape((2,) * (2 * n))


def _from_axes_tensor(n: int, t: np.ndarray) -> DenseRho:
    return DenseRho(n, t.reshape(2**n, 2**n))


def _apply_matrix(rho: DenseRho, m: np.ndarray, sites: tuple[int, ...]) -> DenseRho:
    """rho -> M rho M^dagger with M acting on the given ket (and bra) axes."""
    n = rho.n_qubits
    k = len(sites)
    op = m.reshape((2,) * (2 * k))
    t = _as_axes_tensor(rho)
    ket = list(sites)
    t = np.tensordot(op, t, axes=(list(range(k, 2 * k)), ket))
    t = np.moveaxis(t, list(range(k)), ket)
    bra = [n + s for s in sites]
    t = np.tensordot(op.conj(), t, axes=(list(range(k, 2 * k)), bra))
    t = np.moveaxis(t, list(range(k)), bra)
    return _from_axes_tensor(n, t)


def dense_apply(rho: DenseRho, op, sites) -> DenseRho:
    """Evolve rho by a unitary (conjugation) or a KrausChannel (operator sum).

    ``op`` is a 2x2 / 4x4 unitary (4x4 in the little-endian pair convention of
    :mod:`lpdoprune.gates`) or a KrausChannel; ``sites`` an int or site pair.
    """
    if isinstance(sites, int):
        sites = (sites,)
    sites = tuple(sites)
    for s in sites:
        if not (0 <= s < rho.n_qubits):
            raise ValueError(f"site {s} out of range for N={rho.n_qubits}")
    if hasattr(op, "operators"):  # KrausChannel
        if len(sites) != 1:
            raise ValueError("channels act on a single site")
        out = np.zeros_like(rho.matrix)
        for kraus in op.operators:
            out += _apply_matrix(rho, kraus, sites).matrix
        return DenseRho(rho.n_qubits, out)
    u = require_unitary(np.asarray(op, dtype=np.complex128))
    if u.shape == (2, 2):
        if len(sites) != 1:
            raise ValueError("2x2 unitary needs exactly one site")
        return _apply_matrix(rho, u, sites)
    if u.shape == (4, 4):
        if len(sites) != 2 or sites[1] != sites[0] + 1:
            raise ValueError("4x4 unitary needs an adjacent site pair")
        # internal axes tensor wants (s_i', s_j', s_i, s_j) with i before j
        u4 = pair_matrix_to_tensor(u)
        return _apply_matrix(rho, u4.reshape(4, 4), sites)
    raise ValueError(f"unsupported operator shape {u.shape}")


def vn_entropy(rho: DenseRho, keep_sites) -> float:
    """Von Neumann entropy (nats) of the reduced state on ``keep_sites``."""
    n = rho.n_qubits
    keep = sorted(set(keep_sites))
    drop = [s for s in range(n) if s not in keep]
    t = _as_axes_tensor(rho)
    for s in reversed(drop):
        t = np.trace(t, axis1=s, axis2=t.ndim // 2 + s)
    dim = 2 ** len(keep)
    red = t.reshape(dim, dim)
    vals = np.linalg.eigvalsh(red)
    vals = vals[vals > 1e-14]
    return float(-np.sum(vals * np.log(vals)))


def dense_measures(rho_a: DenseRho, rho_b: DenseRho | None = None) -> DenseMeasures:
    """Exact scalar measures for one or two density matrices.

    The fidelity is the purity-normalized overlap
    Tr[rho_a rho_b] / max(purity_a, purity_b).
    """
    if rho_b is None:
        rho_b = rho_a
    if rho_a.n_qubits != rho_b.n_qubits:
        raise ValueError("size mismatch between density matrices")
    ta = float(np.trace(rho_a.matrix).real)
    tb = float(np.trace(rho_b.matrix).real)
    pa = float(np.trace(rho_a.matrix @ rho_a.matrix).real)
    pb = float(np.trace(rho_b.matrix @ rho_b.matrix).real)
    ov = float(np.trace(rho_a.matrix @ rho_b.matrix).real)
    return DenseMeasures(ta, tb, pa, pb, ov, ov / max(pa, pb))


def min_eigenvalue(rho: DenseRho) -> float:
    return float(np.linalg.eigvalsh((rho.matrix + rho.matrix.conj().T) / 2)[0])
