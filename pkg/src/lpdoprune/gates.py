"""Qubit gate matrices and unitarity helpers.

Two-site gates are 4x4 matrices over the fused pair basis with the *first*
site's index varying fastest, i.e. fused = s_i + 2*s_j for sites (i, j=i+1).
The same little-endian fusion is used for kraus-leg pairs, so an operator
matrix means the same thing on physical and on kraus legs.
"""

from __future__ import annotations

import numpy as np

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)

# control on the first (faster) site, target on the second
CNOT = np.array(
    [
        [1, 0, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
    ],
    dtype=np.complex128,
)

SWAP = np.array(
    [
        [1, 0, 0, 0],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
    ],
    dtype=np.complex128,
)


def is_unitary(m: np.ndarray, tol: float = 1e-12) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=tol))


def require_unitary(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if not is_unitary(m, tol):
        raise ValueError(f"matrix of shape {m.shape} is not unitary within {tol}")
    return m


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via phase-fixed QR of a complex Ginibre matrix."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def pair_matrix_to_tensor(u: np.ndarray) -> np.ndarray:
    """Reshape a fused 4x4 pair gate into axes (s_i', s_j', s_i, s_j)."""
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {u.shape}")
    # fused = s_i + 2*s_j, so C-order unfuse gives (s_j, s_i) per side
    return u.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2)


def pair_tensor_to_matrix(u4: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pair_matrix_to_tensor`."""
    u4 = np.asarray(u4, dtype=np.complex128)
    if u4.shape != (2, 2, 2, 2):
        raise ValueError(f"expected a (2,2,2,2) tensor, got shape {u4.shape}")
    return u4.transpose(1, 0, 3, 2).reshape(4, 4)
