"""Dense complex tensors with labeled legs.

Everything downstream (purified chains, pruning, isometry optimization) is
built out of four primitives defined here: pairwise contraction over shared
leg ids, matricization, truncated SVD with norm-aware renormalization of the
kept spectrum, and QR-based isometrization.

Legs are identified by string ids. Two legs are contractible iff their ids
match; matching ids must agree on dimension. Storage order of the underlying
array is an internal detail -- all behavior is defined through the ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

ROLE_PHYSICAL = "physical"
ROLE_BOND = "bond"
ROLE_KRAUS = "kraus"
_ROLES = (ROLE_PHYSICAL, ROLE_BOND, ROLE_KRAUS)


class DimensionMismatchError(ValueError):
    """Two legs share an id but disagree on dimension."""


@dataclass(frozen=True)
class Index:
    """A labeled tensor leg: unique id, dimension, and role (physical/bond/kraus)."""

    id: str
    dim: int
    role: str = ROLE_BOND

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"index {self.id!r} must have dim >= 1, got {self.dim}")
        if self.role not in _ROLES:
            raise ValueError(f"unknown index role {self.role!r}")


class DenseTensor:
    """A dense complex tensor over an ordered tuple of labeled indices.

    ``data.shape`` always equals the tuple of index dims, and all index ids
    within one tensor are distinct. Instances are treated as immutable values;
    operations return new tensors.
    """

    __slots__ = ("indices", "data")

    def __init__(self, indices: Sequence[Index], data: np.ndarray):
        indices = tuple(indices)
        data = np.asarray(data, dtype=np.complex128)
        if data.shape != tuple(ix.dim for ix in indices):
            raise ValueError(
                f"data shape {data.shape} does not match index dims "
                f"{tuple(ix.dim for ix in indices)}"
            )
        ids = [ix.id for ix in indices]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate index ids in tensor: {ids}")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "data", data)

    def __setattr__(self, name, value):
        raise AttributeError("DenseTensor is immutable")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(ix.id for ix in self.indices)

    def axis_of(self, index_id: str) -> int:
        for ax, ix in enumerate(self.indices):
            if ix.id == index_id:
                return ax
        raise KeyError(f"tensor has no index {index_id!r}")

    def index(self, index_id: str) -> Index:
        return self.indices[self.axis_of(index_id)]

    def conj(self) -> "DenseTensor":
        return DenseTensor(self.indices, self.data.conj())

    def relabel(self, mapping: dict[str, str]) -> "DenseTensor":
        """Return a tensor with index ids renamed via ``mapping`` (dims/roles kept)."""
        new = tuple(
            Index(mapping.get(ix.id, ix.id), ix.dim, ix.role) for ix in self.indices
        )
        return DenseTensor(new, self.data)

    def transpose_to(self, id_order: Sequence[str]) -> "DenseTensor":
        axes = [self.axis_of(i) for i in id_order]
        if len(axes) != len(self.indices):
            raise ValueError("id_order must list every index exactly once")
        return DenseTensor([self.indices[a] for a in axes], self.data.transpose(axes))

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def __repr__(self):
        legs = ", ".join(f"{ix.id}:{ix.dim}" for ix in self.indices)
        return f"DenseTensor({legs})"


def contract(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Contract ``a`` and ``b`` over every shared index id.

    The result carries the symmetric difference of the two index sets, a's
    free legs first. Contracting over all legs yields a zero-index (scalar)
    tensor. Shared ids with mismatched dims raise DimensionMismatchError.
    """
    shared = [i for i in a.ids if i in set(b.ids)]
    for s in shared:
        da, db = a.index(s).dim, b.index(s).dim
        if da != db:
            raise DimensionMismatchError(
                f"shared index {s!r} has dims {da} != {db}"
            )
    ax_a = [a.axis_of(s) for s in shared]
    ax_b = [b.axis_of(s) for s in shared]
    out = np.tensordot(a.data, b.data, axes=(ax_a, ax_b))
    keep = [ix for ix in a.indices if ix.id not in shared]
    keep += [ix for ix in b.indices if ix.id not in shared]
    return DenseTensor(keep, out)


def matricize(
    t: DenseTensor, row_ids: Sequence[str]
) -> tuple[np.ndarray, tuple[Index, ...], tuple[Index, ...]]:
    """Reshape ``t`` into a matrix with ``row_ids`` fused as rows.

    Returns ``(matrix, row_indices, col_indices)``; the fuse is a pure
    transpose+reshape, so :func:`tensorize` restores the tensor bit-exactly.
    ``row_ids`` may be empty (row vector) or exhaustive (column vector).
    """
    row_ids = list(row_ids)
    known = set(t.ids)
    for r in row_ids:
        if r not in known:
            raise KeyError(f"unknown index {r!r}")
    if len(set(row_ids)) != len(row_ids):
        raise ValueError("row_ids contains duplicates")
    rows = [t.index(r) for r in row_ids]
    cols = [ix for ix in t.indices if ix.id not in set(row_ids)]
    perm = [t.axis_of(ix.id) for ix in rows + cols]
    rdim = int(np.prod([ix.dim for ix in rows], dtype=np.int64)) if rows else 1
    cdim = int(np.prod([ix.dim for ix in cols], dtype=np.int64)) if cols else 1
    mat = t.data.transpose(perm).reshape(rdim, cdim)
    return mat, tuple(rows), tuple(cols)


def tensorize(
    mat: np.ndarray, row_indices: Sequence[Index], col_indices: Sequence[Index]
) -> DenseTensor:
    """Inverse of :func:`matricize` for the given row/column index groups."""
    idx = tuple(row_indices) + tuple(col_indices)
    shape = tuple(ix.dim for ix in idx) or (1,) * 0
    return DenseTensor(idx, np.asarray(mat).reshape(shape))


@dataclass(frozen=True)
class TruncationPolicy:
    """How a spectrum is thresholded and renormalized.

    L2 mode uses the truncated-weight convention: the largest trailing set of
    singular values whose summed squared weight stays within
    ``cutoff * sum(sigma^2)`` is discarded (the relative truncation error of
    the kept state is bounded by the cutoff). L1 mode is per-value: a
    probability p_j is discarded when p_j / sum(p) < cutoff. Kept values are
    renormalized so the kept spectrum has unit L2 (resp. L1) norm:

        L2:  c_i -> c_i / sqrt(N^2 - delta^2),   delta^2 = sum of discarded c^2
        L1:  p_j -> p_j / (N - delta),           delta   = sum of discarded p

    ``max_rank=None`` means unbounded. At least one value is always kept.
    """

    cutoff: float = 0.0
    max_rank: int | None = None
    norm_mode: str = "L2"

    def __post_init__(self):
        if not (0.0 <= self.cutoff < 1.0):
            raise ValueError(f"cutoff must lie in [0, 1), got {self.cutoff}")
        if self.max_rank is not None and self.max_rank < 1:
            raise ValueError(f"max_rank must be >= 1, got {self.max_rank}")
        if self.norm_mode not in ("L1", "L2"):
            raise ValueError(f"norm_mode must be 'L1' or 'L2', got {self.norm_mode}")


@dataclass(frozen=True)
class SvdOutcome:
    """Result of a truncated factorization.

    ``left`` and ``right`` are isometric over their outer legs; ``spectrum``
    holds the kept, renormalized values in descending order.
    ``discarded_weight`` is the L2 (resp. L1) weight of the dropped tail.
    """

    left: DenseTensor
    spectrum: np.ndarray
    right: DenseTensor
    kept_rank: int
    discarded_weight: float


def truncate_spectrum(
    values: np.ndarray, policy: TruncationPolicy
) -> tuple[np.ndarray, int, float]:
    """Apply a TruncationPolicy to a descending nonnegative spectrum.

    Returns (kept renormalized values, kept count, discarded weight).
    At least one value always survives.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty spectrum")
    if policy.norm_mode == "L2":
        weights = values**2
        total_w = float(weights.sum())
        if total_w <= 0.0:
            raise ValueError("spectrum has no weight")
        # discard the largest suffix whose summed relative weight is <= cutoff
        suffix = np.cumsum(weights[::-1])[::-1]
        keep = suffix > policy.cutoff * total_w
        k = int(np.count_nonzero(keep))  # kept values are a prefix
        k = max(k, 1)
    else:
        total = float(values.sum())
        if total <= 0.0:
            raise ValueError("spectrum has no weight")
        keep = values / total >= policy.cutoff
        if not keep.any():
            keep[0] = True
        k = int(np.count_nonzero(keep))
    k = min(k, policy.max_rank) if policy.max_rank is not None else k
    kept, dropped = values[:k], values[k:]
    if policy.norm_mode == "L2":
        total = float(np.linalg.norm(values))
        discarded = float(np.linalg.norm(dropped))
        kept = kept / np.sqrt(total**2 - discarded**2)
    else:
        discarded = float(dropped.sum())
        kept = kept / (total - discarded)
    return kept, k, discarded


def svd_truncate(
    t: DenseTensor,
    row_ids: Sequence[str],
    policy: TruncationPolicy,
    bond_id: str = "svd",
    bond_role: str = ROLE_BOND,
) -> SvdOutcome:
    """Truncated SVD of ``t`` matricized with ``row_ids`` as rows.

    The spectrum is thresholded and renormalized per ``policy`` (see
    TruncationPolicy). ``left`` carries (row legs, new bond), ``right``
    (new bond, column legs); the new bond is named ``bond_id``.
    """
    mat, rows, cols = matricize(t, row_ids)
    if not np.any(mat):
        raise ValueError("svd_truncate requires a nonzero tensor")
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    kept, k, discarded = truncate_spectrum(s, policy)
    bond = Index(bond_id, k, bond_role)
    left = tensorize(u[:, :k], rows, (bond,))
    right = tensorize(vh[:k, :], (bond,), cols)
    return SvdOutcome(left, kept, right, k, discarded)


def _phase_fixed_qr(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR with the phase gauge fixed: R diagonal real nonnegative."""
    q, r = np.linalg.qr(np.asarray(m, dtype=np.complex128))
    d = np.diagonal(r)
    phase = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1.0), 1.0)
    return q * phase, phase.conj()[:, None] * r


def qr_isometrize(m: np.ndarray) -> np.ndarray:
    """Q factor of a thin QR, phase-fixed so the R diagonal is real nonnegative.

    Requires rows >= cols. Rank-deficient input still yields a valid isometry
    (columns where R vanishes keep phase 1).
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < m.shape[1]:
        raise ValueError(f"qr_isometrize needs a tall matrix, got shape {m.shape}")
    q, _ = _phase_fixed_qr(m)
    return q


def qr_split(
    t: DenseTensor, row_ids: Sequence[str], bond_id: str
) -> tuple[DenseTensor, np.ndarray, tuple[Index, ...]]:
    """QR-factor ``t`` into an isometric tensor over ``row_ids`` plus the R factor.

    Returns ``(q_tensor, r_matrix, col_indices)`` where q_tensor carries
    (row legs, bond) and r_matrix maps bond -> fused columns.
    """
    mat, rows, cols = matricize(t, row_ids)
    q, r = _phase_fixed_qr(mat)
    bond = Index(bond_id, q.shape[1], ROLE_BOND)
    return tensorize(q, rows, (bond,)), r, cols
