"""Riemannian descent over kraus-space isometries on the Stiefel manifold.

The search space is the group of kappa_c x kappa_c isometries acting on the
fused kraus legs of a two-site block (kappa_c = kappa_i * kappa_{i+1}, first
factor fastest). The objectives measure *representational* entanglement: the
block, with the isometry applied, is read as a pure purification state and
bipartitioned between (s_i, chi_{i-1}, kappa_i) and (s_{i+1}, chi_{i+1},
kappa_{i+1}). An isometry straddling that cut can lower the entropy even
though the represented density operator is gauge invariant.

Gradients are central finite differences in the ambient matrix entries,
projected to the tangent space; steps are retracted back onto the manifold
by a phase-fixed QR. Descent uses Armijo backtracking, so the objective is
non-increasing over accepted iterates.
"""

from __future__ import annotations

import concurrent.futures
import os
import time
from dataclasses import dataclass, replace

import numpy as np

from .gates import random_unitary
from .lpdo import LpdoChain, canonicalize, fidelity, split_pair_block, trace, two_site_block
from .prune import SweepStats
from .tensor import DenseTensor, TruncationPolicy, qr_isometrize

OBJECTIVE_RENYI2 = "renyi2"
OBJECTIVE_VON_NEUMANN = "von_neumann"
_OBJECTIVES = (OBJECTIVE_RENYI2, OBJECTIVE_VON_NEUMANN)

_ISOMETRY_CHECK_TOL = 1e-4  # loose enough for finite-difference probes


@dataclass(frozen=True)
class StiefelPoint:
    """A kappa_c x kappa_c isometry (v^dag v = 1 within 1e-10)."""

    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {v.shape}")
        err = np.linalg.norm(v.conj().T @ v - np.eye(v.shape[1]))
        if err > 1e-10:
            raise ValueError(f"matrix is not isometric (deviation {err:.2e})")


@dataclass(frozen=True)
class OptimizerConfig:
    """Descent parameters for the kraus-isometry search.

    ``objective`` picks the entropy functional; ``fd_step`` is the central
    finite-difference step; descent stops at ``grad_tol`` or after ``n_iter``
    accepted iterations. ``n_restarts > 0`` adds seeded Haar-random starting
    points besides the identity and keeps the best outcome.
    """

    objective: str = OBJECTIVE_RENYI2
    n_iter: int = 200
    fd_step: float = 1e-6
    grad_tol: float = 1e-8
    initial_step: float = 1.0
    step_shrink: float = 0.5
    armijo_c: float = 1e-4
    max_backtracks: int = 40
    n_restarts: int = 0
    restart_seed: int = 0
    skip_tol: float = 1e-12
    rel_tol: float = 0.0
    patience: int = 5

    def __post_init__(self):
        if self.objective not in _OBJECTIVES:
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        if self.fd_step <= 0:
            raise ValueError("fd_step must be positive")


@dataclass(frozen=True)
class ObjectiveValue:
    """An entropy value in nats (>= 0 up to roundoff)."""

    kind: str
    value: float

    def __post_init__(self):
        if self.value < -1e-12:
            raise ValueError(f"entropy came out negative: {self.value}")


@dataclass(frozen=True)
class BondOptReport:
    objective_kind: str
    objective_before: float
    objective_after: float
    iterations: int


@dataclass(frozen=True)
class RiemannSweepStats(SweepStats):
    """SweepStats plus per-sweep optimizer aggregates (means over bonds)."""

    objective_kind: str = OBJECTIVE_RENYI2
    objective_before: float = 0.0
    objective_after: float = 0.0
    optimizer_iters: int = 0


def _as_matrix(v) -> np.ndarray:
    if isinstance(v, StiefelPoint):
        return np.asarray(v.v, dtype=np.complex128)
    return np.asarray(v, dtype=np.complex128)


# ---------------------------------------------------------------------------
# manifold primitives


def project_tangent(v, d: np.ndarray) -> np.ndarray:
    """Project an ambient derivative onto the tangent space at ``v``.

    Returns xi = d - v * herm(v^dag d) with herm(m) = (m + m^dag)/2, which
    satisfies herm(v^dag xi) = 0.
    """
    v = _as_matrix(v)
    d = np.asarray(d, dtype=np.complex128)
    if d.shape != v.shape:
        raise ValueError(f"shape mismatch: point {v.shape} vs derivative {d.shape}")
    vhd = v.conj().T @ d
    return d - v @ ((vhd + vhd.conj().T) / 2)


def _retract_matrix(v: np.ndarray, xi: np.ndarray, step: float) -> np.ndarray:
    if step == 0:
        return v.copy()
    return qr_isometrize(v + step * xi)


def retract(v, xi: np.ndarray, step: float) -> StiefelPoint:
    """QR retraction of ``v + step*xi`` back onto the manifold.

    First-order consistent with the straight-line step: the deviation from
    v + step*xi is O(step^2) for tangent xi. step=0 returns ``v`` exactly.
    """
    return StiefelPoint(_retract_matrix(_as_matrix(v), np.asarray(xi), step))


def fd_gradient(f, v, eps: float = 1e-6) -> np.ndarray:
    """Central-difference derivative matrix of a scalar objective.

    D[a,b] = df/dRe(v_ab) + i df/dIm(v_ab), evaluated on the ambient matrix;
    the manifold constraint is handled by projecting afterwards. Non-finite
    objective values abort with the offending coordinate.
    """
    v = _as_matrix(v)
    d = np.zeros_like(v)
    for a in range(v.shape[0]):
        for b in range(v.shape[1]):
            probe = np.zeros_like(v)
            parts = []
            for delta in (eps, -eps, 1j * eps, -1j * eps):
                probe[a, b] = delta
                val = float(f(v + probe))
                if not np.isfinite(val):
                    raise FloatingPointError(
                        f"objective not finite at probe ({a}, {b}, {delta})"
                    )
                parts.append(val)
            probe[a, b] = 0.0
            d[a, b] = (parts[0] - parts[1]) / (2 * eps) + 1j * (
                parts[2] - parts[3]
            ) / (2 * eps)
    return d


def _fd_gradient_batched(f_batched, v: np.ndarray, eps: float) -> np.ndarray:
    """Same central differences as :func:`fd_gradient`, evaluated in one batch."""
    kc = v.shape[0]
    n = kc * kc
    vs = np.repeat(v.reshape(1, n), 4 * n, axis=0)
    entries = np.repeat(np.arange(n), 4)
    deltas = np.tile(np.array([eps, -eps, 1j * eps, -1j * eps]), n)
    vs[np.arange(4 * n), entries] += deltas
    vals = f_batched(vs.reshape(4 * n, kc, kc))
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise FloatingPointError(f"objective not finite at probe entry {bad // 4}")
    vals = vals.reshape(n, 4)
    grad = (vals[:, 0] - vals[:, 1] + 1j * (vals[:, 2] - vals[:, 3])) / (2 * eps)
    return grad.reshape(kc, kc)


# ---------------------------------------------------------------------------
# block objectives


_POOL: concurrent.futures.ThreadPoolExecutor | None = None


def _worker_pool() -> concurrent.futures.ThreadPoolExecutor | None:
    global _POOL
    workers = min(2, os.cpu_count() or 1)
    if workers <= 1:
        return None
    if _POOL is None:
        _POOL = concurrent.futures.ThreadPoolExecutor(max_workers=workers)
    return _POOL


class PairBlockProblem:
    """Fused views of a two-site block for fast kraus-isometry objectives.

    The block must carry axes (s_i, s_{i+1}, l, r, k_i, k_{i+1}) as produced
    by :func:`lpdoprune.lpdo.two_site_block`. The isometry acts on the fused
    kraus pair (k_i fastest); the entropy bipartition is
    (s_i, l, k_i) | (s_{i+1}, r, k_{i+1}).
    """

    def __init__(self, block: DenseTensor):
        data = block.data
        si, sj, dl, dr, dki, dkj = data.shape
        self.shape = data.shape
        self.dki, self.dkj = dki, dkj
        self.kc = dki * dkj
        self.left_dim = si * dl * dki
        self.right_dim = sj * dr * dkj
        self.fused = data.transpose(0, 1, 2, 3, 5, 4).reshape(-1, self.kc)
        # chunk batched evaluations to cap the (chunk, X, kc) intermediate
        x = self.fused.shape[0]
        self.chunk = max(8, min(512, int(2e6 / max(1, x * self.kc))))
        # probe columns regrouped as (left-phys, right-phys, kraus-pair):
        # Mg[p, q, c] with p = (s_i, l) and q = (s_{i+1}, r)
        self.p_dim = si * dl
        self.q_dim = sj * dr
        self._mg = data.transpose(0, 2, 1, 3, 5, 4).reshape(
            self.p_dim, self.q_dim, self.kc
        )
        # probe-independent pieces of the rank-one expansion
        self._k = np.einsum("pxc,pyc->cxy", self._mg.conj(), self._mg)
        self._dnorm2 = np.einsum("pxc,pxc->c", self._mg.conj(), self._mg).real
        self._s6 = np.einsum("cxy,cyx->c", self._k, self._k).real

    def _bipartition(self, bp: np.ndarray) -> np.ndarray:
        """(batch, X, kc) -> (batch, left, right) purification matrices."""
        si, sj, dl, dr, dki, dkj = self.shape
        p = bp.shape[0]
        bp = bp.reshape(p, si, sj, dl, dr, dkj, dki)
        bp = bp.transpose(0, 1, 3, 6, 2, 4, 5)
        return np.ascontiguousarray(bp.reshape(p, self.left_dim, self.right_dim))

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Apply the isometry to the fused kraus pair; return the 6-leg block."""
        si, sj, dl, dr, dki, dkj = self.shape
        out = (self.fused @ v).reshape(si, sj, dl, dr, dkj, dki)
        return out.transpose(0, 1, 2, 3, 5, 4)

    def _grams(self, vs: np.ndarray) -> np.ndarray:
        """Hermitian Gram matrices of the bipartition (smaller side)."""
        bp = self._bipartition(np.matmul(self.fused[None], vs))
        if self.right_dim <= self.left_dim:
            return np.matmul(bp.conj().transpose(0, 2, 1), bp)
        return np.matmul(bp, bp.conj().transpose(0, 2, 1))

    def _map_chunks(self, fn, vs: np.ndarray) -> np.ndarray:
        """Evaluate fn on chunks of the batch, threading across chunks.

        The chunked LAPACK/BLAS work releases the GIL, so a small thread pool
        uses both cores on large finite-difference batches.
        """
        pieces = [vs[s : s + self.chunk] for s in range(0, len(vs), self.chunk)]
        pool = _worker_pool()
        if len(pieces) <= 1 or pool is None:
            parts = [fn(p) for p in pieces]
        else:
            parts = list(pool.map(fn, pieces))
        return np.concatenate(parts) if len(parts) > 1 else parts[0]

    def _renyi2_chunk(self, vs: np.ndarray) -> np.ndarray:
        g = self._grams(vs)
        tr1 = np.einsum("pii->p", g).real
        tr2 = np.einsum("pij,pij->p", g, g.conj()).real
        return -np.log(tr2 / tr1**2)

    def _von_neumann_chunk(self, vs: np.ndarray) -> np.ndarray:
        bp = self._bipartition(np.matmul(self.fused[None], vs))
        sv = np.linalg.svd(bp, compute_uv=False)
        lam = sv**2
        lam = lam / lam.sum(axis=1, keepdims=True)
        ent = -np.where(lam > 1e-18, lam * np.log(np.where(lam > 0, lam, 1.0)), 0.0)
        return ent.sum(axis=1)

    def renyi2_batch(self, vs: np.ndarray) -> np.ndarray:
        return self._map_chunks(self._renyi2_chunk, vs)

    def von_neumann_batch(self, vs: np.ndarray) -> np.ndarray:
        return self._map_chunks(self._von_neumann_chunk, vs)

    def _renyi2_probe_values(self, v: np.ndarray, eps: float) -> np.ndarray:
        """Exact objective values at all central-difference probes of ``v``.

        A probe V + delta*E_{c0,c1} shifts the bipartition matrix A by a
        structured sparse term delta*D, so Tr(G) and Tr(G^2) of the perturbed
        Gram G expand in closed form in delta. The returned values match the
        brute-force batched evaluation to machine precision; they are laid
        out as (kc*kc, 4) for deltas (+eps, -eps, +i eps, -i eps).
        """
        kc, dki, dkj = self.kc, self.dki, self.dkj
        mg = self._mg
        a0 = self._bipartition(np.matmul(self.fused[None], v[None]))[0]
        g0 = a0.conj().T @ a0
        t0 = float(np.trace(g0).real)
        t1 = float(np.einsum("ij,ij->", g0, g0.conj()).real)
        w1 = a0 @ g0
        ar = a0.reshape(self.p_dim, dki, self.q_dim, dkj)
        w1r = w1.reshape(self.p_dim, dki, self.q_dim, dkj)
        ip_a = np.einsum("paqb,pqc->cab", ar.conj(), mg)
        s1 = np.einsum("paqb,pqc->cab", w1r.conj(), mg)
        a3 = a0.reshape(self.p_dim, dki, -1)
        y = np.einsum("pqc,par->caqr", mg.conj(), a3)
        s4 = np.einsum("caqr,caqr->ca", y, y.conj()).real
        yb = y.reshape(kc, dki, self.q_dim, self.q_dim, dkj)
        s3 = np.einsum("cayxb,caxyb->cab", yb, yb).conj()
        s5 = np.einsum("cayxb,cyx->cab", yb.conj(), self._k)
        g0r = g0.reshape(self.q_dim, dkj, self.q_dim, dkj)
        gd = np.einsum("xbyb->bxy", g0r)
        s2 = np.einsum("bxy,cyx->cb", gd, self._k).real
        e2 = eps * eps

        even_g = t0 + e2 * self._dnorm2[:, None, None]
        even_g2 = (
            t1
            + 2 * e2 * s2[:, None, :]
            + 2 * e2 * s4[:, :, None]
            + e2 * e2 * self._s6[:, None, None]
        )
        out = np.empty((kc, dki, dkj, 4))
        for slot, delta in enumerate((eps, -eps, 1j * eps, -1j * eps)):
            tr_g = even_g + 2 * (delta * ip_a).real
            tr_g2 = (
                even_g2
                + 4 * (delta * s1).real
                + 2 * (delta * delta * s3).real
                + 4 * e2 * (delta * s5).real
            )
            out[:, :, :, slot] = -np.log(tr_g2 / tr_g**2)
        # flatten entry index to match V.reshape(-1): e = c0*kc + (a + dki*b)
        return out.transpose(0, 2, 1, 3).reshape(kc * kc, 4)

    def renyi2_fd_gradient(self, v: np.ndarray, eps: float) -> np.ndarray:
        """Central-difference gradient of the Renyi-2 objective at ``v``.

        Identical in value to feeding :meth:`renyi2_batch` through the
        generic batched differencer, but evaluated via the closed-form probe
        expansion.
        """
        vals = self._renyi2_probe_values(v, eps)
        grad = (vals[:, 0] - vals[:, 1] + 1j * (vals[:, 2] - vals[:, 3])) / (2 * eps)
        return grad.reshape(self.kc, self.kc)

    def gradient(self, kind: str, v: np.ndarray, eps: float) -> np.ndarray:
        if kind == OBJECTIVE_RENYI2:
            return self.renyi2_fd_gradient(v, eps)
        return _fd_gradient_batched(self.von_neumann_batch, v, eps)

    def value(self, kind: str, v: np.ndarray) -> float:
        batch = v[None] if v.ndim == 2 else v
        if kind == OBJECTIVE_RENYI2:
            return float(self.renyi2_batch(batch)[0])
        return float(self.von_neumann_batch(batch)[0])

    def batch_fn(self, kind: str):
        return self.renyi2_batch if kind == OBJECTIVE_RENYI2 else self.von_neumann_batch

    def spectrum(self, v: np.ndarray | None = None) -> np.ndarray:
        """Singular values of the purification bipartition (descending)."""
        if v is None:
            v = np.eye(self.kc)
        bp = self._bipartition(np.matmul(self.fused[None], v[None]))
        return np.linalg.svd(bp[0], compute_uv=False)


def _checked_matrix(block_kc: int, v) -> np.ndarray:
    v = _as_matrix(v)
    if v.shape != (block_kc, block_kc):
        raise ValueError(
            f"isometry must be {block_kc}x{block_kc} for this block, got {v.shape}"
        )
    err = np.linalg.norm(v.conj().T @ v - np.eye(block_kc))
    if err > _ISOMETRY_CHECK_TOL:
        raise ValueError(f"matrix is not isometric (deviation {err:.2e})")
    return v


def objective_renyi2(block: DenseTensor, v) -> ObjectiveValue:
    """Second Renyi entropy -log Tr(rho_tilde^2) of the left half.

    rho_tilde is the reduced operator of the purification after applying the
    isometry to the fused kraus pair; no SVD is involved.
    """
    problem = PairBlockProblem(block)
    vm = _checked_matrix(problem.kc, v)
    return ObjectiveValue(OBJECTIVE_RENYI2, problem.value(OBJECTIVE_RENYI2, vm))


def objective_von_neumann(block: DenseTensor, v) -> ObjectiveValue:
    """Von Neumann entropy -sum lambda ln lambda of the bipartition spectrum,
    lambda_i = sigma_i^2 / sum sigma^2."""
    problem = PairBlockProblem(block)
    vm = _checked_matrix(problem.kc, v)
    return ObjectiveValue(OBJECTIVE_VON_NEUMANN, problem.value(OBJECTIVE_VON_NEUMANN, vm))


def bond_spectrum(block: DenseTensor, v: np.ndarray | None = None) -> np.ndarray:
    """Purification singular values of a block, optionally after an isometry."""
    return PairBlockProblem(block).spectrum(v)


# ---------------------------------------------------------------------------
# descent


def _descend(problem: PairBlockProblem, kind: str, v0: np.ndarray, config: OptimizerConfig):
    """Armijo-backtracked Riemannian gradient descent.

    The trial step is warm-started with a Barzilai-Borwein estimate from the
    previous (point, gradient) pair, clipped to ``initial_step``; every
    accepted iterate strictly decreases the objective.
    """
    v = v0
    f0 = problem.value(kind, v)
    history = [f0]
    prev_v = prev_xi = None
    stalled = 0
    for _ in range(config.n_iter):
        grad = problem.gradient(kind, v, config.fd_step)
        xi = project_tangent(v, grad)
        g2 = float(np.vdot(xi, xi).real)
        if np.sqrt(g2) < config.grad_tol:
            break
        alpha = config.initial_step
        if prev_v is not None:
            s = v - prev_v
            y = xi - prev_xi
            sy = abs(float(np.vdot(s, y).real))
            yy = float(np.vdot(y, y).real)
            if sy > 0 and yy > 0:
                # Barzilai-Borwein trial step; Armijo backtracking guards it
                alpha = min(1e6, max(sy / yy, 1e-8))
        accepted = False
        for _bt in range(config.max_backtracks):
            vt = _retract_matrix(v, -xi, alpha)
            ft = problem.value(kind, vt)
            if ft <= f0 - config.armijo_c * alpha * g2:
                accepted = True
                break
            alpha *= config.step_shrink
        if not accepted:
            break
        decrease = f0 - ft
        prev_v, prev_xi = v, xi
        v, f0 = vt, ft
        history.append(f0)
        if config.rel_tol > 0:
            stalled = stalled + 1 if decrease < config.rel_tol * max(abs(f0), 1e-30) else 0
            if stalled >= config.patience:
                break
    return v, f0, history


def optimize_isometry(
    block: DenseTensor, config: OptimizerConfig
) -> tuple[StiefelPoint, list[ObjectiveValue]]:
    """Minimize the configured entropy objective over kraus-pair isometries.

    Descent starts at the identity (which preserves the incumbent
    representation, so the result can only improve); ``n_restarts`` extra
    seeded Haar-random starts are tried and the best kept. Returns the final
    point and the accepted-objective history of the winning run.
    """
    problem = PairBlockProblem(block)
    kind = config.objective
    starts = [np.eye(problem.kc, dtype=np.complex128)]
    if config.n_restarts > 0:
        rng = np.random.default_rng(config.restart_seed)
        starts += [random_unitary(problem.kc, rng) for _ in range(config.n_restarts)]
    best = None
    for v0 in starts:
        v, f, history = _descend(problem, kind, v0, config)
        if best is None or f < best[1]:
            best = (v, f, history)
        if best[1] < config.skip_tol:  # nothing left to gain from more starts
            break
    v, _, history = best
    values = [ObjectiveValue(kind, max(h, 0.0)) for h in history]
    return StiefelPoint(v), values


def optimize_bond(
    chain: LpdoChain,
    i: int,
    cutoff: float,
    config: OptimizerConfig,
    merge_into: str = "auto",
) -> tuple[LpdoChain, BondOptReport]:
    """One inner step of the pruning routine at bond i.

    Contract the bond, search for a kraus-pair isometry lowering the
    representational entropy, apply it, then truncate with the (deliberately
    large) L2 cutoff and restore the chain. Bonds whose entropy is already
    below ``config.skip_tol`` (or with a trivial kraus pair) skip straight to
    the truncation, which is then identical to plain bond truncation.
    """
    if chain.ortho_center not in (i, i + 1):
        chain = canonicalize(chain, i)
    if merge_into == "auto":
        center_on = chain.ortho_center
    elif merge_into == "left":
        center_on = i
    elif merge_into == "right":
        center_on = i + 1
    else:
        raise ValueError(f"merge_into must be auto/left/right, got {merge_into!r}")
    block = two_site_block(chain, i)
    problem = PairBlockProblem(block)
    before = problem.value(config.objective, np.eye(problem.kc, dtype=np.complex128))
    if problem.kc == 1 or before < config.skip_tol:
        after, iters = before, 0
        new_block = block.data
    else:
        point, history = optimize_isometry(block, config)
        after, iters = history[-1].value, len(history) - 1
        new_block = problem.apply(point.v)
    policy = TruncationPolicy(cutoff=cutoff, norm_mode="L2")
    out = split_pair_block(chain, i, new_block, policy, center_on)
    return out, BondOptReport(config.objective, before, after, iters)


def riemann_sweep(
    chain: LpdoChain,
    cutoff: float,
    config: OptimizerConfig,
    n_sweeps: int,
    reference: LpdoChain | None = None,
) -> tuple[LpdoChain, list[RiemannSweepStats]]:
    """Serial left-to-right optimize_bond passes, with per-sweep statistics.

    ``objective_before``/``objective_after`` in the stats are means over the
    bonds of the sweep; ``optimizer_iters`` is the total accepted iteration
    count. Fidelity is measured against ``reference`` (default: the input).
    """
    if n_sweeps < 0:
        raise ValueError("n_sweeps must be >= 0")
    if reference is None:
        reference = chain
    series: list[RiemannSweepStats] = []
    for sweep in range(1, n_sweeps + 1):
        t0 = time.perf_counter()
        chain = canonicalize(chain, 0)
        befores, afters, iters = [], [], 0
        for i in range(chain.n_sites - 1):
            chain, report = optimize_bond(chain, i, cutoff, config, merge_into="right")
            befores.append(report.objective_before)
            afters.append(report.objective_after)
            iters += report.iterations
        wall = (time.perf_counter() - t0) * 1e3
        series.append(
            RiemannSweepStats(
                sweep_index=sweep,
                chi_mean=chain.chi_mean(),
                chi_max=chain.chi_max(),
                fidelity_vs_initial=fidelity(chain, reference).fidelity,
                trace_deviation=abs(trace(chain) - 1.0),
                wall_time_ms=wall,
                objective_kind=config.objective,
                objective_before=float(np.mean(befores)) if befores else 0.0,
                objective_after=float(np.mean(afters)) if afters else 0.0,
                optimizer_iters=iters,
            )
        )
    return chain, series
