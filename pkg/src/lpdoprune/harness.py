"""Reproducible experiment driver: state generation, pruning grids, CSV output.

Grid cells (one per cutoff value) are independent; each derives its own seed
as ``base_seed XOR cell_index`` and cells may run in a process pool without
changing any output. CSV rows are written in deterministic cell order, so a
run is byte-identical for a fixed config and seed, wall-clock columns aside.
``LPDO_THREADS`` caps the worker count.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bundle as bundle_io
from . import lpdo, prune, stiefel
from .fit import FitResult, fit_exponential

PRUNE_COLUMNS = (
    "run_id",
    "N",
    "chi_max",
    "lambda",
    "sweep",
    "chi_mean",
    "chi_max_bond",
    "fidelity_vs_initial",
    "trace_dev",
    "wall_ms",
)
RIEMANN_COLUMNS = PRUNE_COLUMNS + (
    "objective_kind",
    "objective_before",
    "objective_after",
    "optimizer_iters",
)
FIT_COLUMNS = (
    "x_col",
    "y_col",
    "n_points",
    "alpha",
    "beta",
    "gamma",
    "se_alpha",
    "se_beta",
    "se_gamma",
    "residual_norm",
    "converged",
)


class VerificationError(Exception):
    """An invariant failed during a verify/inject run."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Run parameters shared by the CLI commands.

    Serializes losslessly to/from JSON; the config file grammar is exactly
    these field names as JSON keys. Command-line flags override file values.
    """

    kind: str = "subopt"
    n_sites: int = 20
    chi_max: int = 8
    cutoffs: tuple[float, ...] = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
    n_sweeps: int = 20
    objective: str = stiefel.OBJECTIVE_RENYI2
    n_iter: int = 100
    fd_step: float = 1e-6
    grad_tol: float = 1e-7
    n_restarts: int = 1
    gamma_dephasing: float = 0.5
    gamma_bitflip: float = 0.5
    base_seed: int = 1
    bundle_path: str | None = None
    csv_path: str | None = None

    def __post_init__(self):
        if self.kind not in ("optimal", "pure", "subopt"):
            raise ValueError(f"unknown state kind {self.kind!r}")
        if self.n_sites < 1 or self.chi_max < 1 or self.n_sweeps < 0:
            raise ValueError("n_sites/chi_max must be >= 1 and n_sweeps >= 0")
        for c in self.cutoffs:
            if not (0.0 <= c < 1.0):
                raise ValueError(f"cutoff {c} outside [0, 1)")
        if not (0.0 <= self.gamma_dephasing <= 1.0 and 0.0 <= self.gamma_bitflip <= 1.0):
            raise ValueError("noise rates must lie in [0, 1]")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["cutoffs"] = list(self.cutoffs)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "cutoffs" in d:
            d["cutoffs"] = tuple(float(c) for c in d["cutoffs"])
        return cls(**d)

    def optimizer_config(self, seed: int) -> stiefel.OptimizerConfig:
        return stiefel.OptimizerConfig(
            objective=self.objective,
            n_iter=self.n_iter,
            fd_step=self.fd_step,
            grad_tol=self.grad_tol,
            n_restarts=self.n_restarts,
            restart_seed=seed,
            rel_tol=1e-8,
            patience=5,
        )


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def save_config(config: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# state generation


def build_state(config: ExperimentConfig) -> lpdo.LpdoChain:
    if config.kind == "optimal":
        return lpdo.maximally_mixed_lpdo(config.n_sites)
    chain = lpdo.random_pure_lpdo(config.n_sites, config.chi_max, config.base_seed)
    if config.kind == "pure":
        return chain
    return lpdo.depolarize(chain, config.gamma_dephasing, config.gamma_bitflip)


def chain_profile(chain: lpdo.LpdoChain) -> str:
    chi = ",".join(str(d) for d in chain.bond_dims) or "-"
    kappa = ",".join(str(d) for d in chain.kraus_dims)
    return (
        f"N={chain.n_sites} chi=[{chi}] kappa=[{kappa}] "
        f"chi_mean={chain.chi_mean():.4f}"
    )


# ---------------------------------------------------------------------------
# CSV plumbing


def _format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path_or_none, columns, rows) -> str:
    text = ",".join(columns) + "\n"
    for row in rows:
        text += ",".join(_format_value(v) for v in row) + "\n"
    if path_or_none:
        with open(path_or_none, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty CSV")
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def worker_count(n_cells: int) -> int:
    cap = os.environ.get("LPDO_THREADS")
    workers = os.cpu_count() or 1
    if cap:
        workers = min(workers, max(1, int(cap)))
    return max(1, min(workers, n_cells))


def _run_cells(fn, cells: list[tuple]) -> list:
    """Run independent grid cells, in a pool when more than one worker."""
    workers = worker_count(len(cells))
    if workers <= 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))


# ---------------------------------------------------------------------------
# grid cells (module level so they pickle for the process pool)


def _prune_cell(args: tuple) -> list[tuple]:
    config_dict, cell_index, cutoff = args
    config = ExperimentConfig.from_dict(config_dict)
    chain = bundle_io.load_bundle(config.bundle_path)
    run_id = f"prune-N{chain.n_sites}-chi{config.chi_max}-L{cutoff}-s{config.base_seed}"
    _, series = prune.run_truncation_schedule(chain, cutoff, config.n_sweeps)
    return [
        (
            run_id,
            chain.n_sites,
            config.chi_max,
            cutoff,
            s.sweep_index,
            s.chi_mean,
            s.chi_max,
            s.fidelity_vs_initial,
            s.trace_deviation,
            s.wall_time_ms,
        )
        for s in series
    ]


def _riemann_cell(args: tuple) -> list[tuple]:
    config_dict, cell_index, cutoff = args
    config = ExperimentConfig.from_dict(config_dict)
    chain = bundle_io.load_bundle(config.bundle_path)
    seed = config.base_seed ^ cell_index
    run_id = (
        f"riemann-{config.objective}-N{chain.n_sites}-chi{config.chi_max}"
        f"-L{cutoff}-s{config.base_seed}"
    )
    _, series = stiefel.riemann_sweep(
        chain, cutoff, config.optimizer_config(seed), config.n_sweeps
    )
    return [
        (
            run_id,
            chain.n_sites,
            config.chi_max,
            cutoff,
            s.sweep_index,
            s.chi_mean,
            s.chi_max,
            s.fidelity_vs_initial,
            s.trace_deviation,
            s.wall_time_ms,
            s.objective_kind,
            s.objective_before,
            s.objective_after,
            s.optimizer_iters,
        )
        for s in series
    ]


def run_prune_grid(config: ExperimentConfig) -> str:
    cells = [(config.to_dict(), i, c) for i, c in enumerate(config.cutoffs)]
    rows = [row for cell_rows in _run_cells(_prune_cell, cells) for row in cell_rows]
    return write_csv(config.csv_path, PRUNE_COLUMNS, rows)


def run_riemann_grid(config: ExperimentConfig) -> str:
    cells = [(config.to_dict(), i, c) for i, c in enumerate(config.cutoffs)]
    rows = [row for cell_rows in _run_cells(_riemann_cell, cells) for row in cell_rows]
    return write_csv(config.csv_path, RIEMANN_COLUMNS, rows)


# ---------------------------------------------------------------------------
# verification


def verify_report(path_a, path_b, out=print) -> bool:
    """Cross-check two bundles: traces, purities, fidelity, oracle agreement.

    Passing means both states are physically consistent (trace 1, positive,
    transfer and dense-oracle values agree where the oracle fits), not that
    the two states are equal; the fidelity is informational.
    """
    from . import oracle

    a = bundle_io.load_bundle(path_a)
    b = bundle_io.load_bundle(path_b)
    if a.n_sites != b.n_sites:
        raise VerificationError(
            f"size mismatch: {path_a} has N={a.n_sites}, {path_b} N={b.n_sites}"
        )
    rep = lpdo.fidelity(a, b)
    tr_a, tr_b = lpdo.trace(a), lpdo.trace(b)
    out(f"transfer: F_P={rep.fidelity!r} overlap={rep.overlap!r}")
    out(f"transfer: purity_a={rep.purity_a!r} purity_b={rep.purity_b!r}")
    out(f"transfer: |tr(a)-1|={abs(tr_a - 1.0):.3e} |tr(b)-1|={abs(tr_b - 1.0):.3e}")
    ok = abs(tr_a - 1.0) <= 1e-10 and abs(tr_b - 1.0) <= 1e-10
    if a.n_sites <= oracle.MAX_ORACLE_QUBITS:
        da, db = oracle.lpdo_to_dense(a), oracle.lpdo_to_dense(b)
        m = oracle.dense_measures(da, db)
        min_eig = min(oracle.min_eigenvalue(da), oracle.min_eigenvalue(db))
        out(f"oracle:   F_P={m.fidelity!r} purity_a={m.purity_a!r} purity_b={m.purity_b!r}")
        out(f"oracle:   min_eig={min_eig:.3e}")
        ok = (
            ok
            and abs(m.fidelity - rep.fidelity) <= 1e-9
            and abs(m.purity_a - rep.purity_a) <= 1e-9
            and abs(m.purity_b - rep.purity_b) <= 1e-9
            and min_eig >= -1e-10
        )
    else:
        out("oracle:   skipped (chain too large)")
    out(f"verdict:  {'PASS' if ok else 'FAIL'}")
    return ok


def inject_report(
    n_sites: int,
    gate_name: str,
    cutoff: float,
    seed: int = 0,
    site: int | None = None,
    out=print,
) -> bool:
    """Drive the unitary -> kraus-disentangler round trip and check invariants."""
    from . import injectivity
    from .gates import CNOT, SWAP, random_unitary

    if site is None:
        site = max(0, n_sites // 2 - 1)
    if gate_name == "identity":
        u = np.eye(4, dtype=np.complex128)
    elif gate_name == "cnot":
        u = CNOT
    elif gate_name == "swap":
        u = SWAP
    elif gate_name == "random2":
        u = random_unitary(4, np.random.default_rng(seed))
    else:
        raise ValueError(f"unknown unitary spec {gate_name!r} "
                         "(expected identity|cnot|swap|random2)")
    if n_sites < 2 or site > n_sites - 2:
        raise ValueError("need an adjacent pair inside the chain")

    chain = lpdo.maximally_mixed_lpdo(n_sites)
    sites = (site, site + 1)
    witness = injectivity.check_weak_injectivity(u)
    from .tensor import TruncationPolicy

    policy = TruncationPolicy(cutoff=cutoff, norm_mode="L2")
    after_u = lpdo.apply_unitary(chain, sites, u, policy)
    after_v = injectivity.apply_kappa_isometry(
        after_u, sites, witness.v.conj().T, policy
    )
    rep = lpdo.fidelity(after_v, chain)
    out(f"chi before U:  {chain.bond_dims}")
    out(f"chi after U:   {after_u.bond_dims}")
    out(f"chi after V+:  {after_v.bond_dims}")
    out(f"witness residual: {witness.residual:.3e}")
    out(f"F_P(final, initial): {rep.fidelity!r}")
    out(f"|tr-1|: {abs(lpdo.trace(after_v) - 1.0):.3e}")
    ok = (
        witness.residual <= 1e-10
        and max(after_v.bond_dims) == 1
        and abs(rep.fidelity - 1.0) <= 1e-10
        and abs(lpdo.trace(after_v) - 1.0) <= 1e-10
    )
    out(f"verdict:  {'PASS' if ok else 'FAIL'}")
    return ok


# ---------------------------------------------------------------------------
# fitting


def fit_from_csv(
    path,
    x_col: str,
    y_col: str,
    filters: dict[str, str] | None = None,
) -> tuple[FitResult, int]:
    """Fit chi-decay data from a harness CSV, optionally filtered by columns."""
    header, rows = read_csv(path)
    for col in (x_col, y_col):
        if col not in header:
            raise ValueError(f"{path}: no column {col!r} (have {header})")
    sel = list(rows)
    for col, value in (filters or {}).items():
        if col not in header:
            raise ValueError(f"{path}: no column {col!r} (have {header})")
        idx = header.index(col)
        sel = [r for r in sel if r[idx] == value or _float_eq(r[idx], value)]
    if not sel:
        raise ValueError(f"{path}: no rows left after filters {filters}")
    xi, yi = header.index(x_col), header.index(y_col)
    x = np.array([float(r[xi]) for r in sel])
    y = np.array([float(r[yi]) for r in sel])
    order = np.argsort(x)
    return fit_exponential(x[order], y[order]), len(sel)


def _float_eq(a: str, b: str) -> bool:
    try:
        return float(a) == float(b)
    except ValueError:
        return False


def fit_row(result: FitResult, x_col: str, y_col: str, n_points: int) -> tuple:
    return (
        x_col,
        y_col,
        n_points,
        result.alpha,
        result.beta,
        result.gamma,
        result.se_alpha,
        result.se_beta,
        result.se_gamma,
        result.residual_norm,
        result.converged,
    )
