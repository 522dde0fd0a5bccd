"""Locally purified density operators for maximally mixed states.

A numpy library for representing mixed qubit chains as locally purified
tensor networks, plus three pruning tools for their spurious bond dimension:
aggressive fidelity-preserving truncation, Riemannian optimization of
kraus-space isometries, and the closed-form disentangler that weak
injectivity provides for the maximally mixed state. A dense brute-force
oracle backs every operation at small sizes.
"""

from .tensor import (
    DenseTensor,
    DimensionMismatchError,
    Index,
    SvdOutcome,
    TruncationPolicy,
    contract,
    matricize,
    qr_isometrize,
    svd_truncate,
    tensorize,
)
from .lpdo import (
    FidelityReport,
    KrausChannel,
    LpdoChain,
    apply_channel,
    apply_unitary,
    bitflip_channel,
    canonicalize,
    dephasing_channel,
    depolarize,
    fidelity,
    maximally_mixed_lpdo,
    purity,
    random_pure_lpdo,
    trace,
    two_site_block,
)
from .bundle import load_bundle, save_bundle
from .prune import SweepStats, run_truncation_schedule, sweep_truncate, truncate_bond
from .stiefel import (
    ObjectiveValue,
    OptimizerConfig,
    StiefelPoint,
    fd_gradient,
    objective_renyi2,
    objective_von_neumann,
    optimize_bond,
    optimize_isometry,
    project_tangent,
    retract,
    riemann_sweep,
)
from .injectivity import (
    InjectivityWitness,
    apply_kappa_isometry,
    check_weak_injectivity,
    disentangler_for,
    prune_via_injectivity,
)
from .oracle import DenseRho, dense_apply, dense_measures, lpdo_to_dense, vn_entropy
from .fit import DegenerateModelError, FitResult, fit_exponential

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
