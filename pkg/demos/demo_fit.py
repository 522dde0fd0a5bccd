"""Quantifying how fast truncation sweeps prune the bond dimension.

chi_mean decays roughly exponentially with the sweep count; fitting
f(x) = alpha + beta * exp(-gamma x) summarizes a whole sweep series in three
numbers, with standard errors from the fit covariance.
"""

import numpy as np

from lpdoprune import depolarize, random_pure_lpdo
from lpdoprune.fit import fit_exponential
from lpdoprune.prune import run_truncation_schedule

chain = depolarize(random_pure_lpdo(20, 16, seed=1))

for cutoff in (0.02, 0.05):
    _, series = run_truncation_schedule(chain, cutoff, 15)
    x = np.array([float(s.sweep_index) for s in series])
    y = np.array([s.chi_mean for s in series])
    res = fit_exponential(x, y)
    print(f"cutoff {cutoff}: chi_mean series {np.round(y, 2)}")
    print(
        f"  alpha = {res.alpha:.3f} +- {res.se_alpha:.1e}   "
        f"beta = {res.beta:.3f} +- {res.se_beta:.1e}   "
        f"gamma = {res.gamma:.3f} +- {res.se_gamma:.1e}"
    )
    print(f"  residual norm {res.residual_norm:.2e}, converged {res.converged}\n")
