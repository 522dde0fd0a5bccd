"""Exponential-decay fitting f(x) = alpha + beta * exp(-gamma x).

Damped Gauss-Newton (Levenberg style) with a log-linear bootstrap for the
initial decay rate. Standard errors come from the diagonal of the covariance
matrix sigma^2 (J^T J)^-1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateModelError(ValueError):
    """The three parameters are not identifiable on the given data."""


@dataclass(frozen=True)
class FitResult:
    alpha: float
    beta: float
    gamma: float
    se_alpha: float
    se_beta: float
    se_gamma: float
    residual_norm: float
    converged: bool
    n_iter: int

    def params(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


def _model(theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    a, b, g = theta
    return a + b * np.exp(-g * x)


def _jacobian(theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    _, b, g = theta
    e = np.exp(-g * x)
    return np.column_stack([np.ones_like(x), e, -b * x * e])


def _initial_guess(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    alpha0 = float(y[-1])
    sign = 1.0 if y[0] >= y[-1] else -1.0
    z = sign * (y - alpha0)
    mask = z > max(1e-12, 1e-9 * float(np.ptp(y)))
    if np.count_nonzero(mask) >= 2:
        slope, intercept = np.polyfit(x[mask], np.log(z[mask]), 1)
        gamma0 = max(-slope, 1e-6)
        beta0 = sign * float(np.exp(intercept))
    else:
        gamma0 = 1.0
        beta0 = float(y[0] - alpha0)
    return np.array([alpha0, beta0, gamma0], dtype=float)


def fit_exponential(
    x,
    y,
    max_iter: int = 200,
    tol: float = 1e-12,
) -> FitResult:
    """Least-squares fit of alpha + beta e^{-gamma x} to (x, y).

    Needs at least 4 points and non-constant y. Raises DegenerateModelError
    when the parameters are not identifiable (constant data, or gamma ~ 0 so
    alpha and beta only enter through their sum). Non-convergence within
    ``max_iter`` returns the best parameters with ``converged=False``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    if x.size < 4:
        raise ValueError(f"need at least 4 points, got {x.size}")
    if np.ptp(y) == 0.0:
        raise DegenerateModelError("y is constant; alpha and beta are degenerate")

    theta = _initial_guess(x, y)
    damping = 1e-3
    converged = False
    n_iter = 0
    residual = y - _model(theta, x)
    cost = float(residual @ residual)
    for n_iter in range(1, max_iter + 1):
        jac = _jacobian(theta, x)
        jtj = jac.T @ jac
        jtr = jac.T @ residual
        # first-order optimality, relative to the problem scale
        gscale = max(1.0, np.linalg.norm(jac) * np.sqrt(cost))
        if np.linalg.norm(jtr) <= 1e-8 * gscale:
            converged = True
            break
        try:
            step = np.linalg.solve(jtj + damping * np.diag(np.diag(jtj)), jtr)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jtj + damping * np.eye(3), jtr, rcond=None)[0]
        candidate = theta + step
        cand_res = y - _model(candidate, x)
        cand_cost = float(cand_res @ cand_res)
        if cand_cost < cost:
            rel = abs(cost - cand_cost) / max(cost, 1e-300)
            theta, residual, cost = candidate, cand_res, cand_cost
            damping = max(damping / 3.0, 1e-12)
            if rel < tol or np.linalg.norm(step) < tol * (1 + np.linalg.norm(theta)):
                converged = True
                break
        else:
            # relative function convergence: no neighboring step changes the
            # cost beyond roundoff, so the minimum is attained
            if abs(cand_cost - cost) <= 1e-12 * max(cost, 1e-300):
                converged = True
                break
            damping *= 10.0
            if damping > 1e12:
                jtr = _jacobian(theta, x).T @ residual
                converged = bool(np.linalg.norm(jtr) <= 1e-6 * gscale)
                break

    jac = _jacobian(theta, x)
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv[0] <= 0 or sv[-1] / sv[0] < 1e-12:
        raise DegenerateModelError(
            "Jacobian is rank deficient at the solution (gamma ~ 0 makes "
            "alpha and beta non-identifiable)"
        )
    dof = max(x.size - 3, 1)
    sigma2 = cost / dof
    cov = sigma2 * np.linalg.inv(jac.T @ jac)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return FitResult(
        alpha=float(theta[0]),
        beta=float(theta[1]),
        gamma=float(theta[2]),
        se_alpha=float(se[0]),
        se_beta=float(se[1]),
        se_gamma=float(se[2]),
        residual_norm=float(np.sqrt(cost)),
        converged=converged,
        n_iter=n_iter,
    )
