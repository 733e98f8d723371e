"""Linear forecasting models: OLS, ridge, and coordinate-descent lasso.

Objective conventions (intercept never penalized):

    OLS    min ||y - a*1 - Xw||^2                    minimum-norm when flat
    LASSO  min (1/(2d)) ||y - a*1 - Xw||^2 + lam*||w||_1
    RIDGE  min ||y - a*1 - Xw||^2 + lam*||w||^2

Ridge and lasso operate on z-scored features (scale-sensitive penalties);
OLS runs on raw features. Centering y and X makes the intercept separable,
so the solvers work on the centered system and recover the intercept as
ybar - xbar'w.
"""

from __future__ import annotations

import numpy as np


def center(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    xm = X.mean(axis=0)
    ym = float(y.mean())
    return X - xm, y - ym, xm, ym


def standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Z-score columns; zero-variance columns get unit scale (coefficient 0)."""
    mu = X.mean(axis=0)
    sd = X.std(axis=0, ddof=0)
    sd = np.where(sd == 0.0, 1.0, sd)
    return (X - mu) / sd, mu, sd


def fit_ols(X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Least squares via SVD; returns (intercept, weights). Never fails:
    rank-deficient and underdetermined systems get the minimum-norm solution."""
    Xc, yc, xm, ym = center(X, y)
    w, *_ = np.linalg.lstsq(Xc, yc, rcond=None)
    return ym - float(xm @ w), w


def fit_ridge(X: np.ndarray, y: np.ndarray, lam: float) -> tuple[float, np.ndarray]:
    """Closed-form ridge on the centered system: (X'X + lam I)^-1 X'y."""
    Xc, yc, xm, ym = center(X, y)
    n = X.shape[1]
    w = np.linalg.solve(Xc.T @ Xc + lam * np.eye(n), Xc.T @ yc)
    return ym - float(xm @ w), w


def lasso_kkt_residual(Xc: np.ndarray, yc: np.ndarray, w: np.ndarray, lam: float) -> float:
    """Worst subgradient violation of the 1/(2d)-scaled lasso optimality conditions.

    For w_j = 0: |X_j'r / d| <= lam; otherwise X_j'r / d = lam * sign(w_j).
    """
    d = Xc.shape[0]
    r = yc - Xc @ w
    corr = Xc.T @ r / d
    viol_zero = np.maximum(np.abs(corr) - lam, 0.0)
    viol_active = np.abs(corr - lam * np.sign(w))
    return float(np.max(np.where(w == 0.0, viol_zero, viol_active), initial=0.0))


def fit_lasso(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    *,
    tol: float = 1e-9,
    max_iter: int = 10_000,
) -> tuple[float, np.ndarray, int, bool]:
    """Cyclic coordinate descent for the 1/(2d)-scaled lasso.

    Runs on the centered system until the KKT residual drops below tol;
    returns (intercept, weights, sweeps, converged) with the best iterate on
    non-convergence.
    """
    Xc, yc, xm, ym = center(X, y)
    d, n = Xc.shape
    col_sq = np.einsum("ij,ij->j", Xc, Xc)
    w = np.zeros(n)
    r = yc.copy()
    thresh = lam * d
    sweeps = 0
    converged = False
    for sweeps in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(n):
            if col_sq[j] == 0.0:
                continue
            wj = w[j]
            rho = float(Xc[:, j] @ r) + col_sq[j] * wj
            new = math_soft(rho, thresh) / col_sq[j]
            if new != wj:
                r += Xc[:, j] * (wj - new)
                w[j] = new
                max_delta = max(max_delta, abs(new - wj))
        if max_delta <= tol and lasso_kkt_residual(Xc, yc, w, lam) <= max(tol, 1e-10):
            converged = True
            break
    return ym - float(xm @ w), w, sweeps, converged


def math_soft(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def objective_grad(
    method: str,
    X: np.ndarray,
    y: np.ndarray,
    alpha: float,
    w: np.ndarray,
    lam: float = 0.0,
) -> tuple[float, float, np.ndarray]:
    """Objective value and analytic gradient (d/dalpha, d/dw) at (alpha, w).

    The lasso gradient is only valid at differentiable points (no zero w_j).
    Used by the finite-difference consistency checks.
    """
    d = X.shape[0]
    r = y - alpha - X @ w
    if method == "ols":
        val = float(r @ r)
        return val, -2.0 * float(r.sum()), -2.0 * X.T @ r
    if method == "ridge":
        val = float(r @ r) + lam * float(w @ w)
        return val, -2.0 * float(r.sum()), -2.0 * X.T @ r + 2.0 * lam * w
    if method == "lasso":
        val = float(r @ r) / (2 * d) + lam * float(np.abs(w).sum())
        return val, -float(r.sum()) / d, -X.T @ r / d + lam * np.sign(w)
    raise ValueError(f"no objective for method {method!r}")
