"""Epsilon-insensitive support vector regression via two-coefficient dual ascent.

The box-constrained dual is solved in the stacked form z = (alpha, alpha*)
with labels s = (+1, ..., -1, ...): minimize 0.5 z'Qz + p'z subject to
s'z = 0, 0 <= z <= C, where Q_{tu} = s_t s_u K(x_t, x_u) and
p = (eps - y, eps + y). Each step picks the maximal-violating pair across
the up/down index sets and solves the two-variable subproblem analytically,
clipped to the box. The RBF kernel K(x, x') = exp(-g ||x - x'||^2) uses
g = 1 / (n_features * var(X)) unless overridden.

The solver stops when the violation gap falls below `tol` or after
`max_iter` steps; non-convergence is reported, not raised, and the best
iterate is kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass
class SvrSolution:
    beta: np.ndarray  # alpha - alpha*, one per training row
    bias: float
    alpha_up: np.ndarray
    alpha_down: np.ndarray
    n_iter: int
    converged: bool


def solve_epsilon_svr(
    K: np.ndarray,
    y: np.ndarray,
    C: float,
    eps: float,
    *,
    tol: float = 1e-4,
    max_iter: int = 10_000,
) -> SvrSolution:
    d = y.size
    s = np.concatenate([np.ones(d), -np.ones(d)])
    p = np.concatenate([eps - y, eps + y])
    z = np.zeros(2 * d)
    sg = -s * p  # -s * gradient, maintained incrementally
    up = s > 0  # movable upward: alpha side below C, alpha* side above 0
    low = s < 0

    n_iter = 0
    converged = False
    neg_inf = -np.inf
    for n_iter in range(1, max_iter + 1):
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, sg, neg_inf)))
        j = int(np.argmin(np.where(low, sg, -neg_inf)))
        gap = sg[i] - sg[j]
        if gap <= tol:
            converged = True
            break
        ki, kj = i % d, j % d
        quad = K[ki, ki] + K[kj, kj] - 2.0 * K[ki, kj]
        if quad <= 1e-12:
            quad = 1e-12
        step = gap / quad
        # box limits along the feasible direction z_i += s_i*step, z_j -= s_j*step
        lim_i = C - z[i] if s[i] > 0 else z[i]
        lim_j = z[j] if s[j] > 0 else C - z[j]
        step = min(step, lim_i, lim_j)
        if step <= 0.0:
            break  # pinned pair; gap may still exceed tol, report honestly
        # snap the binding variable exactly onto its bound to avoid float spin
        if step == lim_i:
            z[i] = C if s[i] > 0 else 0.0
        else:
            z[i] += s[i] * step
        if step == lim_j:
            z[j] = 0.0 if s[j] > 0 else C
        else:
            z[j] += -s[j] * step
        # delta(-s*G) = -(s_i*dz_i*K_i + s_j*dz_j*K_j) = step*(K_j - K_i), both blocks
        col = step * (K[:, kj] - K[:, ki])
        sg[:d] += col
        sg[d:] += col
        for t in (i, j):
            up[t] = z[t] < C if s[t] > 0 else z[t] > 0
            low[t] = z[t] > 0 if s[t] > 0 else z[t] < C

    alpha_up = z[:d]
    alpha_down = z[d:]
    beta = alpha_up - alpha_down

    free = (z > 0) & (z < C)
    if free.any():
        bias = float(np.mean(sg[free]))
    else:
        hi = sg[up].max() if up.any() else 0.0
        lo = sg[low].min() if low.any() else 0.0
        bias = float((hi + lo) / 2.0)
    return SvrSolution(
        beta=beta,
        bias=bias,
        alpha_up=alpha_up,
        alpha_down=alpha_down,
        n_iter=n_iter,
        converged=converged,
    )
