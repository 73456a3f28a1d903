"""Independent oracles used across the test suite.

Everything here is deliberately written against definitions, not against
the library's computation paths: Penrose conditions checked directly,
spectral norms by power iteration, constrained minimizers by KKT solves or
scipy optimizers, covers by exhaustive enumeration, and moments by seeded
Monte Carlo.  Tests freeze expected values computed by these oracles.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


def random_psd(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    """Wishart-style PSD matrix, optionally of exact lower rank."""
    r = n if rank is None else rank
    a = rng.standard_normal((n, r))
    return a @ a.T


def random_rank(rng: np.random.Generator, rows: int, cols: int, rank: int) -> np.ndarray:
    return rng.standard_normal((rows, rank)) @ rng.standard_normal((rank, cols))


def penrose_defects(a: np.ndarray, aplus: np.ndarray) -> float:
    """Worst violation of the four Penrose conditions."""
    return max(
        float(np.abs(a @ aplus @ a - a).max()),
        float(np.abs(aplus @ a @ aplus - aplus).max()),
        float(np.abs((a @ aplus) - (a @ aplus).T).max()),
        float(np.abs((aplus @ a) - (aplus @ a).T).max()),
    )


def power_iteration_norm(a: np.ndarray, iters: int = 2000, seed: int = 1) -> float:
    """Spectral norm by power iteration on a^T a."""
    rng = np.random.default_rng(seed)
    if a.size == 0:
        return 0.0
    ata = a.T @ a
    v = rng.standard_normal(ata.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = ata @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
    return float(np.sqrt(v @ ata @ v))


def min_norm_interpolant(k: np.ndarray, g: np.ndarray, m: np.ndarray,
                         y: np.ndarray) -> np.ndarray:
    """Minimizer of (v-m)^T K^{-1} (v-m) subject to G v = y, full-rank K.

    Stationarity gives v = m + K G^T lam with G K G^T lam = y - G m; the
    linear system is solved directly (LU), independent of any pseudoinverse.
    """
    lam = np.linalg.solve(g @ k @ g.T, y - g @ m)
    return m + k @ g.T @ lam


def exhaustive_min_cover(dist: np.ndarray, eps: float) -> int:
    """Smallest number of eps-balls centered at the points that cover them."""
    n = dist.shape[0]
    for size in range(1, n + 1):
        for centers in combinations(range(n), size):
            if float(dist[list(centers)].min(axis=0).max()) <= eps:
                return size
    return n


def mc_mean_cov(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = samples.mean(axis=0)
    centered = samples - mean
    cov = centered.T @ centered / (samples.shape[0] - 1)
    return mean, cov


def mean_se(samples: np.ndarray) -> np.ndarray:
    """Per-coordinate standard error of the sample mean."""
    return samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])


def svm_qp_oracle(k11: np.ndarray, k10: np.ndarray, k00: np.ndarray,
                  seed: int = 0, restarts: int = 3) -> float:
    """Reference optimum of the two-simplex nearest-point QP via scipy SLSQP."""
    from scipy.optimize import minimize

    n1, n0 = k11.shape[0], k00.shape[0]

    def objective(x):
        a, b = x[:n1], x[n1:]
        return a @ k11 @ a - 2.0 * a @ k10 @ b + b @ k00 @ b

    def gradient(x):
        a, b = x[:n1], x[n1:]
        return np.concatenate([
            2.0 * (k11 @ a - k10 @ b),
            2.0 * (k00 @ b - k10.T @ a),
        ])

    constraints = [
        {"type": "eq", "fun": lambda x: x[:n1].sum() - 1.0},
        {"type": "eq", "fun": lambda x: x[n1:].sum() - 1.0},
    ]
    bounds = [(0.0, 1.0)] * (n1 + n0)
    rng = np.random.default_rng(seed)
    best = np.inf
    starts = [np.concatenate([np.full(n1, 1.0 / n1), np.full(n0, 1.0 / n0)])]
    for _ in range(restarts):
        a = rng.exponential(size=n1)
        b = rng.exponential(size=n0)
        starts.append(np.concatenate([a / a.sum(), b / b.sum()]))
    for x0 in starts:
        res = minimize(objective, x0, jac=gradient, bounds=bounds,
                       constraints=constraints, method="SLSQP",
                       options={"maxiter": 2000, "ftol": 1e-14})
        if res.fun < best:
            best = float(res.fun)
    return best


def blobs_2d(seed: int, n_per_class: int = 12, gap: float = 3.0):
    """Seeded separable point clouds in the plane."""
    rng = np.random.default_rng(seed)
    d0 = rng.standard_normal((n_per_class, 2)) * 0.6 + np.array([0.0, 0.0])
    d1 = rng.standard_normal((n_per_class, 2)) * 0.6 + np.array([gap, gap])
    return d0, d1
