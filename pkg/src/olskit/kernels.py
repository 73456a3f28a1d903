"""Covariance kernels over finite index sets, co-arrays, and entropy estimates.

Index points live in R^d.  A kernel assigns every pair of points a q x q
covariance block; for q > 1 the block is the separable (intrinsic
coregionalization) form ``B * c_scalar(i, i')`` with a PSD mixing matrix B.
Arbitrary block kernels can be supplied through ``family="custom"`` with an
evaluation hook that honors the same symmetry and PSD contracts.

Co-arrays are finitely supported weighted point masses; applying one to a
dataset is a plain weighted sum, and covariances between co-arrays contract
the kernel blocks on both sides.  The covariance (pseudo-)metric derived
from the kernel drives greedy covering numbers and the integrated entropy
estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .linalg import DEFAULT_TOL, NotPsdError, Tolerance, as_matrix, symmetrize

_STATIONARY = ("se", "matern12", "matern32", "matern52", "wendland")
_DOT_PRODUCT = ("linear", "polynomial")

_trapezoid = getattr(np, "trapezoid", None) or np.trapz  # numpy < 2.0 fallback

_FAMILY_ALIASES = {
    "se": "se",
    "squared-exponential": "se",
    "squared_exponential": "se",
    "rbf": "se",
    "matern12": "matern12",
    "matern-1/2": "matern12",
    "matern32": "matern32",
    "matern-3/2": "matern32",
    "matern52": "matern52",
    "matern-5/2": "matern52",
    "linear": "linear",
    "polynomial": "polynomial",
    "wendland": "wendland",
    "wendland-compact": "wendland",
    "custom": "custom",
}


def as_points(points, name: str = "points") -> np.ndarray:
    """Return index points as an (n, d) float array."""
    out = np.asarray(points, dtype=float)
    if out.ndim == 1:
        out = out[:, None]
    if out.ndim != 2:
        raise ValueError(f"{name} must be an (n, d) array, got ndim={out.ndim}")
    if out.size and not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return out


@dataclass(frozen=True)
class KernelSpec:
    """Parametrized covariance kernel.

    Parameters
    ----------
    family : str
        One of se, matern12, matern32, matern52, linear, polynomial,
        wendland, custom (plus the spelled-out aliases).
    lengthscale, variance : float
        Positive scale hyperparameters.  ``variance`` multiplies the whole
        block; ``lengthscale`` rescales distances (ignored by wendland,
        which uses ``support_radius``).
    output_dim : int
        Value dimension q.
    coregionalization : array or None
        q x q PSD mixing matrix B; identity when omitted.
    degree : int
        Polynomial degree (polynomial family only).
    support_radius : float or None
        Compact support radius (wendland family only).
    eval_hook : callable or None
        ``hook(i, j) -> (q, q) block`` for the custom family.
    """

    family: str
    lengthscale: float = 1.0
    variance: float = 1.0
    output_dim: int = 1
    coregionalization: np.ndarray | None = None
    degree: int = 2
    support_radius: float | None = None
    eval_hook: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = field(
        default=None, compare=False
    )

    def __post_init__(self) -> None:
        key = _FAMILY_ALIASES.get(str(self.family).lower())
        if key is None:
            raise ValueError(f"unknown kernel family {self.family!r}")
        object.__setattr__(self, "family", key)
        if not self.lengthscale > 0.0:
            raise ValueError("lengthscale must be > 0")
        if not self.variance > 0.0:
            raise ValueError("variance must be > 0")
        if int(self.output_dim) < 1:
            raise ValueError("output_dim must be >= 1")
        object.__setattr__(self, "output_dim", int(self.output_dim))
        if key == "polynomial" and int(self.degree) < 1:
            raise ValueError("polynomial degree must be >= 1")
        if key == "wendland":
            if self.support_radius is None or not self.support_radius > 0.0:
                raise ValueError("wendland kernel requires support_radius > 0")
        if key == "custom" and self.eval_hook is None:
            raise ValueError("custom kernel requires an eval_hook")
        if self.coregionalization is not None:
            b = symmetrize(as_matrix(self.coregionalization, "coregionalization"))
            if b.shape != (self.output_dim, self.output_dim):
                raise ValueError(
                    "coregionalization must be output_dim x output_dim"
                )
            w = np.linalg.eigvalsh(b)
            if w.size and w[0] < -1e-10 * max(1.0, abs(w[-1])):
                raise NotPsdError("coregionalization matrix is not PSD")
            object.__setattr__(self, "coregionalization", b)

    @property
    def q(self) -> int:
        return self.output_dim

    def mixing(self) -> np.ndarray:
        if self.coregionalization is None:
            return np.eye(self.output_dim)
        return self.coregionalization


def scalar_kernel(spec: KernelSpec, x, y) -> np.ndarray:
    """Scalar kernel values between the rows of x and of y, as an (n, m) array."""
    x = as_points(x, "x")
    y = as_points(y, "y")
    if x.shape[1] != y.shape[1]:
        raise ValueError(
            f"index dimension mismatch: {x.shape[1]} vs {y.shape[1]}"
        )
    s2, ell = spec.variance, spec.lengthscale
    if spec.family in _DOT_PRODUCT:
        dots = (x @ y.T) / (ell * ell)
        if spec.family == "linear":
            return s2 * dots
        return s2 * (1.0 + dots) ** spec.degree
    d2 = np.maximum(
        np.sum(x * x, axis=1)[:, None]
        + np.sum(y * y, axis=1)[None, :]
        - 2.0 * (x @ y.T),
        0.0,
    )
    r = np.sqrt(d2)
    if spec.family == "se":
        return s2 * np.exp(-0.5 * d2 / (ell * ell))
    if spec.family == "matern12":
        return s2 * np.exp(-r / ell)
    if spec.family == "matern32":
        z = np.sqrt(3.0) * r / ell
        return s2 * (1.0 + z) * np.exp(-z)
    if spec.family == "matern52":
        z = np.sqrt(5.0) * r / ell
        return s2 * (1.0 + z + z * z / 3.0) * np.exp(-z)
    if spec.family == "wendland":
        t = r / spec.support_radius
        return s2 * np.where(t < 1.0, (1.0 - t) ** 4 * (4.0 * t + 1.0), 0.0)
    raise ValueError(f"scalar form undefined for family {spec.family!r}")


def kernel_eval(spec: KernelSpec, i, j) -> np.ndarray:
    """Covariance block c(i, j) of shape (q, q)."""
    i = np.atleast_1d(np.asarray(i, dtype=float))
    j = np.atleast_1d(np.asarray(j, dtype=float))
    if i.shape != j.shape:
        raise ValueError(f"index dimension mismatch: {i.shape} vs {j.shape}")
    if spec.family == "custom":
        block = as_matrix(spec.eval_hook(i, j), "custom kernel block")
        if block.shape != (spec.q, spec.q):
            raise ValueError("custom kernel block has wrong shape")
        return block
    s = float(scalar_kernel(spec, i[None, :], j[None, :])[0, 0])
    return spec.mixing() * s


def gram(spec: KernelSpec, points, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Assemble the (n q) x (n q) Gram matrix over a point list.

    Blocks are laid out point-major: rows [a*q, (a+1)*q) belong to
    points[a].  The result is symmetrized and validated to have minimum
    eigenvalue above ``-abs_psd`` (relative to the largest entry).
    """
    pts = as_points(points)
    n = pts.shape[0]
    if n == 0:
        raise ValueError("gram requires at least one point")
    if spec.family == "custom":
        q = spec.q
        out = np.empty((n * q, n * q))
        for a in range(n):
            for b in range(a, n):
                blk = kernel_eval(spec, pts[a], pts[b])
                out[a * q:(a + 1) * q, b * q:(b + 1) * q] = blk
                out[b * q:(b + 1) * q, a * q:(a + 1) * q] = blk.T
    else:
        s = scalar_kernel(spec, pts, pts)
        out = np.kron(s, spec.mixing()) if spec.q > 1 else s
    out = symmetrize(out)
    w = np.linalg.eigvalsh(out)
    scale = max(1.0, float(np.abs(out).max()))
    if w[0] < -tol.abs_psd * scale:
        raise NotPsdError(f"gram matrix has eigenvalue {w[0]:.3e}")
    return out


@dataclass(frozen=True)
class CoArray:
    """Finitely supported functional: a list of (weight, point) masses.

    Weights are length-q co-values; a Dirac mass at i with unit weight acts
    on a dataset by evaluation at i.
    """

    weights: np.ndarray  # (k, q)
    points: np.ndarray   # (k, d)

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim == 1:
            w = w[:, None]
        p = as_points(self.points, "coarray points")
        if w.shape[0] != p.shape[0]:
            raise ValueError("weights and points must have equal length")
        if w.size and not np.all(np.isfinite(w)):
            raise ValueError("coarray weights contain non-finite entries")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", p)

    @staticmethod
    def dirac(point, covalue=1.0) -> "CoArray":
        cov = np.atleast_1d(np.asarray(covalue, dtype=float))
        return CoArray(cov[None, :], np.atleast_1d(np.asarray(point, float))[None, :])


@dataclass(frozen=True)
class IndexedDataset:
    """Index points with optional observed values (one length-q row each)."""

    points: np.ndarray
    values: np.ndarray | None = None

    def __post_init__(self) -> None:
        p = as_points(self.points, "dataset points")
        object.__setattr__(self, "points", p)
        if self.values is not None:
            v = np.asarray(self.values, dtype=float)
            if v.ndim == 1:
                v = v[:, None]
            if v.shape[0] != p.shape[0]:
                raise ValueError("points and values must have equal length")
            if v.size and not np.all(np.isfinite(v)):
                raise ValueError("dataset values contain non-finite entries")
            object.__setattr__(self, "values", v)


def _locate(point: np.ndarray, table: np.ndarray) -> int:
    hits = np.flatnonzero(np.all(table == point[None, :], axis=1))
    if hits.size == 0:
        raise ValueError(f"point {point.tolist()} not present in dataset")
    return int(hits[0])


def coarray_apply(phi: CoArray, dataset: IndexedDataset) -> float:
    """Apply a co-array to observed values: sum_k w_k . a(i_k).

    Points must match dataset coordinates exactly; no snapping.
    """
    if dataset.values is None:
        raise ValueError("dataset has no values to apply the co-array to")
    total = 0.0
    for w, p in zip(phi.weights, phi.points):
        idx = _locate(p, dataset.points)
        total += float(w @ dataset.values[idx])
    return total


def coarray_cov(spec: KernelSpec, phi: CoArray, psi: CoArray) -> float:
    """Covariance of two co-arrays under the kernel: phi^T C psi."""
    if phi.weights.shape[1] != spec.q or psi.weights.shape[1] != spec.q:
        raise ValueError("co-value dimension does not match kernel output_dim")
    if phi.points.shape[1] != psi.points.shape[1]:
        raise ValueError("co-array index dimensions differ")
    if spec.family == "custom":
        total = 0.0
        for w, p in zip(phi.weights, phi.points):
            for w2, p2 in zip(psi.weights, psi.points):
                total += float(w @ kernel_eval(spec, p, p2) @ w2)
        return total
    s = scalar_kernel(spec, phi.points, psi.points)
    b = spec.mixing()
    # sum_kl s_kl * (w_k^T B w2_l)
    mix = phi.weights @ b @ psi.weights.T
    return float(np.sum(s * mix))


def covariance_metric(spec: KernelSpec, e, i, e2, j) -> float:
    """Squared covariance distance t_c between co-values at index points.

    t_c(e,i; e',i') = c(e,i; e,i) - 2 c(e,i; e',i') + c(e',i'; e',i').
    This is the squared quantity (a pseudo-distance: it vanishes on
    maximally correlated pairs, not only identical ones); its square root
    is the metric used for covering, and both conventions are exposed.
    """
    a = CoArray.dirac(i, e)
    b = CoArray.dirac(j, e2)
    t = coarray_cov(spec, a, a) - 2.0 * coarray_cov(spec, a, b) + coarray_cov(spec, b, b)
    return max(float(t), 0.0)


def metric_matrix(spec: KernelSpec, points, covalue=None) -> np.ndarray:
    """Pairwise sqrt(t_c) distances between index points.

    For q > 1 a fixed co-value must be supplied to pull the metric back to
    index space; for q = 1 the unit co-value is implied.
    """
    pts = as_points(points)
    if spec.q > 1 and covalue is None:
        raise ValueError("metric_matrix needs an explicit covalue when q > 1")
    e = np.atleast_1d(np.asarray(1.0 if covalue is None else covalue, float))
    if spec.family == "custom":
        n = pts.shape[0]
        s = np.empty((n, n))
        for a in range(n):
            for b2 in range(a, n):
                s[a, b2] = s[b2, a] = float(
                    e @ kernel_eval(spec, pts[a], pts[b2]) @ e
                )
    else:
        mix = float(e @ spec.mixing() @ e)
        s = scalar_kernel(spec, pts, pts) * mix
    diag = np.diag(s)
    t = np.maximum(diag[:, None] + diag[None, :] - 2.0 * s, 0.0)
    return np.sqrt(t)


def _lexicographic_start(points: np.ndarray) -> int:
    order = np.lexsort(points.T[::-1])
    return int(order[0])


def _greedy_cover_count(dist: np.ndarray, start: int, eps: float) -> int:
    """Greedy farthest-point cover count for a precomputed distance matrix."""
    nearest = dist[start].copy()
    count = 1
    while True:
        far = int(np.argmax(nearest))
        if nearest[far] <= eps:
            return count
        nearest = np.minimum(nearest, dist[far])
        count += 1


def covering_number(spec: KernelSpec, points, eps: float, covalue=None) -> int:
    """Greedy farthest-point count of eps-balls covering the points.

    Balls are measured in the metric sqrt(t_c); the greedy count is an
    upper bound on the minimal cover size and is nonincreasing in eps.
    The sweep starts at the lexicographically smallest point, which makes
    the result deterministic.
    """
    if not eps > 0.0:
        raise ValueError("eps must be > 0")
    pts = as_points(points)
    if pts.shape[0] == 0:
        raise ValueError("covering_number requires a nonempty point set")
    dist = metric_matrix(spec, pts, covalue)
    return _greedy_cover_count(dist, _lexicographic_start(pts), eps)


def default_epsilon_grid(
    spec: KernelSpec, points, count: int = 64, covalue=None
) -> np.ndarray:
    """Log-spaced eps grid from 1e-3 * diameter to the diameter."""
    dist = metric_matrix(spec, as_points(points), covalue)
    diam = float(dist.max())
    if diam <= 0.0:
        return np.array([1.0])
    return np.geomspace(1e-3 * diam, diam, count)


def entropy_integral(
    spec: KernelSpec, points, grid: Sequence[float], covalue=None
) -> float:
    """Trapezoidal estimate of the integrated entropy over an eps grid.

    Integrates log N(eps) d eps, truncated at the first grid point where
    the covering count reaches 1 (the entropy is zero from there on).
    """
    eps = np.asarray(list(grid), dtype=float)
    if eps.ndim != 1 or eps.size < 1:
        raise ValueError("grid must be a nonempty 1-d sequence")
    if not np.all(eps > 0.0) or (eps.size > 1 and not np.all(np.diff(eps) > 0.0)):
        raise ValueError("grid must be strictly increasing and positive")
    pts = as_points(points)
    if pts.shape[0] == 0:
        raise ValueError("entropy_integral requires a nonempty point set")
    dist = metric_matrix(spec, pts, covalue)
    start = _lexicographic_start(pts)
    counts = np.array(
        [_greedy_cover_count(dist, start, float(e)) for e in eps], dtype=float
    )
    ones = np.flatnonzero(counts == 1.0)
    stop = int(ones[0]) if ones.size else eps.size - 1
    if stop == 0:
        return 0.0
    return float(_trapezoid(np.log(counts[: stop + 1]), eps[: stop + 1]))
