"""Dense linear-algebra primitives shared by every other module.

All routines are pure functions of their inputs and are deterministic:
pseudoinverses and spectral norms go through SVD, PSD factorization goes
through a symmetric eigendecomposition with a fixed ordering and sign
convention, so repeated calls produce bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NotPsdError(ValueError):
    """Raised when a matrix fails a symmetry or positive-semidefinite check."""


@dataclass(frozen=True)
class Tolerance:
    """Numerical cutoffs used throughout the package.

    rcond    : relative singular-value cutoff for rank decisions.
    abs_psd  : absolute eigenvalue slack for PSD checks and clipping.
    """

    rcond: float = 1e-12
    abs_psd: float = 1e-10

    def __post_init__(self) -> None:
        if not (0.0 < self.rcond < 1.0):
            raise ValueError(f"rcond must lie in (0, 1), got {self.rcond}")
        if not (0.0 < self.abs_psd < 1.0):
            raise ValueError(f"abs_psd must lie in (0, 1), got {self.abs_psd}")

    @property
    def support_rtol(self) -> float:
        """Relative residual threshold for affine-support membership checks."""
        return float(np.sqrt(self.rcond))


DEFAULT_TOL = Tolerance()


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return a finite 2-d float array."""
    out = np.asarray(a, dtype=float)
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={out.ndim}")
    if out.size and not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Validate and return a finite 1-d float array."""
    out = np.asarray(v, dtype=float)
    if out.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got ndim={out.ndim}")
    if out.size and not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _svd_cutoff(s: np.ndarray, shape: tuple[int, int], tol: Tolerance) -> float:
    if s.size == 0:
        return 0.0
    return tol.rcond * float(s[0]) * max(shape)


def pinv(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD.

    Singular values below ``rcond * sigma_max * max(rows, cols)`` are
    treated as exact zeros, so exactly rank-deficient input stays rank
    deficient instead of blowing up.
    """
    a = as_matrix(a)
    if a.size == 0:
        return a.T.copy()
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    cutoff = _svd_cutoff(s, a.shape, tol)
    inv = np.where(s > cutoff, np.divide(1.0, s, where=s > 0), 0.0)
    return (vt.T * inv) @ u.T


def spectral_norm(a) -> float:
    """Largest singular value; 0.0 for empty or zero input."""
    a = as_matrix(a)
    if a.size == 0 or not np.any(a):
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])


def matrix_rank(a, tol: Tolerance = DEFAULT_TOL) -> int:
    a = as_matrix(a)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    return int(np.sum(s > _svd_cutoff(s, a.shape, tol)))


def range_projector(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Symmetric idempotent projector onto the column space of ``a``."""
    a = as_matrix(a)
    m = a.shape[0]
    if a.size == 0 or not np.any(a):
        return np.zeros((m, m))
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    keep = s > _svd_cutoff(s, a.shape, tol)
    ur = u[:, keep]
    return symmetrize(ur @ ur.T)


def _fix_eigvec_signs(vecs: np.ndarray) -> np.ndarray:
    """Make each column's first significantly nonzero entry positive."""
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * max(1.0, np.abs(col).max()))
        if nz.size and col[nz[0]] < 0.0:
            out[:, j] = -col
    return out


def psd_eigh(k, tol: Tolerance = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a PSD matrix, descending, deterministic signs.

    Raises NotPsdError if ``k`` is asymmetric beyond ``abs_psd`` or has an
    eigenvalue below ``-abs_psd``.
    """
    k = as_matrix(k, "psd matrix")
    n, m = k.shape
    if n != m:
        raise NotPsdError(f"expected a square matrix, got {n}x{m}")
    scale = max(1.0, float(np.abs(k).max())) if k.size else 1.0
    if n and float(np.abs(k - k.T).max()) > tol.abs_psd * scale:
        raise NotPsdError("matrix is asymmetric beyond tolerance")
    w, v = np.linalg.eigh(symmetrize(k))
    if n and float(w[0]) < -tol.abs_psd * scale:
        raise NotPsdError(f"matrix has eigenvalue {w[0]:.3e} below -abs_psd")
    order = np.argsort(w)[::-1]
    w = np.clip(w[order], 0.0, None)
    v = _fix_eigvec_signs(v[:, order])
    return w, v


def psd_factor(k, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Square factor F with F F^T ~= K for PSD input.

    Eigenvalues within ``abs_psd`` of zero (including small negatives) are
    clipped to exactly zero, which keeps the factor supported on the
    numerically trustworthy part of the range; the reconstruction error is
    bounded by ``n * abs_psd`` in Frobenius norm.
    """
    w, v = psd_eigh(k, tol)
    w = np.where(w < tol.abs_psd, 0.0, w)
    return v * np.sqrt(w)
