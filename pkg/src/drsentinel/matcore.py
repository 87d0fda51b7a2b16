"""Dense symmetric linear-algebra primitives shared by the whole package.

All matrices are plain float64 numpy arrays.  Inputs are validated eagerly
(shape, finiteness, symmetry) so the numerical modules can assume
well-formed data and fail fast instead of propagating NaNs.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve

# Asymmetry above this (relative to the largest entry) is treated as a bug
# in the caller, not round-off.
SYMMETRY_RTOL = 1e-12
# Eigenvalues in [-PSD_CLAMP_RTOL * ||m||_2, 0] are round-off and clamped;
# anything below is genuine indefiniteness.
PSD_CLAMP_RTOL = 1e-10
# Cholesky pivots at or below this (relative to ||m||_2) mean numerically
# singular.
CHOLESKY_PIVOT_RTOL = 1e-14


class InvalidInput(ValueError):
    """An argument fails a structural precondition (shape, finiteness, symmetry)."""


class NotPsd(InvalidInput):
    """A matrix required to be positive semidefinite has a genuinely negative eigenvalue."""


class NotPd(InvalidInput):
    """A matrix required to be positive definite is singular or indefinite."""


def as_matrix(m, rows: int | None = None, cols: int | None = None, *, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite float64 2-D array, optionally checking its shape."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got ndim={a.ndim}")
    if rows is not None and a.shape[0] != rows:
        raise InvalidInput(f"{name} must have {rows} rows, got {a.shape[0]}")
    if cols is not None and a.shape[1] != cols:
        raise InvalidInput(f"{name} must have {cols} columns, got {a.shape[1]}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} has non-finite entries")
    return a


def as_sym_matrix(m, dim: int | None = None, *, name: str = "matrix") -> np.ndarray:
    """Validate a symmetric matrix and return its exactly symmetrized copy."""
    a = as_matrix(m, rows=dim, cols=dim, name=name)
    if a.shape[0] != a.shape[1]:
        raise InvalidInput(f"{name} must be square, got shape {a.shape}")
    scale = 1.0 + (np.abs(a).max() if a.size else 0.0)
    if a.size and np.abs(a - a.T).max() > SYMMETRY_RTOL * scale:
        raise InvalidInput(f"{name} is not symmetric")
    return 0.5 * (a + a.T)


def sym_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix.

    Returns (eigenvalues in descending order, matrix of orthonormal
    eigenvector columns in the matching order).
    """
    a = as_sym_matrix(m)
    w, v = np.linalg.eigh(a)
    return np.ascontiguousarray(w[::-1]), np.ascontiguousarray(v[:, ::-1])


def spectral_norm_sym(m) -> float:
    """Largest absolute eigenvalue of a symmetric matrix."""
    a = as_sym_matrix(m)
    if a.size == 0:
        return 0.0
    w = np.linalg.eigvalsh(a)
    return float(np.abs(w).max())


def sqrt_psd(m) -> np.ndarray:
    """Symmetric square root of a PSD matrix.

    Eigenvalues inside the round-off band are clamped to zero; a genuinely
    negative eigenvalue raises NotPsd.
    """
    a = as_sym_matrix(m)
    w, v = np.linalg.eigh(a)
    norm2 = float(np.abs(w).max()) if w.size else 0.0
    if w.size and w.min() < -PSD_CLAMP_RTOL * norm2:
        raise NotPsd(f"matrix has eigenvalue {w.min():.3e} below the PSD round-off band")
    s = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    return 0.5 * (s + s.T)


def inverse_spd(m) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via Cholesky."""
    a = as_sym_matrix(m)
    norm2 = spectral_norm_sym(a)
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPd("matrix is not positive definite (Cholesky failed)") from exc
    if float(np.diag(chol).min()) ** 2 <= CHOLESKY_PIVOT_RTOL * norm2:
        raise NotPd("matrix is numerically singular (Cholesky pivot below threshold)")
    inv = cho_solve((chol, True), np.eye(a.shape[0]))
    return 0.5 * (inv + inv.T)
