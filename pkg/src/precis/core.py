"""Dense linear-algebra plumbing shared by the estimators.

Data matrices are plain ``(n, p)`` float arrays whose rows are samples. The
mean used to center them is either the sample mean (``mean=None``) or a known
vector supplied by the caller.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np


class NotPositiveDefinite(ValueError):
    """Raised when a matrix expected to be SPD has a non-positive pivot."""


class DimensionError(ValueError):
    """Raised when array shapes are inconsistent."""


def as_data_matrix(X) -> np.ndarray:
    """Validate and return ``X`` as a float ``(n, p)`` array with n >= 2."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"data matrix must be 2-D, got shape {X.shape}")
    n, p = X.shape
    if n < 2 or p < 1:
        raise DimensionError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data matrix contains non-finite entries")
    return X


def center(X, mean=None) -> np.ndarray:
    """Subtract ``mean`` (or the column means when ``mean is None``) from X."""
    X = as_data_matrix(X)
    if mean is None:
        mu = X.mean(axis=0)
    else:
        mu = np.asarray(mean, dtype=float)
        if mu.ndim == 0:
            mu = np.full(X.shape[1], float(mu))
        if mu.shape != (X.shape[1],):
            raise DimensionError(
                f"mean has length {mu.size}, data has p={X.shape[1]} columns"
            )
        if not np.all(np.isfinite(mu)):
            raise ValueError("known mean contains non-finite entries")
    return X - mu


def standardize(X) -> np.ndarray:
    """Center by the sample mean and scale columns to unit sample std (1/n)."""
    Xc = center(X)
    sd = np.sqrt(np.mean(Xc**2, axis=0))
    if np.any(sd == 0):
        raise ValueError("cannot standardize a constant column")
    return Xc / sd


def sample_covariance(X, mean=None) -> np.ndarray:
    """Sample covariance with divisor n.

    Parameters
    ----------
    X : array_like, shape (n, p)
    mean : None or array_like, shape (p,)
        ``None`` centers by the sample mean; otherwise the given vector is
        treated as the known population mean (pass ``0`` for a zero mean).
    """
    Xc = center(X, mean)
    S = Xc.T @ Xc / Xc.shape[0]
    return 0.5 * (S + S.T)


def cholesky(M) -> np.ndarray:
    """Lower-triangular L with L @ L.T == M.

    Raises NotPositiveDefinite when M is not symmetric positive definite.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    scale = max(np.max(np.abs(M)), 1.0)
    if np.max(np.abs(M - M.T)) > 1e-12 * scale:
        raise NotPositiveDefinite("matrix is not symmetric")
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    # LAPACK accepts pivots that are positive but at rounding level
    if np.min(np.diag(L)) ** 2 <= 1e-10 * scale:
        raise NotPositiveDefinite("matrix is numerically singular")
    return L


def spd_inverse(M) -> np.ndarray:
    """Inverse of an SPD matrix through its Cholesky factor."""
    from scipy.linalg import cho_solve

    L = cholesky(M)
    inv = cho_solve((L, True), np.eye(L.shape[0]))
    return 0.5 * (inv + inv.T)


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator; accepts an int or a SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def sample_gaussian(sigma, n: int, seed) -> np.ndarray:
    """Draw ``n`` iid rows from N_p(0, sigma)."""
    L = cholesky(sigma)
    if n < 1:
        raise ValueError("n must be positive")
    rng = make_rng(seed)
    Z = rng.standard_normal((n, L.shape[0]))
    return Z @ L.T


def write_matrix_csv(path, M) -> None:
    """Headerless CSV with round-trip float formatting and LF endings."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    buf = io.StringIO()
    np.savetxt(buf, M, delimiter=",", fmt="%.17g", newline="\n")
    Path(path).write_text(buf.getvalue())


def read_matrix_csv(path) -> np.ndarray:
    M = np.loadtxt(path, delimiter=",", ndmin=2)
    return np.asarray(M, dtype=float)
