"""Column-wise square-root Lasso and least-squares refit.

For every feature ``j`` we solve::

    min_{beta, c}  ||X beta - c 1||_2 + lam * ||beta||_1    subject to beta_j = 1

so that ``X beta`` is the regression residual of feature ``j`` and the free
coordinates of ``beta`` carry the *negated* regression coefficients. The fixed
entry ``beta_j = 1`` only adds the constant ``lam`` to the objective, which is
dropped here.

The solver alternates a noise-level update ``sigma = ||r||_2`` with a Lasso
solve at penalty ``lam * sigma`` (scaled-Lasso fixed point). Both steps decrease
the jointly convex function ``||r||^2 / (2 sigma) + sigma / 2 + lam ||b||_1``,
whose minimum over sigma is the square-root Lasso objective.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import as_data_matrix


class DegenerateColumn(ValueError):
    """The response column has zero variance."""


class ConvergenceWarning(RuntimeWarning):
    pass


def universal_lambda(p: int) -> float:
    return math.sqrt(2.0 * math.log(p))


@dataclass(frozen=True)
class SqrtLassoConfig:
    lam: float | None = None  # None -> sqrt(2 log p)
    tol: float = 1e-8
    max_iter: int = 10000
    intercept: bool = True

    def __post_init__(self):
        if self.lam is not None and self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def penalty(self, p: int) -> float:
        return universal_lambda(p) if self.lam is None else float(self.lam)


@dataclass
class SqrtLassoFit:
    beta: np.ndarray
    intercept: float
    sigma: float
    objective: float
    n_iter: int
    converged: bool
    zero_residual: bool = False
    objective_path: list = field(default_factory=list, repr=False)


def _lasso_cd(G, c, b, mu, tol, max_sweeps):
    """Coordinate descent for ``min 0.5 b'Gb + c'b + mu ||b||_1`` (covariance form).

    ``b`` is updated in place. Returns the number of sweeps performed.
    """
    diag = np.diag(G)
    Gb = G @ b
    m = b.size
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for k in range(m):
            gkk = diag[k]
            if gkk <= 0.0:
                continue
            bk = b[k]
            z = c[k] + Gb[k] - gkk * bk
            if z > mu:
                new = -(z - mu) / gkk
            elif z < -mu:
                new = -(z + mu) / gkk
            else:
                new = 0.0
            if new != bk:
                delta = new - bk
                Gb += delta * G[:, k]
                b[k] = new
                step = abs(delta) * math.sqrt(gkk)
                if step > max_delta:
                    max_delta = step
        if max_delta <= tol:
            return sweep
    return max_sweeps


def _residual_norm(yy, c, G, b):
    return math.sqrt(max(yy + 2.0 * c @ b + b @ G @ b, 0.0))


def _solve_gram(G, c, yy, lam, tol, max_iter, b0=None):
    """Square-root Lasso in Gram form. Returns (b, sigma, n_iter, converged, zero_res, path)."""
    m = c.size
    b = np.zeros(m) if b0 is None else np.array(b0, dtype=float)
    scale = math.sqrt(yy)
    sigma = _residual_norm(yy, c, G, b)
    path = [sigma + lam * np.abs(b).sum()]
    if m == 0:
        return b, sigma, 0, True, sigma <= 1e-12 * scale, path
    # inner tolerance tracks the KKT accuracy we need after dividing by sigma
    sweeps_left = max_iter * 50
    for it in range(1, max_iter + 1):
        if sigma <= 1e-12 * scale:
            return b, 0.0, it - 1, True, True, path
        used = _lasso_cd(G, c, b, lam * sigma, tol * sigma, max(sweeps_left, 1))
        sweeps_left -= used
        new_sigma = _residual_norm(yy, c, G, b)
        obj = new_sigma + lam * np.abs(b).sum()
        path.append(obj)
        if abs(new_sigma - sigma) <= tol * max(sigma, 1e-300):
            return b, new_sigma, it, True, new_sigma <= 1e-12 * scale, path
        sigma = new_sigma
    return b, sigma, max_iter, False, False, path


def _centered_gram(X, intercept):
    Xc = X - X.mean(axis=0) if intercept else X
    return Xc.T @ Xc


def _fit_from_gram(C, X, j, lam, cfg, b0=None):
    p = C.shape[0]
    if C[j, j] <= 1e-14 * max(1.0, np.max(np.diag(C))):
        raise DegenerateColumn(f"column {j} has zero variance")
    others = np.delete(np.arange(p), j)
    G = C[np.ix_(others, others)]
    c = C[others, j]
    b, sigma, n_iter, converged, zero_res, path = _solve_gram(
        G, c, C[j, j], lam, cfg.tol, cfg.max_iter, b0
    )
    if not converged:
        warnings.warn(
            f"square-root Lasso for column {j} did not converge in {cfg.max_iter} iterations",
            ConvergenceWarning,
            stacklevel=3,
        )
    beta = np.zeros(p)
    beta[j] = 1.0
    beta[others] = b
    intercept = float(X.mean(axis=0) @ beta) if cfg.intercept else 0.0
    return SqrtLassoFit(
        beta=beta,
        intercept=intercept,
        sigma=sigma,
        objective=path[-1],
        n_iter=n_iter,
        converged=converged,
        zero_residual=zero_res,
        objective_path=path,
    )


def sqrt_lasso_column(X, j: int, config: SqrtLassoConfig | None = None) -> SqrtLassoFit:
    """Square-root Lasso of column ``j`` on the remaining columns.

    ``fit.beta[j] == 1`` and ``X @ fit.beta - fit.intercept`` is the residual.
    ``fit.objective`` excludes the constant ``lam`` coming from ``beta_j``.
    """
    X = as_data_matrix(X)
    cfg = config or SqrtLassoConfig()
    p = X.shape[1]
    if p < 2:
        raise ValueError("need at least two columns")
    if not 0 <= j < p:
        raise IndexError(f"column index {j} out of range for p={p}")
    C = _centered_gram(X, cfg.intercept)
    return _fit_from_gram(C, X, j, cfg.penalty(p), cfg)


def sqrt_lasso_all(X, config: SqrtLassoConfig | None = None, return_fits: bool = False):
    """Regression matrix B with unit diagonal, one square-root Lasso per column."""
    X = as_data_matrix(X)
    cfg = config or SqrtLassoConfig()
    p = X.shape[1]
    if p < 2:
        raise ValueError("need at least two columns")
    C = _centered_gram(X, cfg.intercept)
    lam = cfg.penalty(p)
    B = np.eye(p)
    fits, failed = [], []
    for j in range(p):
        try:
            fit = _fit_from_gram(C, X, j, lam, cfg)
        except DegenerateColumn:
            failed.append(j)
            continue
        B[:, j] = fit.beta
        fits.append(fit)
    if failed:
        raise DegenerateColumn(f"zero-variance columns: {failed}")
    return (B, fits) if return_fits else B


def ols_refit(X, B, support_threshold: float = 1e-10, intercept: bool = True,
              return_flags: bool = False):
    """Least-squares refit of every column of B on its selected support.

    Entries with ``|B_ij| <= support_threshold`` are set to exactly zero. The
    sign convention of B is preserved (free entries are negated coefficients).
    Collinear supports fall back to the minimum-norm solution and are reported
    in the returned flags.
    """
    X = as_data_matrix(X)
    B = np.asarray(B, dtype=float)
    p = X.shape[1]
    if B.shape != (p, p):
        raise ValueError(f"B has shape {B.shape}, expected {(p, p)}")
    Xc = X - X.mean(axis=0) if intercept else X
    out = np.eye(p)
    singular = []
    for j in range(p):
        support = np.flatnonzero(np.abs(B[:, j]) > support_threshold)
        support = support[support != j]
        if support.size == 0:
            continue
        Z = Xc[:, support]
        coef, _, rank, _ = np.linalg.lstsq(Z, Xc[:, j], rcond=None)
        if rank < support.size:
            singular.append(j)
        out[support, j] = -coef
    if singular:
        warnings.warn(f"collinear supports in columns {singular}", RuntimeWarning, stacklevel=2)
    return (out, singular) if return_flags else out
