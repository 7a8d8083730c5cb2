"""Estimators of phi, the residual variances ``phi_j = 1 / omega_jj``.

All four take the data X and a regression matrix B (unit diagonal, column j
holding the negated coefficients of feature j on the others):

* ``estimate_rv``  -- residual variance ``B[:, j]' S B[:, j]``
* ``estimate_rml`` -- relaxed MLE ``max((S B)_jj, 0)``
* ``estimate_sml`` -- MLE under the symmetry constraints along spanning trees
* ``estimate_pml`` -- MLE with a quadratic penalty on symmetry violations

``mean=None`` centers the data by the sample mean; pass a vector (or ``0``) to
use a known mean instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import sample_covariance
from .graph import (
    DivisionByNearZero,
    build_graph,
    default_threshold,
    delta_factors,
    spanning_forest,
)

ESTIMATORS = ("rv", "rml", "sml", "pml")


class ZeroPhi(ValueError):
    """A phi coordinate is not strictly positive."""


def _check_shapes(X, B):
    X = np.asarray(X, dtype=float)
    B = np.asarray(B, dtype=float)
    if X.ndim != 2 or B.shape != (X.shape[1], X.shape[1]):
        raise ValueError(f"B has shape {B.shape}, data has p={X.shape[-1]}")
    return X, B


def diag_sb(S, B) -> np.ndarray:
    """Diagonal of S @ B without forming the product."""
    return np.einsum("jk,kj->j", S, B)


def estimate_rv(X, B, mean=None) -> np.ndarray:
    X, B = _check_shapes(X, B)
    S = sample_covariance(X, mean)
    return np.maximum(np.einsum("kj,kl,lj->j", B, S, B), 0.0)


def estimate_rml(X, B, mean=None) -> np.ndarray:
    X, B = _check_shapes(X, B)
    return np.maximum(diag_sb(sample_covariance(X, mean), B), 0.0)


@dataclass
class SmlInfo:
    trees: list
    failed_components: list = field(default_factory=list)


def sml_from_sb(sb, B, t: float, tree_mode: str = "mst"):
    """SML given the diagonal of S B. Returns (phi, SmlInfo)."""
    g = build_graph(B, t)
    trees = spanning_forest(g, tree_mode)
    phi = np.maximum(sb, 0.0)
    failed = []
    for tree in trees:
        if len(tree.nodes) == 1:
            continue
        try:
            delta = delta_factors(tree, B)
        except DivisionByNearZero:
            failed.append(tree.nodes)
            continue
        nodes = np.array(tree.nodes)
        d = np.array([delta[i] for i in tree.nodes])
        phi_root = np.mean(sb[nodes] / d)
        phi[nodes] = np.maximum(d * phi_root, 0.0)
    return phi, SmlInfo(trees=trees, failed_components=failed)


def estimate_sml(X, B, mean=None, tree_mode: str = "mst", t: float | None = None,
                 return_info: bool = False):
    """Symmetry-enforced MLE.

    Within each component of the thresholded graph every phi is tied to the
    root's value through the tree ratios ``delta``; the root value solves the
    one-parameter likelihood, ``phi_root = mean_i (S B)_ii / delta_i``.
    Singletons, and components whose ratios hit a near-zero denominator, keep
    the relaxed value ``max((S B)_jj, 0)``. Negative results are clamped to 0.
    """
    X, B = _check_shapes(X, B)
    if t is None:
        t = default_threshold(X.shape[0])
    sb = diag_sb(sample_covariance(X, mean), B)
    phi, info = sml_from_sb(sb, B, t, tree_mode)
    return (phi, info) if return_info else phi


@dataclass(frozen=True)
class PmlConfig:
    kappa: float | None = None  # None -> sqrt(log p) / 3
    t: float | None = None  # None -> min(0.01, n ** -0.5)
    grad_tol: float = 1e-5
    max_iter: int = 5000
    step_up: float = 1.2
    step_down: float = 0.5
    initial_step: float = 1.0
    phi_lower: float | None = None  # None -> n ** -0.5
    phi_upper: float = 1.0

    def __post_init__(self):
        if self.kappa is not None and self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if self.t is not None and not 0 < self.t < 1:
            raise ValueError("t must lie in (0, 1)")
        if self.grad_tol <= 0 or self.max_iter < 1 or self.initial_step <= 0:
            raise ValueError("invalid descent settings")
        if not (self.step_up > 1 and 0 < self.step_down < 1):
            raise ValueError("need step_up > 1 and 0 < step_down < 1")
        if self.phi_upper <= 0 or (self.phi_lower is not None and not 0 < self.phi_lower < self.phi_upper):
            raise ValueError("invalid phi box")


@dataclass
class PmlResult:
    phi: np.ndarray
    v: np.ndarray
    objective: float
    grad_norm: float
    n_iter: int
    converged: bool
    objective_path: list = field(repr=False, default_factory=list)


class PmlObjective:
    """f(v) = sum(-log v + s v) + kappa * sum_pairs (a v_i - b v_j)^2 / (a^2 + b^2).

    For a pair i < j, ``a = B[j, i]`` and ``b = B[i, j]``; pairs are kept when
    ``a * b > t``.
    """

    def __init__(self, sb, B, kappa: float, t: float):
        self.s = np.asarray(sb, dtype=float)
        B = np.asarray(B, dtype=float)
        iu, ju = np.triu_indices(B.shape[0], k=1)
        a, b = B[ju, iu], B[iu, ju]
        keep = a * b > t
        self.i, self.j = iu[keep], ju[keep]
        self.a, self.b = a[keep], b[keep]
        self.w = kappa / (self.a**2 + self.b**2)

    def value(self, v) -> float:
        d = self.a * v[self.i] - self.b * v[self.j]
        return float(np.sum(-np.log(v) + self.s * v) + np.sum(self.w * d * d))

    def gradient(self, v) -> np.ndarray:
        g = -1.0 / v + self.s
        d2 = 2.0 * self.w * (self.a * v[self.i] - self.b * v[self.j])
        np.add.at(g, self.i, d2 * self.a)
        np.add.at(g, self.j, -d2 * self.b)
        return g


def _projected_gradient(g, v, lo, hi):
    pg = g.copy()
    pg[(v <= lo) & (g > 0)] = 0.0
    pg[(v >= hi) & (g < 0)] = 0.0
    return pg


def minimize_pml(obj: PmlObjective, lo, hi, cfg: PmlConfig) -> PmlResult:
    """Normalized steepest descent with multiplicative step adaptation on a box.

    A step that does not decrease f is retried from the same point with the
    step size multiplied by ``step_down``; accepted steps multiply it by
    ``step_up``. Every attempt counts toward ``max_iter``.
    """
    p = obj.s.size
    v = np.clip(np.ones(p), lo, hi)
    f = obj.value(v)
    step = cfg.initial_step
    path = [f]
    g = _projected_gradient(obj.gradient(v), v, lo, hi)
    gnorm = float(np.linalg.norm(g))
    it = 0
    while gnorm >= cfg.grad_tol and it < cfg.max_iter:
        it += 1
        cand = np.clip(v - step * g / gnorm, lo, hi)
        f_cand = obj.value(cand)
        if f_cand < f:
            v, f = cand, f_cand
            path.append(f)
            step *= cfg.step_up
            g = _projected_gradient(obj.gradient(v), v, lo, hi)
            gnorm = float(np.linalg.norm(g))
        else:
            step *= cfg.step_down
            if step * gnorm < 1e-300 or step < 1e-16 * max(1.0, float(np.max(v))):
                # no representable descent step left
                break
    return PmlResult(
        phi=1.0 / v,
        v=v,
        objective=f,
        grad_norm=gnorm,
        n_iter=it,
        converged=gnorm < cfg.grad_tol,
        objective_path=path,
    )


def pml_from_sb(sb, B, n: int, config: PmlConfig | None = None) -> PmlResult:
    cfg = config or PmlConfig()
    p = len(sb)
    kappa = math.sqrt(math.log(p)) / 3.0 if cfg.kappa is None else cfg.kappa
    t = default_threshold(n) if cfg.t is None else cfg.t
    phi_lo = n**-0.5 if cfg.phi_lower is None else cfg.phi_lower
    lo, hi = 1.0 / cfg.phi_upper, 1.0 / phi_lo
    obj = PmlObjective(sb, B, kappa, t)
    return minimize_pml(obj, lo, hi, cfg)


def estimate_pml(X, B, mean=None, config: PmlConfig | None = None,
                 return_info: bool = False):
    """Penalized MLE, computed in ``v = 1 / phi`` over ``[1, sqrt(n)]^p``.

    With the default box the result lies in ``[n ** -0.5, 1]``. When the
    iteration cap is hit the last accepted iterate is returned and
    ``info.converged`` is False.
    """
    X, B = _check_shapes(X, B)
    sb = diag_sb(sample_covariance(X, mean), B)
    res = pml_from_sb(sb, B, X.shape[0], config)
    return (res.phi, res) if return_info else res.phi


def assemble_precision(B, phi) -> np.ndarray:
    """``B @ diag(1 / phi)``; no symmetrization."""
    B = np.asarray(B, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (B.shape[1],):
        raise ValueError("phi length does not match B")
    if np.any(phi <= 0):
        raise ZeroPhi(f"non-positive phi at {np.flatnonzero(phi <= 0).tolist()}")
    return B / phi[None, :]


def partial_correlations(B, return_mask: bool = False):
    """Symmetric matrix ``sign(B_ij + B_ji) * sqrt(max(B_ij B_ji, 0))``, unit diagonal.

    For exact B this is ``omega_ij / sqrt(omega_ii omega_jj)``; the partial
    correlation of variables i and j is its negative. Pairs with a negative
    product are set to 0 and reported by ``mask`` when ``return_mask`` is set.
    """
    B = np.asarray(B, dtype=float)
    prod = B * B.T
    R = np.sign(B + B.T) * np.sqrt(np.maximum(prod, 0.0))
    np.fill_diagonal(R, 1.0)
    if return_mask:
        negative = prod < 0
        np.fill_diagonal(negative, False)
        return R, negative
    return R


def estimate(name: str, X, B, mean=None, tree_mode: str = "mst", t: float | None = None,
             pml_config: PmlConfig | None = None) -> np.ndarray:
    """Dispatch by estimator name (rv, rml, sml, pml)."""
    name = name.lower()
    if name == "rv":
        return estimate_rv(X, B, mean)
    if name == "rml":
        return estimate_rml(X, B, mean)
    if name == "sml":
        return estimate_sml(X, B, mean, tree_mode=tree_mode, t=t)
    if name == "pml":
        cfg = pml_config or PmlConfig(t=t)
        return estimate_pml(X, B, mean, cfg)
    raise ValueError(f"unknown estimator {name!r}; choose from {ESTIMATORS}")
