"""Synthetic sparse precision models used as ground truth.

Six seed matrices ``A`` are defined (see :func:`seed_matrix`); each is
rescaled into a precision matrix whose covariance has unit diagonal::

    omega = diag(inv(A))**0.5 @ A @ diag(inv(A))**0.5
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import NotPositiveDefinite, spd_inverse

MODEL_IDS = ("m1", "m2", "m3", "m4", "m5", "m6")

ZERO_TOL = 1e-12


def _check_model_id(model_id: str, p: int, min_p: int = 3) -> str:
    model_id = str(model_id).lower()
    if model_id not in MODEL_IDS:
        raise ValueError(f"unknown model {model_id!r}; choose from {MODEL_IDS}")
    if p < min_p:
        raise ValueError(f"p must be at least {min_p}")
    if model_id == "m6" and p % 6:
        raise ValueError(f"p must be a multiple of 6 for model m6, got {p}")
    return model_id


def _hub_block(k: int, hub: float, leaf: float, link: float) -> np.ndarray:
    """k x k star matrix: hub at index 0, leaves on the diagonal, links on row/col 0."""
    A = np.diag(np.full(k, float(leaf)))
    A[0, 0] = hub
    A[0, 1:] = link
    A[1:, 0] = link
    return A


def seed_matrix(model_id: str, p: int) -> np.ndarray:
    """Seed matrix ``A`` of the requested model, before normalization.

    Any p >= 2 is accepted here; ``build_model`` requires p >= 3.
    """
    model_id = _check_model_id(model_id, p, min_p=2)
    idx = np.arange(p)
    dist = np.abs(idx[:, None] - idx[None, :])

    if model_id == "m1":
        return 0.6**dist
    if model_id == "m2":
        bar = np.where(dist == 0, 1.0, 0.0)
        bar[dist == 1] = -1.0 / 3.0
        bar[dist == 2] = -1.0 / 10.0
        A = np.where(dist <= 2, np.linalg.inv(bar), 0.0)
        return 0.5 * (A + A.T)
    if model_id == "m3":
        return _hub_block(p, p, 2.0, math.sqrt(2.0))
    if model_id in ("m4", "m5"):
        k = math.ceil(math.sqrt(p))
        if model_id == "m4":
            block = _hub_block(k, k, 2.0 * k, math.sqrt(2.0))
        else:
            block = _hub_block(k, 50.0, 5.0, 2.5)
        A = np.eye(p)
        A[:k, :k] = block
        return A
    # m6: p/6 copies of the model-5 block with k = 6
    block = _hub_block(6, 50.0, 5.0, 2.5)
    return np.kron(np.eye(p // 6), block)


@dataclass(frozen=True)
class PrecisionModel:
    """Ground-truth precision matrix with its regression parametrization.

    ``b_star[i, j] = omega[i, j] / omega[j, j]`` and ``phi_star[j] = 1 / omega[j, j]``,
    so that ``omega == b_star @ diag(1 / phi_star)``.
    """

    omega: np.ndarray
    model_id: str = "custom"
    b_star: np.ndarray = field(init=False, repr=False)
    phi_star: np.ndarray = field(init=False, repr=False)
    sigma: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
            raise ValueError(f"omega must be square, got shape {omega.shape}")
        omega = 0.5 * (omega + omega.T)
        sigma = spd_inverse(omega)
        d = np.diag(omega)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "phi_star", 1.0 / d)
        object.__setattr__(self, "b_star", omega / d[None, :])

    @property
    def p(self) -> int:
        return self.omega.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        return true_graph(self)

    def check(self, tol: float = 1e-9) -> None:
        """Validate the unit-variance normalization and the B/phi identities."""
        if np.max(np.abs(np.diag(self.sigma) - 1.0)) > tol:
            raise ValueError("covariance diagonal is not 1: model is not normalized")
        if np.any(self.phi_star <= 0) or np.any(self.phi_star > 1 + tol):
            raise ValueError("phi_star outside (0, 1]")
        recon = self.b_star / self.phi_star[None, :]
        if np.max(np.abs(recon - self.omega)) > 1e-10 * max(1.0, np.max(np.abs(self.omega))):
            raise ValueError("omega != B* D_phi^-1")

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "model_id": self.model_id,
            "omega": self.omega.tolist(),
            "phi_star": self.phi_star.tolist(),
            "edges": [list(e) for e in self.edges()],
        }

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def from_dict(cls, data: dict) -> "PrecisionModel":
        omega = np.asarray(data["omega"], dtype=float)
        if "p" in data and omega.shape != (data["p"], data["p"]):
            raise ValueError(f"omega shape {omega.shape} does not match p={data['p']}")
        model = cls(omega, model_id=data.get("model_id", "custom"))
        model.check()
        return model

    @classmethod
    def from_json(cls, path) -> "PrecisionModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def normalize(A, model_id: str = "custom") -> PrecisionModel:
    """Rescale an SPD seed matrix so that inv(omega) has unit diagonal."""
    A = np.asarray(A, dtype=float)
    try:
        scale = np.sqrt(np.diag(spd_inverse(A)))
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(f"seed matrix is not positive definite: {exc}") from None
    omega = scale[:, None] * A * scale[None, :]
    # normalization makes diag(inv(omega)) == 1 up to rounding; exact zeros are kept
    return PrecisionModel(omega, model_id=model_id)


def build_model(model_id: str, p: int) -> PrecisionModel:
    model_id = _check_model_id(model_id, p)
    return normalize(seed_matrix(model_id, p), model_id=model_id)


def true_graph(model: PrecisionModel) -> list[tuple[int, int]]:
    """Edges (i, j), i < j, where the precision entry is nonzero."""
    iu, ju = np.nonzero(np.triu(np.abs(model.omega) > ZERO_TOL, k=1))
    return list(zip(iu.tolist(), ju.tolist()))


__all__ = [
    "MODEL_IDS",
    "PrecisionModel",
    "build_model",
    "normalize",
    "seed_matrix",
    "true_graph",
]
