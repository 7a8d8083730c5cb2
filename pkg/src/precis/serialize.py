"""File formats: dense CSV, sparse JSON triplets, JSON vectors.

JSON floats use Python's shortest round-trip repr; CSV uses ``%.17g``.
The format is picked from the file extension (``.json`` or anything else = CSV).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import read_matrix_csv, write_matrix_csv


def _is_json(path) -> bool:
    return Path(path).suffix.lower() == ".json"


def write_regression_matrix(path, B) -> None:
    B = np.asarray(B, dtype=float)
    if _is_json(path):
        iu, ju = np.nonzero(B)
        data = {
            "p": B.shape[0],
            "entries": [{"i": int(i), "j": int(j), "value": float(B[i, j])} for i, j in zip(iu, ju)],
        }
        Path(path).write_text(json.dumps(data))
    else:
        write_matrix_csv(path, B)


def read_regression_matrix(path) -> np.ndarray:
    if _is_json(path):
        data = json.loads(Path(path).read_text())
        p = int(data["p"])
        B = np.zeros((p, p))
        for e in data["entries"]:
            B[e["i"], e["j"]] = e["value"]
    else:
        B = read_matrix_csv(path)
    if B.shape[0] != B.shape[1]:
        raise ValueError(f"{path}: regression matrix must be square, got {B.shape}")
    if not np.allclose(np.diag(B), 1.0):
        raise ValueError(f"{path}: regression matrix must have unit diagonal")
    if not np.all(np.isfinite(B)):
        raise ValueError(f"{path}: non-finite entries")
    return B


def write_vector(path, v) -> None:
    v = np.asarray(v, dtype=float).ravel()
    if _is_json(path):
        Path(path).write_text(json.dumps(v.tolist()))
    else:
        write_matrix_csv(path, v[:, None])


def read_vector(path) -> np.ndarray:
    if _is_json(path):
        return np.asarray(json.loads(Path(path).read_text()), dtype=float)
    return read_matrix_csv(path).ravel()


def write_matrix(path, M) -> None:
    M = np.asarray(M, dtype=float)
    if _is_json(path):
        Path(path).write_text(json.dumps(M.tolist()))
    else:
        write_matrix_csv(path, M)
