"""File formats: headerless CSV matrices and JSON parameter files.

Matrices are written with 17 significant digits, which round-trips every
float64 exactly.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import ModelParams, ParameterError

FLOAT_FMT = "%.17g"


def write_matrix(path, a) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    np.savetxt(path, a, fmt=FLOAT_FMT, delimiter=",")


def read_matrix(path) -> np.ndarray:
    a = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    return a


def format_matrix(a) -> str:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return "\n".join(",".join(FLOAT_FMT % v for v in row) for row in a) + "\n"


def read_batches(directory) -> list[np.ndarray]:
    """Every ``*.csv`` in ``directory``, in sorted file-name order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"data directory not found: {directory}")
    files = sorted(directory.glob("*.csv"))
    if not files:
        raise FileNotFoundError(f"no .csv files in {directory}")
    return [read_matrix(f) for f in files]


def _matrix_field(raw: dict, key: str, base: Path, dim: int) -> np.ndarray:
    if f"{key}_path" in raw:
        return read_matrix(base / raw[f"{key}_path"])
    if key in raw:
        v = raw[key]
        if np.ndim(v) == 0:
            return float(v) * np.eye(dim)
        return np.asarray(v, dtype=float)
    return np.eye(dim)


def load_params(path) -> ModelParams:
    """Read a JSON parameter file.

    Required keys: K, N, L, M. Sigma and Xi come from ``sigma_path`` /
    ``xi_path`` (CSV, relative to the JSON file) or inline ``sigma`` /
    ``xi`` (nested lists or a scalar multiple of the identity); missing
    matrices default to the identity.
    """
    path = Path(path)
    raw = json.loads(path.read_text())
    missing = [k for k in ("K", "N", "L", "M") if k not in raw]
    if missing:
        raise ParameterError(f"parameter file lacks keys {missing}")
    K, N = int(raw["K"]), int(raw["N"])
    base = path.parent
    return ModelParams(K, N, float(raw["L"]), float(raw["M"]),
                       _matrix_field(raw, "sigma", base, K), _matrix_field(raw, "xi", base, N))


def params_to_json(p: ModelParams) -> dict:
    return {"K": p.K, "N": p.N, "L": p.L, "M": p.M,
            "sigma": p.Sigma.tolist(), "xi": p.Xi.tolist()}


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, allow_nan=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
