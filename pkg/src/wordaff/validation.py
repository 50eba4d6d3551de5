"""Input validation helpers shared by the estimator API."""

from __future__ import annotations

import numpy as np


def check_matrix(X, name: str = "X", min_rows: int = 0) -> np.ndarray:
    """Coerce to a finite 2-D float array."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] < min_rows:
        raise ValueError(f"{name} needs at least {min_rows} rows, got {X.shape[0]}")
    if X.size and not np.isfinite(X).all():
        raise ValueError(f"{name} contains non-finite values")
    return X


def check_index_pairs(pairs, n_rows: int, name: str = "pairs") -> np.ndarray:
    """Coerce to an (m, 2) int array of distinct, in-range row indices."""
    arr = np.asarray(list(pairs), dtype=int)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must be an (m, 2) array of row indices")
    if (arr < 0).any() or (arr >= n_rows).any():
        raise ValueError(f"{name} contains out-of-range row indices")
    if (arr[:, 0] == arr[:, 1]).any():
        raise ValueError(f"{name} contains self-pairs")
    return arr
