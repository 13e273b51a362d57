"""
Linear CKA

    CKA(X, Y) = ||Yc^T Xc||_F^2 / (||Xc^T Xc||_F * ||Yc^T Yc||_F)

with Xc, Yc the column-centered feature matrices. Features are centered
rather than Gram matrices, so the cost is O(n d^2) and tall batches are cheap.
"""

import numpy as np

from ...errors import InputError, ShapeError, UndefinedScoreError


def feature_matrix(values) -> np.ndarray:
    """[n x ...] array to a float64 [n x d] matrix."""
    array = np.asarray(values, dtype=np.float64)
    if array.ndim == 1:
        array = array[:, None]
    array = array.reshape(array.shape[0], -1)
    if array.shape[0] < 2:
        raise InputError(f"CKA needs at least 2 examples, got {array.shape[0]}")
    if not np.all(np.isfinite(array)):
        raise InputError("feature matrix has non-finite values")
    return array


def linear_cka(X, Y) -> float:
    X = feature_matrix(X)
    Y = feature_matrix(Y)
    if X.shape[0] != Y.shape[0]:
        raise ShapeError(f"CKA compares the same examples; got {X.shape[0]} and {Y.shape[0]} rows")
    X = X - X.mean(axis=0)
    Y = Y - Y.mean(axis=0)
    cross = np.linalg.norm(Y.T @ X) ** 2
    denominator = np.linalg.norm(X.T @ X) * np.linalg.norm(Y.T @ Y)
    if denominator == 0.0:
        raise UndefinedScoreError("CKA is undefined for a feature matrix with zero variance")
    return float(cross / denominator)
