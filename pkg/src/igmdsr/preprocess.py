"""Normalization and the folding encoding.

Raw data ``U`` (m x n') is z-scored column-wise and then folded into a
non-negative matrix ``X`` (m x 2n'): positive parts of column ``i`` land in
column ``i``, magnitudes of negative parts in column ``n' + i``. Z-scoring
runs first because it is the step that creates the negatives folding absorbs.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ParameterError, ShapeError
from .linalg import as_matrix


@dataclass(frozen=True)
class RawDataset:
    U: np.ndarray
    labels: Optional[Sequence] = None

    def __post_init__(self):
        object.__setattr__(self, "U", as_matrix(self.U, "U"))
        if self.labels is not None and len(self.labels) != self.U.shape[0]:
            raise ShapeError(
                f"{len(self.labels)} labels for {self.U.shape[0]} samples"
            )


@dataclass(frozen=True)
class FoldedDataset:
    X: np.ndarray
    origin_cols: int

    def __post_init__(self):
        X = as_matrix(self.X, "X")
        if X.shape[1] != 2 * self.origin_cols:
            raise ShapeError(
                f"folded matrix has {X.shape[1]} columns, expected 2 x {self.origin_cols}"
            )
        object.__setattr__(self, "X", X)


def zscore_normalize(U):
    """Column-wise z-score with the population (divide-by-m) standard deviation.

    Returns
    -------
    normalized : ndarray, same shape as ``U``
    means, stds : ndarray of shape (n',)
        Zero-variance columns get ``std == 0`` and map to all zeros.
    """
    U = as_matrix(U, "U")
    if U.shape[0] < 2:
        raise ParameterError(f"z-score needs at least 2 samples, got {U.shape[0]}")
    means = U.mean(axis=0)
    stds = U.std(axis=0)
    stds = np.where(stds > 0, stds, 0.0)
    return apply_zscore(U, means, stds), means, stds


def apply_zscore(U, means, stds):
    """Normalize ``U`` with previously computed column statistics."""
    U = as_matrix(U, "U")
    means = np.asarray(means, dtype=np.float64)
    stds = np.asarray(stds, dtype=np.float64)
    if means.shape != (U.shape[1],) or stds.shape != (U.shape[1],):
        raise ShapeError(
            f"statistics for {means.shape[0]} columns, data has {U.shape[1]}"
        )
    safe = np.where(stds > 0, stds, 1.0)
    out = (U - means) / safe
    out[:, stds == 0] = 0.0
    return out


def fold(U):
    U = as_matrix(U, "U")
    pos = np.where(U > 0, U, 0.0)
    neg = np.where(U < 0, -U, 0.0)
    return FoldedDataset(np.hstack([pos, neg]), U.shape[1])


def unfold(X):
    """Invert :func:`fold`. Accepts a :class:`FoldedDataset` or a bare even-width matrix."""
    if isinstance(X, FoldedDataset):
        M, n_prime = X.X, X.origin_cols
    else:
        M = as_matrix(X, "X")
        if M.shape[1] % 2:
            raise ShapeError(f"cannot unfold a matrix with odd column count {M.shape[1]}")
        n_prime = M.shape[1] // 2
    return M[:, :n_prime] - M[:, n_prime:]


def reduced_dim(n_prime, f):
    """Target rank ``floor(n' * f)`` for a fraction ``f`` in (0, 1)."""
    if not 0 < f < 1:
        raise ParameterError(f"f must lie in (0, 1), got {f}")
    r = math.floor(n_prime * f)
    if r < 1:
        raise ParameterError(f"floor({n_prime} * {f}) = {r}; reduced dimension must be >= 1")
    return r
