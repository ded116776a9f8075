"""Classic multiplicative-update NMF (Lee & Seung, Frobenius objective)."""

from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import DomainError, ParameterError
from .linalg import as_matrix, matmul, transpose

FLOOR = 1e-12


@dataclass(frozen=True)
class NmfResult:
    B: np.ndarray
    W: np.ndarray
    objective_per_iter: List[float]


def _objective(X, B, W):
    d = (X - matmul(B, W)).ravel()
    return 0.5 * float(np.add.reduce(d * d))


def nmf_multiplicative(X, r, iters=500, seed=0):
    """Factor ``X ~= B W`` with ``B, W >= 0`` by alternating multiplicative updates.

    Both factors start uniform on (0, 1]. Denominators are floored at 1e-12.
    The objective ``0.5 * ||X - B W||_F^2`` is recorded after every iteration.
    """
    X = as_matrix(X, "X")
    if np.any(X < 0):
        raise DomainError("multiplicative NMF requires a non-negative input matrix")
    m, n = X.shape
    if not 1 <= r <= min(m, n):
        raise ParameterError(f"rank r must lie in [1, {min(m, n)}], got {r}")
    if iters < 1:
        raise ParameterError(f"iters must be >= 1, got {iters}")

    rng = np.random.default_rng(seed)
    B = 1.0 - rng.random((m, r))
    W = 1.0 - rng.random((r, n))
    objective = []
    for _ in range(iters):
        Bt = transpose(B)
        W = W * matmul(Bt, X) / np.maximum(matmul(matmul(Bt, B), W), FLOOR)
        Wt = transpose(W)
        B = B * matmul(X, Wt) / np.maximum(matmul(B, matmul(W, Wt)), FLOOR)
        objective.append(_objective(X, B, W))
    return NmfResult(B, W, objective)
