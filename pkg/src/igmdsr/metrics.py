"""Embedding quality: neighbour ranks, trustworthiness, reconstruction error, kNN.

Distances are Euclidean in both spaces and ties in any ranking are broken by
ascending sample index, so results do not depend on sort implementation.
The trustworthiness normaliser uses ``m`` for the sample count (the folded
feature width is ``n`` elsewhere in this package).
"""

from collections import Counter

import numpy as np

from .errors import DomainError, ParameterError, ShapeError
from .linalg import as_matrix, frobenius_distance

_CHUNK = 256


def _cross_distances(A, B):
    out = np.empty((A.shape[0], B.shape[0]))
    for start in range(0, A.shape[0], _CHUNK):
        diff = A[start : start + _CHUNK, None, :] - B[None, :, :]
        out[start : start + _CHUNK] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return out


def pairwise_distances(X):
    X = as_matrix(X, "X")
    if X.shape[0] < 2:
        raise ParameterError("pairwise distances need at least 2 samples")
    D = _cross_distances(X, X)
    # (a-b)^2 == (b-a)^2 elementwise; enforce the identity against einsum reordering
    D = np.minimum(D, D.T)
    np.fill_diagonal(D, 0.0)
    return D


def rank_matrix(D):
    """``ranks[i, j]`` = position of ``j`` among ``i``'s neighbours (1 = nearest).

    The diagonal is set to 0 (self is excluded).
    """
    D = as_matrix(D, "D")
    m = D.shape[0]
    if D.shape != (m, m):
        raise ShapeError(f"distance matrix must be square, got {D.shape}")
    ranks = np.zeros((m, m), dtype=np.int64)
    idx = np.arange(m)
    for i in range(m):
        others = idx[idx != i]
        order = others[np.lexsort((others, D[i, others]))]
        ranks[i, order] = np.arange(1, m)
    return ranks


def trustworthiness(X_orig, X_emb, k=5):
    X_orig = as_matrix(X_orig, "X_orig")
    X_emb = as_matrix(X_emb, "X_emb")
    m = X_orig.shape[0]
    if X_emb.shape[0] != m:
        raise ShapeError(f"row counts differ: {m} vs {X_emb.shape[0]}")
    if not (1 <= k and 2 * k < m):
        raise ParameterError(f"k must satisfy 1 <= k < m/2 (m={m}), got {k}")

    orig_ranks = rank_matrix(pairwise_distances(X_orig))
    emb_ranks = rank_matrix(pairwise_distances(X_emb))
    in_emb_nbhd = (emb_ranks >= 1) & (emb_ranks <= k)
    penalty = np.maximum(orig_ranks - k, 0)[in_emb_nbhd].sum()
    return 1.0 - 2.0 / (m * k * (2 * m - 3 * k - 1)) * float(penalty)


def relative_reconstruction_error(X, Xhat):
    X = as_matrix(X, "X")
    norm = frobenius_distance(X, np.zeros_like(X))
    if norm == 0:
        raise DomainError("relative error undefined for an all-zero reference matrix")
    return frobenius_distance(X, Xhat) / norm


def knn_accuracy(train_emb, train_labels, test_emb, test_labels, k=1):
    """Fraction of test rows whose k-NN majority label is correct.

    Neighbour ties go to the lower train index; vote ties go to the smallest label.
    """
    train_emb = np.asarray(train_emb, dtype=np.float64)
    test_emb = np.asarray(test_emb, dtype=np.float64)
    if test_emb.ndim != 2 or test_emb.shape[0] == 0:
        raise ParameterError("knn_accuracy needs a non-empty test set")
    train_emb = as_matrix(train_emb, "train_emb")
    if len(train_labels) != train_emb.shape[0] or len(test_labels) != test_emb.shape[0]:
        raise ShapeError("label counts must match row counts")
    if train_emb.shape[1] != test_emb.shape[1]:
        raise ShapeError(f"embedding widths differ: {train_emb.shape[1]} vs {test_emb.shape[1]}")
    if not 1 <= k <= train_emb.shape[0]:
        raise ParameterError(f"k must lie in [1, {train_emb.shape[0]}], got {k}")

    D = _cross_distances(test_emb, train_emb)
    train_labels = list(train_labels)
    correct = 0
    for i, truth in enumerate(test_labels):
        nearest = np.argsort(D[i], kind="stable")[:k]
        votes = Counter(train_labels[j] for j in nearest)
        top = max(votes.values())
        guess = min(label for label, c in votes.items() if c == top)
        correct += guess == truth
    return correct / len(test_labels)
