"""Dense matrix substrate.

Matrices are plain 2-D ``float64`` numpy arrays (row-major, rows are samples).
Products are accumulated in ascending inner-index order with separate
multiply and add steps, so every entry is bit-identical to a scalar
triple loop and results do not depend on the BLAS build or thread count.
"""

import numpy as np

from .errors import ShapeError


def as_matrix(a, name="matrix"):
    """Coerce ``a`` to a C-contiguous 2-D float64 array with at least one row and column."""
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"{name} must have at least one row and column, got {m.shape}")
    return m


def _same_shape(a, b, op):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def matmul(a, b):
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    out = a[:, 0:1] * b[0:1, :]
    for k in range(1, a.shape[1]):
        out += a[:, k : k + 1] * b[k : k + 1, :]
    return out


def transpose(a):
    return np.ascontiguousarray(as_matrix(a).T)


def hadamard(a, b):
    a = as_matrix(a)
    b = as_matrix(b)
    _same_shape(a, b, "hadamard")
    return a * b


def frobenius_distance(a, b):
    a = as_matrix(a)
    b = as_matrix(b)
    _same_shape(a, b, "frobenius_distance")
    d = (a - b).ravel()
    # squares are symmetric in (a, b), so the sum is too
    return float(np.sqrt(np.add.reduce(d * d)))
