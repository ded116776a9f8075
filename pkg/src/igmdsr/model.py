"""IG-MDSR architecture: parameters, initialization and the forward pass.

The network maps the folded input ``X0`` (m x r0) through ``s`` sigmoid
layers. Layer 1 sees only the input; every later layer ``l`` also receives
the input directly through a guidance matrix ``Vtilde[l]``::

    Y1 = X0 V1
    Yl = X(l-1) Vl + X0 Vtilde_l        l = 2..s
    Xl = sigmoid(Yl)
    Z  = Xs W
    Xhat = relu(Z)

``B = Xs`` is the low-rank embedding and ``W`` the coefficient matrix.
A single reconstruction layer is used on purpose: stacking several would
make ``W`` a product of factors with no unique recovery from ``B``.
There are no bias terms.
"""

import enum
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import ParameterError, ShapeError
from .linalg import as_matrix, matmul


class Variant(enum.Enum):
    NMF = "nmf"
    RNMF = "rnmf"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ParameterError(f"unknown variant {value!r}; expected 'nmf' or 'rnmf'") from None


@dataclass(frozen=True)
class ArchitectureSpec:
    widths: Tuple[int, ...]
    variant: Variant = Variant.NMF

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if len(widths) < 3:
            raise ParameterError(
                f"need at least 2 hidden layers (3 widths), got widths {list(widths)}"
            )
        if widths[-1] < 1:
            raise ParameterError(f"slenderest width must be >= 1, got {widths[-1]}")
        if any(a <= b for a, b in zip(widths, widths[1:])):
            raise ParameterError(f"widths must be strictly decreasing, got {list(widths)}")

    @property
    def s(self):
        return len(self.widths) - 1

    @property
    def n(self):
        return self.widths[0]

    @property
    def r(self):
        return self.widths[-1]


@dataclass(frozen=True)
class ModelParams:
    """Weights of one network.

    ``V[l-1]`` is V^(l) of shape (r_{l-1}, r_l) for l = 1..s;
    ``Vtilde[l-2]`` is the guidance matrix of layer l (shape (r0, r_l)) for l = 2..s;
    ``W`` has shape (r_s, r0).
    """

    V: List[np.ndarray]
    Vtilde: List[np.ndarray]
    W: np.ndarray

    def __post_init__(self):
        V = [as_matrix(v, f"V{l + 1}") for l, v in enumerate(self.V)]
        Vt = [as_matrix(v, f"Vtilde{l + 2}") for l, v in enumerate(self.Vtilde)]
        W = as_matrix(self.W, "W")
        if len(V) < 2 or len(Vt) != len(V) - 1:
            raise ShapeError(f"expected s >= 2 V matrices and s-1 guidance matrices, got {len(V)} and {len(Vt)}")
        widths = [V[0].shape[0]] + [v.shape[1] for v in V]
        for l, v in enumerate(V, start=1):
            if v.shape[0] != widths[l - 1]:
                raise ShapeError(f"V{l} has shape {v.shape}, expected ({widths[l - 1]}, {v.shape[1]})")
        for l, v in enumerate(Vt, start=2):
            if v.shape != (widths[0], widths[l]):
                raise ShapeError(f"Vtilde{l} has shape {v.shape}, expected {(widths[0], widths[l])}")
        if W.shape != (widths[-1], widths[0]):
            raise ShapeError(f"W has shape {W.shape}, expected {(widths[-1], widths[0])}")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "Vtilde", Vt)
        object.__setattr__(self, "W", W)

    @property
    def widths(self):
        return (self.V[0].shape[0],) + tuple(v.shape[1] for v in self.V)

    def matrices(self):
        """All weight matrices in canonical order: V1..Vs, Vtilde2..Vtildes, W."""
        return [*self.V, *self.Vtilde, self.W]

    def names(self):
        s = len(self.V)
        return [f"V{l}" for l in range(1, s + 1)] + [f"Vtilde{l}" for l in range(2, s + 1)] + ["W"]

    @classmethod
    def from_matrices(cls, mats):
        mats = list(mats)
        s = len(mats) // 2
        return cls(V=mats[:s], Vtilde=mats[s : 2 * s - 1], W=mats[2 * s - 1])


@dataclass(frozen=True)
class ForwardTrace:
    X_layers: List[np.ndarray]
    Y_layers: List[np.ndarray]
    Z: np.ndarray
    Xhat: np.ndarray

    @property
    def B(self):
        return self.X_layers[-1]


def default_layer_schedule(n, r, s=3):
    """Geometric widths ``round(n * (r/n)**(l/s))`` forced strictly decreasing."""
    if s < 2:
        raise ParameterError(f"s must be >= 2, got {s}")
    if not n > r >= 1:
        raise ParameterError(f"need n > r >= 1, got n={n}, r={r}")
    if n - r < s:
        raise ParameterError(
            f"cannot fit {s} strictly decreasing layers between n={n} and r={r}"
        )
    widths = [n] + [int(round(n * (r / n) ** (l / s))) for l in range(1, s)] + [r]
    # each interior width must leave room for the remaining strict decrements
    for l in range(1, s):
        widths[l] = min(widths[l], widths[l - 1] - 1)
        widths[l] = max(widths[l], r + (s - l))
    return widths


def xavier_init(spec, seed):
    """Glorot-normal weights; ``W`` takes ``|draw|`` so ``B W`` starts non-negative."""
    rng = np.random.default_rng(seed)
    w = spec.widths

    def draw(fan_in, fan_out):
        return rng.normal(0.0, np.sqrt(2.0 / (fan_in + fan_out)), size=(fan_in, fan_out))

    V = [draw(w[l - 1], w[l]) for l in range(1, spec.s + 1)]
    Vtilde = [draw(w[0], w[l]) for l in range(2, spec.s + 1)]
    # both variants start from |draw|: a signed start lets an all-negative
    # column of W zero an output column through the ReLU for good
    W = np.abs(draw(w[-1], w[0]))
    return ModelParams(V, Vtilde, W)


def sigmoid(y):
    """Logistic function, evaluated per sign branch so ``exp`` never overflows."""
    y = np.asarray(y, dtype=np.float64)
    e = np.exp(-np.abs(y))
    out = np.where(y >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return out if out.ndim else float(out)


def relu(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.where(z > 0, z, 0.0)
    return out if out.ndim else float(out)


def forward(params, X0):
    X0 = as_matrix(X0, "input")
    if X0.shape[1] != params.widths[0]:
        raise ShapeError(
            f"layer 0: input has {X0.shape[1]} columns, network expects {params.widths[0]}"
        )
    xs = [X0]
    ys = []
    for l, V in enumerate(params.V, start=1):
        Y = matmul(xs[-1], V)
        if l >= 2:
            Y = Y + matmul(X0, params.Vtilde[l - 2])
        ys.append(Y)
        xs.append(sigmoid(Y))
    Z = matmul(xs[-1], params.W)
    return ForwardTrace(xs, ys, Z, relu(Z))


def extract_factors(trace, params):
    """Return ``(B, W)``: the slenderest-layer activations and the coefficient matrix."""
    return trace.B, params.W
