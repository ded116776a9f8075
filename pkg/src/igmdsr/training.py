"""Cost, backpropagation, Adam and the training loop.

The cost is ``sum((X - Xhat)**2) / (2 m n)``. Gradients are derived by hand
for the fixed topology; guidance paths feed a constant (the input), so they
contribute to the ``Vtilde`` gradients and nothing upstream. The ReLU
subgradient at exactly zero is taken as 0.

Under the NMF variant ``W`` is clipped at zero after every optimizer step;
``V`` and ``Vtilde`` are never constrained.
"""

import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Union

import numpy as np

from .errors import NumericError, ParameterError, ShapeError
from .linalg import as_matrix, matmul, transpose
from .model import ModelParams, Variant, forward, xavier_init
from .preprocess import FoldedDataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    stop_threshold: float = 1e-6
    max_epochs: int = 5000
    seed: int = 0
    # "full" or a positive minibatch size
    batch_mode: Union[str, int] = "full"

    def __post_init__(self):
        if not 0 < self.beta1 < 1 or not 0 < self.beta2 < 1:
            raise ParameterError(f"betas must lie in (0, 1), got {self.beta1}, {self.beta2}")
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.learning_rate > 0:
            raise ParameterError(f"learning rate must be > 0, got {self.learning_rate}")
        if not self.stop_threshold >= 0:
            raise ParameterError(f"stop threshold must be >= 0, got {self.stop_threshold}")
        if self.max_epochs < 1:
            raise ParameterError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.batch_mode != "full":
            if isinstance(self.batch_mode, bool) or not isinstance(self.batch_mode, int) or self.batch_mode < 1:
                raise ParameterError(f"batch_mode must be 'full' or a positive int, got {self.batch_mode!r}")


@dataclass(frozen=True)
class Gradients:
    V: List[np.ndarray]
    Vtilde: List[np.ndarray]
    W: np.ndarray

    def matrices(self):
        return [*self.V, *self.Vtilde, self.W]


@dataclass(frozen=True)
class AdamState:
    m: List[np.ndarray]
    v: List[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params):
        mats = params.matrices()
        return cls([np.zeros_like(a) for a in mats], [np.zeros_like(a) for a in mats], 0)


@dataclass
class TrainLog:
    cost_per_epoch: List[float] = field(default_factory=list)
    epochs_run: int = 0
    stop_reason: Optional[str] = None
    # cost of the returned parameters (one forward pass after the last update)
    final_cost: Optional[float] = None


class WeightCoord(NamedTuple):
    """One scalar weight: ``group`` is "V", "Vtilde" or "W"; ``layer`` is the
    1-based layer number (ignored for W)."""

    group: str
    layer: int
    row: int
    col: int


def cost(X, Xhat):
    X = as_matrix(X, "X")
    Xhat = as_matrix(Xhat, "Xhat")
    if X.shape != Xhat.shape:
        raise ShapeError(f"cost: shape mismatch {X.shape} vs {Xhat.shape}")
    m, n = X.shape
    d = (X - Xhat).ravel()
    return float(np.add.reduce(d * d) / (2.0 * m * n))


def _check_finite(a, where):
    if not np.all(np.isfinite(a)):
        raise NumericError(f"non-finite values in {where}")


def backward(trace, params, X):
    X = as_matrix(X, "X")
    if X.shape != trace.Xhat.shape:
        raise ShapeError(f"backward: target {X.shape} vs reconstruction {trace.Xhat.shape}")
    m, n = X.shape
    xs = trace.X_layers
    s = len(params.V)

    delta = (trace.Xhat - X) / (m * n)
    delta = np.where(trace.Z > 0, delta, 0.0)
    _check_finite(delta, "output layer delta")
    gW = matmul(transpose(xs[s]), delta)
    upstream = matmul(delta, transpose(params.W))

    gV = [None] * s
    gVt = [None] * (s - 1)
    for l in range(s, 0, -1):
        act = xs[l]
        delta = upstream * act * (1.0 - act)
        _check_finite(delta, f"hidden layer {l} delta")
        gV[l - 1] = matmul(transpose(xs[l - 1]), delta)
        if l >= 2:
            gVt[l - 2] = matmul(transpose(xs[0]), delta)
            upstream = matmul(delta, transpose(params.V[l - 1]))
    return Gradients(gV, gVt, gW)


def _coord_matrix_index(params, which):
    s = len(params.V)
    if which.group == "V":
        if not 1 <= which.layer <= s:
            raise ParameterError(f"no V{which.layer} in a network with s={s}")
        return which.layer - 1
    if which.group == "Vtilde":
        if not 2 <= which.layer <= s:
            raise ParameterError(f"no Vtilde{which.layer} in a network with s={s}")
        return s + which.layer - 2
    if which.group == "W":
        return 2 * s - 1
    raise ParameterError(f"unknown weight group {which.group!r}")


def gradient_at(grads, params, which):
    """Pick the analytic gradient entry matching ``which``."""
    idx = _coord_matrix_index(params, which)
    return float(grads.matrices()[idx][which.row, which.col])


def iter_coords(params):
    s = len(params.V)
    for l, V in enumerate(params.V, start=1):
        for i, j in np.ndindex(V.shape):
            yield WeightCoord("V", l, i, j)
    for l, V in enumerate(params.Vtilde, start=2):
        for i, j in np.ndindex(V.shape):
            yield WeightCoord("Vtilde", l, i, j)
    for i, j in np.ndindex(params.W.shape):
        yield WeightCoord("W", s, i, j)


def finite_difference_grad(params, X, which, h=1e-5):
    """Central difference ``(cost(w+h) - cost(w-h)) / 2h`` at one coordinate."""
    if not h > 0:
        raise ParameterError(f"step h must be > 0, got {h}")
    idx = _coord_matrix_index(params, which)

    def cost_with(delta):
        mats = [a.copy() for a in params.matrices()]
        mats[idx][which.row, which.col] += delta
        trace = forward(ModelParams.from_matrices(mats), X)
        return cost(X, trace.Xhat)

    return (cost_with(h) - cost_with(-h)) / (2.0 * h)


def adam_step(params, grads, state, cfg):
    """One Adam update. Returns new ``(params, state)``; inputs are not mutated."""
    t = state.t + 1
    bc1 = 1.0 - cfg.beta1**t
    bc2 = 1.0 - cfg.beta2**t
    new_w, new_m, new_v = [], [], []
    for w, g, m, v in zip(params.matrices(), grads.matrices(), state.m, state.v):
        if w.shape != g.shape or m.shape != w.shape:
            raise ShapeError(f"adam_step: weight {w.shape}, gradient {g.shape}, moment {m.shape}")
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        w = w - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
        _check_finite(w, "Adam update")
        new_w.append(w)
        new_m.append(m)
        new_v.append(v)
    return ModelParams.from_matrices(new_w), AdamState(new_m, new_v, t)


def project_nonnegative(W):
    W = np.asarray(W, dtype=np.float64)
    return np.where(W > 0, W, 0.0)


def _constrain(params, variant):
    if variant is not Variant.NMF:
        return params
    return ModelParams(params.V, params.Vtilde, project_nonnegative(params.W))


def _as_input(X):
    if isinstance(X, FoldedDataset):
        return X.X
    return as_matrix(X, "X")


def fit(X, spec, cfg=TrainConfig(), callback=None):
    """Train a network on folded data.

    Parameters
    ----------
    X : FoldedDataset or ndarray
        Non-negative input with ``spec.widths[0]`` columns.
    spec : ArchitectureSpec
    cfg : TrainConfig
    callback : callable, optional
        Called as ``callback(epoch, params)`` after each epoch's update.

    Returns
    -------
    params : ModelParams
    log : TrainLog
        ``cost_per_epoch[t]`` is the full-data cost at the start of epoch
        ``t + 1``. Training stops once two consecutive costs differ by less
        than ``cfg.stop_threshold`` or ``cfg.max_epochs`` is reached.

    Raises
    ------
    NumericError
        With the partial log attached as ``.log``.
    """
    X = _as_input(X)
    if X.shape[1] != spec.widths[0]:
        raise ShapeError(f"input has {X.shape[1]} columns, architecture expects {spec.widths[0]}")
    params = xavier_init(spec, cfg.seed)
    state = AdamState.zeros_like(params)
    log = TrainLog()
    rng = np.random.default_rng(cfg.seed)
    m = X.shape[0]

    try:
        for epoch in range(1, cfg.max_epochs + 1):
            trace = forward(params, X)
            phi = cost(X, trace.Xhat)
            if not np.isfinite(phi):
                raise NumericError(f"non-finite cost at epoch {epoch}")
            log.cost_per_epoch.append(phi)
            log.epochs_run = epoch

            if cfg.batch_mode == "full":
                grads = backward(trace, params, X)
                params, state = adam_step(params, grads, state, cfg)
                params = _constrain(params, spec.variant)
            else:
                order = rng.permutation(m)
                for start in range(0, m, cfg.batch_mode):
                    batch = X[np.sort(order[start : start + cfg.batch_mode])]
                    grads = backward(forward(params, batch), params, batch)
                    params, state = adam_step(params, grads, state, cfg)
                    params = _constrain(params, spec.variant)
            if callback is not None:
                callback(epoch, params)

            if epoch >= 2 and abs(log.cost_per_epoch[-1] - log.cost_per_epoch[-2]) < cfg.stop_threshold:
                log.stop_reason = "threshold"
                break
        else:
            log.stop_reason = "max_epochs"
        log.final_cost = cost(X, forward(params, X).Xhat)
    except NumericError as exc:
        exc.log = log
        raise
    logger.info("stopped after %d epochs (%s), cost %.6g", log.epochs_run, log.stop_reason, log.final_cost)
    return params, log


def gradient_check(params, X, h=1e-5):
    """Largest ``|analytic - central difference| / max(1, |analytic|)`` over all weights."""
    X = as_matrix(X, "X")
    grads = backward(forward(params, X), params, X)
    worst = 0.0
    for coord in iter_coords(params):
        a = gradient_at(grads, params, coord)
        fd = finite_difference_grad(params, X, coord, h)
        worst = max(worst, abs(a - fd) / max(1.0, abs(a)))
    return worst
