import numpy as np
import pytest

from igmdsr.cli import gradcheck_problem
from igmdsr.errors import NumericError, ParameterError, ShapeError
from igmdsr.model import ArchitectureSpec, ModelParams, Variant, forward, sigmoid, relu, xavier_init
from igmdsr.preprocess import fold
from igmdsr.training import (
    AdamState,
    Gradients,
    TrainConfig,
    WeightCoord,
    adam_step,
    backward,
    cost,
    finite_difference_grad,
    fit,
    gradient_at,
    gradient_check,
    iter_coords,
    project_nonnegative,
)


def test_cost_examples(rng):
    X = rng.random((3, 4))
    assert cost(X, X) == 0.0
    assert cost([[1.0, 0.0]], [[0.0, 0.0]]) == 0.25
    with pytest.raises(ShapeError):
        cost(np.ones((2, 2)), np.ones((2, 3)))


def test_cost_matches_scalar_loop(rng):
    X, Xh = rng.random((5, 7)), rng.random((5, 7))
    acc = 0.0
    for p in range(5):
        for j in range(7):
            acc += (X[p, j] - Xh[p, j]) ** 2
    assert cost(X, Xh) == pytest.approx(acc / (2 * 5 * 7), abs=1e-12)


def test_backward_perfect_fit_has_zero_gradient(rng):
    p = xavier_init(ArchitectureSpec((6, 5, 4, 3)), 0)
    trace = forward(p, rng.random((8, 6)))
    for g in backward(trace, p, trace.Xhat).matrices():
        np.testing.assert_array_equal(g, 0.0)


def test_backward_zero_weights_kills_output_gradient(rng):
    p = ModelParams([np.zeros((6, 4)), np.zeros((4, 3))], [np.zeros((6, 3))], np.zeros((3, 6)))
    X = rng.random((5, 6))
    grads = backward(forward(p, X), p, X)
    for g in grads.matrices():
        np.testing.assert_array_equal(g, 0.0)


@pytest.mark.parametrize("variant", list(Variant))
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_backward_matches_central_differences(variant, seed):
    X, params = gradcheck_problem(seed, variant)
    assert X.shape == (8, 6) and params.widths == (6, 5, 4, 3)
    grads = backward(forward(params, X), params, X)
    n_coords = 0
    for coord in iter_coords(params):
        a = gradient_at(grads, params, coord)
        fd = finite_difference_grad(params, X, coord, 1e-5)
        assert abs(a - fd) / max(1.0, abs(a)) < 1e-5
        # the gradients here are O(1e-2); also hold a scale-aware bound
        assert abs(a - fd) <= 1e-5 * abs(a) + 1e-10
        n_coords += 1
    assert n_coords == 6 * 5 + 5 * 4 + 4 * 3 + 6 * 4 + 6 * 3 + 3 * 6


def test_rnmf_gradcheck_exercises_relu_mask():
    X, params = gradcheck_problem(0, Variant.RNMF)
    Z = forward(params, X).Z
    assert (Z < 0).any() and (Z > 0).any()


def test_finite_difference_quadratic_toy():
    # single input 1.0, W scalar: Xhat = relu(sigmoid(.) * w); cost is quadratic in w
    p = ModelParams([np.array([[0.3]]), np.array([[-0.2]])], [np.array([[0.1]])], np.array([[1.7]]))
    X = np.array([[0.4]])
    b = forward(p, X).X_layers[-1][0, 0]
    analytic = (b * 1.7 - 0.4) * b
    for h in (1e-2, 1e-3):
        fd = finite_difference_grad(p, X, WeightCoord("W", 2, 0, 0), h)
        # exact for a quadratic; allow rounding only
        assert fd == pytest.approx(analytic, abs=1e-9)


def test_finite_difference_rejects_bad_step():
    X, p = gradcheck_problem(0, Variant.NMF)
    with pytest.raises(ParameterError):
        finite_difference_grad(p, X, WeightCoord("W", 3, 0, 0), 0.0)
    with pytest.raises(ParameterError):
        finite_difference_grad(p, X, WeightCoord("Vtilde", 1, 0, 0), 1e-5)


def test_gradient_check_helper_small():
    X, p = gradcheck_problem(4, Variant.RNMF)
    assert gradient_check(p, X) < 1e-5


def _single_weight(w):
    return ModelParams([np.array([[0.0]]), np.array([[0.0]])], [np.array([[0.0]])], np.array([[w]]))


def test_adam_first_step_hand_value():
    params = _single_weight(0.5)
    ones = Gradients([np.zeros((1, 1))] * 2, [np.zeros((1, 1))], np.array([[1.0]]))
    new, state = adam_step(params, ones, AdamState.zeros_like(params), TrainConfig())
    # m = 0.1, v = 0.001; bias-corrected both become 1
    assert new.W[0, 0] - 0.5 == pytest.approx(-0.001 / (1 + 1e-8), rel=1e-12)
    assert state.t == 1
    assert state.m[-1][0, 0] == pytest.approx(0.1)
    assert state.v[-1][0, 0] == pytest.approx(0.001)


def test_adam_zero_gradient_keeps_params():
    X, params = gradcheck_problem(0, Variant.NMF)
    zeros = Gradients(*[[np.zeros_like(v) for v in params.V], [np.zeros_like(v) for v in params.Vtilde], np.zeros_like(params.W)])
    new, _ = adam_step(params, zeros, AdamState.zeros_like(params), TrainConfig())
    for a, b in zip(params.matrices(), new.matrices()):
        np.testing.assert_array_equal(a, b)


def test_adam_non_finite_update_raises():
    params = _single_weight(0.5)
    bad = Gradients([np.zeros((1, 1))] * 2, [np.zeros((1, 1))], np.array([[np.nan]]))
    with pytest.raises(NumericError):
        adam_step(params, bad, AdamState.zeros_like(params), TrainConfig())


def test_project_nonnegative():
    np.testing.assert_array_equal(project_nonnegative([[-1.0, 2.0]]), [[0.0, 2.0]])
    W = np.array([[0.0, 3.0], [1.0, 2.0]])
    np.testing.assert_array_equal(project_nonnegative(W), W)
    M = np.random.default_rng(0).normal(size=(4, 4))
    np.testing.assert_array_equal(project_nonnegative(project_nonnegative(M)), project_nonnegative(M))


@pytest.mark.parametrize(
    "kwargs",
    [dict(beta1=1.0), dict(beta2=0.0), dict(epsilon=0.0), dict(learning_rate=-1.0),
     dict(stop_threshold=-1.0), dict(max_epochs=0), dict(batch_mode=0), dict(batch_mode="mini")],
)
def test_train_config_validation(kwargs):
    with pytest.raises(ParameterError):
        TrainConfig(**kwargs)


@pytest.fixture
def small_data(rng):
    return fold(rng.normal(size=(12, 4)))


def test_fit_huge_threshold_stops_after_two_epochs(small_data):
    _, log = fit(small_data, ArchitectureSpec((8, 6, 4, 2)), TrainConfig(stop_threshold=1e9))
    assert log.epochs_run == 2 and len(log.cost_per_epoch) == 2
    assert log.stop_reason == "threshold"


def test_fit_single_epoch(small_data):
    _, log = fit(small_data, ArchitectureSpec((8, 6, 4, 2)), TrainConfig(max_epochs=1))
    assert log.stop_reason == "max_epochs" and log.epochs_run == 1 and len(log.cost_per_epoch) == 1


def test_fit_width_mismatch(small_data):
    with pytest.raises(ShapeError):
        fit(small_data, ArchitectureSpec((10, 6, 4, 2)), TrainConfig(max_epochs=1))


def test_fit_reproducible(small_data):
    cfg = TrainConfig(max_epochs=50, seed=3)
    spec = ArchitectureSpec((8, 6, 4, 2), "rnmf")
    p1, l1 = fit(small_data, spec, cfg)
    p2, l2 = fit(small_data, spec, cfg)
    assert np.array(l1.cost_per_epoch).tobytes() == np.array(l2.cost_per_epoch).tobytes()
    assert all(a.tobytes() == b.tobytes() for a, b in zip(p1.matrices(), p2.matrices()))


def test_fit_nmf_keeps_w_nonnegative_every_epoch(small_data):
    seen = []
    fit(small_data, ArchitectureSpec((8, 6, 4, 2), "nmf"), TrainConfig(max_epochs=300, stop_threshold=0, learning_rate=0.01),
        callback=lambda epoch, p: seen.append(p.W.min()))
    assert len(seen) == 300 and min(seen) >= 0


def _mixed_sign_task(seed=0):
    rng = np.random.default_rng(seed)
    return relu(sigmoid(rng.normal(size=(30, 3))) @ rng.normal(size=(3, 12)))


def test_fit_rnmf_keeps_negative_w():
    params, _ = fit(_mixed_sign_task(), ArchitectureSpec((12, 8, 5, 3), "rnmf"),
                    TrainConfig(max_epochs=500, stop_threshold=0, learning_rate=0.01))
    assert params.W.min() < 0


def test_fit_minibatch_runs_and_projects(small_data):
    seen = []
    params, log = fit(small_data, ArchitectureSpec((8, 6, 4, 2), "nmf"),
                      TrainConfig(max_epochs=20, stop_threshold=0, batch_mode=5, learning_rate=0.01),
                      callback=lambda epoch, p: seen.append(p.W.min()))
    assert log.epochs_run == 20 and min(seen) >= 0
    assert log.cost_per_epoch[-1] < log.cost_per_epoch[0]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_fit_numeric_error_carries_partial_log(small_data):
    cfg = TrainConfig(max_epochs=5, stop_threshold=0, learning_rate=1e308)
    with pytest.raises(NumericError) as info:
        fit(small_data, ArchitectureSpec((8, 6, 4, 2)), cfg)
    assert info.value.log is not None and info.value.log.epochs_run >= 1
    assert len(info.value.log.cost_per_epoch) == info.value.log.epochs_run


def test_fit_final_cost_is_cost_of_returned_params(small_data):
    params, log = fit(small_data, ArchitectureSpec((8, 6, 4, 2)), TrainConfig(max_epochs=10))
    assert log.final_cost == cost(small_data.X, forward(params, small_data.X).Xhat)
