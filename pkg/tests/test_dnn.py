"""
Test the sigmoid network: forward pass, layer diversification, gradients and training
"""
import logging
import math

import numpy as np
import pytest

from src.data import synth_blobs
from src.models.dnn import (
    DrSchedule,
    Mlp,
    OutputKind,
    SideInfoMode,
    backprop_step,
    backward,
    dr_layer_penalty,
    evaluate,
    forward,
    objective,
    objective_gradient,
    predict,
    train_dnn,
)
from src.numerics import finite_diff_grad, make_rng, relative_error
from src.regularization import PairSet, pairs_from_batch, sample_global_pairs
from src.utils.errors import DimensionMismatchError, SideInfoError


@pytest.fixture
def classifier(rng):
    """4-3-3-2 classifier with weights large enough to saturate a little"""
    return Mlp.initialize([4, 3, 3, 2], rng, std=0.8)


@pytest.fixture
def batch(rng):
    """Six inputs with labels and their different-class pairs"""
    inputs = rng.random((6, 4))
    labels = np.array([0, 1, 1, 0, 1, 0])
    return inputs, labels, pairs_from_batch(labels)


@pytest.fixture
def blobs():
    """Well separated three-class train and test sets"""
    train = synth_blobs(20, 3, 8, 0.9, make_rng(1, 1), noise=0.05)
    test = synth_blobs(5, 3, 8, 0.9, make_rng(1, 1), noise=0.05)
    return train, test


def test_mlp_validates_layer_chain():
    """Test weights must chain and carry one bias each"""
    with pytest.raises(DimensionMismatchError):
        Mlp([np.zeros((3, 2)), np.zeros((3, 2))], [np.zeros(2), np.zeros(2)])
    with pytest.raises(DimensionMismatchError):
        Mlp([np.zeros((3, 2))], [np.zeros(3)])
    with pytest.raises(DimensionMismatchError):
        Mlp.initialize([5], make_rng(0))


def test_mlp_shape_properties(classifier):
    """Test sizes and the interleaved parameter order"""
    assert classifier.layer_sizes == [4, 3, 3, 2]
    assert classifier.n_layers == 3
    assert [p.shape for p in classifier.params()[:2]] == [(4, 3), (3,)]
    clone = classifier.copy()
    clone.weights[0][0, 0] += 1.0
    assert clone.weights[0][0, 0] != classifier.weights[0][0, 0]


def test_forward_zero_model():
    """Test zero parameters give 0.5 hidden units and a uniform output"""
    cache = forward(Mlp.zeros([6, 5, 4, 10]), np.ones((2, 6)))
    for h in cache.hidden:
        np.testing.assert_allclose(h, 0.5)
    np.testing.assert_allclose(cache.output, 0.1)
    assert len(cache.activations) == 3


def test_forward_rejects_wrong_width(classifier):
    """Test input width checks"""
    with pytest.raises(DimensionMismatchError):
        forward(classifier, np.zeros((2, 5)))


def test_forward_output_kinds(rng):
    """Test linear and sigmoid heads"""
    linear = Mlp.initialize([3, 2], rng, output=OutputKind.LINEAR)
    x = rng.random((4, 3))
    cache = forward(linear, x)
    np.testing.assert_allclose(cache.output, x @ linear.weights[0])
    squashed = forward(Mlp.initialize([3, 2], rng, output=OutputKind.SIGMOID), x).output
    assert np.all((squashed > 0) & (squashed < 1))


def test_backward_rejects_wrong_hidden_grads(classifier, batch):
    """Test one injected gradient per hidden layer"""
    inputs, _, _ = batch
    cache = forward(classifier, inputs)
    with pytest.raises(DimensionMismatchError):
        backward(classifier, cache, np.zeros((6, 2)), [None])


def test_dr_layer_penalty_values():
    """Test squared distances"""
    assert dr_layer_penalty(np.array([0.3, 0.4]), np.array([0.3, 0.4])) == 0.0
    assert dr_layer_penalty(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(2.0)
    with pytest.raises(DimensionMismatchError):
        dr_layer_penalty(np.zeros(2), np.zeros(3))


def test_schedule_decay():
    """Test alpha shrinks by 10% per epoch from 50"""
    schedule = DrSchedule(50.0, 0.9)
    assert [schedule.effective_alpha(e) for e in range(3)] == pytest.approx([50.0, 45.0, 40.5])
    np.testing.assert_allclose(DrSchedule(2.0, 1.0, (1.0, 0.5)).layer_alphas(0, 2), [2.0, 1.0])
    with pytest.raises(DimensionMismatchError):
        DrSchedule(2.0, 1.0, (1.0,)).layer_alphas(0, 2)


def test_schedule_validation():
    """Test invalid coefficients are rejected"""
    with pytest.raises(ValueError):
        DrSchedule(-1.0)
    with pytest.raises(ValueError):
        DrSchedule(1.0, 0.0)
    with pytest.raises(ValueError):
        DrSchedule(1.0, 1.0, (-0.1,))


def test_objective_without_regularization_is_cross_entropy(batch):
    """Test a zeroed schedule leaves plain cross-entropy"""
    inputs, labels, pairs = batch
    value = objective(Mlp.zeros([4, 3, 2]), inputs, labels, pairs, DrSchedule.off(), 0)
    assert value == pytest.approx(math.log(2.0))


def test_objective_subtracts_pair_distances(classifier, batch):
    """Test the diversification term lowers J by alpha/|B| times the distances"""
    inputs, labels, pairs = batch
    plain = objective(classifier, inputs, labels, pairs, DrSchedule.off(), 0)
    regularized = objective(classifier, inputs, labels, pairs, DrSchedule(2.0), 0)
    cache = forward(classifier, inputs)
    distance = sum(dr_layer_penalty(h[p], h[q]) for h in cache.hidden for p, q in pairs)
    assert plain - regularized == pytest.approx(2.0 * distance / 6)


def test_objective_rejects_bad_pairs(classifier, batch):
    """Test pair indices outside the batch are rejected"""
    inputs, labels, _ = batch
    with pytest.raises(SideInfoError):
        objective(classifier, inputs, labels, PairSet(np.array([[0, 7]])), DrSchedule(1.0), 0)


def test_objective_needs_softmax_output(rng, batch):
    """Test regression heads cannot be trained as classifiers"""
    inputs, labels, pairs = batch
    with pytest.raises(ValueError):
        objective(Mlp.initialize([4, 2], rng, output=OutputKind.LINEAR), inputs, labels, pairs, DrSchedule.off(), 0)


@pytest.mark.parametrize("schedule, norm_penalty", [
    (DrSchedule.off(), 0.0),
    (DrSchedule(3.0, 0.9), 0.0),
    (DrSchedule(1.5, 1.0, (0.5, 2.0)), 0.01),
])
def test_objective_gradient_matches_finite_differences(classifier, batch, schedule, norm_penalty):
    """Test backprop with injected pair gradients against the oracle"""
    inputs, labels, pairs = batch
    grads = objective_gradient(classifier, inputs, labels, pairs, schedule, 1, norm_penalty)
    params = classifier.params()

    for index, analytic in enumerate(grads):
        def f(value, index=index):
            probe = list(params)
            probe[index] = value
            return objective(classifier.with_params(probe), inputs, labels, pairs, schedule, 1, norm_penalty)

        assert relative_error(analytic, finite_diff_grad(f, params[index])) <= 1e-4


def test_backprop_step_alpha_zero_matches_plain(classifier, batch):
    """Test all-zero coefficients reproduce the plain backprop step"""
    inputs, labels, pairs = batch
    with_pairs, metrics = backprop_step(classifier, inputs, labels, pairs, DrSchedule(0.0, 0.5), 0, 0.3)
    plain, _ = backprop_step(classifier, inputs, labels, PairSet.empty(), DrSchedule.off(), 0, 0.3)
    for a, b in zip(with_pairs.params(), plain.params()):
        np.testing.assert_array_equal(a, b)
    assert metrics["dr_value"] > 0.0
    with pytest.raises(ValueError):
        backprop_step(classifier, inputs, labels, pairs, DrSchedule.off(), 0, 0.0)


def test_backprop_step_increases_distances(classifier, batch):
    """Test a strongly regularized step pushes pairs apart"""
    inputs, labels, pairs = batch

    def distance(model):
        cache = forward(model, inputs)
        return sum(dr_layer_penalty(h[p], h[q]) for h in cache.hidden for p, q in pairs)

    updated, _ = backprop_step(classifier, inputs, labels, pairs, DrSchedule(50.0), 0, 1e-3)
    assert distance(updated) > distance(classifier)


def test_evaluate_uniform_model_breaks_ties_low():
    """Test a uniform model predicts class 0 everywhere"""
    labels = np.array([0, 1, 2, 0, 2])
    model = Mlp.zeros([3, 4, 3])
    np.testing.assert_array_equal(predict(model, np.ones((5, 3))), 0)
    assert evaluate(model, np.ones((5, 3)), labels) == pytest.approx(1.0 - 2 / 5)
    with pytest.raises(ValueError):
        evaluate(model, np.zeros((0, 3)), np.zeros(0, dtype=int))


def test_train_dnn_curve_columns(blobs):
    """Test one row per epoch with the decayed alpha"""
    train, test = blobs
    model = Mlp.initialize([8, 6, 3], make_rng(3))
    pairs = sample_global_pairs(train.labels, 200, make_rng(3, 2))
    _, curve = train_dnn(model, train, test, DrSchedule(4.0, 0.5), 0.5, 3, 10, make_rng(4),
                         global_pairs=pairs)
    assert curve.column("effective_alpha") == pytest.approx([4.0, 2.0, 1.0])
    assert all(0.0 <= e <= 1.0 for e in curve.column("test_error"))
    assert all(c > 0.0 for c in curve.column("cost"))


def test_train_dnn_learns_separable_blobs(blobs):
    """Test plain backprop fits well separated blobs"""
    train, test = blobs
    model = Mlp.initialize([8, 6, 3], make_rng(3))
    trained, curve = train_dnn(model, train, test, DrSchedule.off(), 2.0, 60, 10, make_rng(4),
                               side_info=SideInfoMode.BATCH)
    assert curve.column("cost")[-1] < curve.column("cost")[0]
    assert evaluate(trained, train.inputs, train.labels) <= 0.2


def test_train_dnn_zero_alpha_equals_plain(blobs):
    """Test zero coefficients and equal seeds give identical training"""
    train, test = blobs
    pairs = sample_global_pairs(train.labels, 100, make_rng(5))
    runs = [
        train_dnn(Mlp.initialize([8, 5, 3], make_rng(6)), train, test, schedule, 0.5, 2, 15, make_rng(7),
                  global_pairs=pairs)[0]
        for schedule in (DrSchedule(0.0), DrSchedule.off())
    ]
    for a, b in zip(runs[0].params(), runs[1].params()):
        np.testing.assert_array_equal(a, b)


def test_train_dnn_needs_two_classes(blobs):
    """Test regularized training rejects single-class data"""
    train, test = blobs
    single = train.subset(np.arange(20))
    with pytest.raises(SideInfoError):
        train_dnn(Mlp.initialize([8, 5, 3], make_rng(6)), single, test, DrSchedule(1.0), 0.5, 1, 5, make_rng(7))


def test_predict_ignores_logit_shift(classifier, rng):
    """Test adding a constant to every output logit keeps the argmax"""
    inputs = rng.random((50, 4))
    shifted = classifier.copy()
    shifted.biases[-1] = shifted.biases[-1] + 7.5
    np.testing.assert_array_equal(predict(shifted, inputs), predict(classifier, inputs))


def test_single_layer_matches_softmax_regression(rng):
    """Test a network without hidden layers is multinomial logistic regression"""
    model = Mlp.initialize([4, 3], rng, std=0.5)
    inputs = rng.random((7, 4))
    labels = np.array([0, 2, 1, 1, 0, 2, 2])
    omega = 0.1
    w, b = model.weights[0], model.biases[0]

    logits = inputs @ w + b
    probs = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    onehot = np.eye(3)[labels]
    expected_cost = -np.mean(np.log(probs[np.arange(7), labels])) + omega * np.sum(w * w)
    expected_w = inputs.T @ (probs - onehot) / 7 + 2.0 * omega * w
    expected_b = np.mean(probs - onehot, axis=0)

    cost = objective(model, inputs, labels, PairSet.empty(), DrSchedule.off(), 0, norm_penalty=omega)
    grad_w, grad_b = objective_gradient(model, inputs, labels, PairSet.empty(), DrSchedule.off(), 0,
                                        norm_penalty=omega)
    assert cost == pytest.approx(expected_cost, abs=1e-12)
    np.testing.assert_allclose(grad_w, expected_w, atol=1e-12)
    np.testing.assert_allclose(grad_b, expected_b, atol=1e-12)


def test_train_dnn_warns_without_global_pairs(blobs, caplog):
    """Test a positive alpha with no global pairs is reported"""
    train, test = blobs
    with caplog.at_level(logging.WARNING, logger="diversifying_regularization"):
        train_dnn(Mlp.initialize([8, 5, 3], make_rng(6)), train, test, DrSchedule(5.0, 0.9), 0.5, 1, 15,
                  make_rng(7), side_info=SideInfoMode.GLOBAL, global_pairs=None, arm="lonely")
    assert any("no global pairs" in r.getMessage() and "[lonely]" in r.getMessage() for r in caplog.records)


def test_train_dnn_batch_mode_does_not_warn(blobs, caplog):
    """Test batch side information needs no global pairs"""
    train, test = blobs
    with caplog.at_level(logging.WARNING, logger="diversifying_regularization"):
        train_dnn(Mlp.initialize([8, 5, 3], make_rng(6)), train, test, DrSchedule(5.0, 0.9), 0.5, 1, 15,
                  make_rng(7), side_info=SideInfoMode.BATCH)
    assert not [r for r in caplog.records if "no global pairs" in r.getMessage()]


@pytest.mark.slow
@pytest.mark.parametrize("seed", [11, 12, 13])
def test_train_dnn_diversification_spreads_hidden_layers(blobs, seed):
    """Test the pair distance grows under diversification and ends above the plain arm"""
    train, test = blobs
    pairs = sample_global_pairs(train.labels, 300, make_rng(seed, 2))
    initial = Mlp.initialize([8, 6, 6, 3], make_rng(seed))
    curves = {
        name: train_dnn(initial.copy(), train, test, schedule, 0.2, 30, 10, make_rng(seed, 3),
                        global_pairs=pairs)[1].column("dr_value")
        for name, schedule in (("dr", DrSchedule(2.0)), ("plain", DrSchedule.off()))
    }
    dr = curves["dr"]
    assert np.mean(dr[-5:]) > np.mean(dr[:5])
    assert np.mean(dr[-5:]) > np.mean(curves["plain"][-5:])
