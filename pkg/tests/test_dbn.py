"""
Test DBN stacking, upward propagation, greedy pretraining and export to a classifier
"""
import numpy as np
import pytest

from src.data import binary_blobs
from src.models.dbn import DbnStack, export_mlp, pretrain_layerwise, propagate_up
from src.models.dnn import OutputKind, forward
from src.models.rbm import Rbm, exact_pseudo_log_likelihood, mean_field_posterior
from src.numerics import make_rng
from src.utils.errors import DimensionMismatchError, SideInfoError


@pytest.fixture
def stack(rng):
    """Two-layer 6-4-3 stack with random parameters"""
    return DbnStack([
        Rbm(rng.normal(0.0, 0.5, (6, 4)), np.zeros(6), rng.normal(0.0, 0.5, 4)),
        Rbm(rng.normal(0.0, 0.5, (4, 3)), np.zeros(4), rng.normal(0.0, 0.5, 3)),
    ])


@pytest.fixture
def corpus():
    """Binary prototypes of two classes"""
    return binary_blobs(8, 2, 6, make_rng(2, 1))


def test_stack_rejects_broken_chain():
    """Test adjacent layers must share units"""
    with pytest.raises(DimensionMismatchError):
        DbnStack([Rbm.zeros(6, 4), Rbm.zeros(5, 3)])


def test_stack_sizes(stack):
    """Test depth and layer sizes"""
    assert stack.depth == 2
    assert stack.layer_sizes == [6, 4, 3]
    assert DbnStack().layer_sizes == []
    assert stack.push(Rbm.zeros(3, 2)).depth == 3


def test_propagate_up_identity_at_layer_zero(stack, rng):
    """Test layer 0 returns the input"""
    x = rng.random((3, 6))
    np.testing.assert_array_equal(propagate_up(stack, x, 0), x)


def test_propagate_up_feeds_means(stack, rng):
    """Test each layer applies the posterior to the means below"""
    x = rng.random((3, 6))
    expected = mean_field_posterior(stack.layers[1], mean_field_posterior(stack.layers[0], x))
    np.testing.assert_allclose(propagate_up(stack, x, 2), expected)


def test_propagate_up_zero_stack():
    """Test zero parameters give 0.5 at every layer"""
    zero = DbnStack([Rbm.zeros(5, 4), Rbm.zeros(4, 2)])
    for layer in (1, 2):
        np.testing.assert_allclose(propagate_up(zero, np.ones(5), layer), 0.5)


def test_propagate_up_range(stack):
    """Test out-of-range layers raise"""
    with pytest.raises(IndexError):
        propagate_up(stack, np.zeros(6), 3)
    with pytest.raises(IndexError):
        propagate_up(stack, np.zeros(6), -1)


def test_pretrain_layerwise_builds_requested_stack(corpus):
    """Test one trained RBM and one curve per hidden size"""
    stack, curves = pretrain_layerwise(corpus.inputs, corpus.labels, [4, 3], 0.05, 5.0, 1, 2, 4, make_rng(3))
    assert stack.layer_sizes == [6, 4, 3]
    assert [len(c) for c in curves] == [2, 2]


def test_pretrain_layerwise_is_deterministic(corpus):
    """Test equal seeds give identical stacks"""
    runs = [pretrain_layerwise(corpus.inputs, corpus.labels, [4, 3], 0.05, 5.0, 1, 2, 4, make_rng(3))[0]
            for _ in range(2)]
    for a, b in zip(runs[0].layers, runs[1].layers):
        np.testing.assert_array_equal(a.weights, b.weights)


def test_pretrain_layerwise_validation(corpus):
    """Test empty sizes and missing labels"""
    with pytest.raises(ValueError):
        pretrain_layerwise(corpus.inputs, corpus.labels, [], 0.05, 0.0, 1, 1, 4, make_rng(3))
    with pytest.raises(SideInfoError):
        pretrain_layerwise(corpus.inputs, None, [4], 0.05, 1.0, 1, 1, 4, make_rng(3))


def test_pretrain_without_labels_when_unregularized(corpus):
    """Test plain CD-k pretraining needs no labels"""
    stack, _ = pretrain_layerwise(corpus.inputs, None, [3], 0.05, 0.0, 1, 1, 4, make_rng(3))
    assert stack.depth == 1


def test_export_mlp_appends_output_layer(stack, rng):
    """Test hidden layers copy the stack and a softmax head is added"""
    mlp = export_mlp(stack, 5, rng)
    assert mlp.layer_sizes == [6, 4, 3, 5]
    assert mlp.output is OutputKind.SOFTMAX
    np.testing.assert_array_equal(mlp.weights[0], stack.layers[0].weights)
    np.testing.assert_array_equal(mlp.biases[1], stack.layers[1].hidden_bias)
    x = rng.random((2, 6))
    np.testing.assert_allclose(forward(mlp, x).hidden[-1], propagate_up(stack, x, 2))


def test_export_mlp_reuses_matching_top(stack, rng):
    """Test a top layer with one unit per class becomes the pre-softmax layer"""
    mlp = export_mlp(stack, 3, rng)
    assert mlp.layer_sizes == [6, 4, 3]
    mlp.weights[0][0, 0] += 1.0
    assert stack.layers[0].weights[0, 0] != mlp.weights[0][0, 0]


def test_export_mlp_preserves_depth(rng):
    """Test ten pretrained layers give ten hidden layers plus the output"""
    sizes = [8] * 11
    deep = DbnStack([Rbm.zeros(a, b) for a, b in zip(sizes, sizes[1:])])
    assert export_mlp(deep, 10, rng).n_layers == 11
    with pytest.raises(ValueError):
        export_mlp(DbnStack(), 10, rng)


def test_pretrain_zero_alpha_ignores_labels(corpus):
    """Test every layer is identical with or without labels when alpha is 0"""
    runs = [pretrain_layerwise(corpus.inputs, labels, [4, 3], 0.05, 0.0, 1, 3, 4, make_rng(3))
            for labels in (corpus.labels, None)]
    for a, b in zip(runs[0][0].layers, runs[1][0].layers):
        for p, q in zip(a.params(), b.params()):
            np.testing.assert_array_equal(p, q)
    for a, b in zip(runs[0][1], runs[1][1]):
        assert a.column("pll") == b.column("pll")


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.0, 1.0])
def test_pretraining_raises_bottom_layer_pll(alpha):
    """Test the pseudo-log-likelihood of the first layer improves over training"""
    corpus = binary_blobs(8, 2, 6, make_rng(4, 1))
    stack, curves = pretrain_layerwise(corpus.inputs, corpus.labels, [4], 0.05, alpha, 1, 40, 4, make_rng(5))
    pll = curves[0].column("pll")
    assert np.mean(pll[-5:]) > np.mean(pll[:3])
    initial = Rbm.initialize(6, 4, make_rng(5))
    assert exact_pseudo_log_likelihood(stack.layers[0], corpus.inputs) > exact_pseudo_log_likelihood(
        initial, corpus.inputs)
