"""
Sigmoid Networks - Fully connected MLP trained by backprop with layer-wise diversification

Hidden layers use the logistic function; the output layer is a softmax
classifier, or a linear / sigmoid head when the network serves as a VAE
encoder or decoder. The classifier objective is

    J = mean cross-entropy + omega * sum ||W||^2
        - (1/|B|) sum_pairs sum_l alpha_l ||h_p^l - h_q^l||^2

over the hidden layers l, so every hidden layer receives gradient signal
that pushes different-class activations apart.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.data.datasets import LabeledDataset, minibatches
from src.experiments.curves import DNN_COLUMNS, LearningCurve
from src.numerics import DenseMatrix, DenseVector, RngState, log_softmax, sigmoid, softmax
from src.regularization.sideinfo import PairSet, precompute_batch_pairs
from src.utils.errors import DimensionMismatchError, NonFiniteError, SideInfoError
from src.utils.logging import logger

INIT_STD = 0.1


class OutputKind(str, Enum):
    """Activation of the last layer"""
    SOFTMAX = "softmax"
    LINEAR = "linear"
    SIGMOID = "sigmoid"


class SideInfoMode(str, Enum):
    """How minibatches obtain their pairs"""
    GLOBAL = "global"  # pre-sampled dataset pairs restricted to each batch
    BATCH = "batch"  # every different-class pair inside the batch


@dataclass
class Mlp:
    """Layers of (weights, bias); weights[l] maps layer l to layer l + 1"""
    weights: List[DenseMatrix]
    biases: List[DenseVector]
    output: OutputKind = OutputKind.SOFTMAX

    def __post_init__(self):
        self.weights = [np.array(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.array(b, dtype=np.float64) for b in self.biases]
        self.output = OutputKind(self.output)
        if not self.weights or len(self.weights) != len(self.biases):
            raise DimensionMismatchError(
                f"need one bias per weight matrix, got {len(self.weights)} and {len(self.biases)}"
            )
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DimensionMismatchError(f"layer {l}: weights {w.shape} with bias {b.shape}")
            if l and w.shape[0] != self.weights[l - 1].shape[1]:
                raise DimensionMismatchError(
                    f"layer {l} expects {w.shape[0]} inputs, layer {l - 1} gives {self.weights[l - 1].shape[1]}"
                )
        if not all(np.all(np.isfinite(p)) for p in self.params()):
            raise NonFiniteError("MLP parameters must be finite")

    @classmethod
    def initialize(cls, layer_sizes: Sequence[int], rng: RngState, std: float = INIT_STD,
                   output: OutputKind = OutputKind.SOFTMAX) -> "Mlp":
        """Gaussian weights with the given std, zero biases"""
        if len(layer_sizes) < 2:
            raise DimensionMismatchError(f"need at least input and output sizes, got {list(layer_sizes)}")
        weights = [rng.normal(0.0, std, size=(n_in, n_out)) for n_in, n_out in zip(layer_sizes, layer_sizes[1:])]
        return cls(weights, [np.zeros(n) for n in layer_sizes[1:]], output)

    @classmethod
    def zeros(cls, layer_sizes: Sequence[int], output: OutputKind = OutputKind.SOFTMAX) -> "Mlp":
        return cls([np.zeros((a, b)) for a, b in zip(layer_sizes, layer_sizes[1:])],
                   [np.zeros(n) for n in layer_sizes[1:]], output)

    @property
    def layer_sizes(self) -> List[int]:
        return [int(self.weights[0].shape[0])] + [int(w.shape[1]) for w in self.weights]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def n_inputs(self) -> int:
        return int(self.weights[0].shape[0])

    @property
    def n_outputs(self) -> int:
        return int(self.weights[-1].shape[1])

    def params(self) -> List[np.ndarray]:
        """[W_0, b_0, W_1, b_1, ...]"""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def with_params(self, params: Sequence[np.ndarray]) -> "Mlp":
        return Mlp(list(params[0::2]), list(params[1::2]), self.output)

    def copy(self) -> "Mlp":
        return self.with_params([p.copy() for p in self.params()])


@dataclass
class ForwardCache:
    """Every activation of one forward pass over a batch"""
    inputs: np.ndarray
    hidden: List[np.ndarray]
    preactivation: np.ndarray
    output: np.ndarray

    @property
    def activations(self) -> List[np.ndarray]:
        """h^1 .. h^{L-1} followed by the output"""
        return [*self.hidden, self.output]


def _output_activation(kind: OutputKind, preactivation: np.ndarray) -> np.ndarray:
    if kind is OutputKind.SOFTMAX:
        return softmax(preactivation)
    if kind is OutputKind.SIGMOID:
        return sigmoid(preactivation)
    return preactivation


def forward(model: Mlp, x: np.ndarray) -> ForwardCache:
    """
    Forward pass caching every hidden activation

    Args:
        model: Network
        x: Input vector or (batch, n_inputs) matrix

    Returns:
        ForwardCache with 2-d arrays (a vector input becomes one row)
    """
    inputs = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if inputs.ndim != 2 or inputs.shape[1] != model.n_inputs:
        raise DimensionMismatchError(f"expected {model.n_inputs} inputs, got shape {np.shape(x)}")
    hidden = []
    current = inputs
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        current = sigmoid(current @ w + b)
        hidden.append(current)
    preactivation = current @ model.weights[-1] + model.biases[-1]
    return ForwardCache(inputs, hidden, preactivation, _output_activation(model.output, preactivation))


def backward(model: Mlp, cache: ForwardCache, d_preactivation: np.ndarray,
             hidden_grads: Optional[Sequence[Optional[np.ndarray]]] = None) -> Tuple[List[np.ndarray], np.ndarray]:
    """
    Chain rule from the output pre-activation back to the inputs

    Args:
        model: Network the cache came from
        cache: Forward pass
        d_preactivation: Derivative w.r.t. the output pre-activation (batch, n_outputs)
        hidden_grads: Optional extra derivatives w.r.t. each hidden activation
            h^1..h^{L-1}, injected as the pass reaches that layer

    Returns:
        (gradients aligned with model.params(), derivative w.r.t. the inputs)
    """
    if hidden_grads is not None and len(hidden_grads) != len(cache.hidden):
        raise DimensionMismatchError(f"{len(hidden_grads)} hidden gradients for {len(cache.hidden)} hidden layers")
    grads: List[np.ndarray] = [np.empty(0)] * (2 * model.n_layers)
    delta = np.asarray(d_preactivation, dtype=np.float64)
    for l in range(model.n_layers - 1, 0, -1):
        below = cache.hidden[l - 1]
        grads[2 * l] = below.T @ delta
        grads[2 * l + 1] = delta.sum(axis=0)
        d_below = delta @ model.weights[l].T
        if hidden_grads is not None and hidden_grads[l - 1] is not None:
            d_below = d_below + hidden_grads[l - 1]
        delta = d_below * below * (1.0 - below)
    grads[0] = cache.inputs.T @ delta
    grads[1] = delta.sum(axis=0)
    return grads, delta @ model.weights[0].T


@dataclass(frozen=True)
class DrSchedule:
    """alpha_l(epoch) = alpha0 * decay^epoch * per_layer_scale[l]"""
    alpha0: float = 0.0
    decay: float = 1.0
    per_layer_scale: Optional[Tuple[float, ...]] = field(default=None)

    def __post_init__(self):
        if self.alpha0 < 0:
            raise ValueError(f"alpha0 must be non-negative, got {self.alpha0}")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError(f"decay must lie in (0, 1], got {self.decay}")
        if self.per_layer_scale is not None:
            object.__setattr__(self, "per_layer_scale", tuple(float(s) for s in self.per_layer_scale))
            if any(s < 0 for s in self.per_layer_scale):
                raise ValueError("per_layer_scale entries must be non-negative")

    @classmethod
    def off(cls) -> "DrSchedule":
        return cls(0.0, 1.0)

    def effective_alpha(self, epoch: int) -> float:
        return float(self.alpha0 * self.decay ** epoch)

    def layer_alphas(self, epoch: int, n_hidden_layers: int) -> np.ndarray:
        """alpha_l for each hidden layer at the given epoch"""
        if self.per_layer_scale is None:
            scale = np.ones(n_hidden_layers)
        else:
            scale = np.asarray(self.per_layer_scale)
            if scale.shape != (n_hidden_layers,):
                raise DimensionMismatchError(
                    f"{scale.shape[0]} per-layer scales for {n_hidden_layers} hidden layers"
                )
        return self.effective_alpha(epoch) * scale


def dr_layer_penalty(h_p: np.ndarray, h_q: np.ndarray) -> float:
    """Squared Euclidean distance ||h_p - h_q||^2"""
    h_p = np.asarray(h_p, dtype=np.float64)
    h_q = np.asarray(h_q, dtype=np.float64)
    if h_p.shape != h_q.shape:
        raise DimensionMismatchError(f"activation lengths differ: {h_p.shape} vs {h_q.shape}")
    return float(np.sum((h_p - h_q) ** 2))


def _check_classifier(model: Mlp, batch: np.ndarray, labels: np.ndarray, pairs: PairSet):
    if model.output is not OutputKind.SOFTMAX:
        raise ValueError(f"classification needs a softmax output, got {model.output.value}")
    if labels.shape != (batch.shape[0],):
        raise DimensionMismatchError(f"{labels.shape} labels for {batch.shape[0]} examples")
    if labels.size and (labels.min() < 0 or labels.max() >= model.n_outputs):
        raise DimensionMismatchError(f"labels must lie in [0, {model.n_outputs})")
    if len(pairs) and (pairs.pairs.min() < 0 or pairs.pairs.max() >= batch.shape[0]):
        raise SideInfoError(f"pair index out of range for a batch of {batch.shape[0]}")


def _layer_distances(cache: ForwardCache, pairs: PairSet) -> np.ndarray:
    """sum over pairs of ||h_p^l - h_q^l||^2, one entry per hidden layer"""
    if len(pairs) == 0:
        return np.zeros(len(cache.hidden))
    return np.array([np.sum((h[pairs.first] - h[pairs.second]) ** 2) for h in cache.hidden])


def _cross_entropy(cache: ForwardCache, labels: np.ndarray) -> float:
    n = cache.inputs.shape[0]
    return -float(np.mean(log_softmax(cache.preactivation)[np.arange(n), labels]))


def _terms(model: Mlp, cache: ForwardCache, labels: np.ndarray, pairs: PairSet,
           alphas: np.ndarray, norm_penalty: float) -> Tuple[float, float, float]:
    """(cross-entropy, weighted pair distance, norm penalty) with the 1/|B| scaling applied"""
    n = cache.inputs.shape[0]
    cross_entropy = _cross_entropy(cache, labels)
    diversity = float(alphas @ _layer_distances(cache, pairs)) / n if np.any(alphas) else 0.0
    penalty = norm_penalty * sum(float(np.sum(w * w)) for w in model.weights) if norm_penalty else 0.0
    return cross_entropy, diversity, penalty


def objective(model: Mlp, batch: np.ndarray, labels: Sequence[int], pairs: PairSet,
              schedule: DrSchedule, epoch: int, norm_penalty: float = 0.0) -> float:
    """
    Regularized classification cost J (to be minimized)

    Args:
        model: Softmax classifier
        batch: (batch, n_inputs) inputs
        labels: Class ids
        pairs: Side information indexing into the batch
        schedule: Layer coefficients
        epoch: Epoch index for the decay
        norm_penalty: Coefficient of the squared weight norm (0 = off)

    Returns:
        J
    """
    labels = np.asarray(labels, dtype=np.int64)
    cache = forward(model, batch)
    _check_classifier(model, cache.inputs, labels, pairs)
    alphas = schedule.layer_alphas(epoch, len(cache.hidden))
    cross_entropy, diversity, penalty = _terms(model, cache, labels, pairs, alphas, norm_penalty)
    return cross_entropy + penalty - diversity


def _objective_gradient_from_cache(model: Mlp, cache: ForwardCache, labels: np.ndarray, pairs: PairSet,
                                   alphas: np.ndarray, norm_penalty: float) -> List[np.ndarray]:
    n = cache.inputs.shape[0]
    d_out = cache.output.copy()
    d_out[np.arange(n), labels] -= 1.0
    d_out /= n

    hidden_grads = None
    if np.any(alphas) and len(pairs):
        hidden_grads = []
        for alpha, h in zip(alphas, cache.hidden):
            diff = (2.0 * alpha / n) * (h[pairs.first] - h[pairs.second])
            g = np.zeros_like(h)
            np.add.at(g, pairs.first, -diff)
            np.add.at(g, pairs.second, diff)
            hidden_grads.append(g)

    grads, _ = backward(model, cache, d_out, hidden_grads)
    if norm_penalty:
        for l, w in enumerate(model.weights):
            grads[2 * l] = grads[2 * l] + 2.0 * norm_penalty * w
    return grads


def objective_gradient(model: Mlp, batch: np.ndarray, labels: Sequence[int], pairs: PairSet,
                       schedule: DrSchedule, epoch: int, norm_penalty: float = 0.0) -> List[np.ndarray]:
    """dJ/dtheta aligned with model.params()"""
    labels = np.asarray(labels, dtype=np.int64)
    cache = forward(model, batch)
    _check_classifier(model, cache.inputs, labels, pairs)
    alphas = schedule.layer_alphas(epoch, len(cache.hidden))
    return _objective_gradient_from_cache(model, cache, labels, pairs, alphas, norm_penalty)


def backprop_step(model: Mlp, batch: np.ndarray, labels: Sequence[int], pairs: PairSet,
                  schedule: DrSchedule, epoch: int, lr: float,
                  norm_penalty: float = 0.0) -> Tuple[Mlp, Dict[str, float]]:
    """
    One gradient descent step theta <- theta - lr * dJ/dtheta

    Returns:
        (updated model, {"cost": cross-entropy, "dr_value": mean over pairs of sum_l ||h_p^l - h_q^l||^2})
    """
    if lr <= 0:
        raise ValueError(f"lr must be positive, got {lr}")
    labels = np.asarray(labels, dtype=np.int64)
    cache = forward(model, batch)
    _check_classifier(model, cache.inputs, labels, pairs)
    alphas = schedule.layer_alphas(epoch, len(cache.hidden))

    cross_entropy = _cross_entropy(cache, labels)
    distances = _layer_distances(cache, pairs)
    grads = _objective_gradient_from_cache(model, cache, labels, pairs, alphas, norm_penalty)

    updated = model.with_params([p - lr * g for p, g in zip(model.params(), grads)])
    metrics = {
        "cost": cross_entropy,
        "dr_value": float(distances.sum()) / len(pairs) if len(pairs) else 0.0,
    }
    return updated, metrics


def predict(model: Mlp, inputs: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties go to the lowest class index"""
    return np.argmax(forward(model, inputs).preactivation, axis=1)


def evaluate(model: Mlp, inputs: np.ndarray, labels: Sequence[int]) -> float:
    """Fraction of misclassified examples"""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] == 0:
        raise ValueError("test set must be nonempty")
    return float(np.mean(predict(model, inputs) != labels))


def train_dnn(model: Mlp, train: LabeledDataset, test: LabeledDataset, schedule: DrSchedule,
              lr: float, epochs: int, batch_size: int, rng: RngState,
              side_info: SideInfoMode = SideInfoMode.GLOBAL,
              global_pairs: Optional[PairSet] = None,
              norm_penalty: float = 0.0, arm: str = "dnn") -> Tuple[Mlp, LearningCurve]:
    """
    Train by minibatch backprop, evaluating on the test set after each epoch

    Side information for an epoch is assembled before its first update:
    restricted from global_pairs in GLOBAL mode, or built from the batch
    labels in BATCH mode.

    Args:
        model: Initial classifier
        train: Training data
        test: Evaluation data
        schedule: Diversification coefficients (DrSchedule.off() for plain backprop)
        lr: Learning rate
        epochs: Number of epochs
        batch_size: Minibatch size
        rng: Stream used for shuffling only
        side_info: Pair source
        global_pairs: Pairs indexing into train (GLOBAL mode)
        norm_penalty: Squared weight norm coefficient
        arm: Name used in log lines

    Returns:
        (trained model, LearningCurve with columns effective_alpha, dr_value, cost, test_error)
    """
    side_info = SideInfoMode(side_info)
    if schedule.alpha0 > 0 and np.unique(train.labels).shape[0] < 2:
        raise SideInfoError("diversifying regularization needs labels from at least two classes")
    if side_info is SideInfoMode.GLOBAL:
        global_pairs = PairSet.empty() if global_pairs is None else global_pairs.validate(train.labels)
        if schedule.alpha0 > 0 and len(global_pairs) == 0:
            logger.warning(f"[{arm}] alpha0={schedule.alpha0:g} with no global pairs: diversification is off")
    curve = LearningCurve(columns=DNN_COLUMNS)

    for epoch in range(epochs):
        batches = minibatches(len(train), batch_size, rng)
        if side_info is SideInfoMode.GLOBAL:
            batch_pairs = [global_pairs.within(indices, len(train)) for indices in batches]
        else:
            batch_pairs = precompute_batch_pairs(train.labels, batches)

        costs, drs = [], []
        for indices, pairs in zip(batches, batch_pairs):
            model, metrics = backprop_step(model, train.inputs[indices], train.labels[indices], pairs,
                                           schedule, epoch, lr, norm_penalty)
            costs.append(metrics["cost"])
            if len(pairs):
                drs.append(metrics["dr_value"])

        row = {
            "effective_alpha": schedule.effective_alpha(epoch),
            "dr_value": float(np.mean(drs)) if drs else 0.0,
            "cost": float(np.mean(costs)),
            "test_error": evaluate(model, test.inputs, test.labels),
        }
        curve.append(epoch, **row)
        logger.log_epoch(arm, epoch, row)

    return model, curve
