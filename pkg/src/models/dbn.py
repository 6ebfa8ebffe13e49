"""
Deep Belief Network - Greedy layer-wise stacking of regularized RBMs
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.experiments.curves import LearningCurve
from src.models.dnn import Mlp, OutputKind
from src.models.rbm import INIT_STD, Rbm, mean_field_posterior, train_rbm
from src.numerics import RngState
from src.utils.errors import DimensionMismatchError, SideInfoError
from src.utils.logging import logger


@dataclass
class DbnStack:
    """RBMs where layer l's hidden units are layer l + 1's visible units"""
    layers: List[Rbm] = field(default_factory=list)

    def __post_init__(self):
        self.layers = list(self.layers)
        for l in range(1, len(self.layers)):
            below, above = self.layers[l - 1], self.layers[l]
            if below.n_hidden != above.n_visible:
                raise DimensionMismatchError(
                    f"layer {l} has {above.n_visible} visible units, layer {l - 1} has {below.n_hidden} hidden"
                )

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def layer_sizes(self) -> List[int]:
        """Visible size of the bottom RBM followed by every hidden size"""
        if not self.layers:
            return []
        return [self.layers[0].n_visible] + [rbm.n_hidden for rbm in self.layers]

    def push(self, rbm: Rbm) -> "DbnStack":
        return DbnStack([*self.layers, rbm])


def propagate_up(stack: DbnStack, x: np.ndarray, to_layer: int) -> np.ndarray:
    """
    Mean activations at a layer of the stack

    Applies mean_field_posterior layer by layer, feeding means upward.

    Args:
        stack: DBN
        x: Visible vector or batch
        to_layer: 0 returns x, l returns the hidden means of RBM l - 1

    Returns:
        Activations, same leading shape as x

    Raises:
        IndexError: to_layer outside [0, depth]
    """
    if not 0 <= to_layer <= stack.depth:
        raise IndexError(f"to_layer must lie in [0, {stack.depth}], got {to_layer}")
    current = np.asarray(x, dtype=np.float64)
    for rbm in stack.layers[:to_layer]:
        current = mean_field_posterior(rbm, current)
    return current


def pretrain_layerwise(data: np.ndarray, labels: Optional[np.ndarray], layer_sizes: Sequence[int],
                       lr: float, alpha: float, k: int, epochs: int, batch_size: int, rng: RngState,
                       biases_enabled: bool = True,
                       arm: str = "dbn") -> Tuple[DbnStack, List[LearningCurve]]:
    """
    Train one RBM per hidden size, bottom-up

    Layer l is trained on propagate_up(., l) of the data; labels travel
    with the representations so side information is available at every
    layer. Each RBM is initialized right before it is trained.

    Args:
        data: (n, n_visible) inputs in [0, 1]
        labels: Class ids (required when alpha > 0)
        layer_sizes: Hidden sizes, bottom first
        lr, alpha, k, epochs, batch_size: Per-layer RBM training settings
        rng: Random stream shared by all layers in order
        biases_enabled: Train visible and hidden biases
        arm: Name used in log lines

    Returns:
        (stack, one LearningCurve per layer)
    """
    if not layer_sizes:
        raise ValueError("layer_sizes must be nonempty")
    if alpha > 0 and (labels is None or np.unique(labels).shape[0] < 2):
        raise SideInfoError("diversifying regularization needs labels from at least two classes")

    stack = DbnStack()
    curves = []
    representation = np.asarray(data, dtype=np.float64)
    for depth, n_hidden in enumerate(layer_sizes):
        logger.info(f"[{arm}] pretraining layer {depth}: {representation.shape[1]} -> {n_hidden}")
        rbm = Rbm.initialize(representation.shape[1], n_hidden, rng, biases_enabled=biases_enabled)
        rbm, curve = train_rbm(rbm, representation, labels, lr, alpha, k, epochs, batch_size, rng,
                               arm=f"{arm}/layer{depth}")
        stack = stack.push(rbm)
        curves.append(curve)
        representation = mean_field_posterior(rbm, representation)
    return stack, curves


def export_mlp(stack: DbnStack, n_classes: int, rng: RngState, std: float = INIT_STD) -> Mlp:
    """
    Softmax classifier initialized from the stack

    Hidden layers copy the RBM weights and hidden biases. A fresh output
    layer (Gaussian std 0.01, zero bias) is appended unless the top RBM
    already has n_classes units, in which case it becomes the pre-softmax
    layer.
    """
    if stack.depth == 0:
        raise ValueError("cannot export an empty stack")
    weights = [rbm.weights.copy() for rbm in stack.layers]
    biases = [rbm.hidden_bias.copy() for rbm in stack.layers]
    if stack.layers[-1].n_hidden != n_classes:
        weights.append(rng.normal(0.0, std, size=(stack.layers[-1].n_hidden, n_classes)))
        biases.append(np.zeros(n_classes))
    return Mlp(weights, biases, OutputKind.SOFTMAX)
