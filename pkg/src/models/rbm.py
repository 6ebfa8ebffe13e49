"""
Restricted Boltzmann Machine - CD-k training with diversifying regularization

Binary visible and hidden units, energy E(x, h) = -x W h - b_v x - b_h h.
The variational posterior shares the model weights: Q(H_j = 1 | x) is the
exact factorized conditional sigma(x W + b_h), so the regularizer is
differentiated w.r.t. the same parameters as the likelihood.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from src.data.datasets import minibatches
from src.experiments.curves import LearningCurve, RBM_COLUMNS
from src.numerics import DenseMatrix, DenseVector, RngState, sigmoid, softplus, log_sigmoid
from src.numerics.rng import bernoulli
from src.regularization.divergence import BernoulliProfile, hellinger_logit_grads, hellinger_unit
from src.regularization.sideinfo import PairSet, pairs_from_batch, precompute_batch_pairs
from src.utils.errors import (
    DimensionMismatchError,
    EnumerationLimitError,
    NonFiniteError,
    SideInfoError,
)
from src.utils.logging import logger

# n_visible + n_hidden allowed for exact enumeration
ENUMERATION_LIMIT = 20

INIT_STD = 0.01


@dataclass
class Rbm:
    """Weights (n_visible x n_hidden) plus visible and hidden biases"""
    weights: DenseMatrix
    visible_bias: DenseVector
    hidden_bias: DenseVector
    biases_enabled: bool = True

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64)
        self.visible_bias = np.array(self.visible_bias, dtype=np.float64)
        self.hidden_bias = np.array(self.hidden_bias, dtype=np.float64)
        if self.weights.ndim != 2:
            raise DimensionMismatchError(f"weights must be a matrix, got shape {self.weights.shape}")
        n_visible, n_hidden = self.weights.shape
        if self.visible_bias.shape != (n_visible,) or self.hidden_bias.shape != (n_hidden,):
            raise DimensionMismatchError(
                f"bias shapes {self.visible_bias.shape}/{self.hidden_bias.shape} "
                f"do not match weights {self.weights.shape}"
            )
        if not all(np.all(np.isfinite(p)) for p in self.params()):
            raise NonFiniteError("RBM parameters must be finite")

    @classmethod
    def initialize(cls, n_visible: int, n_hidden: int, rng: RngState,
                   std: float = INIT_STD, biases_enabled: bool = True) -> "Rbm":
        """Gaussian weights (mean 0, std 0.01), zero biases"""
        return cls(
            weights=rng.normal(0.0, std, size=(n_visible, n_hidden)),
            visible_bias=np.zeros(n_visible),
            hidden_bias=np.zeros(n_hidden),
            biases_enabled=biases_enabled,
        )

    @classmethod
    def zeros(cls, n_visible: int, n_hidden: int, biases_enabled: bool = True) -> "Rbm":
        return cls(np.zeros((n_visible, n_hidden)), np.zeros(n_visible), np.zeros(n_hidden), biases_enabled)

    @property
    def n_visible(self) -> int:
        return int(self.weights.shape[0])

    @property
    def n_hidden(self) -> int:
        return int(self.weights.shape[1])

    def params(self) -> List[np.ndarray]:
        return [self.weights, self.visible_bias, self.hidden_bias]

    def copy(self) -> "Rbm":
        return Rbm(self.weights.copy(), self.visible_bias.copy(), self.hidden_bias.copy(), self.biases_enabled)

    def with_params(self, params: Sequence[np.ndarray]) -> "Rbm":
        weights, visible_bias, hidden_bias = params
        return Rbm(weights, visible_bias, hidden_bias, self.biases_enabled)


@dataclass
class RbmGradient:
    """Gradient (or update direction) for every RBM parameter"""
    weights: DenseMatrix
    visible_bias: DenseVector
    hidden_bias: DenseVector

    @classmethod
    def zeros_like(cls, model: Rbm) -> "RbmGradient":
        return cls(np.zeros_like(model.weights), np.zeros_like(model.visible_bias),
                   np.zeros_like(model.hidden_bias))

    def __add__(self, other: "RbmGradient") -> "RbmGradient":
        return RbmGradient(self.weights + other.weights, self.visible_bias + other.visible_bias,
                           self.hidden_bias + other.hidden_bias)

    def scaled(self, factor: float) -> "RbmGradient":
        return RbmGradient(factor * self.weights, factor * self.visible_bias, factor * self.hidden_bias)

    def as_list(self) -> List[np.ndarray]:
        return [self.weights, self.visible_bias, self.hidden_bias]


@dataclass
class CdSample:
    """Final state (x^(k), h^(k)) of a k-step Gibbs chain"""
    visible_k: np.ndarray
    hidden_k: np.ndarray


def _check_visible(model: Rbm, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.n_visible or x.ndim > 2:
        raise DimensionMismatchError(f"expected {model.n_visible} visible units, got shape {x.shape}")
    return x


def _check_hidden(model: Rbm, h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-1] != model.n_hidden or h.ndim > 2:
        raise DimensionMismatchError(f"expected {model.n_hidden} hidden units, got shape {h.shape}")
    return h


def hidden_conditional(model: Rbm, x: np.ndarray) -> BernoulliProfile:
    """
    P(h_j = 1 | x) = sigma(sum_i W_ij x_i + b_h,j)

    Args:
        model: RBM
        x: Visible vector or (batch, n_visible) matrix

    Returns:
        Hidden means, vector or matrix matching the input
    """
    x = _check_visible(model, x)
    return sigmoid(x @ model.weights + model.hidden_bias)


def visible_conditional(model: Rbm, h: np.ndarray) -> BernoulliProfile:
    """P(x_i = 1 | h) = sigma(sum_j W_ij h_j + b_v,i)"""
    h = _check_hidden(model, h)
    return sigmoid(h @ model.weights.T + model.visible_bias)


def mean_field_posterior(model: Rbm, x: np.ndarray) -> BernoulliProfile:
    """
    Factorized posterior Q_x over the hidden units

    The posterior of a single RBM factorizes exactly, so the mean-field
    solution is the hidden conditional itself; no lateral iteration.
    """
    return hidden_conditional(model, x)


def sample_hidden(model: Rbm, x: np.ndarray, rng: RngState) -> np.ndarray:
    return bernoulli(hidden_conditional(model, x), rng)


def sample_visible(model: Rbm, h: np.ndarray, rng: RngState) -> np.ndarray:
    return bernoulli(visible_conditional(model, h), rng)


def gibbs_cd_k(model: Rbm, x0: np.ndarray, k: int, rng: RngState) -> CdSample:
    """
    Run k alternating Gibbs rounds from the data

    h0 ~ P(h | x0), then for t = 1..k: x_t ~ P(x | h_{t-1}), h_t ~ P(h | x_t).

    Args:
        model: RBM
        x0: Starting visible vector or batch
        k: Number of rounds (>= 1)
        rng: Random stream

    Returns:
        CdSample with binary x^(k) and h^(k)
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    hidden = sample_hidden(model, x0, rng)
    visible = None
    for _ in range(k):
        visible = sample_visible(model, hidden, rng)
        hidden = sample_hidden(model, visible, rng)
    return CdSample(visible_k=visible, hidden_k=hidden)


def _gradient_from_phases(model: Rbm, batch: np.ndarray, mu: np.ndarray,
                          neg_xh: np.ndarray, neg_x: np.ndarray, neg_h: np.ndarray) -> RbmGradient:
    grad = RbmGradient(
        weights=batch.T @ mu - neg_xh,
        visible_bias=batch.sum(axis=0) - neg_x,
        hidden_bias=mu.sum(axis=0) - neg_h,
    )
    if not model.biases_enabled:
        grad.visible_bias = np.zeros_like(grad.visible_bias)
        grad.hidden_bias = np.zeros_like(grad.hidden_bias)
    return grad


def cd_gradient(model: Rbm, batch: np.ndarray, k: int, rng: RngState) -> RbmGradient:
    """
    CD-k estimate of the log-likelihood gradient, summed over the batch

    Positive phase uses the mean-field means x_i mu_j, negative phase one
    k-step Gibbs sample per example x_i^(k) h_j^(k).
    """
    batch = np.atleast_2d(_check_visible(model, batch))
    if batch.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    mu = mean_field_posterior(model, batch)
    sample = gibbs_cd_k(model, batch, k, rng)
    return _gradient_from_phases(
        model, batch, mu,
        neg_xh=sample.visible_k.T @ sample.hidden_k,
        neg_x=sample.visible_k.sum(axis=0),
        neg_h=sample.hidden_k.sum(axis=0),
    )


def _check_pairs(pairs: PairSet, n_items: int):
    if len(pairs) and (pairs.pairs.min() < 0 or pairs.pairs.max() >= n_items):
        raise SideInfoError(f"pair index out of range for a batch of {n_items}")


def dr_gradient(model: Rbm, batch: np.ndarray, pairs: PairSet) -> RbmGradient:
    """
    Ascent direction of the diversifying term, summed over pairs

    Per pair and entry (i, j):
    sqrt(mu_p' mu_q')[mu_p x_p,i + mu_q x_q,i] - sqrt(mu_p mu_q)[mu_p' x_p,i + mu_q' x_q,i]
    with mu' = 1 - mu. This is twice the exact Hellinger gradient; the 1/2
    is folded into alpha. Hidden biases use the constant input 1; visible
    biases are untouched.
    """
    batch = np.atleast_2d(_check_visible(model, batch))
    _check_pairs(pairs, batch.shape[0])
    grad = RbmGradient.zeros_like(model)
    if len(pairs) == 0:
        return grad

    mu = mean_field_posterior(model, batch)
    g_p, g_q = hellinger_logit_grads(mu[pairs.first], mu[pairs.second])
    grad.weights = batch[pairs.first].T @ g_p + batch[pairs.second].T @ g_q
    if model.biases_enabled:
        grad.hidden_bias = g_p.sum(axis=0) + g_q.sum(axis=0)
    return grad


def dr_value(model: Rbm, batch: np.ndarray, pairs: PairSet) -> float:
    """Sum over pairs of hellinger_total between the two posteriors"""
    batch = np.atleast_2d(_check_visible(model, batch))
    _check_pairs(pairs, batch.shape[0])
    if len(pairs) == 0:
        return 0.0
    mu = mean_field_posterior(model, batch)
    return float(np.sum(hellinger_unit(mu[pairs.first], mu[pairs.second])))


def apply_update(model: Rbm, direction: RbmGradient, lr: float) -> Rbm:
    """Gradient ascent step theta <- theta + lr * direction"""
    return model.with_params([p + lr * d for p, d in zip(model.params(), direction.as_list())])


def regularized_update(model: Rbm, batch: np.ndarray, labels: Optional[np.ndarray], lr: float,
                       alpha: float, k: int, rng: RngState,
                       pairs: Optional[PairSet] = None) -> Tuple[Rbm, Dict[str, float]]:
    """
    One ascent step on log-likelihood + alpha * sum of pair divergences

    theta <- theta + lr * (cd_gradient + alpha * dr_gradient), with pairs
    built from the batch labels unless given.

    Args:
        model: RBM (not modified)
        batch: (batch, n_visible) data
        labels: Class ids of the batch (may be None when pairs is given or alpha is 0)
        lr: Learning rate (> 0)
        alpha: Trade-off (>= 0); 0 gives plain CD-k
        k: Gibbs rounds
        rng: Random stream
        pairs: Precomputed side information indexing into the batch

    Returns:
        (updated model, {"dr_value": mean pair divergence, "pll": pseudo-log-likelihood})
    """
    if lr <= 0:
        raise ValueError(f"lr must be positive, got {lr}")
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    batch = np.atleast_2d(_check_visible(model, batch))
    if pairs is None:
        pairs = pairs_from_batch(labels) if labels is not None else PairSet.empty()

    direction = cd_gradient(model, batch, k, rng)
    if alpha > 0 and len(pairs):
        direction = direction + dr_gradient(model, batch, pairs).scaled(alpha)

    metrics = {
        "dr_value": dr_value(model, batch, pairs) / len(pairs) if len(pairs) else 0.0,
        "pll": pseudo_log_likelihood(model, batch, rng),
    }
    return apply_update(model, direction, lr), metrics


def free_energy(model: Rbm, x: np.ndarray) -> np.ndarray:
    """F(x) = -b_v x - sum_j softplus(x W + b_h)_j, per row"""
    x = _check_visible(model, x)
    return -(x @ model.visible_bias) - np.sum(softplus(x @ model.weights + model.hidden_bias), axis=-1)


def pseudo_log_likelihood(model: Rbm, batch: np.ndarray, rng: RngState) -> float:
    """
    Stochastic pseudo-log-likelihood

    One random visible index i per example; returns the batch mean of
    n_visible * log sigma(F(x~_i) - F(x)) where x~_i flips bit i.
    """
    batch = np.atleast_2d(_check_visible(model, batch))
    n = batch.shape[0]
    index = rng.integers(0, model.n_visible, size=n)
    flipped = batch.copy()
    rows = np.arange(n)
    flipped[rows, index] = 1.0 - flipped[rows, index]
    delta = free_energy(model, flipped) - free_energy(model, batch)
    return float(np.mean(model.n_visible * log_sigmoid(delta)))


def exact_pseudo_log_likelihood(model: Rbm, batch: np.ndarray) -> float:
    """Deterministic PLL: batch mean of sum_i log P(x_i | x_-i) over every index"""
    batch = np.atleast_2d(_check_visible(model, batch))
    base = free_energy(model, batch)
    total = np.zeros(batch.shape[0])
    for i in range(model.n_visible):
        flipped = batch.copy()
        flipped[:, i] = 1.0 - flipped[:, i]
        total += log_sigmoid(free_energy(model, flipped) - base)
    return float(np.mean(total))


def _check_enumerable(model: Rbm):
    if model.n_visible + model.n_hidden > ENUMERATION_LIMIT:
        raise EnumerationLimitError(
            f"exact enumeration needs n_visible + n_hidden <= {ENUMERATION_LIMIT}, "
            f"got {model.n_visible} + {model.n_hidden}"
        )


def binary_states(n: int) -> np.ndarray:
    """All 2^n binary vectors of length n, most significant bit first"""
    codes = np.arange(2 ** n)[:, None]
    return ((codes >> np.arange(n)[::-1]) & 1).astype(np.float64)


def _joint_negative_energy(model: Rbm, visible: np.ndarray, hidden: np.ndarray) -> np.ndarray:
    """-E(x, h) for every row of visible against every row of hidden"""
    return (visible @ model.weights @ hidden.T
            + (visible @ model.visible_bias)[:, None]
            + (hidden @ model.hidden_bias)[None, :])


def log_partition(model: Rbm) -> float:
    """log Z by enumerating every joint state (x, h)"""
    _check_enumerable(model)
    neg_energy = _joint_negative_energy(model, binary_states(model.n_visible), binary_states(model.n_hidden))
    return float(logsumexp(neg_energy))


def exact_log_likelihood(model: Rbm, batch: np.ndarray) -> float:
    """
    Sum over the batch of log P(x) = log sum_h exp(-E(x, h)) - log Z

    Raises:
        EnumerationLimitError: n_visible + n_hidden > 20
    """
    _check_enumerable(model)
    batch = np.atleast_2d(_check_visible(model, batch))
    neg_energy = _joint_negative_energy(model, batch, binary_states(model.n_hidden))
    return float(np.sum(logsumexp(neg_energy, axis=1)) - batch.shape[0] * log_partition(model))


def exact_posterior(model: Rbm, x: np.ndarray) -> np.ndarray:
    """P(h_j = 1 | x) by enumerating the hidden states"""
    _check_enumerable(model)
    batch = np.atleast_2d(_check_visible(model, x))
    hidden = binary_states(model.n_hidden)
    neg_energy = _joint_negative_energy(model, batch, hidden)
    weights = np.exp(neg_energy - logsumexp(neg_energy, axis=1, keepdims=True))
    marginals = weights @ hidden
    return marginals[0] if np.ndim(x) == 1 else marginals


def exact_model_expectations(model: Rbm) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Model expectations E[x h^T], E[x], E[h] by joint enumeration

    Returns:
        (n_visible x n_hidden matrix, visible means, hidden means)
    """
    _check_enumerable(model)
    visible = binary_states(model.n_visible)
    hidden = binary_states(model.n_hidden)
    neg_energy = _joint_negative_energy(model, visible, hidden)
    joint = np.exp(neg_energy - logsumexp(neg_energy))
    return visible.T @ joint @ hidden, visible.T @ joint.sum(axis=1), hidden.T @ joint.sum(axis=0)


def exact_gradient(model: Rbm, batch: np.ndarray) -> RbmGradient:
    """Log-likelihood gradient with both phases computed exactly"""
    batch = np.atleast_2d(_check_visible(model, batch))
    mu = mean_field_posterior(model, batch)
    xh, x_mean, h_mean = exact_model_expectations(model)
    n = batch.shape[0]
    return _gradient_from_phases(model, batch, mu, n * xh, n * x_mean, n * h_mean)


def regularized_objective(model: Rbm, batch: np.ndarray, pairs: PairSet, alpha: float) -> float:
    """Exact r(theta) = sum log P(x) + alpha * sum over pairs of hellinger_total"""
    return exact_log_likelihood(model, batch) + alpha * dr_value(model, batch, pairs)


def train_rbm(model: Rbm, data: np.ndarray, labels: Optional[np.ndarray], lr: float, alpha: float,
              k: int, epochs: int, batch_size: int, rng: RngState,
              arm: str = "rbm") -> Tuple[Rbm, LearningCurve]:
    """
    Train with shuffled minibatches of regularized_update

    Side information for all batches of an epoch is built before the epoch
    starts. Each curve row holds the epoch means of pll and dr_value.

    Returns:
        (trained model, LearningCurve with columns pll, dr_value)
    """
    data = np.asarray(data, dtype=np.float64)
    if alpha > 0:
        if labels is None or np.unique(labels).shape[0] < 2:
            raise SideInfoError("diversifying regularization needs labels from at least two classes")
    curve = LearningCurve(columns=RBM_COLUMNS)

    for epoch in range(epochs):
        batches = minibatches(data.shape[0], batch_size, rng)
        if labels is not None:
            batch_pairs = precompute_batch_pairs(labels, batches)
        else:
            batch_pairs = [PairSet.empty()] * len(batches)

        plls, drs = [], []
        for indices, pairs in zip(batches, batch_pairs):
            model, metrics = regularized_update(model, data[indices], None, lr, alpha, k, rng, pairs=pairs)
            plls.append(metrics["pll"])
            if len(pairs):
                drs.append(metrics["dr_value"])

        row = {"pll": float(np.mean(plls)), "dr_value": float(np.mean(drs)) if drs else 0.0}
        curve.append(epoch, **row)
        logger.log_epoch(arm, epoch, row)

    return model, curve
