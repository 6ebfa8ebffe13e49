"""
Variational Autoencoder - Gaussian encoder, Bernoulli decoder, diversified reconstructions

The encoder MLP emits (mu, log_var) of a diagonal Gaussian posterior; the
decoder MLP maps a latent sample to Bernoulli means. Training ascends the
per-example mean of

    E_Q[log P(x | z)] - KL(Q_x || N(0, I))
    - alpha * mean over pairs of D_CE   (mode ce, a similarity)
    + alpha * mean over pairs of D_2    (mode l2, a distance)

with one reparameterized sample per example. Inside training, the pair
terms reuse each example's own sample. The CE term is unbounded below;
keep alpha small next to the ELBO (default 0.01).
"""
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.data.datasets import minibatches
from src.experiments.curves import LearningCurve, VAE_COLUMNS
from src.models.dnn import ForwardCache, Mlp, OutputKind, backward, forward
from src.numerics import SIGMOID_CLAMP, RngState, log_sigmoid
from src.regularization.sideinfo import PairSet, precompute_batch_pairs
from src.utils.errors import DimensionMismatchError, SideInfoError
from src.utils.logging import logger

LOG_VAR_CLAMP = 30.0
INIT_STD = 0.01


class DrMode(str, Enum):
    """Which pair term enters the VAE objective"""
    NONE = "none"
    CE = "ce"
    L2 = "l2"


@dataclass
class VaeModel:
    """Encoder (n_inputs -> 2 * latent, linear head) and decoder (latent -> n_inputs, sigmoid head)"""
    encoder: Mlp
    decoder: Mlp

    def __post_init__(self):
        if self.encoder.output is not OutputKind.LINEAR or self.decoder.output is not OutputKind.SIGMOID:
            raise ValueError("encoder needs a linear head and decoder a sigmoid head")
        if self.encoder.n_outputs != 2 * self.decoder.n_inputs:
            raise DimensionMismatchError(
                f"encoder emits {self.encoder.n_outputs} values for a {self.decoder.n_inputs}-d latent"
            )
        if self.decoder.n_outputs != self.encoder.n_inputs:
            raise DimensionMismatchError(
                f"decoder emits {self.decoder.n_outputs} means for {self.encoder.n_inputs} inputs"
            )

    @classmethod
    def initialize(cls, n_inputs: int, hidden: Sequence[int] | int, latent_dim: int,
                   rng: RngState, std: float = INIT_STD) -> "VaeModel":
        """Symmetric encoder/decoder with the given hidden sizes"""
        hidden = [hidden] if isinstance(hidden, int) else list(hidden)
        encoder = Mlp.initialize([n_inputs, *hidden, 2 * latent_dim], rng, std, OutputKind.LINEAR)
        decoder = Mlp.initialize([latent_dim, *reversed(hidden), n_inputs], rng, std, OutputKind.SIGMOID)
        return cls(encoder, decoder)

    @classmethod
    def zeros(cls, n_inputs: int, hidden: Sequence[int] | int, latent_dim: int) -> "VaeModel":
        hidden = [hidden] if isinstance(hidden, int) else list(hidden)
        return cls(Mlp.zeros([n_inputs, *hidden, 2 * latent_dim], OutputKind.LINEAR),
                   Mlp.zeros([latent_dim, *reversed(hidden), n_inputs], OutputKind.SIGMOID))

    @property
    def latent_dim(self) -> int:
        return self.decoder.n_inputs

    @property
    def n_inputs(self) -> int:
        return self.encoder.n_inputs

    def params(self) -> List[np.ndarray]:
        return [*self.encoder.params(), *self.decoder.params()]

    def with_params(self, params: Sequence[np.ndarray]) -> "VaeModel":
        split = len(self.encoder.params())
        return VaeModel(self.encoder.with_params(params[:split]), self.decoder.with_params(params[split:]))

    def copy(self) -> "VaeModel":
        return self.with_params([p.copy() for p in self.params()])


@dataclass
class LatentSample:
    """z = mu + exp(log_var / 2) * epsilon"""
    z: np.ndarray
    epsilon: np.ndarray


def _rows(model: VaeModel, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.ndim != 2 or x.shape[1] != model.n_inputs:
        raise DimensionMismatchError(f"expected {model.n_inputs} inputs, got shape {x.shape}")
    return x


def _split(model: VaeModel, cache: ForwardCache) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(mu, clamped log_var, mask where the clamp is inactive)"""
    d = model.latent_dim
    raw = cache.output[:, d:]
    return cache.output[:, :d], np.clip(raw, -LOG_VAR_CLAMP, LOG_VAR_CLAMP), np.abs(raw) < LOG_VAR_CLAMP


def encode(model: VaeModel, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Posterior parameters (mu, log_var) per row; log_var is clamped to [-30, 30]

    Vector input gives vector outputs.
    """
    mu, log_var, _ = _split(model, forward(model.encoder, _rows(model, x)))
    if np.ndim(x) == 1:
        return mu[0], log_var[0]
    return mu, log_var


def reparameterize(mu: np.ndarray, log_var: np.ndarray, rng: RngState) -> LatentSample:
    """Draw z ~ N(mu, exp(log_var)) through a standard normal epsilon"""
    mu = np.asarray(mu, dtype=np.float64)
    log_var = np.clip(np.asarray(log_var, dtype=np.float64), -LOG_VAR_CLAMP, LOG_VAR_CLAMP)
    if mu.shape != log_var.shape:
        raise DimensionMismatchError(f"mu {mu.shape} and log_var {log_var.shape} differ")
    epsilon = rng.standard_normal(mu.shape)
    return LatentSample(z=mu + np.exp(0.5 * log_var) * epsilon, epsilon=epsilon)


def decode(model: VaeModel, z: np.ndarray) -> np.ndarray:
    """Bernoulli means P(x_i = 1 | z)"""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != model.latent_dim:
        raise DimensionMismatchError(f"expected a {model.latent_dim}-d latent, got shape {z.shape}")
    means = forward(model.decoder, z).output
    return means[0] if z.ndim == 1 else means


def sample_prior(model: VaeModel, n: int, rng: RngState) -> np.ndarray:
    """Decoder means for n draws of z ~ N(0, I)"""
    return decode(model, rng.standard_normal((n, model.latent_dim)))


def gaussian_kl(mu: np.ndarray, log_var: np.ndarray):
    """KL(N(mu, exp(log_var)) || N(0, I)) = 1/2 sum(mu^2 + sigma^2 - 1 - log sigma^2), per row"""
    mu = np.asarray(mu, dtype=np.float64)
    log_var = np.asarray(log_var, dtype=np.float64)
    kl = 0.5 * np.sum(mu * mu + np.exp(log_var) - 1.0 - log_var, axis=-1)
    return float(kl) if np.ndim(kl) == 0 else kl


def bernoulli_log_likelihood(x: np.ndarray, preactivation: np.ndarray) -> np.ndarray:
    """sum_i x_i log m_i + (1 - x_i) log(1 - m_i) with m = sigmoid(a), per row"""
    a = np.clip(preactivation, -SIGMOID_CLAMP, SIGMOID_CLAMP)
    return np.sum(x * log_sigmoid(a) + (1.0 - x) * log_sigmoid(-a), axis=-1)


def elbo_terms(model: VaeModel, batch: np.ndarray, rng: RngState) -> Tuple[float, float]:
    """(sum of single-sample reconstruction log-likelihoods, sum of KL terms)"""
    batch = _rows(model, batch)
    mu, log_var = encode(model, batch)
    sample = reparameterize(mu, log_var, rng)
    reconstruction = bernoulli_log_likelihood(batch, forward(model.decoder, sample.z).preactivation)
    return float(np.sum(reconstruction)), float(np.sum(gaussian_kl(mu, log_var)))


def elbo(model: VaeModel, batch: np.ndarray, rng: RngState) -> float:
    """Sum over the batch of E_Q[log P(x | z)] - KL(Q_x || N(0, I)), one sample per example"""
    reconstruction, kl = elbo_terms(model, batch, rng)
    return reconstruction - kl


def dr_cross_entropy(model: VaeModel, x_p: np.ndarray, x_q: np.ndarray, rng: RngState) -> float:
    """
    Cross-entropy similarity E_{Q_{x_q}}[log P(x_p | z)]

    Encodes x_q, draws one latent sample and scores x_p under the decoder.
    Always <= 0; larger when the two representations are interchangeable.
    """
    x_p = _rows(model, x_p)
    mu, log_var = encode(model, _rows(model, x_q))
    sample = reparameterize(mu, log_var, rng)
    return float(np.sum(bernoulli_log_likelihood(x_p, forward(model.decoder, sample.z).preactivation)))


def dr_reconstruction_l2(model: VaeModel, x_p: np.ndarray, x_q: np.ndarray, rng: RngState) -> float:
    """
    Squared distance between the reconstructions of x_p and x_q

    Both latents share one epsilon, so equal inputs give exactly 0 and the
    value is symmetric in (p, q).
    """
    mu, log_var = encode(model, np.concatenate([_rows(model, x_p), _rows(model, x_q)]))
    epsilon = rng.standard_normal((1, model.latent_dim))
    means = forward(model.decoder, mu + np.exp(0.5 * log_var) * epsilon).output
    return float(np.sum((means[0] - means[1]) ** 2))


@dataclass
class VaeTerms:
    """Per-batch sums that make up the training objective"""
    reconstruction: float
    kl: float
    pair_value: float
    objective: float


def _check_pairs(pairs: PairSet, n: int):
    if len(pairs) and (pairs.pairs.min() < 0 or pairs.pairs.max() >= n):
        raise SideInfoError(f"pair index out of range for a batch of {n}")


def _evaluate(model: VaeModel, batch: np.ndarray, pairs: PairSet, alpha: float, mode: DrMode,
              epsilon: np.ndarray, with_gradient: bool) -> Tuple[VaeTerms, Optional[List[np.ndarray]]]:
    """Objective (per-example ELBO mean plus per-pair mean term) and optionally its gradient for fixed noise"""
    n = batch.shape[0]
    d = model.latent_dim
    if epsilon.shape != (n, d):
        raise DimensionMismatchError(f"noise shape {epsilon.shape} does not match ({n}, {d})")
    _check_pairs(pairs, n)
    use_pairs = mode is not DrMode.NONE and len(pairs) > 0

    enc_cache = forward(model.encoder, batch)
    mu, log_var, var_mask = _split(model, enc_cache)
    std = np.exp(0.5 * log_var)
    z = mu + std * epsilon
    dec_cache = forward(model.decoder, z)
    a = dec_cache.preactivation
    means = dec_cache.output
    active = np.abs(a) < SIGMOID_CLAMP

    reconstruction = float(np.sum(bernoulli_log_likelihood(batch, a)))
    kl = float(np.sum(gaussian_kl(mu, log_var)))
    pair_value = 0.0
    if use_pairs and mode is DrMode.CE:
        pair_value = float(np.sum(bernoulli_log_likelihood(batch[pairs.first], a[pairs.second])))
    elif use_pairs and mode is DrMode.L2:
        pair_value = float(np.sum((means[pairs.first] - means[pairs.second]) ** 2))

    sign = -1.0 if mode is DrMode.CE else 1.0
    # pair terms enter as a mean over pairs, the ELBO as a mean over examples
    weight = alpha / len(pairs) if use_pairs else 0.0
    objective = (reconstruction - kl) / n + sign * weight * pair_value
    terms = VaeTerms(reconstruction, kl, pair_value, objective)
    if not with_gradient:
        return terms, None

    # ascent derivatives w.r.t. the decoder pre-activation
    d_a = (batch - means) * active / n
    if weight and mode is DrMode.CE:
        contribution = -weight * (batch[pairs.first] - means[pairs.second]) * active[pairs.second]
        np.add.at(d_a, pairs.second, contribution)
    elif weight and mode is DrMode.L2:
        diff = 2.0 * weight * (means[pairs.first] - means[pairs.second])
        d_means = np.zeros_like(means)
        np.add.at(d_means, pairs.first, diff)
        np.add.at(d_means, pairs.second, -diff)
        d_a = d_a + d_means * means * (1.0 - means) * active
    dec_grads, d_z = backward(model.decoder, dec_cache, d_a)

    d_mu = d_z - mu / n
    d_log_var = (0.5 * d_z * std * epsilon - 0.5 * (np.exp(log_var) - 1.0) / n) * var_mask
    enc_grads, _ = backward(model.encoder, enc_cache, np.concatenate([d_mu, d_log_var], axis=1))
    return terms, [*enc_grads, *dec_grads]


def vae_objective(model: VaeModel, batch: np.ndarray, pairs: PairSet, alpha: float,
                  mode: DrMode, epsilon: np.ndarray) -> float:
    """
    Training objective for frozen noise (to be maximized)

    Args:
        model: VAE
        batch: (n, n_inputs) binary data
        pairs: Side information indexing into the batch
        alpha: Pair term weight
        mode: Pair term
        epsilon: (n, latent_dim) standard-normal draws, one row per example

    Returns:
        Per-example mean objective
    """
    batch = _rows(model, batch)
    return _evaluate(model, batch, pairs, alpha, DrMode(mode), np.asarray(epsilon, dtype=np.float64), False)[0].objective


def vae_gradient(model: VaeModel, batch: np.ndarray, pairs: PairSet, alpha: float,
                 mode: DrMode, epsilon: np.ndarray) -> Tuple[List[np.ndarray], VaeTerms]:
    """Gradient of vae_objective aligned with model.params(), plus the objective's terms"""
    batch = _rows(model, batch)
    terms, grads = _evaluate(model, batch, pairs, alpha, DrMode(mode), np.asarray(epsilon, dtype=np.float64), True)
    return grads, terms


def vae_step(model: VaeModel, batch: np.ndarray, pairs: PairSet, alpha: float, mode: DrMode,
             lr: float, rng: RngState) -> Tuple[VaeModel, VaeTerms]:
    """One ascent step with fresh noise drawn from rng"""
    if lr <= 0:
        raise ValueError(f"lr must be positive, got {lr}")
    batch = _rows(model, batch)
    epsilon = rng.standard_normal((batch.shape[0], model.latent_dim))
    grads, terms = vae_gradient(model, batch, pairs, alpha, mode, epsilon)
    return model.with_params([p + lr * g for p, g in zip(model.params(), grads)]), terms


def train_vae(model: VaeModel, data: np.ndarray, labels: Optional[np.ndarray], lr: float, epochs: int,
              batch_size: int, alpha: float, mode: DrMode, rng: RngState,
              arm: str = "vae") -> Tuple[VaeModel, LearningCurve]:
    """
    Minibatch gradient ascent on the diversified ELBO

    Returns:
        (trained model, LearningCurve with per-example means of elbo,
        reconstruction and kl, and the mean pair value)
    """
    mode = DrMode(mode)
    data = np.asarray(data, dtype=np.float64)
    use_pairs = mode is not DrMode.NONE
    if use_pairs and alpha > 0 and (labels is None or np.unique(labels).shape[0] < 2):
        raise SideInfoError("diversifying regularization needs labels from at least two classes")
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    curve = LearningCurve(columns=VAE_COLUMNS)

    for epoch in range(epochs):
        batches = minibatches(data.shape[0], batch_size, rng)
        if use_pairs and labels is not None:
            batch_pairs = precompute_batch_pairs(labels, batches)
        else:
            batch_pairs = [PairSet.empty()] * len(batches)

        totals: Dict[str, float] = {"reconstruction": 0.0, "kl": 0.0, "pairs": 0.0}
        n_pairs = 0
        for indices, pairs in zip(batches, batch_pairs):
            model, terms = vae_step(model, data[indices], pairs, alpha, mode, lr, rng)
            totals["reconstruction"] += terms.reconstruction
            totals["kl"] += terms.kl
            totals["pairs"] += terms.pair_value
            n_pairs += len(pairs)

        n = data.shape[0]
        row = {
            "elbo": (totals["reconstruction"] - totals["kl"]) / n,
            "reconstruction": totals["reconstruction"] / n,
            "kl": totals["kl"] / n,
            "dr_value": totals["pairs"] / n_pairs if n_pairs else 0.0,
        }
        curve.append(epoch, **row)
        logger.log_epoch(arm, epoch, row)

    return model, curve


def manifold_grid(model: VaeModel, lo: float = -6.0, hi: float = 6.0, steps: int = 20) -> np.ndarray:
    """
    Decoder means over a square of latent coordinates

    Cell (i, j) decodes z = (lerp(lo, hi, i), lerp(lo, hi, j)).

    Returns:
        Array (steps, steps, n_inputs) with values in [0, 1]
    """
    if model.latent_dim != 2:
        raise DimensionMismatchError(f"manifold grid needs a 2-d latent space, got {model.latent_dim}")
    if steps < 2:
        raise ValueError(f"steps must be at least 2, got {steps}")
    coords = np.linspace(lo, hi, steps)
    grid_i, grid_j = np.meshgrid(coords, coords, indexing="ij")
    z = np.stack([grid_i.reshape(-1), grid_j.reshape(-1)], axis=1)
    return decode(model, z).reshape(steps, steps, model.n_inputs)
