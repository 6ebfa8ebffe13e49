"""
Gradient Oracles - Finite-difference and enumeration checks over random small instances
"""
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from src.models.dnn import DrSchedule, Mlp, objective, objective_gradient
from src.models.rbm import (
    Rbm,
    binary_states,
    dr_gradient,
    dr_value,
    exact_gradient,
    exact_log_likelihood,
    exact_posterior,
    mean_field_posterior,
)
from src.models.vae import DrMode, VaeModel, vae_gradient, vae_objective
from src.numerics import RngState, finite_diff_grad, make_rng, pack_params, relative_error, sigmoid, unpack_params
from src.regularization.divergence import hellinger_grad_pair, hellinger_total
from src.regularization.sideinfo import PairSet, pairs_from_batch
from src.utils.logging import logger

TOLERANCES: Dict[str, float] = {
    "hellinger_pair": 1e-5,
    "rbm_dr_gradient": 1e-4,
    "rbm_exact_gradient": 1e-5,
    "rbm_normalization": 1e-10,
    "rbm_mean_field": 1e-12,
    "dnn_objective": 1e-4,
    "vae_frozen_noise": 1e-4,
}


@dataclass
class OracleResult:
    """Worst error of one check over all instances"""
    name: str
    instances: int
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def _two_class_labels(n: int, rng: RngState) -> np.ndarray:
    labels = np.arange(n) % 2
    return rng.permutation(labels)


def _small_rbm(rng: RngState, n_visible: int, n_hidden: int) -> Rbm:
    return Rbm(rng.normal(0.0, 0.5, (n_visible, n_hidden)), rng.normal(0.0, 0.5, n_visible),
               rng.normal(0.0, 0.5, n_hidden))


def check_hellinger_pair(rng: RngState) -> float:
    n_visible, n_hidden = int(rng.integers(2, 6)), int(rng.integers(2, 5))
    x_p, x_q = rng.random(n_visible), rng.random(n_visible)
    bias = rng.normal(0.0, 0.5, n_hidden)
    weights = rng.normal(0.0, 0.5, (n_visible, n_hidden))

    def value(w: np.ndarray) -> float:
        return hellinger_total(sigmoid(x_p @ w + bias), sigmoid(x_q @ w + bias))

    analytic = hellinger_grad_pair(x_p, x_q, sigmoid(x_p @ weights + bias), sigmoid(x_q @ weights + bias))
    return relative_error(analytic, finite_diff_grad(value, weights))


def check_rbm_dr_gradient(rng: RngState) -> float:
    model = _small_rbm(rng, 4, 3)
    batch = (rng.random((6, 4)) < 0.5).astype(np.float64)
    pairs = pairs_from_batch(_two_class_labels(6, rng))
    start, shapes = pack_params([model.weights, model.hidden_bias])

    def value(vector: np.ndarray) -> float:
        weights, hidden_bias = unpack_params(vector, shapes)
        return dr_value(Rbm(weights, model.visible_bias, hidden_bias), batch, pairs)

    direction = dr_gradient(model, batch, pairs)
    analytic, _ = pack_params([0.5 * direction.weights, 0.5 * direction.hidden_bias])
    return relative_error(analytic, finite_diff_grad(value, start))


def check_rbm_exact_gradient(rng: RngState) -> float:
    n_visible = int(rng.integers(2, 7))
    model = _small_rbm(rng, n_visible, int(rng.integers(2, 13 - n_visible)))
    batch = (rng.random((5, model.n_visible)) < 0.5).astype(np.float64)
    start, shapes = pack_params(model.params())

    def value(vector: np.ndarray) -> float:
        return exact_log_likelihood(model.with_params(unpack_params(vector, shapes)), batch)

    analytic, _ = pack_params(exact_gradient(model, batch).as_list())
    return relative_error(analytic, finite_diff_grad(value, start))


def check_rbm_normalization(rng: RngState) -> float:
    n_visible = int(rng.integers(2, 7))
    model = _small_rbm(rng, n_visible, int(rng.integers(2, 13 - n_visible)))
    states = binary_states(model.n_visible)
    total = sum(np.exp(exact_log_likelihood(model, state)) for state in states)
    return abs(float(total) - 1.0)


def check_rbm_mean_field(rng: RngState) -> float:
    n_visible = int(rng.integers(2, 7))
    model = _small_rbm(rng, n_visible, int(rng.integers(2, 13 - n_visible)))
    batch = (rng.random((4, model.n_visible)) < 0.5).astype(np.float64)
    return float(np.max(np.abs(mean_field_posterior(model, batch) - exact_posterior(model, batch))))


def check_dnn_objective(rng: RngState) -> float:
    sizes = [4, 2, 2] if rng.random() < 0.5 else [4, 3, 3, 2]
    model = Mlp.initialize(sizes, rng, std=0.5)
    batch = rng.random((6, 4))
    labels = _two_class_labels(6, rng)
    candidates = pairs_from_batch(labels).pairs
    pairs = PairSet(candidates[rng.choice(candidates.shape[0], size=3, replace=False)])
    schedule = DrSchedule(alpha0=float(rng.uniform(0.5, 2.0)), decay=0.9)
    epoch = int(rng.integers(0, 3))
    norm_penalty = 0.01
    start, shapes = pack_params(model.params())

    def value(vector: np.ndarray) -> float:
        return objective(model.with_params(unpack_params(vector, shapes)), batch, labels, pairs,
                         schedule, epoch, norm_penalty)

    analytic, _ = pack_params(objective_gradient(model, batch, labels, pairs, schedule, epoch, norm_penalty))
    return relative_error(analytic, finite_diff_grad(value, start))


def check_vae_frozen_noise(rng: RngState) -> float:
    model = VaeModel.initialize(6, 4, 2, rng, std=0.3)
    batch = (rng.random((4, 6)) < 0.5).astype(np.float64)
    pairs = pairs_from_batch(_two_class_labels(4, rng))
    mode = [DrMode.CE, DrMode.L2, DrMode.NONE][int(rng.integers(0, 3))]
    alpha = float(rng.uniform(0.1, 1.0))
    epsilon = rng.standard_normal((4, 2))
    start, shapes = pack_params(model.params())

    def value(vector: np.ndarray) -> float:
        return vae_objective(model.with_params(unpack_params(vector, shapes)), batch, pairs, alpha, mode, epsilon)

    grads, _ = vae_gradient(model, batch, pairs, alpha, mode, epsilon)
    analytic, _ = pack_params(grads)
    return relative_error(analytic, finite_diff_grad(value, start))


CHECKS: Dict[str, Callable[[RngState], float]] = {
    "hellinger_pair": check_hellinger_pair,
    "rbm_dr_gradient": check_rbm_dr_gradient,
    "rbm_exact_gradient": check_rbm_exact_gradient,
    "rbm_normalization": check_rbm_normalization,
    "rbm_mean_field": check_rbm_mean_field,
    "dnn_objective": check_dnn_objective,
    "vae_frozen_noise": check_vae_frozen_noise,
}


def run_oracles(instances: int, seed: int) -> List[OracleResult]:
    """
    Run every check on `instances` random instances

    Each check draws from its own stream, so adding a check does not
    change the instances of the others.

    Returns:
        One OracleResult per check
    """
    results = []
    for stream, (name, check) in enumerate(CHECKS.items()):
        rng = make_rng(seed, stream=stream)
        worst = max(check(rng) for _ in range(instances))
        result = OracleResult(name, instances, worst, TOLERANCES[name])
        if result.passed:
            logger.info(f"[gradcheck] {name}: max error {worst:.3e} (tolerance {result.tolerance:.0e})")
        else:
            logger.warning(f"[gradcheck] {name}: max error {worst:.3e} exceeds {result.tolerance:.0e}")
        results.append(result)
    return results
