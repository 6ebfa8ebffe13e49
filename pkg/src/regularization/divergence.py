"""
Divergences - f-divergences, per-unit Hellinger divergence and its gradient

A Bernoulli profile is the vector of hidden-unit means mu_j = Q(H_j = 1 | x)
of a factorized posterior. The diversifying regularizer between two profiles
is the sum over units of the Hellinger divergence between the two Bernoulli
factors.
"""
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from src.numerics import DenseMatrix, DenseVector
from src.utils.errors import DimensionMismatchError, DistributionError

BernoulliProfile = DenseVector
FiniteDistribution = DenseVector

# Bhattacharyya distance is the Renyi divergence of this order
RENYI_ORDER = 0.5

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class ConvexGenerator:
    """Convex f with f(1) = 0, plus lim_{t->inf} f(t)/t for zero-mass q"""
    name: str
    f: Callable[[np.ndarray], np.ndarray]
    slope_at_infinity: float


def _hellinger_f(t: np.ndarray) -> np.ndarray:
    return 1.0 - np.sqrt(t)


def _kl_f(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    positive = t > 0
    out[positive] = t[positive] * np.log(t[positive])
    return out


HELLINGER = ConvexGenerator("hellinger", _hellinger_f, 0.0)
KULLBACK_LEIBLER = ConvexGenerator("kullback-leibler", _kl_f, math.inf)


def check_distribution(p: np.ndarray, name: str = "distribution") -> FiniteDistribution:
    """Validate non-negativity and normalization of a finite distribution"""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise DimensionMismatchError(f"{name} must be a vector, got shape {p.shape}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise DistributionError(f"{name} has negative or non-finite entries")
    if abs(float(np.sum(p)) - 1.0) > NORMALIZATION_TOL:
        raise DistributionError(f"{name} sums to {np.sum(p):.12g}, not 1")
    return p


def check_profile(mu: np.ndarray, name: str = "profile") -> BernoulliProfile:
    """Validate that every Bernoulli mean lies in [0, 1]"""
    mu = np.asarray(mu, dtype=np.float64)
    if np.any(~np.isfinite(mu)) or np.any(mu < 0.0) or np.any(mu > 1.0):
        raise DistributionError(f"{name} has means outside [0, 1]")
    return mu


def _check_same_length(p: np.ndarray, q: np.ndarray):
    if p.shape != q.shape:
        raise DimensionMismatchError(f"length mismatch: {p.shape} vs {q.shape}")


def f_divergence(generator: ConvexGenerator | Callable, p: np.ndarray, q: np.ndarray,
                 slope_at_infinity: float | None = None) -> float:
    """
    Csiszar f-divergence sum_z q_z f(p_z / q_z)

    Terms with q_z = 0 use the continuity extension p_z * lim f(t)/t
    (zero when p_z is zero as well). Where a bare f is undefined at 0
    (NaN, as t log t) the right limit f(0+) is used.

    Args:
        generator: ConvexGenerator, or a bare callable f
        p: First distribution
        q: Second distribution
        slope_at_infinity: lim f(t)/t for a bare callable (default +inf)

    Returns:
        Divergence value (>= 0)
    """
    if isinstance(generator, ConvexGenerator):
        f = generator.f
        slope = generator.slope_at_infinity
    else:
        f = generator
        slope = math.inf if slope_at_infinity is None else slope_at_infinity

    p = check_distribution(p, "p")
    q = check_distribution(q, "q")
    _check_same_length(p, q)
    if abs(float(np.asarray(f(np.array([1.0])))[0])) > 1e-12:
        raise DistributionError("generator must satisfy f(1) = 0")

    support = q > 0
    ratio = p[support] / q[support]
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.broadcast_to(np.asarray(f(ratio), dtype=np.float64), ratio.shape).copy()
    # f(0) as the right limit, e.g. t log t at t = 0
    undefined = (ratio == 0.0) & np.isnan(values)
    if np.any(undefined):
        values[undefined] = np.asarray(f(np.full(int(np.sum(undefined)), np.finfo(np.float64).tiny)), dtype=np.float64)
    if np.any(np.isnan(values)):
        raise DistributionError("generator returned NaN on the support of q")
    total = float(np.sum(q[support] * values))
    missing = p[~support]
    if np.any(missing > 0):
        total += float(np.sum(missing)) * slope
    return total


def hellinger_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Hellinger divergence 1 - sum_z sqrt(p_z q_z) of two finite distributions"""
    p = check_distribution(p, "p")
    q = check_distribution(q, "q")
    _check_same_length(p, q)
    return float(1.0 - np.sum(np.sqrt(p * q)))


def bernoulli_pair(mu: float) -> FiniteDistribution:
    """Two-point distribution (P(H=0), P(H=1)) of a Bernoulli mean"""
    return np.array([1.0 - mu, mu], dtype=np.float64)


def hellinger_unit(mu_p, mu_q):
    """
    Hellinger divergence between two Bernoulli factors

    1 - sqrt((1 - mu_p)(1 - mu_q)) - sqrt(mu_p mu_q); works elementwise on arrays.

    Args:
        mu_p: Mean(s) in [0, 1]
        mu_q: Mean(s) in [0, 1]

    Returns:
        Divergence in [0, 1]
    """
    a = check_profile(mu_p, "mu_p")
    b = check_profile(mu_q, "mu_q")
    value = 1.0 - np.sqrt((1.0 - a) * (1.0 - b)) - np.sqrt(a * b)
    # rounding can leave -1e-17 at a == b
    value = np.maximum(value, 0.0)
    if np.ndim(value) == 0:
        return float(value)
    return value


def hellinger_total(p: BernoulliProfile, q: BernoulliProfile) -> float:
    """
    Diversifying regularizer between two profiles: sum of per-unit divergences

    Args:
        p: Profile of the first example
        q: Profile of the second example

    Returns:
        Value in [0, number of units]
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    _check_same_length(p, q)
    return float(np.sum(hellinger_unit(p, q)))


def hellinger_logit_grads(mu_p: np.ndarray, mu_q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Derivatives of 2 * hellinger_unit w.r.t. the two pre-sigmoid inputs

    With mu = sigma(z): returns (g_p, g_q) where
    g_p = sqrt(mu_p' mu_q') mu_p - sqrt(mu_p mu_q) mu_p' and mu' = 1 - mu.
    The factor 1/2 of the exact derivative is left out; callers that want
    the exact gradient multiply by 0.5. Works row-wise on (pairs, units).
    """
    a = np.asarray(mu_p, dtype=np.float64)
    b = np.asarray(mu_q, dtype=np.float64)
    off = np.sqrt((1.0 - a) * (1.0 - b))
    on = np.sqrt(a * b)
    g_p = off * a - on * (1.0 - a)
    g_q = off * b - on * (1.0 - b)
    return g_p, g_q


def hellinger_grad_pair(x_p: DenseVector, x_q: DenseVector,
                        mu_p: BernoulliProfile, mu_q: BernoulliProfile) -> DenseMatrix:
    """
    Gradient of hellinger_total(mu_p, mu_q) w.r.t. the weight matrix theta

    mu_p and mu_q must be the posteriors sigma(x theta + b) of x_p and x_q
    under the same weights. Entry (i, j) is
    1/2 [sqrt(mu_p' mu_q')(mu_p x_p,i + mu_q x_q,i) - sqrt(mu_p mu_q)(mu_p' x_p,i + mu_q' x_q,i)].
    The 1/2 is kept here; trainers use the form without it and fold it into alpha.

    Returns:
        Matrix of shape (len(x_p), len(mu_p))
    """
    x_p = np.asarray(x_p, dtype=np.float64)
    x_q = np.asarray(x_q, dtype=np.float64)
    mu_p = check_profile(mu_p, "mu_p")
    mu_q = check_profile(mu_q, "mu_q")
    if x_p.shape != x_q.shape or x_p.ndim != 1:
        raise DimensionMismatchError(f"input vectors differ: {x_p.shape} vs {x_q.shape}")
    _check_same_length(mu_p, mu_q)
    if mu_p.ndim != 1:
        raise DimensionMismatchError(f"profiles must be vectors, got shape {mu_p.shape}")

    g_p, g_q = hellinger_logit_grads(mu_p, mu_q)
    return 0.5 * (np.outer(x_p, g_p) + np.outer(x_q, g_q))


def bhattacharyya(p: np.ndarray, q: np.ndarray) -> float:
    """
    Bhattacharyya distance -ln sum_z sqrt(p_z q_z)

    Returns math.inf for distributions with disjoint support.
    """
    p = check_distribution(p, "p")
    q = check_distribution(q, "q")
    _check_same_length(p, q)
    coefficient = float(np.sum(np.sqrt(p * q)))
    if coefficient <= 0.0:
        return math.inf
    return max(-math.log(coefficient), 0.0)


def bhattacharyya_from_hellinger(d_h: float) -> float:
    """D_B = -ln(1 - D_H); infinite at D_H = 1"""
    if d_h >= 1.0:
        return math.inf
    return -math.log1p(-d_h)
