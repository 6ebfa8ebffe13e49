"""Diversifying regularizers and the side information that drives them"""
from src.regularization.divergence import (
    BernoulliProfile,
    FiniteDistribution,
    ConvexGenerator,
    HELLINGER,
    KULLBACK_LEIBLER,
    RENYI_ORDER,
    f_divergence,
    hellinger_distance,
    hellinger_unit,
    hellinger_total,
    hellinger_grad_pair,
    hellinger_logit_grads,
    bhattacharyya,
    bhattacharyya_from_hellinger,
    bernoulli_pair,
)
from src.regularization.sideinfo import (
    PairSet,
    pairs_from_batch,
    sample_global_pairs,
    expected_pair_count,
    precompute_batch_pairs,
    simulate_pair_counts,
)
