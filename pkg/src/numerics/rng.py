"""
Random Streams - Seeded, portable random number generation

Every random draw in the library comes from a numpy Generator over the
counter-based Philox bit generator. A stream is identified by (seed,
stream-id); equal pairs give bit-identical draws on every platform.
"""
import numpy as np

RngState = np.random.Generator

MAX_SEED = 2**64 - 1


def make_rng(seed: int, stream: int = 0) -> RngState:
    """
    Create the generator for one (seed, stream) pair

    Args:
        seed: Unsigned 64-bit seed
        stream: Stream id; distinct ids give independent streams

    Returns:
        numpy Generator backed by Philox
    """
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    if stream < 0:
        raise ValueError(f"stream id must be non-negative, got {stream}")
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(sequence))


def bernoulli(probs: np.ndarray, rng: RngState) -> np.ndarray:
    """Draw {0,1} samples with the given means"""
    return (rng.random(np.shape(probs)) < probs).astype(np.float64)
