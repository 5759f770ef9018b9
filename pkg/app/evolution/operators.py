"""
Variation operators on flat genomes.
"""

from typing import Tuple

import numpy as np

from app.core.exceptions import ConfigurationError, GenomeError
from app.policies.neural import PolicyGenome


def crossover_onepoint(
    parent_a: PolicyGenome,
    parent_b: PolicyGenome,
    rng: np.random.Generator,
) -> Tuple[PolicyGenome, PolicyGenome]:
    """
    Swap tails at a cut k drawn uniformly from [1, L - 1].

    child_a = a[:k] + b[k:], child_b = b[:k] + a[k:]
    """
    a, b = parent_a.weights, parent_b.weights
    if a.size != b.size:
        raise GenomeError(f"Cannot cross genomes of length {a.size} and {b.size}")
    k = int(rng.integers(1, a.size))
    return (
        PolicyGenome(np.concatenate([a[:k], b[k:]])),
        PolicyGenome(np.concatenate([b[:k], a[k:]])),
    )


def mutate_gaussian(genome: PolicyGenome, gamma: float, beta: float, rng: np.random.Generator) -> PolicyGenome:
    """
    Resample each gene with probability gamma from N(gene, beta^2).

    beta is the standard deviation.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ConfigurationError(f"mutation probability must lie in [0, 1], got {gamma}")
    if beta <= 0:
        raise ConfigurationError(f"mutation sigma must be > 0, got {beta}")
    weights = genome.weights.copy()
    chosen = rng.random(weights.size) < gamma
    weights[chosen] = rng.normal(weights[chosen], beta)
    return PolicyGenome(weights)
