"""Deterministic random test-instance generation.

Pairs are complex Gaussian matrices rescaled exactly to target spectral
norms, the independent variable of the norm-regime experiments.  All
randomness flows through ``numpy.random.SeedSequence`` spawn keys so every
(seed, cell, trial) triple is reproducible regardless of execution order.
"""

from __future__ import annotations

import numpy as np

from .companion import ProblemPair, StartPair
from .dense import spectral_norm


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Deterministic generator for a seed plus a structured spawn key."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


def gaussian_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def matrix_with_norm(n: int, target: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian matrix rescaled to the given spectral norm (0 gives zeros)."""
    if target < 0:
        raise ValueError(f"target norm must be nonnegative, got {target}")
    if target == 0.0:
        return np.zeros((n, n), dtype=np.complex128)
    g = gaussian_matrix(n, rng)
    return g * (target / spectral_norm(g))


def random_pair(n: int, norm_a: float, norm_b: float, rng: np.random.Generator) -> ProblemPair:
    return ProblemPair(a=matrix_with_norm(n, norm_a, rng), b=matrix_with_norm(n, norm_b, rng))


def random_start(n: int, rng: np.random.Generator) -> StartPair:
    r_minus1 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    r_zero = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return StartPair(
        r_minus1=r_minus1 / np.linalg.norm(r_minus1),
        r_zero=r_zero / np.linalg.norm(r_zero),
    )
