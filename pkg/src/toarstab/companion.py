"""The quadratic problem pair (A, B) and its companion operator.

The companion operator acts as the 2n-by-2n block matrix ``[[A, B], [I, 0]]``
but is always applied blockwise; the explicit matrix is only assembled at
desk scale (n <= 64) for oracle checks.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .dense import as_complex_matrix, as_complex_vector, spectral_norm
from .errors import DimensionMismatchError

ASSEMBLY_LIMIT = 64


@dataclass(frozen=True)
class ProblemPair:
    """Square matrices A, B of equal size defining the quadratic recurrence."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = as_complex_matrix(self.a, "A")
        b = as_complex_matrix(self.b, "B")
        if a.shape[0] != a.shape[1] or b.shape[0] != b.shape[1]:
            raise DimensionMismatchError(f"A and B must be square, got {a.shape} and {b.shape}")
        if a.shape != b.shape:
            raise DimensionMismatchError(f"A and B must have equal size, got {a.shape} and {b.shape}")
        a, b = a.copy(), b.copy()
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @cached_property
    def norm_a(self) -> float:
        return spectral_norm(self.a)

    @cached_property
    def norm_b(self) -> float:
        return spectral_norm(self.b)

    @cached_property
    def norm_scale(self) -> float:
        """``max(1, ||A||_2, ||B||_2)``, the factor appearing in the bounds."""
        return max(1.0, self.norm_a, self.norm_b)

    @cached_property
    def companion_norm(self) -> "CompanionNorm":
        return companion_norm(self)

    @cached_property
    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(str(self.n).encode())
        digest.update(np.ascontiguousarray(self.a).tobytes())
        digest.update(np.ascontiguousarray(self.b).tobytes())
        return digest.hexdigest()


@dataclass(frozen=True)
class StartPair:
    """Starting vectors r_{-1}, r_0 of the two-term recurrence."""

    r_minus1: np.ndarray
    r_zero: np.ndarray

    def __post_init__(self):
        rm = as_complex_vector(self.r_minus1, "r_minus1")
        rz = as_complex_vector(self.r_zero, "r_zero")
        if rm.shape != rz.shape:
            raise DimensionMismatchError(f"start vectors differ in length: {rm.shape} vs {rz.shape}")
        if not (np.any(rm) or np.any(rz)):
            raise ValueError("start vectors must not both be zero")
        rm, rz = rm.copy(), rz.copy()
        rm.setflags(write=False)
        rz.setflags(write=False)
        object.__setattr__(self, "r_minus1", rm)
        object.__setattr__(self, "r_zero", rz)

    @property
    def n(self) -> int:
        return self.r_zero.shape[0]


class CompanionNorm(NamedTuple):
    """Spectral norm of the companion matrix plus the path that produced it."""

    value: float
    method: str  # "assembled_svd" or "block_upper_bound"


def companion_norm(pair: ProblemPair) -> CompanionNorm:
    """``||C||_2`` exactly at desk scale, else the sqrt(3) block upper bound.

    Whatever the path, the value satisfies
    ``max(1, ||A||, ||B||) <= value <= sqrt(3) * max(1, ||A||, ||B||)``.
    """
    if pair.n <= ASSEMBLY_LIMIT:
        return CompanionNorm(spectral_norm(assemble_companion(pair)), "assembled_svd")
    return CompanionNorm(float(np.sqrt(3.0)) * pair.norm_scale, "block_upper_bound")


def assemble_companion(pair: ProblemPair) -> np.ndarray:
    """Explicit 2n-by-2n companion matrix; refused above n = 64."""
    n = pair.n
    if n > ASSEMBLY_LIMIT:
        raise ValueError(f"companion assembly refused for n = {n} > {ASSEMBLY_LIMIT}")
    c = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    c[:n, :n] = pair.a
    c[:n, n:] = pair.b
    c[n:, :n] = np.eye(n)
    return c


@dataclass(frozen=True)
class CompanionOperator:
    """Matrix-free action of the companion matrix."""

    pair: ProblemPair
    norm_estimate: float
    norm_method: str

    @classmethod
    def from_pair(cls, pair: ProblemPair) -> "CompanionOperator":
        value, method = pair.companion_norm
        return cls(pair, value, method)

    @property
    def n(self) -> int:
        return self.pair.n

    def apply(self, v: np.ndarray) -> np.ndarray:
        return apply(self, v)


def apply(op: CompanionOperator, v) -> np.ndarray:
    """Apply the companion operator: ``[A v1 + B v2; v1]`` for ``v = [v1; v2]``.

    Exactly two n-by-n matrix-vector products; the bottom half of the result
    is a bit-identical copy of the top half of ``v``.
    """
    v = as_complex_vector(v, "v")
    n = op.n
    if v.shape[0] != 2 * n:
        raise DimensionMismatchError(f"expected vector of length {2 * n}, got {v.shape[0]}")
    top = op.pair.a @ v[:n] + op.pair.b @ v[n:]
    out = np.empty(2 * n, dtype=np.complex128)
    out[:n] = top
    out[n:] = v[:n]
    return out


def embed_start(s: StartPair) -> tuple[np.ndarray, float]:
    """Unit-norm embedded start vector ``[r_0; r_{-1}]`` and its normalization.

    Returns ``(v1, factor)`` with ``factor = ||[r_0; r_{-1}]||_2`` and
    ``v1 = [r_0; r_{-1}] / factor``.
    """
    stacked = np.concatenate([s.r_zero, s.r_minus1])
    factor = float(np.linalg.norm(stacked))
    if factor == 0.0:
        raise ValueError("start vectors must not both be zero")
    return stacked / factor, factor
