"""Dense complex linear-algebra primitives used by every other module.

All public entry points promote their inputs to ``complex128``.  Matrices are
plain ``numpy.ndarray`` values; the only wrapper type is
:class:`OrthonormalBasis`, which carries its measured orthonormality defect.

The subspace distance is the spectral norm of the difference of the two
orthogonal projectors, which for equal-dimensional subspaces equals the sine
of the largest principal angle.  The sine is evaluated through an
extended-precision formation of the orthogonal-complement component: the
audit has to resolve distances of the same order as the unit roundoff of the
quantities being audited, and a plain double-precision formation carries a
cancellation floor of a few ``eps`` that would mask them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, RankDeficiencyWarning, RankMismatchError

EPS = float(np.finfo(np.float64).eps)

_POWER_TOL = 1e-10
_POWER_MAXITER = 500
_SVD_MAX_DIM = 64

# 80-bit extended precision where the platform provides it (x86 Linux does);
# the sine computation degrades gracefully to double elsewhere.
_LONGCOMPLEX = np.clongdouble if np.finfo(np.longdouble).eps < 1e-18 else np.complex128


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite two-dimensional complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatchError(f"{name} must be two-dimensional, got shape {m.shape}")
    if m.size and not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def as_complex_vector(a, name: str = "vector") -> np.ndarray:
    """Return ``a`` as a finite one-dimensional complex128 array."""
    v = np.asarray(a, dtype=np.complex128).reshape(-1)
    if v.size and not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def orthotol(n: int, d: int) -> float:
    """Orthonormality-defect tolerance ``100 * d * eps * sqrt(n)``."""
    return 100.0 * d * EPS * float(np.sqrt(n))


def orthonormality_defect(q: np.ndarray) -> float:
    """Frobenius norm of ``Q^H Q - I``."""
    q = np.asarray(q)
    d = q.shape[1]
    return float(np.linalg.norm(q.conj().T @ q - np.eye(d), "fro"))


@dataclass(frozen=True)
class OrthonormalBasis:
    """An n-by-d matrix with orthonormal columns plus its measured defect."""

    matrix: np.ndarray
    orthonormality_defect: float

    def __post_init__(self):
        n, d = self.matrix.shape
        if d > n:
            raise DimensionMismatchError(f"basis has more columns than rows: {self.matrix.shape}")
        if self.orthonormality_defect > orthotol(n, d):
            raise ValueError(
                f"orthonormality defect {self.orthonormality_defect:.3e} exceeds "
                f"orthotol({n}, {d}) = {orthotol(n, d):.3e}"
            )

    @classmethod
    def from_matrix(cls, q) -> "OrthonormalBasis":
        q = as_complex_matrix(q, "basis")
        return cls(q, orthonormality_defect(q))

    @property
    def shape(self):
        return self.matrix.shape


def spectral_norm(m) -> float:
    """Largest singular value of ``m``.

    Exact dense SVD when the smaller dimension is at most 64, otherwise
    deterministic power iteration on ``M^H M`` (relative tolerance 1e-10,
    at most 500 iterations).
    """
    m = as_complex_matrix(m, "matrix")
    if m.size == 0:
        return 0.0
    if min(m.shape) <= _SVD_MAX_DIM:
        return float(np.linalg.svd(m, compute_uv=False)[0])
    return _power_norm(m)


def _power_norm(m: np.ndarray) -> float:
    rng = np.random.default_rng(0x5EED)
    v = rng.standard_normal(m.shape[1]) + 1j * rng.standard_normal(m.shape[1])
    v /= np.linalg.norm(v)
    previous = 0.0
    sigma = 0.0
    for _ in range(_POWER_MAXITER):
        y = m @ v
        sigma = float(np.linalg.norm(y))
        if sigma == 0.0:
            return 0.0
        v = m.conj().T @ y
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return sigma
        v /= nv
        if abs(sigma - previous) <= _POWER_TOL * sigma:
            break
        previous = sigma
    return sigma


def orthogonalize_against(v, q):
    """Orthogonalize ``v`` against the columns of ``q``.

    Returns ``(coeffs, residual, beta)`` with ``v = q @ coeffs + residual``,
    ``q^H residual ~ 0`` and ``beta = ||residual||_2``.  Classical
    Gram-Schmidt with one DGKS reorthogonalization pass, triggered when the
    norm drops below ``1/sqrt(2)`` of its previous value (at most two passes;
    twice is enough).
    """
    if isinstance(q, OrthonormalBasis):
        q = q.matrix
    v = as_complex_vector(v, "v")
    q = as_complex_matrix(q, "q")
    if q.shape[0] != v.shape[0]:
        raise DimensionMismatchError(f"vector of length {v.shape[0]} vs basis with {q.shape[0]} rows")
    if q.shape[1] == 0:
        beta = float(np.linalg.norm(v))
        return np.zeros(0, dtype=np.complex128), v.copy(), beta

    norm_prev = float(np.linalg.norm(v))
    coeffs = q.conj().T @ v
    residual = v - q @ coeffs
    beta = float(np.linalg.norm(residual))
    if beta < norm_prev / np.sqrt(2.0):
        correction = q.conj().T @ residual
        residual = residual - q @ correction
        coeffs = coeffs + correction
        beta = float(np.linalg.norm(residual))
    return coeffs, residual, beta


def singular_value_cutoff(m: np.ndarray, sigma_max: float) -> float:
    """Rank cutoff ``max(rows, cols) * eps * sigma_max``."""
    return max(m.shape) * EPS * sigma_max


def column_rank(m, tol: float | None = None) -> int:
    """Numerical column rank from singular values with the standard cutoff."""
    m = as_complex_matrix(m, "matrix")
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    cutoff = singular_value_cutoff(m, float(s[0])) if tol is None else tol
    return int(np.count_nonzero(s > cutoff))


def orthonormal_column_basis(m, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis of the column space of ``m`` (SVD rank-revealed)."""
    m = as_complex_matrix(m, "matrix")
    if m.size == 0:
        return np.zeros((m.shape[0], 0), dtype=np.complex128)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    cutoff = singular_value_cutoff(m, float(s[0])) if s.size else 0.0
    if tol is not None:
        cutoff = tol
    rank = int(np.count_nonzero(s > cutoff))
    return u[:, :rank]


def pinv_apply_right(m, x, warn: bool = True) -> np.ndarray:
    """Return ``x @ pinv(m)`` via an SVD with singular-value cutoff.

    The cutoff is ``max(rows, cols) * eps * sigma_max(m)``.  A drop of the
    effective rank below ``min(m.shape)`` is reported as a
    :class:`RankDeficiencyWarning`, not a failure.
    """
    m = as_complex_matrix(m, "m")
    x = as_complex_matrix(x, "x")
    # pinv(m) has shape (cols, rows), so x @ pinv(m) needs x.cols == m.cols.
    if x.shape[1] != m.shape[1]:
        raise DimensionMismatchError(f"cannot apply pinv of {m.shape} to {x.shape} on the right")
    if m.size == 0:
        return np.zeros((x.shape[0], m.shape[0]), dtype=np.complex128)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    cutoff = singular_value_cutoff(m, float(s[0])) if s.size else 0.0
    rank = int(np.count_nonzero(s > cutoff))
    if warn and rank < min(m.shape):
        warnings.warn(
            f"effective rank {rank} < min{m.shape} (cutoff {cutoff:.3e})",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    return ((x @ vh[:rank].conj().T) / s[:rank]) @ u[:, :rank].conj().T


def subspace_distance(x, y) -> float:
    """Distance ``||P_span(x) - P_span(y)||_2`` between two column spans.

    The spans must have equal dimension (ranks are computed internally and a
    mismatch is rejected); the value is the sine of the largest principal
    angle, clipped to [0, 1].
    """
    x = as_complex_matrix(x, "x")
    y = as_complex_matrix(y, "y")
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"row counts differ: {x.shape[0]} vs {y.shape[0]}")
    rx, ry = column_rank(x), column_rank(y)
    if rx != ry:
        raise RankMismatchError(f"span dimensions differ: {rx} vs {ry}")
    if rx == 0:
        return 0.0
    qx = _span_basis(x, rx)
    qy = _span_basis(y, ry)
    return _sine_max(qx, qy)


def _span_basis(m: np.ndarray, rank: int) -> np.ndarray:
    # A basis that is already orthonormal to ~1e-8 is used as given: SVD
    # re-orthonormalization would rotate the span by ~eps and bury distances
    # at the roundoff scale.  The Gram correction in _sine_max absorbs the
    # remaining defect.
    if m.shape[1] == rank and orthonormality_defect(m) <= 1e-8:
        return m
    return orthonormal_column_basis(m)


def _sine_max(qx: np.ndarray, qy: np.ndarray) -> float:
    """Largest principal-angle sine between two near-orthonormal bases.

    The orthogonal-complement component is formed in extended precision with
    first-order Gram corrections on both sides, so values near ``eps`` are
    resolved instead of being dominated by formation roundoff.
    """
    lx = qx.astype(_LONGCOMPLEX)
    ly = qy.astype(_LONGCOMPLEX)
    d = lx.shape[1]
    eye = np.eye(d, dtype=_LONGCOMPLEX)
    gram_x = lx.conj().T @ lx
    cross = lx.conj().T @ ly
    z = ly - lx @ ((2.0 * eye - gram_x) @ cross)
    gram_y = ly.conj().T @ ly
    z = z @ (np.eye(ly.shape[1], dtype=_LONGCOMPLEX) - 0.5 * (gram_y - np.eye(ly.shape[1], dtype=_LONGCOMPLEX)))
    sines = np.linalg.svd(z.astype(np.complex128), compute_uv=False)
    return float(np.clip(sines[0], 0.0, 1.0)) if sines.size else 0.0


def sine_distance_of_perturbation(q: np.ndarray, delta: np.ndarray) -> float:
    """Distance between ``span(q)`` and ``span(q - delta)``.

    For small perturbations the subtraction happens in extended precision,
    which keeps the measured value faithful when ``delta`` is at the roundoff
    scale of ``q``; larger perturbations fall back to the generic projector
    distance.
    """
    q = as_complex_matrix(q, "q")
    delta = as_complex_matrix(delta, "delta")
    if q.shape != delta.shape:
        raise DimensionMismatchError(f"shapes differ: {q.shape} vs {delta.shape}")
    scale = float(np.linalg.norm(q, "fro"))
    if scale == 0.0:
        raise ValueError("q is zero")
    if float(np.linalg.norm(delta, "fro")) > 1e-6 * scale:
        return subspace_distance(q, q - delta)
    lq = q.astype(_LONGCOMPLEX)
    ly = lq - delta.astype(_LONGCOMPLEX)
    return _sine_max(lq, ly)
