"""Reference Arnoldi iteration on the companion operator.

This is the ground-truth embedding oracle for the compact iteration: it
materializes the full 2n-column basis, which is acceptable at desk scale and
nowhere else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .companion import CompanionOperator
from .dense import EPS, as_complex_vector, orthogonalize_against

_UNIT_NORM_TOL = 1e-10


@dataclass(frozen=True)
class ArnoldiDecomposition:
    """Orthonormal basis V and Hessenberg H with ``C V_k = V_{k+1} H``.

    ``v`` has ``k + 1`` columns and ``h`` has shape ``(k + 1, k)`` for a full
    run of ``k`` steps.  On breakdown at step ``s`` the Krylov subspace is
    invariant: ``v`` keeps ``s`` columns, ``h`` is square ``(s, s)`` and
    ``C V_s = V_s H`` holds instead.
    """

    v: np.ndarray
    h: np.ndarray
    k: int
    breakdown_at: int | None = None


def arnoldi_run(op: CompanionOperator, v1, k: int) -> ArnoldiDecomposition:
    """Run ``k`` Arnoldi steps with the companion operator from unit vector v1.

    Stops early when the subdiagonal entry falls below
    ``2n * eps * ||C||_2`` and records the breakdown step.
    """
    v1 = as_complex_vector(v1, "v1")
    two_n = 2 * op.n
    if v1.shape[0] != two_n:
        raise ValueError(f"start vector must have length {two_n}, got {v1.shape[0]}")
    if abs(np.linalg.norm(v1) - 1.0) > _UNIT_NORM_TOL:
        raise ValueError("start vector must have unit norm")
    if not 1 <= k < two_n:
        raise ValueError(f"step count must satisfy 1 <= k < {two_n}, got {k}")

    breaktol = two_n * EPS * op.norm_estimate
    v = np.zeros((two_n, k + 1), dtype=np.complex128)
    h = np.zeros((k + 1, k), dtype=np.complex128)
    v[:, 0] = v1
    for j in range(k):
        w = op.apply(v[:, j])
        coeffs, residual, beta = orthogonalize_against(w, v[:, : j + 1])
        h[: j + 1, j] = coeffs
        if beta <= breaktol:
            return ArnoldiDecomposition(
                v=v[:, : j + 1].copy(),
                h=h[: j + 1, : j + 1].copy(),
                k=j + 1,
                breakdown_at=j + 1,
            )
        h[j + 1, j] = beta
        v[:, j + 1] = residual / beta
    return ArnoldiDecomposition(v=v, h=h, k=k, breakdown_at=None)
