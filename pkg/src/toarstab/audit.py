"""Backward-error audit of a computed compact decomposition.

The pipeline realizes the stability construction end to end: form the
decomposition residual R, project it back onto the big operator as
``E = -R U^+ (I_2 (x) Q^+)``, recover the companion structure of the
perturbed operator through a similarity transformation close to the
identity (yielding explicit perturbations dA, dB of the problem matrices),
identify the nearby second-order Krylov subspace ``(I + E21)^{-1} Q``, and
compare every measured quantity against its proved bound:

* distance   <= ||E|| / (1 - ||E||)
* ||dA||     <= ||E|| + ||E|| (1 + ||E||) / (1 - ||E||)
* ||dB||     <= max(1, ||A||, ||B||) *
               (||E|| (2 + ||E||) + ||E|| (1 + ||E||)^2 / (1 - ||E||))

The inequalities are theorems for the computed E, so a violation beyond the
evaluation slack indicates an implementation bug, not bad luck.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .companion import ASSEMBLY_LIMIT, ProblemPair, StartPair
from .dense import (
    EPS,
    as_complex_matrix,
    column_rank,
    orthonormality_defect,
    pinv_apply_right,
    sine_distance_of_perturbation,
    singular_value_cutoff,
    spectral_norm,
)
from .errors import AuditError, DimensionMismatchError
from .toar import ToarDecomposition

DEFAULT_SLACK = 1e-8


@dataclass(frozen=True)
class BackwardError:
    """The projected backward error E, stored as its four n-by-n blocks."""

    e11: np.ndarray
    e12: np.ndarray
    e21: np.ndarray
    e22: np.ndarray
    norm_e: float
    norm_e21: float
    verification_residual: float

    @property
    def n(self) -> int:
        return self.e11.shape[0]

    def block_norms(self) -> dict[str, float]:
        return {
            "e11": spectral_norm(self.e11),
            "e12": spectral_norm(self.e12),
            "e21": spectral_norm(self.e21),
            "e22": spectral_norm(self.e22),
        }

    def assemble(self) -> np.ndarray:
        return np.block([[self.e11, self.e12], [self.e21, self.e22]])


@dataclass(frozen=True)
class RecoveredPerturbation:
    """Explicit dA, dB and the similarity transform that produced them.

    ``feasible`` requires ``||E21|| < 1``; when it fails the matrices are
    ``None`` and the audit carries on with the bounds marked not applicable.
    """

    feasible: bool
    delta_a: Optional[np.ndarray]
    delta_b: Optional[np.ndarray]
    transform_topright: Optional[np.ndarray]
    transform_bottomright: Optional[np.ndarray]
    identity_residual: Optional[float]


@dataclass(frozen=True)
class StabilityAudit:
    """Everything measured and every bound checked for one decomposition."""

    residual_norm: float
    backward: BackwardError
    recovered: RecoveredPerturbation
    nearby_basis: Optional[np.ndarray]
    measured_distance: Optional[float]
    norm_delta_a: Optional[float]
    norm_delta_b: Optional[float]
    bound_distance: Optional[float]
    bound_delta_a: Optional[float]
    bound_delta_b: Optional[float]
    satisfied: Optional[dict[str, bool]]
    w_check_residual: Optional[float]
    applicable: bool
    slack: float
    alpha: float
    pair_fingerprint: str
    meta: dict

    @property
    def all_satisfied(self) -> bool:
        return bool(self.satisfied) and all(self.satisfied.values())


def compute_residual(pair: ProblemPair, dec: ToarDecomposition, k: int | None = None):
    """Residual ``R = C (I_2 (x) Q_k) U_k - (I_2 (x) Q_{k+1}) U_{k+1} H_k``.

    Evaluated blockwise, never assembling the big operator.  Returns
    ``(R, spectral_norm(R))`` with R of shape (2n, k).
    """
    k = dec.steps if k is None else k
    if not 1 <= k <= dec.steps:
        raise DimensionMismatchError(f"decomposition holds {dec.steps} steps, requested {k}")
    q_k = dec.basis(k)
    u1_k, u2_k = dec.coords(k)
    q_next = dec.basis(k + 1)
    u1_next, u2_next = dec.coords(k + 1)
    h = dec.hessenberg(k)

    v1_k = q_k @ u1_k
    v2_k = q_k @ u2_k
    v1_next = q_next @ u1_next
    v2_next = q_next @ u2_next

    top = pair.a @ v1_k + pair.b @ v2_k - v1_next @ h
    bottom = v1_k - v2_next @ h
    r = np.vstack([top, bottom])
    return r, spectral_norm(r)


def project_backward_error(r: np.ndarray, dec: ToarDecomposition, k: int | None = None) -> BackwardError:
    """Project the residual back onto the operator: ``E = -R U^+ (I_2 (x) Q^+)``.

    Requires full column rank of both ``U_k`` and ``Q_k`` (the audit aborts
    otherwise).  The defining property ``E (I_2 (x) Q_k) U_k = -R`` is
    verified to ``100 * eps * ||R||`` and the verification residual stored.
    """
    k = dec.steps if k is None else k
    r = as_complex_matrix(r, "r")
    n = dec.n
    if r.shape != (2 * n, k):
        raise DimensionMismatchError(f"residual shape {r.shape}, expected {(2 * n, k)}")
    q_k = dec.basis(k)
    u_k = dec.stacked_u(k)
    d = q_k.shape[1]
    _require_full_rank(q_k, "Q_k")
    _require_full_rank(u_k, "U_k")

    x = pinv_apply_right(u_k, -r, warn=False)  # -R U^+, shape (2n, 2d)
    e11 = pinv_apply_right(q_k, x[:n, :d], warn=False)
    e12 = pinv_apply_right(q_k, x[:n, d:], warn=False)
    e21 = pinv_apply_right(q_k, x[n:, :d], warn=False)
    e22 = pinv_apply_right(q_k, x[n:, d:], warn=False)

    v1 = q_k @ u_k[:d, :]
    v2 = q_k @ u_k[d:, :]
    top = e11 @ v1 + e12 @ v2
    bottom = e21 @ v1 + e22 @ v2
    verification = spectral_norm(np.vstack([top, bottom]) + r)
    r_norm = spectral_norm(r)
    if verification > 100.0 * EPS * r_norm:
        raise AuditError(
            f"defining property violated: ||E V + R|| = {verification:.3e} "
            f"> 100 eps ||R|| = {100.0 * EPS * r_norm:.3e}"
        )

    e = np.block([[e11, e12], [e21, e22]])
    return BackwardError(
        e11=e11,
        e12=e12,
        e21=e21,
        e22=e22,
        norm_e=spectral_norm(e),
        norm_e21=spectral_norm(e21),
        verification_residual=verification,
    )


def _require_full_rank(m: np.ndarray, name: str) -> None:
    if m.shape[1] == 0:
        raise AuditError(f"{name} has no columns")
    s = np.linalg.svd(m, compute_uv=False)
    cutoff = singular_value_cutoff(m, float(s[0]))
    if s[-1] <= cutoff:
        raise AuditError(
            f"{name} is rank deficient: sigma_min = {s[-1]:.3e} <= cutoff {cutoff:.3e}; "
            "the audit hypotheses require full column rank"
        )


def _solve_refined(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Linear solve with one step of iterative refinement."""
    lu = scipy.linalg.lu_factor(a)
    x = scipy.linalg.lu_solve(lu, rhs)
    x += scipy.linalg.lu_solve(lu, rhs - a @ x)
    return x


def recover_companion(pair: ProblemPair, be: BackwardError) -> RecoveredPerturbation:
    """Recover companion structure of ``C + E`` by a similarity close to I.

    Uses the closed forms

    ``dA = E11 + (I + E21)^{-1} E22 (I + E21)``
    ``dB = B E21 + E12 (I + E21) - (A + E11) (I + E21)^{-1} E22 (I + E21)``

    and, at desk scale, self-checks the similarity identity
    ``T (C + E) = [[A + dA, B + dB], [I, 0]] T`` to relative residual
    ``100 * eps``.  Infeasible when ``||E21|| >= 1`` (reported, not raised).
    """
    n = pair.n
    if be.n != n:
        raise DimensionMismatchError(f"backward error of size {be.n} vs problem of size {n}")
    if be.norm_e21 >= 1.0:
        return RecoveredPerturbation(
            feasible=False,
            delta_a=None,
            delta_b=None,
            transform_topright=None,
            transform_bottomright=None,
            identity_residual=None,
        )

    eye = np.eye(n, dtype=np.complex128)
    i_e21 = eye + be.e21
    s = _solve_refined(i_e21, be.e22 @ i_e21)  # (I + E21)^{-1} E22 (I + E21)
    delta_a = be.e11 + s
    delta_b = pair.b @ be.e21 + be.e12 @ i_e21 - (pair.a + be.e11) @ s
    topright = _solve_refined(i_e21, be.e22)
    bottomright = _solve_refined(i_e21, eye)

    identity_residual = None
    if n <= ASSEMBLY_LIMIT:
        t = np.block([[eye, topright], [np.zeros((n, n)), bottomright]])
        c_pert = np.block([[pair.a + be.e11, pair.b + be.e12], [i_e21, be.e22]])
        c_rec = np.block([[pair.a + delta_a, pair.b + delta_b], [eye, np.zeros((n, n))]])
        gap = t @ c_pert - c_rec @ t
        scale = float(np.linalg.norm(t, "fro")) * float(np.linalg.norm(c_pert, "fro"))
        identity_residual = float(np.linalg.norm(gap, "fro")) / scale if scale else 0.0
        if identity_residual > 100.0 * EPS:
            raise AuditError(
                f"similarity identity self-check failed: relative residual "
                f"{identity_residual:.3e} > {100.0 * EPS:.3e}"
            )

    return RecoveredPerturbation(
        feasible=True,
        delta_a=delta_a,
        delta_b=delta_b,
        transform_topright=topright,
        transform_bottomright=bottomright,
        identity_residual=identity_residual,
    )


def nearby_basis(dec: ToarDecomposition, be: BackwardError, k: int | None = None) -> np.ndarray:
    """Basis ``(I + E21)^{-1} Q_k`` of the nearby second-order subspace.

    Computed as ``Q_k - (I + E21)^{-1} (E21 Q_k)`` through a linear solve
    (never an explicit inverse); the full-rank requirement is verified.
    """
    k = dec.steps if k is None else k
    if be.norm_e21 >= 1.0:
        raise AuditError(f"||E21|| = {be.norm_e21:.3e} >= 1: nearby basis undefined")
    q_k = dec.basis(k)
    correction = _nearby_correction(q_k, be)
    q_tilde = q_k - correction
    if column_rank(q_tilde) != q_k.shape[1]:
        raise AuditError("nearby basis lost rank")
    return q_tilde


def _nearby_correction(q_k: np.ndarray, be: BackwardError) -> np.ndarray:
    """D with ``(I + E21)^{-1} Q = Q - D``; kept separate so the distance
    measurement can subtract it in extended precision."""
    n = q_k.shape[0]
    i_e21 = np.eye(n, dtype=np.complex128) + be.e21
    return _solve_refined(i_e21, be.e21 @ q_k)


def transformed_embedding_check(
    pair: ProblemPair,
    dec: ToarDecomposition,
    be: BackwardError,
    rp: RecoveredPerturbation,
    k: int | None = None,
) -> float:
    """Residual of the exact Arnoldi relation for the recovered companion.

    Forms the transformed bases ``W_k``, ``W_{k+1}`` and returns
    ``|| [[A+dA, B+dB], [I, 0]] W_k - W_{k+1} H_k ||_2``.  This is an
    algebraic identity for a consistent (decomposition, E) pair, so the
    value is at the roundoff scale; a stale or corrupted input surfaces as
    a visibly larger residual.
    """
    if not rp.feasible:
        raise AuditError("recovery infeasible: transformed embedding undefined")
    k = dec.steps if k is None else k
    w1_k, w2_k = _w_blocks(dec, rp, k)
    w1_next, w2_next = _w_blocks(dec, rp, k + 1)
    h = dec.hessenberg(k)

    top = (pair.a + rp.delta_a) @ w1_k + (pair.b + rp.delta_b) @ w2_k - w1_next @ h
    bottom = w1_k - w2_next @ h
    return spectral_norm(np.vstack([top, bottom]))


def _w_blocks(dec: ToarDecomposition, rp: RecoveredPerturbation, cols: int):
    q = dec.basis(cols)
    u1, u2 = dec.coords(cols)
    qu1 = q @ u1
    qu2 = q @ u2
    w1 = qu1 + rp.transform_topright @ qu2
    w2 = rp.transform_bottomright @ qu2
    return w1, w2


def recovered_start_pair(dec: ToarDecomposition, rp: RecoveredPerturbation, k: int | None = None) -> StartPair:
    """Start vectors of the nearby subspace, read off the first W column."""
    if not rp.feasible:
        raise AuditError("recovery infeasible: no recovered start vectors")
    k = dec.steps if k is None else k
    w1, w2 = _w_blocks(dec, rp, k)
    return StartPair(r_minus1=w2[:, 0], r_zero=w1[:, 0])


def brute_force_second_order_basis(pair: ProblemPair, s: StartPair, k: int) -> np.ndarray:
    """Independent oracle for the second-order Krylov subspace.

    Runs the recurrence ``r_i = A r_{i-1} + B r_{i-2}`` directly, stacks
    ``[r_{-1}, r_0, ..., r_{k-1}]`` and returns an orthonormal basis of the
    column space from a rank-revealing (pivoted) QR with tolerance
    ``n * eps * max column norm``.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if s.n != pair.n:
        raise DimensionMismatchError(f"start vectors of length {s.n} for problem size {pair.n}")
    vectors = [s.r_minus1, s.r_zero]
    for _ in range(k - 1):
        vectors.append(pair.a @ vectors[-1] + pair.b @ vectors[-2])
    stack = np.column_stack(vectors)

    q, r_fac, _ = scipy.linalg.qr(stack, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_fac))
    tol = pair.n * EPS * float(np.max(np.linalg.norm(stack, axis=0)))
    rank = int(np.count_nonzero(diag > tol))
    rank = max(rank, 1)
    return q[:, :rank]


def bound_distance_formula(norm_e: float) -> float:
    """``||E|| / (1 - ||E||)``, valid for ``||E|| < 1``."""
    return norm_e / (1.0 - norm_e)


def bound_delta_a_formula(norm_e: float) -> float:
    """``||E|| + ||E|| (1 + ||E||) / (1 - ||E||)``."""
    return norm_e + norm_e * (1.0 + norm_e) / (1.0 - norm_e)


def bound_delta_b_formula(norm_e: float, norm_scale: float) -> float:
    """``max(1, ||A||, ||B||) (||E|| (2 + ||E||) + ||E|| (1 + ||E||)^2 / (1 - ||E||))``."""
    return norm_scale * (norm_e * (2.0 + norm_e) + norm_e * (1.0 + norm_e) ** 2 / (1.0 - norm_e))


def run_audit(
    pair: ProblemPair,
    dec: ToarDecomposition,
    k: int | None = None,
    slack: float = DEFAULT_SLACK,
) -> StabilityAudit:
    """Full audit pipeline for a computed decomposition.

    Hypothesis failures (rank deficiency) raise :class:`AuditError`;
    ``||E|| >= 1`` does not raise but marks every bound not applicable.
    Bound comparisons carry a relative slack of ``1 + slack`` to absorb the
    roundoff of evaluating the bounds themselves; the slack and all interior
    tolerances are recorded in ``meta``.
    """
    k = dec.steps if k is None else k
    if k < 1:
        raise AuditError("decomposition holds no completed steps to audit")

    r, residual_norm = compute_residual(pair, dec, k)
    be = project_backward_error(r, dec, k)
    q_k = dec.basis(k)
    u_k = dec.stacked_u(k)
    _require_full_rank(dec.basis(k + 1), "Q_{k+1}")
    _require_full_rank(dec.stacked_u(k + 1), "U_{k+1}")

    applicable = be.norm_e < 1.0
    rp = recover_companion(pair, be)

    measured_distance = None
    norm_delta_a = None
    norm_delta_b = None
    w_check = None
    q_tilde = None
    nearby_solve_residual = None
    if rp.feasible:
        correction = _nearby_correction(q_k, be)
        q_tilde = q_k - correction
        if column_rank(q_tilde) != q_k.shape[1]:
            raise AuditError("nearby basis lost rank")
        measured_distance = sine_distance_of_perturbation(q_k, correction)
        norm_delta_a = spectral_norm(rp.delta_a)
        norm_delta_b = spectral_norm(rp.delta_b)
        w_check = transformed_embedding_check(pair, dec, be, rp, k)
        i_e21 = np.eye(pair.n, dtype=np.complex128) + be.e21
        nearby_solve_residual = float(
            np.linalg.norm(i_e21 @ q_tilde - q_k, "fro") / np.linalg.norm(q_k, "fro")
        )

    bound_distance = bound_delta_a = bound_delta_b = None
    satisfied = None
    if applicable and rp.feasible:
        bound_distance = bound_distance_formula(be.norm_e)
        bound_delta_a = bound_delta_a_formula(be.norm_e)
        bound_delta_b = bound_delta_b_formula(be.norm_e, pair.norm_scale)
        factor = 1.0 + slack
        satisfied = {
            "distance": measured_distance <= bound_distance * factor,
            "delta_a": norm_delta_a <= bound_delta_a * factor,
            "delta_b": norm_delta_b <= bound_delta_b * factor,
        }

    meta = {
        "k": k,
        "d_k": int(q_k.shape[1]),
        "norm_scale": pair.norm_scale,
        "companion_norm": pair.companion_norm.value,
        "companion_norm_method": pair.companion_norm.method,
        "verification_residual": be.verification_residual,
        "identity_residual": rp.identity_residual,
        "nearby_solve_residual": nearby_solve_residual,
        "q_defect": orthonormality_defect(q_k),
        "u_defect": orthonormality_defect(u_k),
        "cond_q": _condition_number(q_k),
        "cond_u": _condition_number(u_k),
        "pinv_cutoff_q": singular_value_cutoff(q_k, spectral_norm(q_k)),
        "pinv_cutoff_u": singular_value_cutoff(u_k, spectral_norm(u_k)),
        "residual_fro": float(np.linalg.norm(r, "fro")),
        "norm_e_fro": float(np.linalg.norm(be.assemble(), "fro")),
    }

    return StabilityAudit(
        residual_norm=residual_norm,
        backward=be,
        recovered=rp,
        nearby_basis=q_tilde,
        measured_distance=measured_distance,
        norm_delta_a=norm_delta_a,
        norm_delta_b=norm_delta_b,
        bound_distance=bound_distance,
        bound_delta_a=bound_delta_a,
        bound_delta_b=bound_delta_b,
        satisfied=satisfied,
        w_check_residual=w_check,
        applicable=applicable,
        slack=slack,
        alpha=1.0,
        pair_fingerprint=pair.fingerprint,
        meta=meta,
    )


def _condition_number(m: np.ndarray) -> float:
    s = np.linalg.svd(m, compute_uv=False)
    return float(s[0] / s[-1]) if s.size and s[-1] > 0 else float("inf")
