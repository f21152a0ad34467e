"""Eigenvalue scaling of the quadratic problem and its stability bookkeeping.

Scaling replaces ``(A, B)`` by ``(alpha A, alpha^2 B)``.  The objective
``f(alpha) = (1 + ||A|| alpha + ||B|| alpha^2) / alpha`` is minimized at
``alpha = ||B||^(-1/2)`` (the Fan-Lin-Van Dooren parameter); in the heavily
damped regime ``||A|| >> ||B||^(1/2)`` the alternative ``alpha = ||A||^(-1)``
is used instead, which restores everything except the ``||dB|| = O(eps)
||A||^2`` order, a limitation this module reports explicitly.

Regimes are classified by the ratio ``||A|| / ||B||^(1/2)``: below 1 the
scaled method is normwise stable, within a factor ``band`` of 1 it is
coefficientwise stable, and above ``band`` it is heavily damped.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .audit import StabilityAudit
from .companion import ProblemPair, StartPair

BALANCED_I = "balanced_i"
BALANCED_II = "balanced_ii"
HEAVY_DAMPING_III = "heavy_damping_iii"
UNSCALED = "unscaled"

DEFAULT_BAND = 10.0


@dataclass(frozen=True)
class PredictedOrders:
    """Multipliers of eps in the predicted error orders."""

    distance: float
    delta_a: float
    delta_b: float


@dataclass(frozen=True)
class ScalingPlan:
    """A chosen scaling parameter plus everything needed to undo it."""

    alpha: float
    scaled: ProblemPair
    regime: str
    predicted: PredictedOrders
    start_adjustment: float
    mode: str
    open_problem: bool
    base_fingerprint: str


def f_alpha(pair: ProblemPair, alpha: float) -> float:
    """Scaling objective ``(1 + ||A|| alpha + ||B|| alpha^2) / alpha``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return (1.0 + pair.norm_a * alpha + pair.norm_b * alpha * alpha) / alpha


def alpha_opt(pair: ProblemPair) -> float:
    """The Fan-Lin-Van Dooren parameter ``||B||^(-1/2)``."""
    if pair.norm_b == 0.0:
        raise ValueError("scaling parameter undefined for B = 0")
    return float(pair.norm_b ** -0.5)


def classify_regime(pair: ProblemPair, band: float = DEFAULT_BAND):
    """Classify the norm regime and give the scaled-run error orders.

    Returns ``(regime, orders)`` where ``orders`` are the eps multipliers
    predicted for a run scaled with ``alpha_opt``:

    * ``balanced_i``   (``||A|| < ||B||^(1/2)``): distance O(eps),
      ``||dA|| = O(eps) ||B||^(1/2)``, ``||dB|| / ||B|| = O(eps)``.
    * ``balanced_ii``  (ratio within ``band`` of 1 from above, including
      equality): fully coefficientwise, both relative errors O(eps).
    * ``heavy_damping_iii`` (ratio above ``band``): distance
      ``O(eps) ||B||^(-1/2) ||A||`` and ``||dB|| = O(eps) ||A||^2``.

    ``B = 0`` degenerates to the ``unscaled`` regime with a warning.
    """
    if pair.norm_b == 0.0:
        warnings.warn("B = 0: no scaling regime applies", stacklevel=2)
        scale = max(1.0, pair.norm_a)
        return UNSCALED, PredictedOrders(distance=scale, delta_a=scale, delta_b=scale * scale)
    sqrt_b = float(np.sqrt(pair.norm_b))
    ratio = pair.norm_a / sqrt_b
    if ratio < 1.0:
        return BALANCED_I, PredictedOrders(distance=1.0, delta_a=sqrt_b, delta_b=pair.norm_b)
    if ratio <= band:
        return BALANCED_II, PredictedOrders(distance=1.0, delta_a=pair.norm_a, delta_b=pair.norm_b)
    return HEAVY_DAMPING_III, PredictedOrders(
        distance=ratio, delta_a=pair.norm_a, delta_b=pair.norm_a ** 2
    )


def predicted_orders_for_alpha(pair: ProblemPair, alpha: float) -> PredictedOrders:
    """General predicted orders for an arbitrary parameter.

    ``m = max(1, alpha ||A||, alpha^2 ||B||)`` gives distance ``O(eps) m``,
    ``||dA|| = O(eps) m / alpha`` and ``||dB|| = O(eps) (m / alpha)^2``.
    """
    m = max(1.0, alpha * pair.norm_a, alpha * alpha * pair.norm_b)
    return PredictedOrders(distance=m, delta_a=m / alpha, delta_b=(m * m) / (alpha * alpha))


def make_plan(pair: ProblemPair, mode="auto", band: float = DEFAULT_BAND) -> ScalingPlan:
    """Build a scaling plan.

    ``mode`` is ``"auto"`` (alpha_opt in the balanced regimes, ``1/||A||``
    in the heavily damped one, ``1/max(1, ||A||)`` when B = 0), ``"none"``
    (identity plan), or a positive number used verbatim.
    """
    regime, _ = classify_regime(pair, band=band)
    open_problem = False
    if mode == "none":
        alpha = 1.0
    elif mode == "auto":
        if regime in (BALANCED_I, BALANCED_II):
            alpha = alpha_opt(pair)
        elif regime == HEAVY_DAMPING_III:
            alpha = 1.0 / pair.norm_a
            open_problem = True
        else:  # B = 0 fallback
            alpha = 1.0 / max(1.0, pair.norm_a)
    else:
        alpha = float(mode)
        if not (np.isfinite(alpha) and alpha > 0):
            raise ValueError(f"fixed scaling parameter must be positive and finite, got {mode}")
        mode = "fixed"

    scaled = pair if alpha == 1.0 else ProblemPair(a=alpha * pair.a, b=(alpha * alpha) * pair.b)
    return ScalingPlan(
        alpha=alpha,
        scaled=scaled,
        regime=regime,
        predicted=predicted_orders_for_alpha(pair, alpha),
        start_adjustment=1.0 / alpha,
        mode=str(mode),
        open_problem=open_problem,
        base_fingerprint=pair.fingerprint,
    )


def scaled_start(plan: ScalingPlan, s: StartPair) -> StartPair:
    """Start vectors adjusted so the scaled run spans the same subspace.

    The recurrence of ``(alpha A, alpha^2 B)`` from ``(alpha^{-1} r_{-1},
    r_0)`` produces ``alpha^i r_i``, so the generated subspace is unchanged.
    """
    if plan.alpha == 1.0:
        return s
    return StartPair(r_minus1=plan.start_adjustment * s.r_minus1, r_zero=s.r_zero)


def unscale_report(plan: ScalingPlan, audit_scaled: StabilityAudit) -> StabilityAudit:
    """Map an audit of the scaled problem back to the original data.

    The perturbations transport exactly: ``dA = alpha^{-1} dA_alpha`` and
    ``dB = alpha^{-2} dB_alpha``, and the Theorem bounds transport with the
    same factors, so the satisfied flags are recomputed against the
    transported bounds.  Distances are properties of the subspaces, which
    the scaling does not touch, and carry over unchanged.
    """
    if audit_scaled.pair_fingerprint != plan.scaled.fingerprint:
        raise ValueError("plan/audit mismatch: audit was not computed on this plan's scaled pair")
    alpha = plan.alpha
    meta = dict(audit_scaled.meta)
    meta.update(
        predicted_distance_order=plan.predicted.distance,
        predicted_delta_a_order=plan.predicted.delta_a,
        predicted_delta_b_order=plan.predicted.delta_b,
        regime=plan.regime,
        heavy_damping_open_problem=plan.open_problem,
    )
    if alpha == 1.0:
        return dataclasses.replace(audit_scaled, alpha=1.0, meta=meta)

    inv = 1.0 / alpha
    inv2 = inv * inv
    rp = audit_scaled.recovered
    if rp.feasible:
        rp = dataclasses.replace(rp, delta_a=inv * rp.delta_a, delta_b=inv2 * rp.delta_b)

    norm_delta_a = None if audit_scaled.norm_delta_a is None else inv * audit_scaled.norm_delta_a
    norm_delta_b = None if audit_scaled.norm_delta_b is None else inv2 * audit_scaled.norm_delta_b
    bound_delta_a = None if audit_scaled.bound_delta_a is None else inv * audit_scaled.bound_delta_a
    bound_delta_b = None if audit_scaled.bound_delta_b is None else inv2 * audit_scaled.bound_delta_b

    satisfied = None
    if audit_scaled.satisfied is not None:
        factor = 1.0 + audit_scaled.slack
        satisfied = {
            "distance": audit_scaled.measured_distance <= audit_scaled.bound_distance * factor,
            "delta_a": norm_delta_a <= bound_delta_a * factor,
            "delta_b": norm_delta_b <= bound_delta_b * factor,
        }

    return dataclasses.replace(
        audit_scaled,
        recovered=rp,
        norm_delta_a=norm_delta_a,
        norm_delta_b=norm_delta_b,
        bound_delta_a=bound_delta_a,
        bound_delta_b=bound_delta_b,
        satisfied=satisfied,
        alpha=alpha,
        pair_fingerprint=plan.base_fingerprint,
        meta=meta,
    )
