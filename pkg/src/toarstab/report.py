"""Machine-readable report assembly and serialization.

Reports are plain JSON with sorted keys and no timestamps, so identical
configurations and seeds produce byte-identical files.  Every numeric field
is finite; quantities that do not apply are ``null`` next to an explicit
applicability flag.
"""

from __future__ import annotations

import json
import math

from .audit import StabilityAudit
from .companion import ProblemPair
from .scaling import ScalingPlan
from .toar import ToarDecomposition

SCHEMA_VERSION = 1
TOOL = "toarstab"


def _finite(value):
    if value is None:
        return None
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {value!r} in report")
    return value


def problem_block(pair: ProblemPair) -> dict:
    return {
        "n": pair.n,
        "norm_a": _finite(pair.norm_a),
        "norm_b": _finite(pair.norm_b),
        "norm_scale": _finite(pair.norm_scale),
        "content_hash": pair.fingerprint,
    }


def plan_block(plan: ScalingPlan) -> dict:
    return {
        "alpha": _finite(plan.alpha),
        "mode": plan.mode,
        "regime": plan.regime,
        "start_adjustment": _finite(plan.start_adjustment),
        "heavy_damping_open_problem": plan.open_problem,
        "predicted_eps_orders": {
            "distance": _finite(plan.predicted.distance),
            "delta_a": _finite(plan.predicted.delta_a),
            "delta_b": _finite(plan.predicted.delta_b),
        },
    }


def decomposition_block(dec: ToarDecomposition) -> dict:
    return {
        "steps": dec.steps,
        "columns": dec.j,
        "d_final": dec.d,
        "d_history": list(dec.d_history),
        "deflations": [{"step": step, "beta": _finite(beta)} for step, beta in dec.deflation_log],
        "breakdown_at": dec.breakdown_at,
    }


def audit_block(audit: StabilityAudit) -> dict:
    satisfied = audit.satisfied if audit.satisfied is not None else None
    return {
        "residual_norm": _finite(audit.residual_norm),
        "norm_e": _finite(audit.backward.norm_e),
        "norm_e21": _finite(audit.backward.norm_e21),
        "verification_residual": _finite(audit.backward.verification_residual),
        "applicable": audit.applicable,
        "feasible": audit.recovered.feasible,
        "norm_delta_a": _finite(audit.norm_delta_a),
        "norm_delta_b": _finite(audit.norm_delta_b),
        "measured_distance": _finite(audit.measured_distance),
        "bound_distance": _finite(audit.bound_distance),
        "bound_delta_a": _finite(audit.bound_delta_a),
        "bound_delta_b": _finite(audit.bound_delta_b),
        "satisfied": satisfied,
        "w_check_residual": _finite(audit.w_check_residual),
        "identity_residual": _finite(audit.recovered.identity_residual),
        "slack": _finite(audit.slack),
        "alpha": _finite(audit.alpha),
        "meta": {
            key: (value if isinstance(value, (str, bool, int, type(None))) else _finite(value))
            for key, value in audit.meta.items()
        },
    }


def write_report(path, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if path is None:
        print(text, end="")
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
