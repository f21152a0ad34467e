"""Command-line front end.

``toarstab run`` ingests Matrix Market matrices and start vectors, runs the
compact iteration with optional scaling, audits stability and writes a JSON
report.  ``toarstab sweep`` maps the norm-regime landscape with seeded
random instances, with and without scaling.

Exit codes: 0 all enabled checks pass, 2 file/parse/usage error, 3 audit
hypothesis failure, 4 bound violation.
"""

from __future__ import annotations

import argparse
import os
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .arnoldi import arnoldi_run
from .audit import brute_force_second_order_basis, run_audit
from .companion import CompanionOperator, ProblemPair, StartPair, embed_start
from .dense import subspace_distance
from .errors import AuditError, MatrixMarketError
from .generate import random_pair, random_start, rng_for
from .mmio import read_matrix_market
from .report import (
    SCHEMA_VERSION,
    TOOL,
    audit_block,
    decomposition_block,
    plan_block,
    problem_block,
    write_report,
)
from .scaling import make_plan, scaled_start, unscale_report
from .toar import toar_run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_HYPOTHESIS = 3
EXIT_BOUND = 4

ORACLE_SIZE_LIMIT = 64


@dataclass(frozen=True)
class RunConfig:
    matrix_a_path: str
    matrix_b_path: str
    start_path: str | None
    random_start: bool
    steps: int
    scale_mode: str
    audit: bool
    oracle_check: bool
    report_path: str | None
    seed: int


@dataclass(frozen=True)
class SweepConfig:
    norm_grid_a: tuple[float, ...]
    norm_grid_b: tuple[float, ...]
    n: int
    steps: int
    trials_per_cell: int
    seed: int
    with_and_without_scaling: bool
    report_path: str | None
    csv_path: str | None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toarstab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="factor one problem and audit it")
    run.add_argument("--matrix-a", required=True, help="Matrix Market file for A")
    run.add_argument("--matrix-b", required=True, help="Matrix Market file for B")
    start = run.add_mutually_exclusive_group(required=True)
    start.add_argument("--start", help="Matrix Market n-by-2 array: columns r_minus1, r_zero")
    start.add_argument("--random-start", action="store_true", help="seeded random start vectors")
    run.add_argument("--steps", required=True, type=int, help="number of iteration steps k")
    run.add_argument("--scale", default="none", metavar="{auto,none,ALPHA}",
                     help="scaling mode: auto, none, or a positive number")
    run.add_argument("--audit", action="store_true", help="run the stability audit")
    run.add_argument("--oracle-check", action="store_true",
                     help="compare against reference Arnoldi and the direct recurrence (n <= 64)")
    run.add_argument("--report", default=None, help="report path (stdout when omitted)")
    run.add_argument("--seed", type=int, default=0)

    sweep = sub.add_parser("sweep", help="norm-regime sweep over random instances")
    sweep.add_argument("--norms-a", required=True, help="comma-separated target norms for A")
    sweep.add_argument("--norms-b", required=True, help="comma-separated target norms for B")
    sweep.add_argument("--size", required=True, type=int, help="problem size n")
    sweep.add_argument("--steps", type=int, default=10)
    sweep.add_argument("--trials", type=int, default=3, help="trials per grid cell")
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--no-scaling-comparison", action="store_true",
                       help="run unscaled only instead of paired scaled/unscaled")
    sweep.add_argument("--report", default=None, help="report path (stdout when omitted)")
    sweep.add_argument("--csv", default=None, help="also write a per-cell CSV summary")
    return parser


def _usage_error(message: str) -> int:
    print(f"toarstab: error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _parse_norm_grid(text: str, name: str) -> tuple[float, ...]:
    items = [token for token in text.split(",") if token.strip()]
    if not items:
        raise ValueError(f"{name}: empty norm grid")
    values = tuple(float(token) for token in items)
    if any(not np.isfinite(v) or v <= 0 for v in values):
        raise ValueError(f"{name}: all norm targets must be positive and finite")
    return values


def _load_start(config: RunConfig, n: int) -> StartPair:
    if config.random_start:
        return random_start(n, rng_for(config.seed, 0))
    start = read_matrix_market(config.start_path)
    if start.shape != (n, 2):
        raise MatrixMarketError(
            f"{config.start_path}: start file must be {n}x2 (columns r_minus1, r_zero), "
            f"got {start.shape}"
        )
    return StartPair(r_minus1=start[:, 0], r_zero=start[:, 1])


def _scale_mode(text: str) -> str | float:
    if text in ("auto", "none"):
        return text
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"--scale must be auto, none, or a positive number, got {text!r}")


def run_command(config: RunConfig) -> int:
    try:
        mode = _scale_mode(config.scale_mode)
        a = read_matrix_market(config.matrix_a_path)
        b = read_matrix_market(config.matrix_b_path)
        pair = ProblemPair(a=a, b=b)
        if config.steps < 1:
            return _usage_error(f"--steps must be >= 1, got {config.steps}")
        if config.steps >= 2 * pair.n:
            return _usage_error(f"--steps must be < 2n = {2 * pair.n}, got {config.steps}")
        if config.oracle_check and pair.n > ORACLE_SIZE_LIMIT:
            return _usage_error(f"--oracle-check is limited to n <= {ORACLE_SIZE_LIMIT}")
        start = _load_start(config, pair.n)
        plan = make_plan(pair, mode)
    except (MatrixMarketError, OSError, ValueError) as exc:
        return _usage_error(str(exc))

    dec = toar_run(plan.scaled, scaled_start(plan, start), config.steps)

    exit_code = EXIT_OK
    audit_payload = None
    if config.audit:
        try:
            audit_scaled = run_audit(plan.scaled, dec)
            audit = unscale_report(plan, audit_scaled)
        except AuditError as exc:
            print(f"toarstab: audit hypothesis failure: {exc}", file=sys.stderr)
            return EXIT_HYPOTHESIS
        audit_payload = audit_block(audit)
        if audit.satisfied is None:
            print("toarstab: audit bounds not applicable (||E|| >= 1)", file=sys.stderr)
            exit_code = EXIT_HYPOTHESIS
        elif not audit.all_satisfied:
            exit_code = EXIT_BOUND

    oracle_payload = None
    if config.oracle_check:
        oracle_payload = _oracle_check(plan.scaled, scaled_start(plan, start), dec, config.steps)

    payload = {
        "schema_version": SCHEMA_VERSION,
        "tool": TOOL,
        "version": __version__,
        "command": "run",
        "seed": config.seed,
        "steps_requested": config.steps,
        "problem": problem_block(pair),
        "plan": plan_block(plan),
        "decomposition": decomposition_block(dec),
        "audit": audit_payload,
        "oracle": oracle_payload,
        "exit_code": exit_code,
    }
    write_report(config.report_path, payload)
    return exit_code


def _oracle_check(pair, start, dec, steps) -> dict:
    op = CompanionOperator.from_pair(pair)
    v1, _ = embed_start(start)
    reference = arnoldi_run(op, v1, steps)
    k = min(dec.steps, reference.k)
    embedding = subspace_distance(dec.reconstruct(k), reference.v[:, :k])
    oracle_basis = brute_force_second_order_basis(pair, start, dec.j)
    second_order = subspace_distance(dec.basis(), oracle_basis)
    return {
        "embedding_distance": embedding,
        "second_order_distance": second_order,
        "columns_compared": k,
    }


def _sweep_cell(config: SweepConfig, index: int, norm_a: float, norm_b: float) -> dict:
    modes = ["none", "auto"] if config.with_and_without_scaling else ["none"]
    records: dict[str, list] = {mode: [] for mode in modes}
    regime = None
    error = None
    for trial in range(config.trials_per_cell):
        try:
            pair = random_pair(config.n, norm_a, norm_b, rng_for(config.seed, index, trial, 0))
            start = random_start(config.n, rng_for(config.seed, index, trial, 1))
            for mode in modes:
                plan = make_plan(pair, mode)
                regime = plan.regime
                dec = toar_run(plan.scaled, scaled_start(plan, start), config.steps)
                audit = unscale_report(plan, run_audit(plan.scaled, dec))
                records[mode].append(
                    {
                        "delta_a": audit.norm_delta_a,
                        "delta_b": audit.norm_delta_b,
                        "rel_delta_a": audit.norm_delta_a / pair.norm_a if pair.norm_a else None,
                        "rel_delta_b": audit.norm_delta_b / pair.norm_b if pair.norm_b else None,
                        "distance": audit.measured_distance,
                        "satisfied": audit.all_satisfied,
                    }
                )
        except (AuditError, ValueError) as exc:
            error = str(exc)

    cell = {
        "norm_a": norm_a,
        "norm_b": norm_b,
        "regime": regime,
        "trials": config.trials_per_cell,
        "error": error,
    }
    for mode in modes:
        rows = records[mode]
        label = "unscaled" if mode == "none" else "scaled"
        cell[label] = _aggregate(rows)
    if config.with_and_without_scaling and records["none"] and records["auto"]:
        unscaled = cell["unscaled"]["median_rel_delta_b"]
        scaled = cell["scaled"]["median_rel_delta_b"]
        cell["improvement_rel_delta_b"] = (
            unscaled / scaled if (unscaled is not None and scaled) else None
        )
    return cell


def _aggregate(rows: list[dict]) -> dict | None:
    if not rows:
        return None

    def median_of(key):
        values = [row[key] for row in rows if row[key] is not None]
        return statistics.median(values) if values else None

    return {
        "median_delta_a": median_of("delta_a"),
        "median_delta_b": median_of("delta_b"),
        "median_rel_delta_a": median_of("rel_delta_a"),
        "median_rel_delta_b": median_of("rel_delta_b"),
        "median_distance": median_of("distance"),
        "all_satisfied": all(row["satisfied"] for row in rows),
    }


def sweep_command(config: SweepConfig) -> int:
    if config.n < 1:
        return _usage_error(f"--size must be >= 1, got {config.n}")
    if config.steps < 1 or config.steps >= 2 * config.n:
        return _usage_error(f"--steps must satisfy 1 <= k < 2n, got {config.steps}")
    if config.trials_per_cell < 1:
        return _usage_error(f"--trials must be >= 1, got {config.trials_per_cell}")

    cells = [
        (index, norm_a, norm_b)
        for index, (norm_a, norm_b) in enumerate(
            (na, nb) for na in config.norm_grid_a for nb in config.norm_grid_b
        )
    ]
    workers = max(1, int(os.environ.get("TOARSTAB_THREADS", "1")))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_cell, config, *cell) for cell in cells]
            results = [future.result() for future in futures]
    else:
        results = [_sweep_cell(config, *cell) for cell in cells]

    payload = {
        "schema_version": SCHEMA_VERSION,
        "tool": TOOL,
        "version": __version__,
        "command": "sweep",
        "seed": config.seed,
        "size": config.n,
        "steps": config.steps,
        "trials_per_cell": config.trials_per_cell,
        "with_and_without_scaling": config.with_and_without_scaling,
        "cells": results,
    }
    write_report(config.report_path, payload)
    if config.csv_path:
        _write_csv(config.csv_path, results, config.with_and_without_scaling)
    return EXIT_OK


def _write_csv(path, cells, paired) -> None:
    import csv

    columns = ["norm_a", "norm_b", "regime", "unscaled_rel_delta_b"]
    if paired:
        columns += ["scaled_rel_delta_b", "improvement_rel_delta_b"]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for cell in cells:
            row = [cell["norm_a"], cell["norm_b"], cell["regime"]]
            unscaled = cell.get("unscaled")
            row.append(unscaled["median_rel_delta_b"] if unscaled else None)
            if paired:
                scaled = cell.get("scaled")
                row.append(scaled["median_rel_delta_b"] if scaled else None)
                row.append(cell.get("improvement_rel_delta_b"))
            writer.writerow(row)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        config = RunConfig(
            matrix_a_path=args.matrix_a,
            matrix_b_path=args.matrix_b,
            start_path=args.start,
            random_start=args.random_start,
            steps=args.steps,
            scale_mode=args.scale,
            audit=args.audit,
            oracle_check=args.oracle_check,
            report_path=args.report,
            seed=args.seed,
        )
        return run_command(config)
    try:
        norms_a = _parse_norm_grid(args.norms_a, "--norms-a")
        norms_b = _parse_norm_grid(args.norms_b, "--norms-b")
    except ValueError as exc:
        return _usage_error(str(exc))
    config = SweepConfig(
        norm_grid_a=norms_a,
        norm_grid_b=norms_b,
        n=args.size,
        steps=args.steps,
        trials_per_cell=args.trials,
        seed=args.seed,
        with_and_without_scaling=not args.no_scaling_comparison,
        report_path=args.report,
        csv_path=args.csv,
    )
    return sweep_command(config)


if __name__ == "__main__":
    sys.exit(main())
