"""Command-line interface.

Subcommands:

* ``sample``    draw a synthetic sample set into a directory
* ``estimate``  run the spectral pipeline on a sample directory
* ``mle``       EM or grid maximum likelihood on a sample directory
* ``rate``      minimax rate and hardness classification as JSON
* ``lowdeg``    low-degree likelihood-ratio norm as JSON
* ``sweep``     run a preset or configured parameter sweep to CSV
* ``summary``   aggregate sweep CSV into per-point stats plus a trend
* ``phase``     rate/hardness classification over an (n, lambda) grid
* ``net``       two-center decomposition of a multi-layer network
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time

import numpy as np

from . import harness, netdata, theory
from .estimators import EstimatorConfig, estimate
from .exceptions import DimensionError, LrmmError
from .likelihood import em_mle, grid_mle
from .linalg import load_matrix_csv, save_matrix_csv
from .model import (load_sample_dir, loss, make_signal, sample_lrmm,
                    save_sample_dir)

_LOWDEG_MODES = {"bound": "paper_bound", "exact": "exact", "brute": "brute_force"}


def _parse_grid(text: str, integer: bool = False):
    """Parse ``a:b:k`` into k equally spaced values from a to b."""
    parts = text.split(":")
    if len(parts) != 3:
        raise DimensionError(f"grid {text!r} must look like a:b:k")
    a, b, k = float(parts[0]), float(parts[1]), int(parts[2])
    if k < 1:
        raise DimensionError("grid must request at least one value")
    values = np.linspace(a, b, k)
    if integer:
        return [int(round(v)) for v in values]
    return [float(v) for v in values]


def _emit(payload) -> None:
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _cmd_sample(args) -> int:
    signal = make_signal(args.d1, args.d2, args.r, getattr(args, "lambda"),
                         condition=args.condition, seed=args.seed)
    samples = sample_lrmm(signal, args.n, noise_scale=args.noise_scale,
                          seed=args.seed)
    save_sample_dir(samples, args.out)
    save_matrix_csv(f"{args.out}/m_true.csv", signal.m)
    _emit({"out": args.out, "n": samples.n, "d1": samples.d1, "d2": samples.d2,
           "r": args.r, "lambda": getattr(args, "lambda")})
    return 0


def _cmd_estimate(args) -> int:
    samples = load_sample_dir(args.samples)
    start = time.perf_counter()
    report = estimate(samples, EstimatorConfig(rank=args.r, split=args.split,
                                               floor_dim_rule=args.floor_dim_rule))
    runtime_ms = int(round((time.perf_counter() - start) * 1000))
    payload = {
        "lambda_hat": report.lambda_hat,
        "floor_active": report.floor_active,
        "batch_sizes": list(report.batch_sizes),
        "runtime_ms": runtime_ms,
    }
    if args.truth:
        payload["loss"] = loss(report.m_hat, load_matrix_csv(args.truth))
    if args.out:
        save_matrix_csv(args.out, report.m_hat)
        payload["m_hat_csv"] = args.out
    _emit(payload)
    return 0


def _resolve_init(init: str, samples, rank: int):
    if init == "zero":
        return np.zeros((samples.d1, samples.d2))
    if init == "spectral":
        return estimate(samples, EstimatorConfig(rank=rank)).m_hat
    return load_matrix_csv(init)


def _cmd_mle(args) -> int:
    samples = load_sample_dir(args.samples)
    if args.method == "em":
        init = _resolve_init(args.init, samples, args.r)
        result = em_mle(samples, args.r, init, max_iter=args.max_iter,
                        tol=args.tol)
    else:
        result = grid_mle(samples, _parse_grid(args.lambda_grid),
                          args.angle_steps)
    payload = {
        "method": result.method,
        "neg_log_lik": result.neg_log_lik,
        "iterations": result.iterations,
        "converged": result.converged,
        "m_hat": [[float(v) for v in row] for row in result.m_hat],
    }
    if args.out:
        save_matrix_csv(args.out, result.m_hat)
        payload["m_hat_csv"] = args.out
    _emit(payload)
    return 0


def _rate_point_payload(point: theory.RatePoint) -> dict:
    payload = dataclasses.asdict(point)
    payload["lambda"] = payload.pop("lam")
    return payload


def _cmd_rate(args) -> int:
    _emit(_rate_point_payload(theory.classify(args.n, args.d, args.r,
                                              getattr(args, "lambda"))))
    return 0


def _cmd_lowdeg(args) -> int:
    result = theory.lowdeg_norm(args.n, args.d1, args.d2, getattr(args, "lambda"),
                                args.degree, mode=_LOWDEG_MODES[args.mode])
    _emit({
        "value": result.value,
        "degree": result.degree,
        "mode": result.mode,
        "terms": {str(k): v for k, v in sorted(result.terms.items())},
    })
    return 0


def _cmd_sweep(args) -> int:
    if args.preset:
        spec = harness.preset(args.preset)
    else:
        with open(args.config, encoding="utf-8") as fh:
            spec = harness.SweepSpec.from_dict(json.load(fh))
    updates = {}
    if args.reps is not None:
        updates["reps"] = args.reps
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.noise_scale is not None:
        updates["noise_scale"] = args.noise_scale
    if args.split:
        updates["split"] = True
    if updates:
        spec = dataclasses.replace(spec, **updates)
    rows = harness.run_sweep(spec, workers=args.workers)
    harness.write_rows(rows, args.out, include_timing=args.timing)
    errors = sum(1 for r in rows if r.error)
    _emit({"out": args.out, "rows": len(rows), "errors": errors,
           "points": len(spec.grid_points())})
    return 0


def _cmd_summary(args) -> int:
    rows = harness.read_rows(getattr(args, "in"))
    summaries, fit = harness.summarize(rows, regressor=args.regressor)
    harness.write_summary(summaries, args.out)
    _emit({"out": args.out, "points": len(summaries),
           "regressor": fit.regressor, "slope": fit.slope,
           "intercept": fit.intercept, "r_squared": fit.r_squared})
    return 0


def _cmd_phase(args) -> int:
    points = harness.phase_diagram(_parse_grid(args.n_grid, integer=True),
                                   _parse_grid(args.lambda_grid),
                                   args.d, args.r)
    harness.write_phase(points, args.out)
    _emit({"out": args.out, "cells": len(points)})
    return 0


def _cmd_net(args) -> int:
    stack = netdata.load_layers(args.layers, undirected=args.undirected,
                                node_count=args.nodes)
    if stack.layers.shape[0] < 4:
        raise netdata.EmptyStack(
            f"pair estimation needs at least 4 layers, got {stack.layers.shape[0]}")
    start = time.perf_counter()
    mean, centered = netdata.center_stack(stack)
    report = estimate(centered, EstimatorConfig(rank=args.r, split=False))
    runtime_ms = int(round((time.perf_counter() - start) * 1000))
    pair = netdata.CenterPair(m1=mean + report.m_hat, m2=mean - report.m_hat,
                              mean=mean, m_hat=report.m_hat)
    labels = (netdata.load_labels(args.labels, stack.node_count)
              if args.labels else None)
    written = netdata.reorder_and_export(pair, labels, args.out)
    save_matrix_csv(f"{args.out}/mean.csv", pair.mean)
    save_matrix_csv(f"{args.out}/m_hat.csv", pair.m_hat)
    payload = {
        "node_count": stack.node_count,
        "layer_count": int(stack.layers.shape[0]),
        "rank": args.r,
        "lambda_hat": report.lambda_hat,
        "floor_active": report.floor_active,
        "batch_sizes": list(report.batch_sizes),
        "runtime_ms": runtime_ms,
        "files": sorted(written) + ["m_hat.csv", "mean.csv", "report.json"],
    }
    with open(f"{args.out}/report.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _emit(payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrmm",
                                     description="Low-rank matrix mixture toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw a synthetic sample set")
    p.add_argument("--out", required=True)
    p.add_argument("--d1", type=int, required=True)
    p.add_argument("--d2", type=int, required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--lambda", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.add_argument("--condition", type=float, default=1.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("estimate", help="spectral pipeline on a sample directory")
    p.add_argument("--samples", required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--split", action="store_true")
    p.add_argument("--floor-dim-rule", choices=["max_dim", "geom_mean"],
                   default="max_dim")
    p.add_argument("--truth", help="matrix CSV with the true signal, adds loss")
    p.add_argument("--out", help="write m_hat as matrix CSV here")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("mle", help="maximum likelihood on a sample directory")
    p.add_argument("--samples", required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--method", choices=["em", "grid"], default="em")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--init", default="spectral",
                   help="'spectral', 'zero', or a matrix CSV path")
    p.add_argument("--lambda-grid", default="0.5:5.0:10",
                   help="a:b:k grid for method=grid")
    p.add_argument("--angle-steps", type=int, default=24)
    p.add_argument("--out", help="write m_hat as matrix CSV here")
    p.set_defaults(func=_cmd_mle)

    p = sub.add_parser("rate", help="minimax rate and hardness as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--lambda", type=float, required=True)
    p.set_defaults(func=_cmd_rate)

    p = sub.add_parser("lowdeg", help="low-degree likelihood-ratio norm as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d1", type=int, required=True)
    p.add_argument("--d2", type=int, required=True)
    p.add_argument("--lambda", type=float, required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--mode", choices=sorted(_LOWDEG_MODES), default="bound")
    p.set_defaults(func=_cmd_lowdeg)

    p = sub.add_parser("sweep", help="run a parameter sweep to CSV")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", choices=list(harness.PRESET_NAMES))
    group.add_argument("--config", help="JSON file with SweepSpec fields")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise-scale", type=float)
    p.add_argument("--split", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock elapsed_ms (breaks byte-level determinism)")
    p.add_argument("--out", default="results.csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("summary", help="aggregate a sweep CSV")
    p.add_argument("--in", dest="in", required=True)
    p.add_argument("--regressor", choices=list(harness.REGRESSORS),
                   default="inv_lambda")
    p.add_argument("--out", default="summary.csv")
    p.set_defaults(func=_cmd_summary)

    p = sub.add_parser("phase", help="hardness phase diagram over (n, lambda)")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--n-grid", required=True, help="a:b:k")
    p.add_argument("--lambda-grid", required=True, help="a:b:k")
    p.add_argument("--out", default="phase.csv")
    p.set_defaults(func=_cmd_phase)

    p = sub.add_parser("net", help="two-center decomposition of network layers")
    p.add_argument("--layers", required=True, help="TSV edge list")
    p.add_argument("--undirected", action="store_true")
    p.add_argument("--nodes", type=int, help="declared node count")
    p.add_argument("--r", type=int, default=10)
    p.add_argument("--labels", help="node,community CSV for display reordering")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_net)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LrmmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
