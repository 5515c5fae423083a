"""Monte-Carlo sweep harness: presets, deterministic replication, CSV IO.

A sweep evaluates the spectral pipeline over a parameter grid.  Each grid
point draws one signal from ``derive_seed(master_seed, point, 0)`` and
each replicate draws fresh noise and labels from
``derive_seed(master_seed, point, rep)`` with ``rep`` starting at 1, so a
row is a pure function of (spec, master_seed, point, rep).  Replicates
may run on worker processes; rows are buffered and written in (point,
rep) order, which makes the output CSV byte-identical for any worker
count.

Wall-clock timings are inherently nondeterministic, so the CSV writer
emits zeros in the ``elapsed_ms`` column unless timings are explicitly
requested; measured values stay available on the in-memory rows.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import hashlib
import math
import struct
import time

import numpy as np

from .estimators import EstimatorConfig, estimate
from .exceptions import DimensionError, InsufficientPoints, LrmmError
from .model import loss, make_signal, sample_lrmm
from .theory import RatePoint, classify
from .validation import check_seed

SWEEP_HEADER = ("experiment", "rep", "seed", "n", "d1", "d2", "r", "lambda",
                "loss", "lambda_hat", "floor_active", "elapsed_ms", "error")
SUMMARY_HEADER = ("experiment", "n", "d1", "d2", "r", "lambda",
                  "regressor_value", "mean_loss", "std_error", "reps_used")
PHASE_HEADER = ("n", "lambda", "d", "r", "rate", "info_threshold",
                "comp_threshold", "sample_regime", "hardness")

REGRESSORS = ("inv_lambda", "inv_sqrt_n", "sqrt_d", "sqrt_r")

PRESET_NAMES = ("exp1", "exp2", "exp3", "exp4", "exp5", "exp6")


def derive_seed(master_seed: int, point_index: int, rep: int) -> int:
    """Map (master seed, grid point, replicate) to a 64-bit stream seed.

    A counter-based hash split: distinct inputs give independent,
    collision-resistant streams, and the value depends on nothing else,
    so any process can recompute any row's seed.
    """
    master_seed = check_seed(master_seed, "master_seed")
    if point_index < 0 or rep < 0:
        raise DimensionError("point_index and rep must be >= 0")
    payload = struct.pack("<QQQ", master_seed, point_index, rep)
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")


@dataclasses.dataclass
class SweepSpec:
    """Parameter grid for one sweep.

    ``d1`` and ``d2`` must have equal length and are zipped into
    dimension pairs; the grid is the product of those pairs with ``n``,
    ``r``, and the lambda slots, enumerated with lambda innermost and
    dimensions outermost.  Exactly one of ``lambdas`` (explicit values)
    or ``lambda_multipliers`` (factors applied to
    ``sqrt(max(d1, d2)) * n^(-1/4)`` per point) must be given.
    """

    name: str
    d1: tuple[int, ...]
    d2: tuple[int, ...]
    r: tuple[int, ...]
    n: tuple[int, ...]
    lambdas: tuple[float, ...] | None = None
    lambda_multipliers: tuple[float, ...] | None = None
    reps: int = 100
    master_seed: int = 0
    split: bool = False
    noise_scale: float = 1.0
    condition: float = 1.5

    def __post_init__(self):
        self.d1 = tuple(int(v) for v in np.atleast_1d(self.d1))
        self.d2 = tuple(int(v) for v in np.atleast_1d(self.d2))
        self.r = tuple(int(v) for v in np.atleast_1d(self.r))
        self.n = tuple(int(v) for v in np.atleast_1d(self.n))
        if len(self.d1) != len(self.d2):
            raise DimensionError("d1 and d2 must have equal length")
        if not (self.d1 and self.r and self.n):
            raise DimensionError("d1/d2, r, and n must be non-empty")
        if min(self.d1 + self.d2 + self.r + self.n) < 1:
            raise DimensionError("grid values must be >= 1")
        if (self.lambdas is None) == (self.lambda_multipliers is None):
            raise DimensionError(
                "exactly one of lambdas and lambda_multipliers must be set")
        if self.lambdas is not None:
            self.lambdas = tuple(float(v) for v in np.atleast_1d(self.lambdas))
            values = self.lambdas
        else:
            self.lambda_multipliers = tuple(
                float(v) for v in np.atleast_1d(self.lambda_multipliers))
            values = self.lambda_multipliers
        if not values or min(values) <= 0:
            raise DimensionError("lambda values must be positive")
        self.reps = int(self.reps)
        if self.reps < 1:
            raise DimensionError("reps must be >= 1")
        self.master_seed = check_seed(self.master_seed, "master_seed")
        self.split = bool(self.split)
        self.noise_scale = float(self.noise_scale)
        if self.noise_scale < 0:
            raise DimensionError("noise_scale must be >= 0")
        self.condition = float(self.condition)
        if self.condition < 1:
            raise DimensionError("condition must be >= 1")

    def grid_points(self) -> list[tuple[int, int, int, int, float]]:
        """Enumerate (d1, d2, n, r, lambda) grid points in order."""
        points = []
        slots = self.lambdas if self.lambdas is not None else self.lambda_multipliers
        for dd1, dd2 in zip(self.d1, self.d2):
            for n in self.n:
                for r in self.r:
                    for slot in slots:
                        if self.lambdas is not None:
                            lam = slot
                        else:
                            lam = slot * math.sqrt(max(dd1, dd2)) * n ** -0.25
                        points.append((dd1, dd2, n, r, float(lam)))
        return points

    def to_dict(self) -> dict:
        """JSON-ready representation, also used for the preset goldens."""
        out = {
            "name": self.name,
            "d1": list(self.d1),
            "d2": list(self.d2),
            "r": list(self.r),
            "n": list(self.n),
            "lambdas": None if self.lambdas is None else list(self.lambdas),
            "lambda_multipliers": (None if self.lambda_multipliers is None
                                   else list(self.lambda_multipliers)),
            "reps": self.reps,
            "master_seed": self.master_seed,
            "split": self.split,
            "noise_scale": self.noise_scale,
            "condition": self.condition,
        }
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        data = dict(data)
        if "d" in data:
            d = data.pop("d")
            data["d1"] = d
            data["d2"] = d
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DimensionError(f"unknown sweep fields: {sorted(unknown)}")
        return cls(**data)


@dataclasses.dataclass
class SweepRow:
    """One replicate outcome; ``error`` is empty for successful rows."""

    experiment: str
    rep: int
    seed: int
    n: int
    d1: int
    d2: int
    r: int
    lam: float
    loss: float
    lambda_hat: float
    floor_active: bool
    elapsed_ms: int
    error: str = ""


def preset(name: str) -> SweepSpec:
    """One of the six reference sweeps (``exp1`` .. ``exp6``).

    exp1-exp3 sweep the signal scale at fixed (n, d); exp4 sweeps n at
    two dimensions, exp5 sweeps the dimension at two sample sizes, both
    re-deriving lambda per point; exp6 sweeps the rank at a large sample
    size for one near-threshold and one strong scale.
    """
    eight = tuple(np.linspace(3.0, 10.0, 8))
    if name == "exp1":
        return SweepSpec(name="exp1", d1=(250,), d2=(250,), r=(2,), n=(300,),
                         lambda_multipliers=eight)
    if name == "exp2":
        return SweepSpec(name="exp2", d1=(100,), d2=(100,), r=(2,), n=(500,),
                         lambda_multipliers=eight)
    if name == "exp3":
        return SweepSpec(name="exp3", d1=(20,), d2=(20,), r=(2,), n=(3000,),
                         lambda_multipliers=eight)
    if name == "exp4":
        return SweepSpec(name="exp4", d1=(100, 200), d2=(100, 200), r=(2,),
                         n=tuple(range(100, 1001, 100)),
                         lambda_multipliers=(3.0,))
    if name == "exp5":
        return SweepSpec(name="exp5", d1=tuple(range(100, 501, 50)),
                         d2=tuple(range(100, 501, 50)), r=(2,), n=(100, 200),
                         lambda_multipliers=(3.0,))
    if name == "exp6":
        near_threshold = math.sqrt(10.0) * 10000 ** -0.25
        return SweepSpec(name="exp6", d1=(10,), d2=(10,), r=tuple(range(2, 11)),
                         n=(10000,), lambdas=(near_threshold, 5.0))
    raise DimensionError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


def _run_cell(spec: SweepSpec, point_index: int, point, rep: int) -> SweepRow:
    d1, d2, n, r, lam = point
    seed = derive_seed(spec.master_seed, point_index, rep)
    signal_seed = derive_seed(spec.master_seed, point_index, 0)
    start = time.perf_counter()
    row = SweepRow(experiment=spec.name, rep=rep, seed=seed, n=n, d1=d1,
                   d2=d2, r=r, lam=lam, loss=math.nan, lambda_hat=math.nan,
                   floor_active=False, elapsed_ms=0)
    try:
        signal = make_signal(d1, d2, r, lam, condition=spec.condition,
                             seed=signal_seed)
        samples = sample_lrmm(signal, n, noise_scale=spec.noise_scale, seed=seed)
        report = estimate(samples, EstimatorConfig(rank=r, split=spec.split))
        row.loss = loss(report.m_hat, signal.m)
        row.lambda_hat = report.lambda_hat
        row.floor_active = report.floor_active
    except (LrmmError, np.linalg.LinAlgError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    row.elapsed_ms = int(round((time.perf_counter() - start) * 1000))
    return row


def _run_cell_packed(args) -> SweepRow:
    return _run_cell(*args)


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """Run every (point, rep) cell of a sweep, in deterministic order.

    Estimator failures are recorded in the row's ``error`` field rather
    than aborting the sweep.  ``workers > 1`` distributes cells over
    processes; the returned rows are identical for any worker count.
    """
    points = spec.grid_points()
    tasks = [(spec, pi, point, rep)
             for pi, point in enumerate(points)
             for rep in range(1, spec.reps + 1)]
    if workers <= 1:
        return [_run_cell_packed(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_cell_packed, tasks, chunksize=max(1, len(tasks) // (8 * workers))))


def _format_float(x: float) -> str:
    return repr(float(x))


def write_rows(rows, path, include_timing: bool = False) -> None:
    """Write sweep rows as CSV with the fixed header.

    ``include_timing=False`` (the default) zeroes ``elapsed_ms`` so that
    reruns of the same spec produce byte-identical files.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            writer.writerow([
                row.experiment, row.rep, row.seed, row.n, row.d1, row.d2,
                row.r, _format_float(row.lam), _format_float(row.loss),
                _format_float(row.lambda_hat),
                "true" if row.floor_active else "false",
                row.elapsed_ms if include_timing else 0,
                row.error,
            ])


def read_rows(path) -> list[SweepRow]:
    """Read back a CSV written by :func:`write_rows`."""
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != SWEEP_HEADER:
            raise DimensionError(f"unexpected sweep CSV header in {path}")
        for rec in reader:
            rows.append(SweepRow(
                experiment=rec[0], rep=int(rec[1]), seed=int(rec[2]),
                n=int(rec[3]), d1=int(rec[4]), d2=int(rec[5]), r=int(rec[6]),
                lam=float(rec[7]), loss=float(rec[8]), lambda_hat=float(rec[9]),
                floor_active=rec[10] == "true", elapsed_ms=int(rec[11]),
                error=rec[12]))
    return rows


@dataclasses.dataclass
class PointSummary:
    """Aggregated replicates of one grid point."""

    experiment: str
    n: int
    d1: int
    d2: int
    r: int
    lam: float
    regressor_value: float
    mean_loss: float
    std_error: float
    reps_used: int


@dataclasses.dataclass
class TrendFit:
    """Least-squares line of mean loss against a declared regressor."""

    regressor: str
    slope: float
    intercept: float
    r_squared: float


def _regressor_value(regressor: str, n: int, d1: int, d2: int, r: int,
                     lam: float) -> float:
    if regressor == "inv_lambda":
        return 1.0 / lam
    if regressor == "inv_sqrt_n":
        return n ** -0.5
    if regressor == "sqrt_d":
        return math.sqrt(max(d1, d2))
    if regressor == "sqrt_r":
        return math.sqrt(r)
    raise DimensionError(f"regressor must be one of {REGRESSORS}, got {regressor!r}")


def summarize(rows, regressor: str = "inv_lambda") -> tuple[list[PointSummary], TrendFit]:
    """Per-point mean loss and standard error plus a linear trend fit.

    Error rows and non-finite losses are dropped before aggregation.
    Points are keyed by (experiment, n, d1, d2, r, lambda) in first-seen
    order.  The trend is an ordinary least-squares line of the point
    means against the chosen regressor; a flat response is reported as
    slope 0 with R^2 = 0.  When the input mixes several curves (say two
    dimensions sweeping n), filter to one curve before fitting.
    """
    groups: dict[tuple, list[float]] = {}
    order = []
    for row in rows:
        if row.error or not math.isfinite(row.loss):
            continue
        key = (row.experiment, row.n, row.d1, row.d2, row.r, row.lam)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row.loss)
    if len(order) < 2:
        raise InsufficientPoints(
            f"trend fit needs >= 2 usable grid points, got {len(order)}")

    summaries = []
    for key in order:
        experiment, n, d1, d2, r, lam = key
        losses = np.asarray(groups[key])
        se = float(np.std(losses, ddof=1) / math.sqrt(losses.size)) if losses.size > 1 else 0.0
        summaries.append(PointSummary(
            experiment=experiment, n=n, d1=d1, d2=d2, r=r, lam=lam,
            regressor_value=_regressor_value(regressor, n, d1, d2, r, lam),
            mean_loss=float(np.mean(losses)), std_error=se,
            reps_used=int(losses.size)))

    x = np.array([s.regressor_value for s in summaries])
    y = np.array([s.mean_loss for s in summaries])
    ss_xx = float(np.sum((x - x.mean()) ** 2))
    if ss_xx == 0.0:
        raise InsufficientPoints("regressor is constant across grid points")
    ss_yy = float(np.sum((y - y.mean()) ** 2))
    if ss_yy == 0.0:
        fit = TrendFit(regressor=regressor, slope=0.0,
                       intercept=float(y.mean()), r_squared=0.0)
        return summaries, fit
    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / ss_xx)
    intercept = float(y.mean() - slope * x.mean())
    residuals = y - (slope * x + intercept)
    r_squared = 1.0 - float(np.sum(residuals ** 2)) / ss_yy
    fit = TrendFit(regressor=regressor, slope=slope, intercept=intercept,
                   r_squared=float(min(max(r_squared, 0.0), 1.0)))
    return summaries, fit


def write_summary(summaries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for s in summaries:
            writer.writerow([s.experiment, s.n, s.d1, s.d2, s.r,
                             _format_float(s.lam), _format_float(s.regressor_value),
                             _format_float(s.mean_loss), _format_float(s.std_error),
                             s.reps_used])


def phase_diagram(n_grid, lambda_grid, d: int, r: int) -> list[RatePoint]:
    """Classify every (n, lambda) cell of a grid; n outer, lambda inner."""
    points = []
    for n in n_grid:
        for lam in lambda_grid:
            points.append(classify(int(n), d, r, float(lam)))
    return points


def write_phase(points, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PHASE_HEADER)
        for p in points:
            writer.writerow([p.n, _format_float(p.lam), p.d, p.r,
                             _format_float(p.rate), _format_float(p.info_threshold),
                             _format_float(p.comp_threshold), p.sample_regime,
                             p.hardness])
