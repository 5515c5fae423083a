"""Rate formulas, hardness classification, and low-degree norm calculators.

The minimax error rate for estimating a rank-r signal with smallest
scale ``lam`` from n observations in dimension d is

``min( (1/lam) sqrt(d/n) + sqrt(d r / n), lam sqrt(r) )``

and the two thresholds used for classification are the information
threshold ``d^(1/4) (r n)^(-1/4) + sqrt(d/n)`` and the (conjectured)
computational threshold ``sqrt(d) n^(-1/4)``, both with unit constants.

``lowdeg_norm`` evaluates the squared norm of the degree-D likelihood
ratio in three independent ways:

* ``paper_bound``: closed-form upper bound with terms
  ``T_k = ((2k-1)!!)^2 / (2k)! * C(n+k-1, k) * lam^(4k) / (d1 d2)^k``;
* ``exact``: the series with exact Rademacher moments
  ``E S^(2k)`` in place of the bounding counts;
* ``brute_force``: exhaustive expectation over all ``2^(n+d1+d2)`` sign
  assignments, feasible up to 24 total bits.

The bound's tuple count ``C(n+k-1, k)`` is smaller than the exact
moment ``E S_n^(2k)`` (already at n=2, k=2: 3 versus 8), so the three
routes deliberately do not collapse into one implementation.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.special import gammaln, logsumexp

from .exceptions import BruteForceTooLarge, DimensionError
from .validation import check_positive, check_seed

_LOG2 = math.log(2.0)
_BRUTE_FORCE_MAX_BITS = 24
_BRUTE_FORCE_CHUNK = 1 << 22
_MODES = ("paper_bound", "exact", "brute_force")

HARDNESS_IMPOSSIBLE = "impossible"
HARDNESS_COMP_HARD = "stat_possible_comp_hard"
HARDNESS_POLY_EASY = "poly_easy"


@dataclasses.dataclass
class RatePoint:
    """Rate and hardness classification of one parameter point."""

    n: int
    d: int
    r: int
    lam: float
    rate: float
    info_threshold: float
    comp_threshold: float
    sample_regime: str
    hardness: str


@dataclasses.dataclass
class LowDegreeResult:
    """Low-degree likelihood-ratio norm with per-order log terms.

    ``terms`` maps k to the natural log of the k-th even-order term, so
    the series remains inspectable even when ``value`` overflows to
    infinity.
    """

    value: float
    degree: int
    mode: str
    terms: dict[int, float]


def _check_point(n, d, r, lam):
    n, d, r = int(n), int(d), int(r)
    if n < 1 or d < 1 or r < 1:
        raise DimensionError("n, d, r must be >= 1")
    lam = check_positive(lam, "lam")
    return n, d, r, lam


def minimax_rate(n: int, d: int, r: int, lam: float) -> float:
    """Minimax estimation rate with unit constants."""
    n, d, r, lam = _check_point(n, d, r, lam)
    estimation = math.sqrt(d / n) / lam + math.sqrt(d * r / n)
    trivial = lam * math.sqrt(r)
    return min(estimation, trivial)


def classify(n: int, d: int, r: int, lam: float) -> RatePoint:
    """Rate plus sample-regime and hardness labels for one point.

    Sample regimes: R1 when ``n <= d r``, R3 when ``n >= (d r)^2``, R2
    between; boundary points resolve in that order.  Hardness compares
    ``lam`` to the information and computational thresholds with unit
    constants.
    """
    n, d, r, lam = _check_point(n, d, r, lam)
    info = (d ** 0.25) * ((r * n) ** -0.25) + math.sqrt(d / n)
    comp = math.sqrt(d) * (n ** -0.25)
    if n <= d * r:
        regime = "R1"
    elif n >= (d * r) ** 2:
        regime = "R3"
    else:
        regime = "R2"
    if lam < info:
        hardness = HARDNESS_IMPOSSIBLE
    elif lam < comp:
        hardness = HARDNESS_COMP_HARD
    else:
        hardness = HARDNESS_POLY_EASY
    return RatePoint(n=n, d=d, r=r, lam=lam, rate=minimax_rate(n, d, r, lam),
                     info_threshold=info, comp_threshold=comp,
                     sample_regime=regime, hardness=hardness)


def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def rademacher_moment_log(n: int, k: int) -> float:
    """Natural log of ``E[(sum of n Rademachers)^(2k)]``.

    Evaluates ``2^-n sum_j C(n, j) (n - 2j)^(2k)`` in log space.  For
    large n only the window of j that carries non-negligible mass is
    summed; the cut tail is smaller than float precision.
    """
    n, k = int(n), int(k)
    if n < 1 or k < 0:
        raise DimensionError("need n >= 1 and k >= 0")
    if k == 0:
        return 0.0
    if n <= 1_000_000:
        s = np.arange(n % 2, n + 1, 2, dtype=np.float64)
    else:
        # Summand ~ exp(-s^2 / 2n) * s^(2k) peaks at s* = sqrt(2 k n)
        # with Gaussian width ~ sqrt(n); 40 widths of slack keeps the
        # truncation error far below float64 resolution.
        center = math.sqrt(2.0 * k * n)
        width = 40.0 * math.sqrt(n)
        lo = max(n % 2, int(center - width))
        hi = min(n, int(center + width) + 1)
        lo -= (lo - n % 2) % 2
        s = np.arange(lo, hi + 1, 2, dtype=np.float64)
    # Each positive s collects the j and n-j binomial terms, hence the
    # extra log 2; s = 0 contributes nothing to an even power.
    s = s[s > 0]
    j = (n - s) / 2.0
    log_terms = _LOG2 + _log_binom(float(n), j) + 2.0 * k * np.log(s)
    return float(logsumexp(log_terms) - n * _LOG2)


def rademacher_moment(n: int, k: int) -> float:
    """``E[(sum of n Rademachers)^(2k)]``, or ``inf`` if unrepresentable."""
    lg = rademacher_moment_log(n, k)
    return math.exp(lg) if lg < 709.0 else math.inf


def _check_lowdeg_args(n, d1, d2, lam, degree, mode):
    n, d1, d2, degree = int(n), int(d1), int(d2), int(degree)
    if n < 1 or d1 < 1 or d2 < 1:
        raise DimensionError("n, d1, d2 must be >= 1")
    if degree < 1:
        raise DimensionError(f"degree must be >= 1, got {degree}")
    lam = float(lam)
    if lam < 0 or not math.isfinite(lam):
        raise DimensionError("lam must be finite and >= 0")
    if mode not in _MODES:
        raise DimensionError(f"mode must be one of {_MODES}, got {mode!r}")
    return n, d1, d2, lam, degree


def _log_double_factorial_odd(k: int) -> float:
    """log((2k - 1)!!) via (2k)! = (2k-1)!! * 2^k * k!."""
    return float(gammaln(2 * k + 1) - k * _LOG2 - gammaln(k + 1))


def _paper_bound(n, d1, d2, lam, degree):
    kmax = degree // 2
    terms = {}
    x = lam ** 4 / (d1 * d2)
    total = 0.0
    t = 0.5 * n * x
    for k in range(1, kmax + 1):
        if k > 1:
            t *= (2 * k - 1) / (2 * k) * (n + k - 1) / k * x
        total += t
        terms[k] = (2.0 * _log_double_factorial_odd(k) - float(gammaln(2 * k + 1))
                    + float(_log_binom(n + k - 1, k)) + 4.0 * k * math.log(lam)
                    - k * math.log(d1 * d2))
    return 1.0 + total, terms


def _exact_series(n, d1, d2, lam, degree):
    kmax = degree // 2
    terms = {}
    total = 0.0
    for k in range(1, kmax + 1):
        log_term = (rademacher_moment_log(n, k) + rademacher_moment_log(d1, k)
                    + rademacher_moment_log(d2, k) + 4.0 * k * math.log(lam)
                    - 2.0 * k * math.log(d1 * d2) - float(gammaln(2 * k + 1)))
        terms[k] = log_term
        total += math.exp(log_term) if log_term < 709.0 else math.inf
    return 1.0 + total, terms


def _brute_force(n, d1, d2, lam, degree):
    bits = n + d1 + d2
    if bits > _BRUTE_FORCE_MAX_BITS:
        raise BruteForceTooLarge(
            f"2^{bits} sign assignments exceed the 2^{_BRUTE_FORCE_MAX_BITS} cap"
        )
    count = 1 << bits
    mask_n = (1 << n) - 1
    mask_d1 = (1 << d1) - 1
    # Power sums of y = S_n * S_d1 * S_d2 over every sign assignment.
    power_sums = np.zeros(degree + 1)
    power_sums[0] = float(count)
    for start in range(0, count, _BRUTE_FORCE_CHUNK):
        idx = np.arange(start, min(start + _BRUTE_FORCE_CHUNK, count), dtype=np.uint64)
        pop_n = np.bitwise_count(idx & mask_n).astype(np.int64)
        pop_d1 = np.bitwise_count((idx >> n) & mask_d1).astype(np.int64)
        pop_d2 = np.bitwise_count(idx >> (n + d1)).astype(np.int64)
        y = ((n - 2 * pop_n) * (d1 - 2 * pop_d1) * (d2 - 2 * pop_d2)).astype(np.float64)
        p = np.ones_like(y)
        for j in range(1, degree + 1):
            p = p * y
            power_sums[j] += float(np.sum(p))
    c = lam * lam / (d1 * d2)
    total = 0.0
    for j in range(1, degree + 1):
        total += (c ** j) * power_sums[j] / count / math.gamma(j + 1)
    terms = {}
    for k in range(1, degree // 2 + 1):
        moment = power_sums[2 * k] / count
        if moment > 0 and lam > 0:
            terms[k] = (2 * k * math.log(c) + math.log(moment)
                        - float(gammaln(2 * k + 1)))
        else:
            terms[k] = -math.inf
    return 1.0 + total, terms


def lowdeg_norm(n: int, d1: int, d2: int, lam: float, degree: int,
                mode: str = "paper_bound") -> LowDegreeResult:
    """Squared norm of the degree-``degree`` likelihood ratio.

    All modes agree that odd orders vanish and return
    ``1 + sum_{k=1}^{floor(degree/2)} term_k``; they differ in how the
    even terms are computed (see module docstring).  ``lam = 0`` gives
    exactly 1 in every mode.  Values beyond float range come back as
    ``inf`` while ``terms`` stays finite in log space.
    """
    n, d1, d2, lam, degree = _check_lowdeg_args(n, d1, d2, lam, degree, mode)
    if lam == 0.0:
        return LowDegreeResult(value=1.0, degree=degree, mode=mode, terms={})
    if mode == "paper_bound":
        value, terms = _paper_bound(n, d1, d2, lam, degree)
    elif mode == "exact":
        value, terms = _exact_series(n, d1, d2, lam, degree)
    else:
        value, terms = _brute_force(n, d1, d2, lam, degree)
    return LowDegreeResult(value=float(value), degree=degree, mode=mode, terms=terms)


def trace_concentration_mc(r: int, n: int, reps: int, seed: int = 0) -> tuple[float, float]:
    """Concentration of ``(1/n) sum trace(Z_i) Z_i`` around the identity.

    Draws ``reps`` independent experiments of n standard normal r x r
    matrices, records the operator norm of the deviation from ``I_r``,
    and returns the median and the 0.9 quantile of those statistics.
    """
    r, n, reps = int(r), int(n), int(reps)
    if r < 1 or n < 1:
        raise DimensionError("r and n must be >= 1")
    if reps < 30:
        raise DimensionError(f"reps must be >= 30 for stable quantiles, got {reps}")
    rng = np.random.default_rng(check_seed(seed))
    stats = np.empty(reps)
    eye = np.eye(r)
    for i in range(reps):
        z = rng.standard_normal((n, r, r))
        tr = np.trace(z, axis1=1, axis2=2)
        dev = np.tensordot(tr, z, axes=(0, 0)) / n - eye
        stats[i] = np.linalg.norm(dev, 2)
    return float(np.median(stats)), float(np.quantile(stats, 0.9))
