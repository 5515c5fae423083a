"""Spectral aggregation pipeline for the two-component matrix mixture.

The label-free estimator runs in three stages on (views of) the sample
stack:

1. ``spectral_init``: leading eigenvector ``u1`` of the row Gram matrix
   ``(1/n) sum X_i X_i^T``, then leading eigenvector ``v1`` of the
   projected Gram ``(1/n) sum (X_i^T u1)(X_i^T u1)^T``.
2. ``refine``: top-r factors of
   ``A = (1/n) sum (u1^T X_i v1) X_i - u1 v1^T``, which de-biases the
   quadratic statistic and recovers full rank-r bases.
3. ``aggregate``: with ``t_i = trace(U~^T X_i V~)``, form
   ``B = (1/n) sum t_i X_i - U~ V~^T``, take its rank-r approximation,
   and divide by the scale estimate
   ``lambda_hat = sqrt(max(mean(t_i^2) - r, d r^2 / sqrt(n)))``.

The floor inside the max keeps the scale away from zero in the
low-signal regime; ``floor_active`` on the report records when it wins.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import DimensionError, TooFewSamples
from .linalg import leading_eigvec_sym, rank_r_approx, top_r_svd
from .validation import as_matrix, as_observations, check_rank

_FLOOR_DIM_RULES = ("max_dim", "geom_mean")
# Tag mixed into the split permutation seed so it is decorrelated from the
# generator stream that produced the samples themselves.
_SPLIT_TAG = 0x53504C49


@dataclasses.dataclass
class EstimatorConfig:
    """Configuration for :func:`estimate`."""

    rank: int = 1
    split: bool = False
    floor_dim_rule: str = "max_dim"

    def __post_init__(self):
        self.rank = int(self.rank)
        if self.rank < 1:
            raise DimensionError(f"rank must be >= 1, got {self.rank}")
        if self.floor_dim_rule not in _FLOOR_DIM_RULES:
            raise DimensionError(
                f"floor_dim_rule must be one of {_FLOOR_DIM_RULES}, "
                f"got {self.floor_dim_rule!r}"
            )
        self.split = bool(self.split)


@dataclasses.dataclass
class EstimateReport:
    """Everything the pipeline produced, including intermediate factors."""

    m_hat: np.ndarray
    lambda_hat: float
    u1_hat: np.ndarray
    v1_hat: np.ndarray
    u_tilde: np.ndarray
    v_tilde: np.ndarray
    m_check: np.ndarray
    floor_active: bool
    batch_sizes: tuple[int, int, int, int]


def _canonical_order(observations: np.ndarray) -> np.ndarray:
    """Indices sorting samples by their byte representation.

    Processing samples in this order makes every reduction independent of
    the order the caller stored them in, so no-split estimates are
    bitwise permutation-invariant.
    """
    keys = [observations[i].tobytes() for i in range(observations.shape[0])]
    return np.array(sorted(range(len(keys)), key=keys.__getitem__), dtype=np.intp)


def split_batches(samples, split: bool = False):
    """Partition a sample set into the four stage views.

    With ``split=False`` all four views alias one canonically ordered
    copy of the full set.  With ``split=True`` a seeded permutation
    (derived from ``samples.seed``) is cut into batches of ``n // 4``
    samples, the remainder going to the fourth batch.
    """
    observations = samples.observations
    n = observations.shape[0]
    if not split:
        full = observations[_canonical_order(observations)]
        return full, full, full, full
    if n < 4:
        raise TooFewSamples(f"splitting needs n >= 4, got {n}")
    rng = np.random.default_rng(np.random.SeedSequence([samples.seed, _SPLIT_TAG]))
    perm = rng.permutation(n)
    q = n // 4
    return (observations[perm[:q]], observations[perm[q:2 * q]],
            observations[perm[2 * q:3 * q]], observations[perm[3 * q:]])


def spectral_init(batch1, batch2) -> tuple[np.ndarray, np.ndarray]:
    """Leading singular direction pair from row and projected-row Grams.

    Returns unit vectors ``(u1, v1)`` with canonical signs.  Raises
    :class:`~lrmm.exceptions.DegenerateSpectrum` when a Gram matrix is
    numerically zero, e.g. for an all-zero input stack.
    """
    x1 = as_observations(batch1, "batch1")
    x2 = as_observations(batch2, "batch2")
    if x1.shape[1:] != x2.shape[1:]:
        raise DimensionError("batches disagree on sample dimensions")
    gram_rows = np.tensordot(x1, x1, axes=([0, 2], [0, 2])) / x1.shape[0]
    u1 = leading_eigvec_sym(gram_rows)
    w = np.einsum("nij,i->nj", x2, u1)
    gram_proj = w.T @ w / x2.shape[0]
    v1 = leading_eigvec_sym(gram_proj)
    return u1, v1


def refine(batch3, u1, v1, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Upgrade the rank-1 directions to rank-r bases ``(u_tilde, v_tilde)``."""
    x = as_observations(batch3, "batch3")
    u1 = np.asarray(u1, dtype=np.float64).ravel()
    v1 = np.asarray(v1, dtype=np.float64).ravel()
    if u1.shape[0] != x.shape[1] or v1.shape[0] != x.shape[2]:
        raise DimensionError("direction vectors do not match sample dimensions")
    r = check_rank(r, x.shape[1], x.shape[2])
    w = np.einsum("nij,i->nj", x, u1) @ v1
    a = np.tensordot(w, x, axes=(0, 0)) / x.shape[0] - np.outer(u1, v1)
    svd = top_r_svd(a, r)
    return svd.left, svd.right


def aggregate(batch4, u_tilde, v_tilde, r: int, n_total: int,
              floor_dim_rule: str = "max_dim") -> tuple[np.ndarray, float, bool]:
    """Final trace aggregation: unscaled estimate, scale, and floor flag.

    ``n_total`` is the full sample count of the originating set (not the
    batch size); the scale floor ``d * r^2 / sqrt(n_total)`` is defined
    in terms of it.  ``floor_dim_rule`` picks ``d`` as ``max(d1, d2)``
    or ``sqrt(d1 * d2)``.
    """
    x = as_observations(batch4, "batch4")
    d1, d2 = x.shape[1], x.shape[2]
    u_tilde = as_matrix(u_tilde, "u_tilde")
    v_tilde = as_matrix(v_tilde, "v_tilde")
    r = check_rank(r, d1, d2)
    if u_tilde.shape != (d1, r) or v_tilde.shape != (d2, r):
        raise DimensionError("u_tilde and v_tilde must be (d1, r) and (d2, r)")
    if floor_dim_rule not in _FLOOR_DIM_RULES:
        raise DimensionError(f"unknown floor_dim_rule {floor_dim_rule!r}")
    n_total = int(n_total)
    if n_total < 1:
        raise DimensionError("n_total must be >= 1")

    uv = u_tilde @ v_tilde.T
    t = np.einsum("nij,ij->n", x, uv)
    b = np.tensordot(t, x, axes=(0, 0)) / x.shape[0] - uv
    m_check = rank_r_approx(b, r)

    sum_branch = float(np.mean(t * t) - r)
    d = float(max(d1, d2)) if floor_dim_rule == "max_dim" else float(np.sqrt(d1 * d2))
    floor = d * r * r / float(np.sqrt(n_total))
    floor_active = bool(sum_branch <= floor)
    lambda_hat = float(np.sqrt(max(sum_branch, floor)))
    return m_check, lambda_hat, floor_active


def estimate(samples, config: EstimatorConfig | None = None) -> EstimateReport:
    """Run the full three-stage pipeline on a sample set.

    Deterministic given ``samples`` and ``config``; in no-split mode the
    result is invariant to permuting the samples.
    """
    if config is None:
        config = EstimatorConfig()
    r = check_rank(config.rank, samples.d1, samples.d2, "rank")
    batches = split_batches(samples, config.split)
    batch_sizes = tuple(int(b.shape[0]) for b in batches)
    u1, v1 = spectral_init(batches[0], batches[1])
    u_tilde, v_tilde = refine(batches[2], u1, v1, r)
    m_check, lambda_hat, floor_active = aggregate(
        batches[3], u_tilde, v_tilde, r, samples.n, config.floor_dim_rule)
    return EstimateReport(
        m_hat=m_check / lambda_hat,
        lambda_hat=lambda_hat,
        u1_hat=u1,
        v1_hat=v1,
        u_tilde=u_tilde,
        v_tilde=v_tilde,
        m_check=m_check,
        floor_active=floor_active,
        batch_sizes=batch_sizes,
    )


def _as_sample_set(X):
    """Accept either a SampleSet or a raw (n, d1, d2) stack."""
    from .model import SampleSet

    if isinstance(X, SampleSet):
        return X
    return SampleSet(observations=as_observations(X, "X"))


class SpectralAggregation(BaseEstimator):
    """Scikit-learn style wrapper around :func:`estimate`.

    Parameters
    ----------
    rank : int
        Target rank of the signal estimate.
    split : bool
        Use disjoint sample batches for the three stages instead of
        reusing the full set.  Raw-array inputs use seed 0 for the
        split permutation; pass a SampleSet to control it.
    floor_dim_rule : str
        ``"max_dim"`` or ``"geom_mean"``; dimension entering the scale
        floor.

    Attributes
    ----------
    m_hat_ : numpy.ndarray
        Sign-ambiguous signal estimate.
    lambda_hat_ : float
        Estimated signal scale.
    floor_active_ : bool
        Whether the scale floor won over the trace statistic.
    report_ : EstimateReport
        Full pipeline output including intermediate factors.

    Examples
    --------
    >>> from lrmm.model import make_signal, sample_lrmm, loss
    >>> signal = make_signal(20, 20, 1, 5.0, seed=1)
    >>> est = SpectralAggregation(rank=1).fit(sample_lrmm(signal, 500, seed=2))
    >>> loss(est.m_hat_, signal.m) < 5.0
    True
    """

    def __init__(self, rank: int = 1, split: bool = False,
                 floor_dim_rule: str = "max_dim"):
        self.rank = rank
        self.split = split
        self.floor_dim_rule = floor_dim_rule

    def fit(self, X, y=None):
        """Fit on a SampleSet or an (n, d1, d2) array.  ``y`` is ignored."""
        samples = _as_sample_set(X)
        config = EstimatorConfig(rank=self.rank, split=self.split,
                                 floor_dim_rule=self.floor_dim_rule)
        report = estimate(samples, config)
        self.report_ = report
        self.m_hat_ = report.m_hat
        self.lambda_hat_ = report.lambda_hat
        self.floor_active_ = report.floor_active
        self.batch_sizes_ = report.batch_sizes
        return self


class LowRankMixtureEM(BaseEstimator):
    """EM estimator for the mixture signal, scikit-learn style.

    Each iteration replaces the signal by the rank-r approximation of
    ``(1/n) sum tanh(<X_i, M>) X_i``; with ``rank = min(d1, d2)`` this is
    classical EM for the symmetric two-component Gaussian mixture.

    Parameters
    ----------
    rank : int
        Target rank of the estimate.
    init : str or array_like
        ``"spectral"`` (default) starts from the spectral aggregation
        estimate, ``"zero"`` from the zero matrix (a fixed point), and a
        matrix is used as given.
    max_iter, tol : int, float
        Iteration cap and Frobenius-step convergence threshold.
    """

    def __init__(self, rank: int = 1, init="spectral", max_iter: int = 500,
                 tol: float = 1e-8):
        self.rank = rank
        self.init = init
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        from .likelihood import em_mle

        samples = _as_sample_set(X)
        if isinstance(self.init, str):
            if self.init == "zero":
                init = np.zeros((samples.d1, samples.d2))
            elif self.init == "spectral":
                config = EstimatorConfig(rank=self.rank)
                init = estimate(samples, config).m_hat
            else:
                raise DimensionError(f"unknown init {self.init!r}")
        else:
            init = as_matrix(self.init, "init")
        result = em_mle(samples, self.rank, init, max_iter=self.max_iter,
                        tol=self.tol)
        self.result_ = result
        self.m_hat_ = result.m_hat
        self.neg_log_lik_ = result.neg_log_lik
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        return self
