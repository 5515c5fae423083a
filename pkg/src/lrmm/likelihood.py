"""Mixture log-density, EM and grid maximum likelihood, divergence MC.

The observation density is
``p_M(X) = 0.5 N(X; M, I) + 0.5 N(X; -M, I)`` over d1 x d2 matrices with
identity noise covariance, which collapses to

``log p_M(X) = -(d1 d2 / 2) log(2 pi) - |X|_F^2 / 2 - |M|_F^2 / 2
              + logcosh(<X, M>)``.

``logcosh`` is evaluated as ``|t| + log1p(exp(-2|t|)) - log 2`` so large
inner products cannot overflow.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .exceptions import DimensionError, NonFiniteError
from .validation import as_matrix, check_rank, check_seed

_LOG2 = math.log(2.0)
_LOG_2PI = math.log(2.0 * math.pi)


def _log_cosh(t: np.ndarray) -> np.ndarray:
    """Overflow-safe elementwise log(cosh(t))."""
    at = np.abs(t)
    return at + np.log1p(np.exp(-2.0 * at)) - _LOG2


def log_density(m, x) -> float:
    """Log density of one observation ``x`` under signal ``m``."""
    m = as_matrix(m, "m")
    x = as_matrix(x, "x")
    if m.shape != x.shape:
        raise DimensionError(f"shape mismatch: {m.shape} vs {x.shape}")
    inner = float(np.tensordot(x, m, axes=2))
    return (-0.5 * m.size * _LOG_2PI
            - 0.5 * float(np.sum(x * x))
            - 0.5 * float(np.sum(m * m))
            + float(_log_cosh(np.float64(inner))))


def _log_density_stack(m: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Log densities for a stack ``x`` of shape (n, d1, d2)."""
    inner = np.einsum("nij,ij->n", x, m)
    sq = np.einsum("nij,nij->n", x, x)
    return (-0.5 * m.size * _LOG_2PI - 0.5 * sq - 0.5 * float(np.sum(m * m))
            + _log_cosh(inner))


def neg_log_likelihood(m, samples) -> float:
    """Total negative log-likelihood of a sample set under signal ``m``."""
    m = as_matrix(m, "m")
    x = samples.observations
    if m.shape != x.shape[1:]:
        raise DimensionError("signal shape does not match the samples")
    return float(-np.sum(_log_density_stack(m, x)))


@dataclasses.dataclass
class MleResult:
    """Outcome of a likelihood maximization."""

    m_hat: np.ndarray
    neg_log_lik: float
    iterations: int
    converged: bool
    method: str


def _project_rank(a: np.ndarray, r: int) -> np.ndarray:
    """Rank-r truncation that tolerates zero singular values.

    EM iterates may be rank-deficient (the zero matrix is a fixed
    point), so this must not insist on a positive r-th singular value
    the way ``linalg.top_r_svd`` does.
    """
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return (u[:, :r] * s[:r]) @ vt[:r]


def em_mle(samples, r: int, init, max_iter: int = 500, tol: float = 1e-8) -> MleResult:
    """EM iteration for the rank-r mixture signal.

    The update is ``M <- rank_r((1/n) sum tanh(<X_i, M>) X_i)``; the
    tanh weight is the posterior mean of the label, so with full rank
    this is exactly classical EM and the likelihood is nondecreasing.
    Iteration stops when the Frobenius step is at most ``tol``.

    Parameters
    ----------
    samples : SampleSet
        Observations to fit.
    r : int
        Target rank; ``r = min(d1, d2)`` disables the projection.
    init : array_like of shape (d1, d2)
        Starting signal.
    max_iter, tol : int, float
        Iteration cap and convergence threshold.

    Returns
    -------
    MleResult
        ``iterations`` counts update steps actually applied; results
        with ``converged=False`` hit ``max_iter`` first.
    """
    x = samples.observations
    d1, d2 = samples.d1, samples.d2
    r = check_rank(r, d1, d2)
    m = as_matrix(init, "init").copy()
    if m.shape != (d1, d2):
        raise DimensionError(f"init must have shape ({d1}, {d2}), got {m.shape}")
    if max_iter < 1:
        raise DimensionError("max_iter must be >= 1")
    project = r < min(d1, d2)

    converged = False
    iterations = 0
    for it in range(1, max_iter + 1):
        weights = np.tanh(np.einsum("nij,ij->n", x, m))
        m_next = np.tensordot(weights, x, axes=(0, 0)) / x.shape[0]
        if project:
            m_next = _project_rank(m_next, r)
        if not np.all(np.isfinite(m_next)):
            raise NonFiniteError(f"EM iterate diverged at iteration {it}")
        step = float(np.linalg.norm(m_next - m))
        m = m_next
        iterations = it
        if step <= tol:
            converged = True
            break
    return MleResult(m_hat=m, neg_log_lik=neg_log_likelihood(m, samples),
                     iterations=iterations, converged=converged, method="em")


def grid_mle(samples, lambda_grid, angle_steps: int) -> MleResult:
    """Exhaustive likelihood maximization over rank-1 2x2 signals.

    The grid is ``M = lam * u(alpha) v(beta)^T`` with
    ``u(t) = (cos t, sin t)`` and ``alpha, beta`` running over
    ``angle_steps`` points equally spaced in ``[0, pi)``; since the
    likelihood is even in ``M``, the half-circle covers every rank-1
    direction.  Ties go to the earliest grid point in
    (lambda, alpha, beta) enumeration order.

    Only defined for d1 = d2 = 2: the point of this estimator is to be a
    slow, obviously correct reference for small problems.
    """
    x = samples.observations
    if (samples.d1, samples.d2) != (2, 2):
        raise DimensionError("grid_mle is defined for 2x2 signals only")
    lambda_grid = np.asarray(lambda_grid, dtype=np.float64).ravel()
    if lambda_grid.size < 1 or np.any(lambda_grid <= 0) or not np.all(np.isfinite(lambda_grid)):
        raise DimensionError("lambda_grid must hold positive finite values")
    angle_steps = int(angle_steps)
    if angle_steps < 1:
        raise DimensionError("angle_steps must be >= 1")

    angles = np.linspace(0.0, math.pi, angle_steps, endpoint=False)
    cos_a, sin_a = np.cos(angles), np.sin(angles)
    # Grid enumerated as lambda (outer), alpha, beta (inner).
    u = np.stack([cos_a, sin_a], axis=1)
    v = np.stack([cos_a, sin_a], axis=1)
    directions = np.einsum("ai,bj->abij", u, v).reshape(-1, 2, 2)
    inner_dir = np.einsum("nij,gij->ng", x, directions)

    n = x.shape[0]
    best = None
    for li, lam in enumerate(lambda_grid):
        logcosh_sum = np.sum(_log_cosh(lam * inner_dir), axis=0)
        score = logcosh_sum - 0.5 * n * lam * lam
        gi = int(np.argmax(score))
        candidate = (float(score[gi]), li, gi)
        if best is None or candidate[0] > best[0]:
            best = candidate
    _, li, gi = best
    m_hat = float(lambda_grid[li]) * directions[gi]
    return MleResult(m_hat=m_hat,
                     neg_log_lik=neg_log_likelihood(m_hat, samples),
                     iterations=0, converged=True, method="grid")


def _draw_from_mixture(m: np.ndarray, draws: int, rng) -> np.ndarray:
    labels = rng.integers(0, 2, size=draws) * 2 - 1
    z = rng.standard_normal((draws,) + m.shape)
    return labels[:, None, None] * m + z


def _check_mc_args(m1, m2, draws):
    m1 = as_matrix(m1, "m1")
    m2 = as_matrix(m2, "m2")
    if m1.shape != m2.shape:
        raise DimensionError(f"shape mismatch: {m1.shape} vs {m2.shape}")
    draws = int(draws)
    if draws < 100:
        raise DimensionError(f"draws must be >= 100, got {draws}")
    return m1, m2, draws


def hellinger_mc(m1, m2, draws: int, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo Hellinger distance ``1 - E sqrt(p2/p1)`` under ``p1``.

    Here the Hellinger distance means one minus the affinity
    ``int sqrt(p1 p2)``.  Returns ``(estimate, std_error)``; the
    integrand is bounded in second moment by 1, so the standard error
    is at most ``1/sqrt(draws)``.  For ``m2 = m1`` or ``m2 = -m1`` the
    two densities coincide and the estimate is exactly zero.
    """
    m1, m2, draws = _check_mc_args(m1, m2, draws)
    rng = np.random.default_rng(check_seed(seed))
    x = _draw_from_mixture(m1, draws, rng)
    ratio = np.exp(0.5 * (_log_density_stack(m2, x) - _log_density_stack(m1, x)))
    estimate = float(1.0 - np.mean(ratio))
    std_error = float(np.std(ratio, ddof=1) / math.sqrt(draws))
    return estimate, std_error


def kl_mc(m1, m2, draws: int, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo KL divergence ``E[log p1 - log p2]`` under ``p1``.

    Returns ``(estimate, std_error)``.
    """
    m1, m2, draws = _check_mc_args(m1, m2, draws)
    rng = np.random.default_rng(check_seed(seed))
    x = _draw_from_mixture(m1, draws, rng)
    values = _log_density_stack(m1, x) - _log_density_stack(m2, x)
    estimate = float(np.mean(values))
    std_error = float(np.std(values, ddof=1) / math.sqrt(draws))
    return estimate, std_error
