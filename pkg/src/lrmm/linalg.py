"""Dense linear-algebra kernels: truncated SVD, rank projections, norms.

Every spectral step in the package routes through these functions so that
sign conventions and degeneracy handling are decided in exactly one place.
Sign convention: in each left singular vector (or eigenvector) the entry of
largest magnitude is made positive, ties broken by lowest index, and the
paired right vector is flipped along with it.  This makes factorizations
deterministic instead of "unique up to sign".
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .exceptions import DegenerateSpectrum, DimensionError
from .validation import as_matrix, check_rank

# Relative threshold under which a required singular value counts as zero.
_SPECTRUM_RTOL = 1e-12
# Relative asymmetry tolerated before a matrix is rejected as non-symmetric.
_SYMMETRY_RTOL = 1e-8
# Relative gap under which the top two eigenvalues count as tied.
_GAP_RTOL = 1e-10


class TruncatedSvd(NamedTuple):
    """Rank-r factorization ``a ~ left @ diag(singular_values) @ right.T``."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray


def _canonicalize_pairs(left: np.ndarray, right: np.ndarray | None) -> None:
    """Flip column signs in place so each left column peaks positive."""
    for j in range(left.shape[1]):
        i = int(np.argmax(np.abs(left[:, j])))
        if left[i, j] < 0:
            left[:, j] *= -1.0
            if right is not None:
                right[:, j] *= -1.0


def top_r_svd(a, r: int) -> TruncatedSvd:
    """Best rank-r factorization of ``a`` with a canonical sign convention.

    Parameters
    ----------
    a : array_like of shape (d1, d2)
        Matrix to factor.  Must be finite.
    r : int
        Number of singular triplets to keep, ``1 <= r <= min(d1, d2)``.

    Returns
    -------
    TruncatedSvd
        ``left`` is (d1, r), ``singular_values`` is (r,) in decreasing
        order, ``right`` is (d2, r).

    Raises
    ------
    DimensionError
        If ``r`` is out of range for the shape of ``a``.
    DegenerateSpectrum
        If the r-th singular value is zero relative to the largest one,
        in which case the factors are not identifiable.
    """
    a = as_matrix(a)
    r = check_rank(r, *a.shape)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s[r - 1] <= _SPECTRUM_RTOL * max(s[0], 1.0):
        raise DegenerateSpectrum(
            f"singular value {r} is {s[r - 1]:.3e}, too small relative to {s[0]:.3e}"
        )
    left = np.ascontiguousarray(u[:, :r])
    right = np.ascontiguousarray(vt[:r].T)
    _canonicalize_pairs(left, right)
    return TruncatedSvd(left, s[:r].copy(), right)


def rank_r_approx(a, r: int) -> np.ndarray:
    """Best rank-r approximation of ``a`` in Frobenius norm."""
    svd = top_r_svd(a, r)
    return (svd.left * svd.singular_values) @ svd.right.T


def leading_eigvec_sym(a, strict: bool = False) -> np.ndarray:
    """Unit eigenvector for the largest eigenvalue of a symmetric matrix.

    Parameters
    ----------
    a : array_like of shape (d, d)
        Symmetric matrix; asymmetry up to a 1e-8 relative tolerance is
        repaired by averaging with the transpose.
    strict : bool
        When true, raise if the top two eigenvalues coincide within a
        1e-10 relative gap, i.e. the leading direction is not unique.

    Returns
    -------
    numpy.ndarray of shape (d,)
        Unit-norm eigenvector with the canonical sign.

    Raises
    ------
    DimensionError
        If ``a`` is not square or not symmetric within tolerance.
    DegenerateSpectrum
        If ``a`` is numerically zero, or under ``strict`` when the top
        eigenvalue is tied.
    """
    a = as_matrix(a)
    d = a.shape[0]
    if a.shape[1] != d:
        raise DimensionError(f"expected a square matrix, got {a.shape}")
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        raise DegenerateSpectrum("matrix is numerically zero")
    if float(np.max(np.abs(a - a.T))) > _SYMMETRY_RTOL * max(scale, 1.0):
        raise DimensionError("matrix is not symmetric within tolerance")
    w, v = np.linalg.eigh((a + a.T) / 2.0)
    if strict and d > 1:
        gap = w[-1] - w[-2]
        if gap <= _GAP_RTOL * max(abs(w[-1]), abs(w[-2])):
            raise DegenerateSpectrum(
                f"top eigenvalues {w[-1]:.6e} and {w[-2]:.6e} are tied"
            )
    vec = np.ascontiguousarray(v[:, -1:])
    _canonicalize_pairs(vec, None)
    return vec[:, 0]


def norms(a) -> tuple[float, float]:
    """Frobenius and operator (spectral) norms of ``a`` as a pair."""
    a = as_matrix(a)
    return float(np.linalg.norm(a)), float(np.linalg.norm(a, 2))


def save_matrix_csv(path, a) -> None:
    """Write a matrix as comma-separated decimals, one row per line.

    This plain CSV layout (no header, dimensions inferred on load) is the
    on-disk matrix format used by every command in the package.  Values
    are written with 17 significant digits so float64 entries round-trip
    exactly.
    """
    a = as_matrix(a)
    np.savetxt(path, a, delimiter=",", fmt="%.17g")


def load_matrix_csv(path) -> np.ndarray:
    """Read a matrix written by :func:`save_matrix_csv`."""
    arr = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return as_matrix(arr, name=str(path))
