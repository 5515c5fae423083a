"""Signal construction and sampling for the two-component matrix mixture.

An observation is ``X_i = s_i * M + noise_scale * Z_i`` where ``s_i`` is a
fair +/-1 label, ``M`` is a d1 x d2 signal matrix of rank r, and ``Z_i``
has i.i.d. standard normal entries.  Since the labels are symmetric, ``M``
is identifiable only up to a global sign, which is why :func:`loss`
minimizes over that sign.
"""

from __future__ import annotations

import dataclasses
import json
import pathlib

import numpy as np

from .exceptions import DimensionError, MissingLabels, NonFiniteError
from .linalg import load_matrix_csv, rank_r_approx, save_matrix_csv
from .validation import as_matrix, as_observations, check_positive, check_rank, check_seed

_MANIFEST_NAME = "manifest.json"
_SAMPLE_PATTERN = "sample_{:05d}.csv"


@dataclasses.dataclass
class SignalMatrix:
    """A rank-r signal together with its factorization.

    ``m`` equals ``u_basis @ diag(singular_values) @ v_basis.T`` and the
    singular values are positive, decreasing, with condition number
    ``singular_values[0] / singular_values[-1]`` at most
    ``condition_bound``.
    """

    m: np.ndarray
    rank: int
    singular_values: np.ndarray
    u_basis: np.ndarray
    v_basis: np.ndarray
    condition_bound: float = 1.5

    def __post_init__(self):
        self.m = as_matrix(self.m, "m")
        self.singular_values = np.asarray(self.singular_values, dtype=np.float64).ravel()
        self.u_basis = as_matrix(self.u_basis, "u_basis")
        self.v_basis = as_matrix(self.v_basis, "v_basis")
        r = int(self.rank)
        d1, d2 = self.m.shape
        check_rank(r, d1, d2, "rank")
        if self.singular_values.shape != (r,):
            raise DimensionError("singular_values must have length rank")
        if np.any(self.singular_values <= 0) or np.any(np.diff(self.singular_values) > 0):
            raise DimensionError("singular_values must be positive and decreasing")
        if self.u_basis.shape != (d1, r) or self.v_basis.shape != (d2, r):
            raise DimensionError("u_basis and v_basis must be (d1, r) and (d2, r)")
        top = float(self.singular_values[0])
        if top / float(self.singular_values[-1]) > self.condition_bound * (1 + 1e-12):
            raise DimensionError("condition number exceeds the declared bound")
        recon = (self.u_basis * self.singular_values) @ self.v_basis.T
        if float(np.max(np.abs(recon - self.m))) > 1e-10 * max(1.0, top):
            raise DimensionError("m does not match its declared factorization")

    @property
    def d1(self) -> int:
        return self.m.shape[0]

    @property
    def d2(self) -> int:
        return self.m.shape[1]


@dataclasses.dataclass
class SampleSet:
    """A stack of n observations of shape (d1, d2) with optional labels."""

    observations: np.ndarray
    labels: np.ndarray | None = None
    noise_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        self.observations = as_observations(self.observations)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (self.n,):
                raise DimensionError("labels must be a vector of length n")
            if not np.all(np.abs(labels) == 1):
                raise DimensionError("labels must be +1 or -1")
            self.labels = labels.astype(np.int64)
        self.noise_scale = float(self.noise_scale)
        if self.noise_scale < 0 or not np.isfinite(self.noise_scale):
            raise DimensionError("noise_scale must be finite and >= 0")
        self.seed = check_seed(self.seed)

    @property
    def n(self) -> int:
        return self.observations.shape[0]

    @property
    def d1(self) -> int:
        return self.observations.shape[1]

    @property
    def d2(self) -> int:
        return self.observations.shape[2]


def _orthonormal_columns(g: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the column span, sign-fixed via the QR diagonal."""
    q, rr = np.linalg.qr(g)
    signs = np.sign(np.diag(rr))
    signs[signs == 0] = 1.0
    return q * signs


def make_signal(d1: int, d2: int, r: int, lam: float, condition: float = 1.5,
                seed: int = 0) -> SignalMatrix:
    """Draw a random rank-r signal with smallest singular value ``lam``.

    The column spaces are orthonormalized r-column standard Gaussian
    matrices.  For ``r >= 2`` the singular values are equally spaced from
    ``condition * lam`` down to ``lam``; for ``r == 1`` the single value
    is ``lam``.

    Parameters
    ----------
    d1, d2 : int
        Signal dimensions.
    r : int
        Signal rank, ``1 <= r <= min(d1, d2)``.
    lam : float
        Smallest singular value; must be positive.
    condition : float
        Ratio of largest to smallest singular value, at least 1.
    seed : int
        Seed for the basis draw; equal seeds give bitwise-equal signals.
    """
    r = check_rank(r, d1, d2)
    lam = check_positive(lam, "lam")
    condition = float(condition)
    if condition < 1.0:
        raise DimensionError(f"condition must be >= 1, got {condition}")
    rng = np.random.default_rng(check_seed(seed))
    u = _orthonormal_columns(rng.standard_normal((d1, r)))
    v = _orthonormal_columns(rng.standard_normal((d2, r)))
    if r == 1:
        sv = np.array([lam])
    else:
        sv = np.linspace(condition * lam, lam, r)
    m = (u * sv) @ v.T
    return SignalMatrix(m=m, rank=r, singular_values=sv, u_basis=u, v_basis=v,
                        condition_bound=condition)


def rademacher_rank1(d1: int, d2: int, lam: float, seed: int = 0) -> SignalMatrix:
    """Rank-1 signal ``lam * u v^T`` with +/- 1/sqrt(d) entries.

    Useful as the hardest-case prior: every entry has the same magnitude
    and the Frobenius norm is exactly ``lam``.
    """
    if d1 < 1 or d2 < 1:
        raise DimensionError("d1 and d2 must be >= 1")
    lam = check_positive(lam, "lam")
    rng = np.random.default_rng(check_seed(seed))
    u = (rng.integers(0, 2, size=d1) * 2 - 1) / np.sqrt(d1)
    v = (rng.integers(0, 2, size=d2) * 2 - 1) / np.sqrt(d2)
    m = lam * np.outer(u, v)
    return SignalMatrix(m=m, rank=1, singular_values=np.array([lam]),
                        u_basis=u[:, None], v_basis=v[:, None], condition_bound=1.0)


def sample_lrmm(signal: SignalMatrix, n: int, noise_scale: float = 1.0,
                seed: int = 0) -> SampleSet:
    """Draw ``n`` observations ``s_i * M + noise_scale * Z_i``.

    Labels are fair +/-1 draws and are kept on the returned
    :class:`SampleSet` so oracle estimators can use them.  Equal seeds
    reproduce the sample set bitwise.
    """
    n = int(n)
    if n < 1:
        raise DimensionError(f"n must be >= 1, got {n}")
    noise_scale = float(noise_scale)
    if noise_scale < 0 or not np.isfinite(noise_scale):
        raise DimensionError("noise_scale must be finite and >= 0")
    seed = check_seed(seed)
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=n) * 2 - 1
    z = rng.standard_normal((n, signal.d1, signal.d2))
    observations = labels[:, None, None] * signal.m + noise_scale * z
    return SampleSet(observations=observations, labels=labels,
                     noise_scale=noise_scale, seed=seed)


def loss(m_hat, m) -> float:
    """Sign-invariant estimation error ``min(|m_hat - m|_F, |m_hat + m|_F)``.

    The mixture determines the signal only up to a global sign, so this
    is the natural error metric; it is symmetric in its arguments and
    invariant to flipping the sign of either one.
    """
    m_hat = as_matrix(m_hat, "m_hat")
    m = as_matrix(m, "m")
    if m_hat.shape != m.shape:
        raise DimensionError(f"shape mismatch: {m_hat.shape} vs {m.shape}")
    return float(min(np.linalg.norm(m_hat - m), np.linalg.norm(m_hat + m)))


def known_label_oracle(samples: SampleSet, r: int) -> np.ndarray:
    """Rank-r estimate using the true labels: project mean of ``s_i X_i``.

    This oracle removes the sign ambiguity and serves as the benchmark
    the label-free pipeline is compared against.
    """
    if samples.labels is None:
        raise MissingLabels("sample set carries no labels")
    r = check_rank(r, samples.d1, samples.d2)
    signed_mean = np.tensordot(samples.labels.astype(np.float64),
                               samples.observations, axes=(0, 0)) / samples.n
    return rank_r_approx(signed_mean, r)


def save_sample_dir(samples: SampleSet, path) -> None:
    """Write a sample set as a directory of matrix CSVs plus a manifest.

    Layout: ``manifest.json`` holding d1, d2, n, noise_scale, seed and,
    when present, the label vector; one ``sample_00000.csv`` style file
    per observation in the package matrix CSV format.
    """
    path = pathlib.Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "d1": samples.d1,
        "d2": samples.d2,
        "n": samples.n,
        "noise_scale": samples.noise_scale,
        "seed": samples.seed,
    }
    if samples.labels is not None:
        manifest["labels"] = [int(s) for s in samples.labels]
    with open(path / _MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for i in range(samples.n):
        save_matrix_csv(path / _SAMPLE_PATTERN.format(i), samples.observations[i])


def load_sample_dir(path) -> SampleSet:
    """Read a sample set directory written by :func:`save_sample_dir`."""
    path = pathlib.Path(path)
    manifest_path = path / _MANIFEST_NAME
    if not manifest_path.is_file():
        raise DimensionError(f"no {_MANIFEST_NAME} under {path}")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    n = int(manifest["n"])
    d1 = int(manifest["d1"])
    d2 = int(manifest["d2"])
    observations = np.empty((n, d1, d2))
    for i in range(n):
        sample = load_matrix_csv(path / _SAMPLE_PATTERN.format(i))
        if sample.shape != (d1, d2):
            raise DimensionError(
                f"sample {i} has shape {sample.shape}, manifest says ({d1}, {d2})"
            )
        observations[i] = sample
    labels = manifest.get("labels")
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
    return SampleSet(observations=observations, labels=labels,
                     noise_scale=float(manifest["noise_scale"]),
                     seed=int(manifest["seed"]))
