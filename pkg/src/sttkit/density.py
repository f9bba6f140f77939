"""Gaussian product-kernel density estimation in 1 and 2 dimensions."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

__all__ = ["GaussianKde", "fit_kde", "keep_top_fraction", "scott_bandwidths"]

# bandwidth floor for degenerate data (single point or zero variance)
BANDWIDTH_FLOOR = 1e-3
_SIGMA_EPS = 1e-9
_CHUNK_ELEMENTS = 1 << 21


def _as_points(X, expected_dim: int | None = None) -> np.ndarray:
    """Coerce input to an (n, d) float array, reporting the first bad row."""
    try:
        arr = np.asarray(X, dtype=float)
    except (TypeError, ValueError):
        arr = None
    if arr is not None and arr.ndim == 1:
        if arr.size == 0 and expected_dim is not None:
            return np.empty((0, expected_dim))
        arr = arr.reshape(-1, 1)
    if arr is None or arr.ndim != 2:
        # ragged or non-numeric input: locate the first offending row
        want = expected_dim
        for index, row in enumerate(X):
            try:
                row_arr = np.atleast_1d(np.asarray(row, dtype=float))
            except (TypeError, ValueError):
                raise ValueError(f"non-numeric point at index {index}") from None
            if row_arr.ndim != 1:
                raise ValueError(f"point at index {index} is not a flat vector")
            if want is None:
                want = row_arr.size
            elif row_arr.size != want:
                raise ValueError(
                    f"dimension mismatch at index {index}: expected d={want}, "
                    f"got d={row_arr.size}"
                )
        raise ValueError("could not interpret points as an (n, d) array")
    if expected_dim is not None and arr.shape[1] != expected_dim:
        raise ValueError(
            f"dimension mismatch: model has d={expected_dim}, got d={arr.shape[1]}"
        )
    return arr


def scott_bandwidths(points: np.ndarray) -> np.ndarray:
    """Scott's rule per dimension: h_j = sigma_j * n^(-1/(d+4)).

    Sample standard deviation uses denominator n-1. Dimensions with
    (near-)zero spread, and singleton point sets, fall back to the
    ``BANDWIDTH_FLOOR``.
    """
    n, d = points.shape
    h = np.full(d, BANDWIDTH_FLOOR)
    if n > 1:
        sigma = points.std(axis=0, ddof=1)
        factor = n ** (-1.0 / (d + 4))
        for j in range(d):
            if sigma[j] >= _SIGMA_EPS:
                h[j] = sigma[j] * factor
    return h


class GaussianKde(BaseEstimator):
    """Product (diagonal) Gaussian kernel density estimate, d in {1, 2}.

    The density at x is the average over data points of
    ``prod_j phi((x_j - X_ij) / h_j) / h_j`` with ``phi`` the standard normal
    density. Bandwidths default to Scott's rule; ``bandwidth`` (scalar or
    per-dimension sequence) overrides it verbatim. Values are positive for
    any finite query, down to where exp() underflows float64 (roughly 38
    bandwidths from every data point).
    """

    def __init__(self, bandwidth=None):
        self.bandwidth = bandwidth

    def fit(self, X, y=None):
        points = _as_points(X)
        n, d = points.shape
        if n < 1:
            raise ValueError("cannot fit a density on an empty point set")
        if d not in (1, 2):
            raise ValueError(f"only 1D and 2D densities are supported, got d={d}")
        if self.bandwidth is not None:
            h = np.atleast_1d(np.asarray(self.bandwidth, dtype=float))
            if h.size == 1:
                h = np.full(d, float(h[0]))
            if h.shape != (d,):
                raise ValueError(f"bandwidth must have {d} components, got {h.shape}")
            if np.any(h <= 0):
                raise ValueError("bandwidth components must be positive")
        else:
            h = scott_bandwidths(points)
        self.points_ = points
        self.bandwidth_ = h
        self.n_ = n
        self.n_features_in_ = d
        # log of the kernel normalization: (2*pi)^(d/2) * prod(h)
        self._log_norm = 0.5 * d * math.log(2.0 * math.pi) + float(np.log(h).sum())
        return self

    def _check_fitted(self):
        if not hasattr(self, "points_"):
            raise NotFittedError("this GaussianKde instance is not fitted yet")

    def pdf(self, x) -> float:
        """Density at a single d-dimensional point."""
        self._check_fitted()
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 and self.n_features_in_ == 1:
            x = x.reshape(1)
        if x.shape != (self.n_features_in_,):
            raise ValueError(
                f"dimension mismatch: model has d={self.n_features_in_}, "
                f"got point of shape {x.shape}"
            )
        z = (x[None, :] - self.points_) / self.bandwidth_[None, :]
        log_kernels = -0.5 * (z * z).sum(axis=1) - self._log_norm
        return float(np.exp(log_kernels).mean())

    def pdf_batch(self, X, jobs: int = 1) -> np.ndarray:
        """Elementwise :meth:`pdf` over query points, preserving order."""
        self._check_fitted()
        queries = _as_points(X, expected_dim=self.n_features_in_)
        m = queries.shape[0]
        if m == 0:
            return np.empty(0)
        chunk = max(1, _CHUNK_ELEMENTS // max(1, self.n_))
        spans = [(start, min(start + chunk, m)) for start in range(0, m, chunk)]

        def evaluate(span):
            start, stop = span
            z = (queries[start:stop, None, :] - self.points_[None, :, :]) \
                / self.bandwidth_[None, None, :]
            log_kernels = -0.5 * (z * z).sum(axis=2) - self._log_norm
            return np.exp(log_kernels).mean(axis=1)

        if jobs > 1 and len(spans) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                parts = list(pool.map(evaluate, spans))
        else:
            parts = [evaluate(span) for span in spans]
        return np.concatenate(parts)

    def score_samples(self, X) -> np.ndarray:
        """Log-density, for parity with other density estimators."""
        return np.log(self.pdf_batch(X))

    def grid_1d(self, grid: int = 256, pad_bandwidths: float = 3.0):
        """Evaluation grid over the data range padded by ``pad_bandwidths`` * h."""
        self._check_fitted()
        if self.n_features_in_ != 1:
            raise ValueError("grid_1d requires a 1D model")
        if grid < 2:
            raise ValueError(f"grid must have at least 2 points, got {grid}")
        pad = pad_bandwidths * self.bandwidth_[0]
        lo = float(self.points_.min()) - pad
        hi = float(self.points_.max()) + pad
        xs = np.linspace(lo, hi, grid)
        return xs, self.pdf_batch(xs)


def fit_kde(points, bandwidth_override=None) -> GaussianKde:
    """Fit a :class:`GaussianKde` on the given points."""
    return GaussianKde(bandwidth=bandwidth_override).fit(points)


def keep_top_fraction(scores, ids, keep_fraction: float = 0.9):
    """Split ids into (kept, dropped, threshold) by score rank.

    Keeps the ``ceil(keep_fraction * n)`` highest-scored ids. Ties at the
    threshold are broken by earlier input position. Output lists preserve
    input order; the threshold is the k-th highest score.
    """
    scores = list(scores)
    ids = list(ids)
    if len(scores) != len(ids):
        raise ValueError(f"scores/ids length mismatch: {len(scores)} vs {len(ids)}")
    n = len(scores)
    if n == 0:
        raise ValueError("cannot rank an empty score list")
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    if any(math.isnan(s) for s in scores):
        raise ValueError("scores must not contain NaN")

    k = math.ceil(keep_fraction * n)
    order = sorted(range(n), key=lambda i: -scores[i])  # stable: ties keep input order
    kept_idx = set(order[:k])
    threshold = scores[order[k - 1]]
    kept = [ids[i] for i in range(n) if i in kept_idx]
    dropped = [ids[i] for i in range(n) if i not in kept_idx]
    return kept, dropped, threshold
