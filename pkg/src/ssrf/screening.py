"""Supervised screening of predictors.

Static screening ranks predictors by ``|(1/T) sum_{t<=T-h} x_{j,t} y_{t+h}|``;
dynamic screening ranks them by the R^2 of ``y_{t+h}`` regressed on an
intercept and ``q_j`` lags of ``x_j``, with ``q_j`` picked by AIC.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from ._config import TOL
from .errors import ConfigInvalid, HorizonTooLarge, RankDeficient
from .numerics import as_matrix, as_vector, ols_with_intercept

KEEP_FRACTION_GRID = (0.1, 0.2, 0.5, 0.75, 1.0)
DEFAULT_LAGS = (1, 2)


@dataclass(frozen=True)
class ScreenResult:
    scores: np.ndarray
    selected: np.ndarray
    keep_fraction: float
    lags: Optional[np.ndarray] = None  # aligned with ``selected``

    @property
    def k(self):
        return int(self.selected.size)


def n_keep(keep_fraction, p):
    if not 0.0 < keep_fraction <= 1.0:
        raise ConfigInvalid(f"keep_fraction must lie in (0, 1], got {keep_fraction}")
    # guard against 0.1*30 = 3.0000000000000004 rounding up to 4
    return max(1, min(p, math.ceil(keep_fraction * p - 1e-9)))


def top_k(scores, k):
    """Ascending indices of the ``k`` largest scores; ties go to the smaller index."""
    order = np.lexsort((np.arange(scores.size), -scores))
    return np.sort(order[:k])


def _check_horizon(T, h):
    if h < 1:
        raise ConfigInvalid(f"horizon must be >= 1, got {h}")
    if T <= h + 1:
        raise HorizonTooLarge(f"T={T} is too short for horizon h={h}")


def static_scores(X, y, h):
    X = as_matrix(X, "X")
    y = as_vector(y, "y")
    T = X.shape[1]
    _check_horizon(T, h)
    return np.abs(X[:, : T - h] @ y[h:]) / T


def static_screen(X, y, h, keep_fraction):
    scores = static_scores(X, y, h)
    sel = top_k(scores, n_keep(keep_fraction, scores.size))
    return ScreenResult(scores, sel, float(keep_fraction))


def _lag_fits(X, y, h, qs, qmax):
    coef, intercept, rss, tss, ok = _kernels.lag_ols(
        np.ascontiguousarray(X), np.ascontiguousarray(y), int(h),
        np.ascontiguousarray(qs, dtype=np.int64), int(qmax), TOL.rank_deficient)
    if not np.all(ok):
        bad = np.flatnonzero(~ok)[:5].tolist()
        raise RankDeficient(f"lag regression singular for predictor(s) {bad}")
    return coef, intercept, rss, tss


def _check_lags(candidate_lags, T, h):
    lags = sorted({int(q) for q in candidate_lags})
    if not lags or lags[0] < 1:
        raise ConfigInvalid(f"candidate lags must be positive integers, got {candidate_lags}")
    _check_horizon(T, h)
    qmax = lags[-1]
    n = T - h - qmax + 1
    if n < qmax + 2:
        raise HorizonTooLarge(f"T={T} leaves {n} observations for lag order {qmax}")
    return lags, qmax, n


def select_lag(x, y, h, candidate_lags=DEFAULT_LAGS):
    """AIC-minimising lag order on the sample common to all candidates."""
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    lags, qmax, n = _check_lags(candidate_lags, x.size, h)
    start = qmax - 1
    target = y[start + h: start + h + n]
    best_q, best_aic = lags[0], math.inf
    for q in lags:
        design = np.column_stack([x[start - l: start - l + n] for l in range(q)])
        aic = ols_with_intercept(design, target).aic
        if aic < best_aic:
            best_q, best_aic = q, aic
    return best_q


def _aic(rss, n, q):
    with np.errstate(divide="ignore"):
        return n * np.log(rss / n) + 2.0 * (q + 1)


def dynamic_scores(X, y, h, candidate_lags=DEFAULT_LAGS):
    """Per-predictor (R^2, chosen lag) on the common sample t = qmax..T-h."""
    X = as_matrix(X, "X")
    y = as_vector(y, "y")
    p, T = X.shape
    lags, qmax, n = _check_lags(candidate_lags, T, h)
    best_aic = np.full(p, np.inf)
    best_q = np.full(p, lags[0], dtype=np.int64)
    best_rss = np.zeros(p)
    tss = 0.0
    for q in lags:
        _, _, rss, tss = _lag_fits(X, y, h, np.full(p, q, dtype=np.int64), qmax)
        aic = _aic(rss, n, q)
        better = aic < best_aic
        best_aic[better] = aic[better]
        best_q[better] = q
        best_rss[better] = rss[better]
    if tss <= 0.0:
        r2 = np.where(best_rss <= 0.0, 1.0, 0.0)
    else:
        r2 = np.clip(1.0 - best_rss / tss, 0.0, 1.0)
    return r2, best_q


def dynamic_screen(X, y, h, keep_fraction, candidate_lags=DEFAULT_LAGS):
    scores, q = dynamic_scores(X, y, h, candidate_lags)
    sel = top_k(scores, n_keep(keep_fraction, scores.size))
    return ScreenResult(scores, sel, float(keep_fraction), q[sel])
