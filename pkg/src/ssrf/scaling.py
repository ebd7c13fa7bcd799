"""Supervised scaling of screened predictors."""
from dataclasses import dataclass

import numpy as np

from ._config import TOL
from .errors import ConfigInvalid, DegenerateRegressor, HorizonTooLarge
from .numerics import as_matrix, as_vector
from .screening import _lag_fits


@dataclass(frozen=True)
class ScaledPanel:
    """Scaled predictors (k x T_eff).

    ``slopes`` is a length-k vector for static scaling and a k x q_max matrix
    of lag coefficients (zero-padded) for dynamic scaling. Column 0 of
    ``panel`` corresponds to original time index ``time_offset``.
    """

    panel: np.ndarray
    source_indices: np.ndarray
    slopes: np.ndarray
    time_offset: int = 0
    intercepts: np.ndarray = None

    @property
    def k(self):
        return self.panel.shape[0]

    @property
    def T(self):
        return self.panel.shape[1]


def _indices(source_indices, k):
    if source_indices is None:
        return np.arange(k)
    idx = np.asarray(source_indices, dtype=np.int64)
    if idx.size != k:
        raise ConfigInvalid("source_indices length does not match the panel")
    return idx


def static_slopes(X, y, h):
    X = as_matrix(X, "X")
    y = as_vector(y, "y")
    T = X.shape[1]
    if T <= h + 1:
        raise HorizonTooLarge(f"T={T} is too short for horizon h={h}")
    head = X[:, : T - h]
    sxx = np.einsum("ij,ij->i", head, head)
    if np.any(sxx < TOL.degenerate_regressor):
        bad = np.flatnonzero(sxx < TOL.degenerate_regressor)[:5].tolist()
        raise DegenerateRegressor(f"zero-variance predictor(s) {bad}")
    return head @ y[h:] / sxx


def static_scale(X_sel, y, h, source_indices=None):
    """Multiply each row by its no-intercept slope on ``y_{t+h}``.

    Slopes use pairs t = 1..T-h; the scaled rows cover all T periods so the
    last one is available for prediction.
    """
    X_sel = as_matrix(X_sel, "X_sel")
    phi = static_slopes(X_sel, y, h)
    return ScaledPanel(phi[:, None] * X_sel, _indices(source_indices, X_sel.shape[0]), phi, 0)


def dynamic_scale(X_sel, y, h, lags, source_indices=None, q_max=None):
    """Replace each row by its fitted lag polynomial ``sum_l gamma_l x_{t-l}``.

    Coefficients are refitted with an intercept on t = q_max..T-h; the
    intercept is not part of the scaled value. Output spans t = q_max..T.
    """
    X_sel = as_matrix(X_sel, "X_sel")
    y = as_vector(y, "y")
    k, T = X_sel.shape
    lags = np.asarray(lags, dtype=np.int64)
    if lags.size != k or np.any(lags < 1):
        raise ConfigInvalid("need one positive lag order per row")
    qmax = int(lags.max()) if q_max is None else int(q_max)
    if qmax < lags.max():
        raise ConfigInvalid("q_max is smaller than a row's lag order")
    if T - h - qmax + 1 < qmax + 2:
        raise HorizonTooLarge(f"T={T} is too short for h={h} and lag order {qmax}")
    gamma, mu, _, _ = _lag_fits(X_sel, y, h, lags, qmax)
    start = qmax - 1
    T_eff = T - start
    out = np.zeros((k, T_eff))
    for l in range(qmax):
        out += gamma[:, l: l + 1] * X_sel[:, start - l: start - l + T_eff]
    return ScaledPanel(out, _indices(source_indices, k), gamma, start, mu)
