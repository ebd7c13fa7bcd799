"""Penalised regression of ``y_{t+h}`` on factors.

The Lasso objective keeps the ``1/T`` scaling on the squared-error term,

    (1/T) * sum_{t<=T-h} (y_{t+h} - theta'f_t)^2 + psi * ||theta||_1,

so each coordinate update soft-thresholds at ``psi/2``, not ``psi``. The
elastic net adds ``psi*(1-alpha)*||theta||^2/2`` and scales the l1 part by
``alpha``. No intercept is fitted.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._config import TOL
from .errors import ConfigInvalid, InsufficientData, NotConverged
from .numerics import as_matrix, as_vector


@dataclass(frozen=True)
class ShrinkageFit:
    coefficients: np.ndarray
    intercept: float
    penalty: float
    alpha_mix: float
    active_set: np.ndarray
    objective: float
    iterations: int
    converged: bool = True
    objective_trace: np.ndarray = field(default=None, repr=False)


def _pairs(F, y, h):
    F = as_matrix(F, "F")
    y = as_vector(y, "y")
    T = F.shape[0]
    if y.size != T:
        raise ConfigInvalid(f"F has {T} rows but y has {y.size} entries")
    if h < 0 or T - h < 1:
        raise InsufficientData(f"no (f_t, y_t+h) pairs for T={T}, h={h}")
    return np.ascontiguousarray(F[: T - h]), np.ascontiguousarray(y[h:]), T


def enet_fit(F, y, h, psi, alpha_mix, theta0=None):
    if not 0.0 <= alpha_mix <= 1.0:
        raise ConfigInvalid(f"alpha_mix must lie in [0, 1], got {alpha_mix}")
    if psi < 0:
        raise ConfigInvalid(f"psi must be >= 0, got {psi}")
    Fp, yp, T = _pairs(F, y, h)
    r = Fp.shape[1]
    start = np.zeros(r) if theta0 is None else np.asarray(theta0, dtype=np.float64)
    psi = float(psi)
    theta, sweeps, converged, trace = _kernels.cd_enet(
        Fp, yp, float(T), psi * alpha_mix, psi * (1.0 - alpha_mix), start,
        TOL.cd_coef_change, TOL.cd_max_sweeps)
    if not converged:
        warnings.warn(f"coordinate descent stopped after {sweeps} sweeps", NotConverged,
                      stacklevel=2)
    active = np.flatnonzero(theta != 0.0)
    return ShrinkageFit(theta, 0.0, psi, float(alpha_mix), active, float(trace[-1]),
                        int(sweeps), bool(converged), trace)


def lasso_fit(F, y, h, psi):
    """Lasso fit of ``y[t+h]`` on ``F[t]`` by cyclic coordinate descent."""
    return enet_fit(F, y, h, psi, 1.0)


def ols_fit(F, y, h):
    """Unpenalised least squares on the same pairs (no intercept)."""
    Fp, yp, _ = _pairs(F, y, h)
    theta, *_ = np.linalg.lstsq(Fp, yp, rcond=None)
    return theta


def null_penalty(F, y, h):
    """Smallest psi at which the Lasso solution is exactly zero."""
    Fp, yp, T = _pairs(F, y, h)
    return 2.0 * float(np.max(np.abs(Fp.T @ yp))) / T


def default_psi_grid(F, y, h, n=50, ratio=None):
    """Log-spaced grid from the null penalty down to ``ratio`` times it.

    ``ratio`` defaults to 1e-3, or 1e-2 when there are fewer training pairs
    than columns (the path below that point only interpolates noise).
    """
    if ratio is None:
        ratio = 1e-2 if F.shape[0] - h < F.shape[1] else 1e-3
    top = null_penalty(F, y, h)
    if top <= 0.0:
        return np.zeros(1)
    return np.geomspace(top, top * ratio, n)


PENALTY_RULES = ("min", "1se")


def cv_error_matrix(F, y, h, psi_grid, min_train, alpha_mix=1.0):
    """Squared one-step-ahead errors, one row per validation origin, one column per psi.

    Origin ``s`` trains on the first ``s`` rows and predicts ``y[s-1+h]`` from
    ``F[s-1]``; origins run from ``min_train`` to ``T-h``.
    """
    F = as_matrix(F, "F")
    y = as_vector(y, "y")
    grid = np.asarray(psi_grid, dtype=np.float64)
    T = F.shape[0]
    if min_train < h + 1 or min_train > T - h:
        raise InsufficientData(f"min_train={min_train} leaves no validation origin (T={T}, h={h})")
    errs = _kernels.cv_path(np.ascontiguousarray(F), np.ascontiguousarray(y), int(h), grid,
                            int(min_train), float(alpha_mix), TOL.cd_coef_change,
                            TOL.cd_max_sweeps)
    return errs


def cv_errors(F, y, h, psi_grid, min_train, alpha_mix=1.0):
    """Mean validation error per psi (see :func:`cv_error_matrix`)."""
    return cv_error_matrix(F, y, h, psi_grid, min_train, alpha_mix).mean(axis=0)


def pick_penalty(psi_grid, errors):
    """Grid minimiser; ties resolve to the larger (more parsimonious) psi."""
    grid = np.asarray(psi_grid, dtype=np.float64)
    best = np.min(errors)
    candidates = np.flatnonzero(errors <= best)
    return float(np.max(grid[candidates]))


def pick_penalty_1se(psi_grid, error_matrix):
    """Largest psi whose mean error is within one standard error of the minimum.

    The standard error is taken across validation origins. With a single
    origin it is zero and the rule reduces to :func:`pick_penalty`.
    """
    grid = np.asarray(psi_grid, dtype=np.float64)
    E = np.asarray(error_matrix, dtype=np.float64)
    mean = E.mean(axis=0)
    i = int(np.argmin(mean))
    se = float(np.std(E[:, i], ddof=1) / np.sqrt(E.shape[0])) if E.shape[0] > 1 else 0.0
    return float(np.max(grid[mean <= mean[i] + se]))


def select_penalty(psi_grid, error_matrix, rule="min"):
    if rule == "min":
        return pick_penalty(psi_grid, np.asarray(error_matrix).mean(axis=0))
    if rule == "1se":
        return pick_penalty_1se(psi_grid, error_matrix)
    raise ConfigInvalid(f"unknown penalty rule {rule!r}; expected one of {PENALTY_RULES}")


def cv_penalty(F, y, h, psi_grid, min_train, alpha_mix=1.0, rule="min"):
    """Choose psi by expanding-window one-step-ahead validation.

    ``psi_grid`` must be descending (warm starts follow it). Returns the chosen
    psi and the mean validation error per grid point.
    """
    F = as_matrix(F, "F")
    grid = np.asarray(psi_grid, dtype=np.float64)
    if grid.size == 0:
        raise ConfigInvalid("psi_grid is empty")
    if np.any(np.diff(grid) > 0):
        raise ConfigInvalid("psi_grid must be descending")
    if min_train < F.shape[1] + 5:
        raise InsufficientData(f"min_train={min_train} < r+5={F.shape[1] + 5}")
    E = cv_error_matrix(F, y, h, grid, min_train, alpha_mix)
    if grid.size == 1:
        return float(grid[0]), E.mean(axis=0)
    return select_penalty(grid, E, rule), E.mean(axis=0)
