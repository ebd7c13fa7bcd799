"""End-to-end forecasting: screen -> scale -> PCA -> penalised regression.

Variants
--------
SSRF1  static screening + slope scaling (factor space F_f)
SSRF2  dynamic screening + lag-polynomial scaling (F_d)
SSRF3  columns of F_f and F_d side by side
PCA    plain principal components of all predictors
SPCA   slope scaling of all predictors, no screening
SRPCA  static screening, no scaling
RAW    no factors; the regressor sees the standardised predictors directly

Every step, including standardisation and the penalty search, is refitted on
the data available at each forecast origin.
"""
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .errors import ConfigInvalid, InsufficientData
from .factors import DEFAULT_R, estimate_num_factors, extract_factors, gram_spectrum, numerical_rank
from .numerics import as_matrix, as_vector, standardize, standardize_rows
from .scaling import ScaledPanel, dynamic_scale, static_scale
from .screening import DEFAULT_LAGS, KEEP_FRACTION_GRID, dynamic_screen, static_screen
from .shrinkage import (
    PENALTY_RULES,
    cv_error_matrix,
    default_psi_grid,
    enet_fit,
    ols_fit,
    select_penalty,
)

VARIANTS = ("SSRF1", "SSRF2", "SSRF3", "PCA", "SPCA", "SRPCA", "RAW")
REGRESSORS = ("OLS", "LASSO", "ENET")


@dataclass(frozen=True)
class PipelineConfig:
    variant: str = "SSRF1"
    regressor: str = "LASSO"
    h: int = 1
    keep_fraction: float = 1.0
    r: Union[int, str] = DEFAULT_R
    candidate_lags: tuple = DEFAULT_LAGS
    psi_grid: Union[tuple, str] = "AUTO"
    alpha_mix: float = 0.5
    min_train: Optional[int] = None
    penalty_rule: str = "min"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigInvalid(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.regressor not in REGRESSORS:
            raise ConfigInvalid(f"unknown regressor {self.regressor!r}")
        if self.variant in ("PCA", "SPCA", "RAW"):
            object.__setattr__(self, "keep_fraction", 1.0)
        if self.variant == "RAW" and self.regressor == "OLS":
            raise ConfigInvalid("RAW predictors need a penalised regressor")
        if not isinstance(self.h, int) or self.h < 1:
            raise ConfigInvalid(f"h must be a positive integer, got {self.h!r}")
        if not 0.0 < float(self.keep_fraction) <= 1.0:
            raise ConfigInvalid(f"keep_fraction must lie in (0, 1], got {self.keep_fraction}")
        if isinstance(self.r, str):
            if self.r.upper() != "AUTO":
                raise ConfigInvalid(f"r must be a positive integer or 'AUTO', got {self.r!r}")
            object.__setattr__(self, "r", "AUTO")
        elif int(self.r) < 1:
            raise ConfigInvalid(f"r must be >= 1, got {self.r}")
        lags = tuple(sorted({int(q) for q in self.candidate_lags}))
        if not lags or lags[0] < 1:
            raise ConfigInvalid("candidate_lags must be non-empty positive integers")
        object.__setattr__(self, "candidate_lags", lags)
        if isinstance(self.psi_grid, str):
            if self.psi_grid.upper() != "AUTO":
                raise ConfigInvalid("psi_grid must be a list of numbers or 'AUTO'")
            object.__setattr__(self, "psi_grid", "AUTO")
        else:
            grid = tuple(sorted((float(v) for v in self.psi_grid), reverse=True))
            if not grid or grid[-1] < 0:
                raise ConfigInvalid("psi_grid must be non-empty and non-negative")
            object.__setattr__(self, "psi_grid", grid)
        if not 0.0 <= self.alpha_mix <= 1.0:
            raise ConfigInvalid("alpha_mix must lie in [0, 1]")
        if self.penalty_rule not in PENALTY_RULES:
            raise ConfigInvalid(f"penalty_rule must be one of {PENALTY_RULES}")

    def to_dict(self):
        d = asdict(self)
        d["candidate_lags"] = list(self.candidate_lags)
        if not isinstance(self.psi_grid, str):
            d["psi_grid"] = list(self.psi_grid)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigInvalid(f"unknown pipeline field(s): {sorted(unknown)}")
        kw = dict(d)
        try:
            if "h" in kw:
                kw["h"] = int(kw["h"])
            if "keep_fraction" in kw:
                kw["keep_fraction"] = float(kw["keep_fraction"])
            if "r" in kw and not isinstance(kw["r"], str):
                kw["r"] = int(kw["r"])
            if "candidate_lags" in kw:
                kw["candidate_lags"] = tuple(kw["candidate_lags"])
            if "psi_grid" in kw and not isinstance(kw["psi_grid"], str):
                kw["psi_grid"] = tuple(kw["psi_grid"])
            if kw.get("min_train") is not None:
                kw["min_train"] = int(kw["min_train"])
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(f"bad pipeline config: {exc}") from exc
        return cls(**kw)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class ForecastRecord:
    origin_time: int  # number of observations used; the last one is index origin_time-1
    horizon: int
    prediction: float
    actual: float
    active_factors: int
    config_snapshot: PipelineConfig
    n_factors: int = 0
    penalty: float = float("nan")

    def row(self):
        return {
            "origin_time": self.origin_time,
            "horizon": self.horizon,
            "prediction": self.prediction,
            "actual": self.actual,
            "active_factors": self.active_factors,
            "n_factors": self.n_factors,
            "penalty": self.penalty,
        }


@dataclass
class FactorPart:
    """One constituent factor space with the intermediate products behind it."""

    kind: str  # "static", "dynamic", "none"
    selected: np.ndarray
    scaled: ScaledPanel
    model: object  # FactorModel
    screen: object = None


@dataclass
class FactorSpace:
    F: np.ndarray
    time_offset: int
    parts: list = field(default_factory=list)
    keep_rows: np.ndarray = None  # rows of X that survived the constant-series check

    @property
    def r(self):
        return self.F.shape[1]


def _resolve_r(scaled, r):
    eig = gram_spectrum(scaled)
    rank = numerical_rank(eig.eigenvalues)
    if rank < 1:
        raise InsufficientData("scaled panel is numerically zero")
    if r == "AUTO":
        r_use = estimate_num_factors(eig.eigenvalues, R=max(1, scaled.k // 2))
    else:
        r_use = int(r)
    r_use = max(1, min(r_use, rank, scaled.k, scaled.T))
    return r_use, eig


def _part(kind, scaled, selected, r, screen=None):
    r_use, eig = _resolve_r(scaled, r)
    model = extract_factors(scaled, r_use, eig=eig)
    return FactorPart(kind, selected, scaled, model, screen)


def _static_part(Z, ys, config, screen_on, scale_on):
    p = Z.shape[0]
    if screen_on:
        sr = static_screen(Z, ys, config.h, config.keep_fraction)
        sel = sr.selected
    else:
        sr, sel = None, np.arange(p)
    Xs = Z[sel]
    if scale_on:
        scaled = static_scale(Xs, ys, config.h, sel)
    else:
        scaled = ScaledPanel(Xs, sel, np.ones(sel.size), 0)
    return _part("static" if scale_on else "none", scaled, sel, config.r, sr)


def _dynamic_part(Z, ys, config):
    sr = dynamic_screen(Z, ys, config.h, config.keep_fraction, config.candidate_lags)
    scaled = dynamic_scale(Z[sr.selected], ys, config.h, sr.lags, sr.selected,
                           q_max=max(config.candidate_lags))
    return _part("dynamic", scaled, sr.selected, config.r, sr)


def factor_space(X, y, config):
    """Like :func:`build_factor_space` but keeps every intermediate product."""
    Z, keep = standardize_rows(X)
    if Z.shape[0] == 0:
        raise InsufficientData("every predictor is constant in this window")
    ys = standardize(y)
    if ys.size != Z.shape[1]:
        raise ConfigInvalid(f"X has {Z.shape[1]} columns but y has {ys.size} entries")
    v = config.variant
    if v == "RAW":
        return FactorSpace(np.ascontiguousarray(Z.T), 0, [], keep)
    if v == "SSRF1":
        parts = [_static_part(Z, ys, config, True, True)]
    elif v == "SRPCA":
        parts = [_static_part(Z, ys, config, True, False)]
    elif v == "SPCA":
        parts = [_static_part(Z, ys, config, False, True)]
    elif v == "PCA":
        parts = [_static_part(Z, ys, config, False, False)]
    elif v == "SSRF2":
        parts = [_dynamic_part(Z, ys, config)]
    else:  # SSRF3
        parts = [_static_part(Z, ys, config, True, True), _dynamic_part(Z, ys, config)]
    offset = max(pt.model.time_offset for pt in parts)
    blocks = [pt.model.factors[offset - pt.model.time_offset:] for pt in parts]
    return FactorSpace(np.hstack(blocks), offset, parts, keep)


def build_factor_space(X, y, config):
    """Factor matrix (rows = original times ``time_offset..T-1``) and its offset."""
    fs = factor_space(X, y, config)
    return fs.F, fs.time_offset


def default_min_train(T_eff, n_cols, variant):
    base = int(math.floor(0.8 * T_eff))
    if variant == "RAW":
        return base
    return max(n_cols + 5, base)


def fit_regressor(F, y, config):
    """Fit ``config.regressor`` of ``y[t+h]`` on ``F[t]``.

    Returns ``(theta, penalty)``; ``penalty`` is NaN for OLS.
    """
    h = config.h
    T_eff, n_cols = F.shape
    if T_eff - h < 2:
        raise InsufficientData(f"only {T_eff - h} training pairs")
    if config.regressor == "OLS":
        if T_eff - h < n_cols:
            raise InsufficientData(f"{T_eff - h} pairs cannot identify {n_cols} OLS coefficients")
        return ols_fit(F, y, h), float("nan")
    alpha = 1.0 if config.regressor == "LASSO" else config.alpha_mix
    if config.psi_grid == "AUTO":
        grid = default_psi_grid(F, y, h)
    else:
        grid = np.asarray(config.psi_grid, dtype=np.float64)
    if grid.size == 1:
        psi = float(grid[0])
    else:
        min_train = config.min_train or default_min_train(T_eff, n_cols, config.variant)
        if config.variant != "RAW" and min_train < n_cols + 5:
            raise InsufficientData(f"min_train={min_train} < r+5={n_cols + 5}")
        if min_train > T_eff - h:
            raise InsufficientData(
                f"window of {T_eff} rows too short for penalty validation from {min_train}")
        E = cv_error_matrix(F, y, h, grid, min_train, alpha)
        psi = select_penalty(grid, E, config.penalty_rule)
    fit = enet_fit(F, y, h, psi, alpha)
    return fit.coefficients, psi


def _snapshot(config, fs):
    if config.r != "AUTO" or not fs.parts:
        return config
    rs = {pt.model.r for pt in fs.parts}
    return replace(config, r=rs.pop()) if len(rs) == 1 else config


def forecast_one(X_train, y_train, config):
    """Forecast ``y`` h steps past the end of the training window."""
    X_train = as_matrix(X_train, "X_train")
    y_train = as_vector(y_train, "y_train")
    t = y_train.size
    if X_train.shape[1] != t:
        raise ConfigInvalid("X_train and y_train cover different periods")
    if t < config.h + 3:
        raise InsufficientData(f"training window of {t} observations is too short")
    mu = float(y_train.mean())
    sd = float(np.sqrt(np.mean((y_train - mu) ** 2)))
    fs = factor_space(X_train, y_train, config)
    ys = (y_train - mu) / sd
    yf = ys[fs.time_offset:]
    theta, psi = fit_regressor(fs.F, yf, config)
    pred = mu + sd * float(fs.F[-1] @ theta)
    active = int(np.sum(np.abs(theta) > 0.0))
    return ForecastRecord(t, config.h, pred, float("nan"), active, _snapshot(config, fs),
                          fs.r, psi)


def msfe(records):
    """Root mean squared forecast error over ``records``."""
    err = np.array([rec.actual - rec.prediction for rec in records], dtype=np.float64)
    if err.size == 0:
        raise InsufficientData("no forecast records")
    return float(np.sqrt(np.mean(np.sort(err ** 2))))


def _map(fn, items, threads):
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def expanding_window_eval(X, y, config, first_origin, last_origin, threads=1):
    """Refit at every origin t in [first_origin, last_origin] and score the forecasts."""
    X = as_matrix(X, "X")
    y = as_vector(y, "y")
    T = y.size
    if last_origin > T - config.h:
        raise InsufficientData(f"last_origin={last_origin} exceeds T-h={T - config.h}")
    if first_origin > last_origin:
        raise InsufficientData("no forecast origins in range")

    def one(t):
        rec = forecast_one(X[:, :t], y[:t], config)
        return replace(rec, actual=float(y[t - 1 + config.h]))

    records = _map(one, list(range(first_origin, last_origin + 1)), threads)
    return msfe(records), records


def tune_keep_fraction(X_train, y_train, config, grid=KEEP_FRACTION_GRID, first_origin=None,
                       threads=1):
    """Pick the keep fraction with the lowest inner expanding-window MSFE.

    Ties go to the larger fraction.
    """
    grid = [float(g) for g in grid]
    if not grid:
        raise ConfigInvalid("keep-fraction grid is empty")
    if any(not 0.0 < g <= 1.0 for g in grid):
        raise ConfigInvalid("keep fractions must lie in (0, 1]")
    y_train = as_vector(y_train, "y_train")
    T = y_train.size
    last = T - config.h
    first = int(math.floor(0.8 * T)) if first_origin is None else int(first_origin)
    if first > last:
        raise InsufficientData(f"training window of {T} observations leaves no tuning origin")
    if len(grid) == 1:
        return grid[0], np.array([expanding_window_eval(
            X_train, y_train, replace(config, keep_fraction=grid[0]), first, last, threads)[0]])
    table = np.array([
        expanding_window_eval(X_train, y_train, replace(config, keep_fraction=g), first, last,
                              threads)[0]
        for g in grid
    ])
    best = np.min(table)
    winners = [g for g, v in zip(grid, table) if v <= best]
    return max(winners), table
