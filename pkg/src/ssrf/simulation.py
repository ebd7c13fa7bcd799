"""Monte Carlo experiments on simulated factor panels.

Data follow ``x_jt = lambda_j' f_t + sigma_j e_jt`` with ``f_t ~ N(0, I_r)``,
``lambda_j = z_j' D B / sqrt(p)``, ``B_jj = p^(alpha_j/2)`` and
``sigma_j ~ U(sigma_low, sigma_high)``. The target is
``y_{t+h} = theta' f_t + eps`` (DGP 1 and 2) or
``y_{t+h} = theta' (f_t, f_{t-1}) + eps`` (DGP 3).
"""
import csv
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ._config import TOL
from .errors import ConfigInvalid, DimensionMismatch
from .numerics import SeededRng, as_matrix, draw_normal, standardize, svd, sym_eigen
from .pipeline import (
    PipelineConfig,
    _map,
    expanding_window_eval,
    factor_space,
    fit_regressor,
)

_PRESETS = {
    1: dict(r=4, theta=(1.0, 0.0, 2.0, 5.0), D_squared=(3.0, 2.0, 1.0, 0.7),
            sigma_low=0.1, sigma_high=0.5),
    2: dict(r=4, theta=(0.0, 0.0, 0.0, 5.0), D_squared=(3.0, 2.0, 1.0, 0.7),
            sigma_low=0.1, sigma_high=0.5),
    # printed as diag(1,1,1,1) alongside r=2; the 2x2 identity is used
    3: dict(r=2, theta=(1.0, 0.0, 0.7, 0.0), D_squared=(1.0, 1.0),
            sigma_low=0.8, sigma_high=1.0),
}


@dataclass(frozen=True)
class DgpConfig:
    dgp: int = 1
    p: int = 500
    T: int = 100
    r: int = 4
    h: int = 1
    alphas: tuple = (1.0, 1.0, 1.0, 1.0)
    D_squared: tuple = (3.0, 2.0, 1.0, 0.7)
    theta: tuple = (1.0, 0.0, 2.0, 5.0)
    sigma_low: float = 0.1
    sigma_high: float = 0.5
    seed: int = 42

    def __post_init__(self):
        for name in ("alphas", "D_squared", "theta"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.dgp not in (1, 2, 3):
            raise ConfigInvalid(f"dgp must be 1, 2 or 3, got {self.dgp}")
        if self.p < 2 or self.T < 4 or self.r < 1 or self.h < 1:
            raise ConfigInvalid("need p >= 2, T >= 4, r >= 1, h >= 1")
        if len(self.alphas) != self.r or any(not 0.0 <= a <= 1.0 for a in self.alphas):
            raise ConfigInvalid(f"alphas must be {self.r} values in [0, 1]")
        if len(self.D_squared) != self.r or any(d <= 0 for d in self.D_squared):
            raise ConfigInvalid(f"D_squared must be {self.r} positive values")
        need = 2 * self.r if self.dgp == 3 else self.r
        if len(self.theta) != need:
            raise ConfigInvalid(f"theta must have {need} entries for DGP{self.dgp}")
        if not 0.0 <= self.sigma_low <= self.sigma_high:
            raise ConfigInvalid("need 0 <= sigma_low <= sigma_high")

    @classmethod
    def preset(cls, dgp, **overrides):
        """Defaults for DGP1-3 (p=500, T=100, h=1, all factors strong)."""
        if dgp not in _PRESETS:
            raise ConfigInvalid(f"dgp must be 1, 2 or 3, got {dgp}")
        kw = dict(_PRESETS[dgp])
        kw["alphas"] = (1.0,) * kw["r"]
        kw.update(overrides)
        return cls(dgp=dgp, **kw)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "dgp" not in d:
            raise ConfigInvalid("experiment spec must name the dgp")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigInvalid(f"unknown dgp field(s): {sorted(unknown)}")
        dgp = int(d.pop("dgp"))
        return cls.preset(dgp, **d)

    def to_dict(self):
        d = asdict(self)
        for k in ("alphas", "D_squared", "theta"):
            d[k] = list(d[k])
        return d


@dataclass(frozen=True)
class DgpInstance:
    X: np.ndarray  # p x T
    y: np.ndarray  # T
    F_true: np.ndarray  # T x r
    Lambda_true: np.ndarray  # p x r
    theta_true: np.ndarray
    true_support: tuple
    sigma: np.ndarray
    z: np.ndarray
    noise: np.ndarray  # e_jt


def generate(config, stream_id=0):
    """Draw one data set. All randomness comes from ``(config.seed, stream_id)``."""
    c = config
    rng = SeededRng(c.seed, stream_id)
    lag_depth = 1 if c.dgp == 3 else 0
    n_f = c.T + c.h + lag_depth
    f_all = draw_normal(rng, n_f * c.r).reshape(n_f, c.r)
    z = draw_normal(rng, c.p * c.r).reshape(c.p, c.r)
    scale = np.sqrt(np.asarray(c.D_squared)) * c.p ** (np.asarray(c.alphas) / 2.0) / math.sqrt(c.p)
    Lam = z * scale
    sigma = rng.uniform(c.p, c.sigma_low, c.sigma_high)
    e = draw_normal(rng, c.p * c.T).reshape(c.p, c.T)
    eps = draw_normal(rng, c.T)
    F = f_all[-c.T:]
    X = Lam @ F.T + sigma[:, None] * e
    theta = np.asarray(c.theta)
    # y at time s (0-based) loads on f_{s-h}, which sits at row s + lag_depth of f_all
    contemp = f_all[lag_depth: lag_depth + c.T]
    y = contemp @ theta[: c.r] + eps
    if c.dgp == 3:
        y = y + f_all[: c.T] @ theta[c.r:]
    support = tuple(int(i) for i in np.flatnonzero(theta != 0.0))
    return DgpInstance(X, y, F, Lam, theta, support, sigma, z, e)


def rotation_align(F_hat, Lambda_scaled, Lambda_hat=None):
    """Map estimated factors into the frame of the loading matrix.

    ``V`` is the right singular matrix of ``Lambda_scaled`` and row t of the
    result is ``V f_hat_t``. When the estimated loadings ``Lambda_hat`` are
    supplied, the columns of ``F_hat`` are first permuted and sign-flipped to
    match ``Lambda_scaled V``; PCA leaves both free.
    """
    F_hat = as_matrix(F_hat, "F_hat")
    L = as_matrix(Lambda_scaled, "Lambda_scaled")
    if L.shape[1] != F_hat.shape[1]:
        raise DimensionMismatch(f"F_hat has {F_hat.shape[1]} columns, loadings {L.shape[1]}")
    _, _, V = svd(L)
    if Lambda_hat is not None:
        Lh = as_matrix(Lambda_hat, "Lambda_hat")
        if Lh.shape != L.shape:
            raise DimensionMismatch("Lambda_hat and Lambda_scaled differ in shape")
        target = L @ V
        C = target.T @ Lh
        norms = np.outer(np.linalg.norm(target, axis=0), np.linalg.norm(Lh, axis=0))
        C = np.divide(C, norms, out=np.zeros_like(C), where=norms > 0)
        r = C.shape[0]
        perm = np.full(r, -1)
        signs = np.ones(r)
        used = set()
        # greedy assignment on |cosine|, strongest match first
        for flat in np.argsort(-np.abs(C), axis=None, kind="stable"):
            i, j = divmod(int(flat), r)
            if perm[i] >= 0 or j in used:
                continue
            perm[i] = j
            signs[i] = 1.0 if C[i, j] >= 0 else -1.0
            used.add(j)
        F_hat = F_hat[:, perm] * signs
    return F_hat @ V.T


def spectral_norm_sym(A):
    ev = sym_eigen(A).eigenvalues
    return float(max(abs(ev[0]), abs(ev[-1])))


def recovery_metrics(F_hat, F_true, fitted_support, true_support):
    """Exact support match and ``||F_hat F_hat' - F F'||_2 / T``."""
    F_hat = as_matrix(F_hat, "F_hat")
    F_true = as_matrix(F_true, "F_true")
    if F_hat.shape != F_true.shape:
        raise DimensionMismatch(f"F_hat {F_hat.shape} vs F_true {F_true.shape}")
    T = F_hat.shape[0]
    diff = (F_hat @ F_hat.T - F_true @ F_true.T) / T
    ok = set(int(i) for i in fitted_support) == set(int(i) for i in true_support)
    return ok, spectral_norm_sym(diff)


def _scaled_true_loadings(inst, part, sd):
    """True loadings of the panel that PCA actually saw (standardised, then scaled)."""
    sel = part.selected
    base = inst.Lambda_true[sel] / sd[sel][:, None]
    if part.kind == "static":
        return base * part.scaled.slopes[:, None]
    if part.kind == "dynamic":
        return base * part.scaled.slopes[:, :1]
    return base


def recover(inst, dgp, config, penalty_rule="1se"):
    """Factor-recovery metrics for one simulated data set.

    The pipeline runs on the full sample with r set to the true factor count;
    the Lasso then runs on the rotated factors (and their first lag under DGP3)
    with its penalty picked by ``penalty_rule``. Predictors are standardised
    over time, so the estimated factors are compared with the time-demeaned
    true factors.
    """
    if config.variant in ("SSRF3", "RAW"):
        raise ConfigInvalid(f"recovery metrics need a single factor space, not {config.variant}")
    cfg = replace(config, r=dgp.r, penalty_rule=penalty_rule)
    fs = factor_space(inst.X, inst.y, cfg)
    part = fs.parts[0]
    model = part.model
    sd = np.sqrt(np.mean((inst.X - inst.X.mean(axis=1, keepdims=True)) ** 2, axis=1))
    L = _scaled_true_loadings(inst, part, sd)
    if model.r != dgp.r:
        return False, float("nan"), ()
    F_rot = rotation_align(model.factors, L, model.loadings)
    ys = standardize(inst.y)[fs.time_offset:]
    if dgp.dgp == 3:
        design = np.hstack([F_rot[1:], F_rot[:-1]])
        ys = ys[1:]
    else:
        design = F_rot
    reg_cfg = cfg if cfg.regressor != "OLS" else replace(cfg, regressor="LASSO")
    theta, _ = fit_regressor(design, ys, reg_cfg)
    support = tuple(int(i) for i in np.flatnonzero(np.abs(theta) > TOL.nonzero_coef))
    F_c = inst.F_true - inst.F_true.mean(axis=0)
    ok, norm = recovery_metrics(model.factors, F_c[fs.time_offset:], support, inst.true_support)
    return ok, norm, support


@dataclass
class MonteCarloReport:
    n_reps: int
    recovery_rate: float
    mean_norm: float
    mean_msfe: float
    details: list = field(default_factory=list)


def _replicate(dgp, config, rep, metrics, origins, recovery_rule):
    inst = generate(dgp, stream_id=rep)
    out = {"rep": rep}
    if "recovery" in metrics:
        ok, norm, support = recover(inst, dgp, config, recovery_rule)
        out.update(support_recovered=ok, norm=norm, support=list(support))
    if "msfe" in metrics:
        first, last = origins
        out["msfe"], _ = expanding_window_eval(inst.X, inst.y, config, first, last)
    return out


def _mean(values):
    vals = np.sort(np.asarray(values, dtype=np.float64))
    return float(np.mean(vals)) if vals.size else float("nan")


def monte_carlo(dgp_config, pipeline_config, n_reps, metrics=("recovery", "msfe"), origins=None,
                threads=1, recovery_rule="1se"):
    """Run ``n_reps`` replications; replication i uses stream id i.

    Forecast errors use ``pipeline_config`` as given; support recovery picks
    its Lasso penalty with ``recovery_rule``.
    """
    if n_reps < 1:
        raise ConfigInvalid("n_reps must be >= 1")
    metrics = tuple(metrics)
    if origins is None:
        origins = (int(math.floor(0.8 * dgp_config.T)), dgp_config.T - pipeline_config.h)
    details = _map(lambda i: _replicate(dgp_config, pipeline_config, i, metrics, origins,
                                        recovery_rule),
                   list(range(n_reps)), threads)
    rate = _mean([d["support_recovered"] for d in details]) if "recovery" in metrics else float("nan")
    norm = _mean([d["norm"] for d in details]) if "recovery" in metrics else float("nan")
    mse = _mean([d["msfe"] for d in details]) if "msfe" in metrics else float("nan")
    return MonteCarloReport(n_reps, rate, norm, mse, details)


TABLE_COLUMNS = ("keep_fraction", "strength_config", "recovery_rate", "mean_norm", "mean_msfe")


def strength_label(alphas):
    return "(" + ",".join(f"{a:g}" for a in alphas) + ")"


def run_experiment(dgp_config, pipeline_config, n_reps, keep_fractions, strength_configs,
                   metrics=("recovery", "msfe"), origins=None, threads=1, recovery_rule="1se"):
    """Sweep keep fractions x factor strengths; one table row per pair.

    Each row also carries the per-replication ``details`` of its run.
    """
    rows = []
    for alphas in strength_configs:
        dgp = replace(dgp_config, alphas=tuple(alphas))
        for kf in keep_fractions:
            cfg = replace(pipeline_config, keep_fraction=float(kf))
            rep = monte_carlo(dgp, cfg, n_reps, metrics, origins, threads, recovery_rule)
            rows.append({
                "keep_fraction": float(kf),
                "strength_config": strength_label(alphas),
                "recovery_rate": rep.recovery_rate,
                "mean_norm": rep.mean_norm,
                "mean_msfe": rep.mean_msfe,
                "details": rep.details,
            })
    return rows


def write_table_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for row in rows:
            w.writerow([
                f"{row['keep_fraction']:g}",
                row["strength_config"],
                *(f"{row[k]:.6f}" for k in TABLE_COLUMNS[2:]),
            ])
