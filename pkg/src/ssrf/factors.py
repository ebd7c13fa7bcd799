"""Principal-component factors of a (scaled) panel.

The eigenproblem is solved on the T x T matrix ``X'X/k``; factors are
normalised so that ``F'F/T = I`` and loadings are ``X F / T``.
"""
import csv
from dataclasses import dataclass

import numpy as np

from ._config import TOL
from .errors import EmptySpectrum, RankTooHigh
from .numerics import as_matrix, fix_column_signs, sym_eigen
from .scaling import ScaledPanel

R_GRID = (5, 7, 10, 15, 20, 25, 30)
DEFAULT_R = 10


@dataclass(frozen=True)
class FactorModel:
    factors: np.ndarray  # T_eff x r
    loadings: np.ndarray  # k x r
    eigenvalues: np.ndarray  # full spectrum of X'X/k, descending
    time_offset: int = 0

    @property
    def r(self):
        return self.factors.shape[1]


def _unpack(panel):
    if isinstance(panel, ScaledPanel):
        return panel.panel, panel.time_offset
    return as_matrix(panel, "panel"), 0


def gram_spectrum(panel):
    """Eigen-decomposition of ``X'X/k`` for a k x T panel."""
    X, _ = _unpack(panel)
    k = X.shape[0]
    return sym_eigen(X.T @ X / k)


def numerical_rank(eigenvalues):
    ev = np.asarray(eigenvalues, dtype=np.float64)
    if ev.size == 0 or ev[0] <= 0.0:
        return 0
    return int(np.sum(ev > TOL.numerical_rank * ev[0]))


def extract_factors(panel, r, eig=None):
    """Top-``r`` principal-component factors of ``panel``.

    ``eig`` may carry a precomputed ``gram_spectrum`` of the same panel.
    """
    X, offset = _unpack(panel)
    k, T = X.shape
    r = int(r)
    if r < 1 or r > min(k, T):
        raise RankTooHigh(f"r={r} outside 1..min(k={k}, T={T})")
    if eig is None:
        eig = gram_spectrum(X)
    if numerical_rank(eig.eigenvalues) < r:
        raise RankTooHigh(f"panel has numerical rank {numerical_rank(eig.eigenvalues)} < r={r}")
    F = fix_column_signs(np.sqrt(T) * eig.eigenvectors[:, :r])
    loadings = X @ F / T
    return FactorModel(F, loadings, np.clip(eig.eigenvalues, 0.0, None), offset)


def estimate_num_factors(eigenvalues, R=None):
    """Eigenvalue-ratio estimate: argmin over i<=R of lambda_{i+1}/lambda_i.

    ``R`` defaults to half the spectrum length and is capped so that only
    numerically non-zero eigenvalues enter the ratios.
    """
    ev = np.asarray(eigenvalues, dtype=np.float64)
    if ev.size == 0 or ev[0] <= 0.0:
        raise EmptySpectrum("spectrum is empty or has no positive eigenvalue")
    R = ev.size // 2 if R is None else int(R)
    R = min(R, ev.size - 1, numerical_rank(ev) - 1)
    if R < 1:
        return 1
    ratios = ev[1: R + 1] / ev[:R]
    return int(np.argmin(ratios)) + 1


def eigenvalue_shares(panel, top_n, eig=None):
    """Leading eigenvalues of ``X'X/k`` as fractions of the spectrum total."""
    if eig is None:
        eig = gram_spectrum(panel)
    ev = np.clip(eig.eigenvalues, 0.0, None)
    total = ev.sum()
    if total <= 0.0:
        return np.zeros(top_n)
    shares = np.zeros(top_n)
    n = min(top_n, ev.size)
    shares[:n] = ev[:n] / total
    return shares


def write_shares_csv(path, shares_by_method):
    """Write a rank x method table of eigenvalue shares."""
    methods = list(shares_by_method)
    n = max(len(v) for v in shares_by_method.values())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank"] + methods)
        for i in range(n):
            w.writerow([i + 1] + [f"{shares_by_method[m][i]:.6f}" for m in methods])
