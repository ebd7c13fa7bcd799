"""Dense linear-algebra and statistics kernels shared by the other modules."""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._config import TOL
from .errors import (
    ConstantSeries,
    DegenerateRegressor,
    NonFinite,
    NotSymmetric,
    RankDeficient,
)


def as_matrix(A, name="matrix"):
    """Return ``A`` as a finite 2-D float64 array."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return A


def as_vector(x, name="series"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return x


def standardize(series):
    """Centre ``series`` and scale it to unit population variance (divisor T)."""
    x = as_vector(series)
    if x.size < 2:
        raise ConstantSeries("need at least two observations to standardize")
    mu = x.mean()
    var = np.mean((x - mu) ** 2)
    if var < TOL.constant_variance:
        raise ConstantSeries(f"series variance {var:.3g} is below {TOL.constant_variance:g}")
    return (x - mu) / np.sqrt(var)


def standardize_rows(X):
    """Row-wise standardisation of a p x T panel.

    Returns ``(Z, keep)`` where ``keep`` flags the rows that were not constant;
    constant rows are dropped from ``Z``.
    """
    X = as_matrix(X, "panel")
    mu = X.mean(axis=1, keepdims=True)
    centred = X - mu
    var = np.mean(centred ** 2, axis=1)
    keep = var >= TOL.constant_variance
    Z = centred[keep] / np.sqrt(var[keep])[:, None]
    return Z, keep


def ols_no_intercept(x, y):
    """Least-squares slope of ``y`` on ``x`` through the origin."""
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    if x.shape != y.shape or x.size < 2:
        raise ValueError("x and y must have equal length >= 2")
    sxx = float(x @ x)
    if sxx < TOL.degenerate_regressor:
        raise DegenerateRegressor(f"sum of squares {sxx:.3g} too small")
    return float(x @ y) / sxx


@dataclass(frozen=True)
class OLSResult:
    coefficients: np.ndarray
    intercept: float
    r_squared: float
    aic: float


def _chol_solve(A, b):
    """Solve the normal equations ``A beta = b`` via Cholesky with a pivot test."""
    beta, ok = _kernels._batched_cholesky_solve(A[None], b[None], TOL.rank_deficient)
    if not ok[0]:
        raise RankDeficient("cross-product matrix is singular")
    return beta[0]


def ols_with_intercept(X, y):
    """Regress ``y`` on an intercept plus the columns of ``X`` (T x q).

    AIC is ``T*log(RSS/T) + 2(q+1)``; an exact fit gives ``-inf``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    X = as_matrix(X, "design")
    y = as_vector(y, "y")
    T, q = X.shape
    if y.size != T:
        raise ValueError("design and target lengths differ")
    if T < q + 1:
        raise RankDeficient(f"T={T} observations cannot identify {q + 1} coefficients")
    Z = np.hstack([np.ones((T, 1)), X])
    beta = _chol_solve(Z.T @ Z, Z.T @ y)
    resid = y - Z @ beta
    rss = float(resid @ resid)
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = _r_squared(rss, tss)
    with np.errstate(divide="ignore"):
        aic = T * np.log(rss / T) + 2.0 * (q + 1)
    return OLSResult(beta[1:], float(beta[0]), r2, float(aic))


def _r_squared(rss, tss):
    if tss <= 0.0:
        return 1.0 if rss <= 0.0 else 0.0
    return float(min(1.0, max(0.0, 1.0 - rss / tss)))


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0


def fix_column_signs(V):
    """Flip columns so the entry of largest magnitude in each is positive."""
    V = np.array(V, dtype=np.float64, copy=True)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def sym_eigen(A):
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues come back in descending order; each eigenvector has its
    largest-magnitude entry positive.
    """
    A = as_matrix(A)
    n, m = A.shape
    if n != m or n < 1:
        raise NotSymmetric(f"expected a non-empty square matrix, got {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > TOL.symmetry * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")
    A = 0.5 * (A + A.T)
    w, V, sweeps = _kernels.jacobi(np.ascontiguousarray(A), TOL.jacobi_offdiag,
                                   TOL.jacobi_max_sweeps)
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(w[order], fix_column_signs(V[:, order]), int(sweeps))


def _orthonormal_completion(U, keep):
    """Gram-Schmidt the kept columns of U; fill the rest from the standard basis."""
    m, k = U.shape
    out = np.zeros((m, k))
    basis = []
    for j in range(k):
        if keep[j]:
            v = U[:, j].copy()
            for b in basis:
                v -= (b @ v) * b
            nv = np.linalg.norm(v)
            if nv > 1e-12:
                v /= nv
                basis.append(v)
                out[:, j] = v
                continue
        out[:, j] = np.nan
    e = 0
    for j in range(k):
        if np.isnan(out[0, j]):
            while True:
                v = np.zeros(m)
                v[e] = 1.0
                e += 1
                for b in basis:
                    v -= (b @ v) * b
                nv = np.linalg.norm(v)
                if nv > 1e-8:
                    v /= nv
                    basis.append(v)
                    out[:, j] = v
                    break
    return out


def _svd_tall(A):
    eig = sym_eigen(A.T @ A)
    V = eig.eigenvectors
    AV = A @ V
    s = np.linalg.norm(AV, axis=0)
    order = np.argsort(-s, kind="stable")
    s, V, AV = s[order], V[:, order], AV[:, order]
    keep = s > 1e-14 * max(float(s[0]), 1e-300)
    U = np.zeros_like(AV)
    U[:, keep] = AV[:, keep] / s[keep]
    return _orthonormal_completion(U, keep), np.where(keep, s, 0.0), V


def svd(A):
    """Thin SVD ``A = U diag(s) V'`` via the eigenproblem of the smaller Gram matrix.

    Each right singular vector has its largest-magnitude entry positive.
    """
    A = as_matrix(A)
    m, n = A.shape
    if m < 1 or n < 1:
        raise ValueError("empty matrix")
    if m >= n:
        return _svd_tall(A)
    V, s, U = _svd_tall(A.T)
    signs = np.sign(V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, s, V * signs


class SeededRng:
    """Reproducible random stream identified by ``(seed, stream_id)``.

    Streams with different ids are derived through numpy's ``SeedSequence``
    spawn keys, so they do not overlap.
    """

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def uniform(self, n, low=0.0, high=1.0):
        return low + (high - low) * self._gen.random(n)

    def normal(self, n):
        return draw_normal(self, n)


def draw_normal(rng, n):
    """``n`` standard normal draws by the Box-Muller transform."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    m = (n + 1) // 2
    u1 = 1.0 - rng._gen.random(m)  # (0, 1], keeps log finite
    u2 = rng._gen.random(m)
    rad = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * m)
    out[0::2] = rad * np.cos(2.0 * np.pi * u2)
    out[1::2] = rad * np.sin(2.0 * np.pi * u2)
    return out[:n]
