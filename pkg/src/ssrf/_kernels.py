"""Hot numeric loops.

Every kernel exists twice: a scalar-loop version compiled with numba and a
vectorised numpy version with the same arithmetic. ``USE_NUMBA`` (see
``_accel``) decides which one the public names point to; both stay importable
so tests and ``benchmarks/`` can compare them.
"""
import math

import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit

NEWTON_PIVOT = 1e-10

# ---------------------------------------------------------------------------
# cyclic Jacobi eigensolver
# ---------------------------------------------------------------------------


def _jacobi_loops(A, tol, max_sweeps):
    n = A.shape[0]
    a = A.copy()
    v = np.eye(n)
    norm = 0.0
    for i in range(n):
        for j in range(n):
            norm += a[i, j] * a[i, j]
    norm = math.sqrt(norm)
    sweeps = 0
    if norm == 0.0:
        return np.zeros(n), v, 0
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += 2.0 * a[i, j] * a[i, j]
        if math.sqrt(off) < tol * norm:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, v, sweeps


def _jacobi_numpy(A, tol, max_sweeps):
    n = A.shape[0]
    a = np.array(A, dtype=np.float64, copy=True)
    v = np.eye(n)
    norm = math.sqrt(float(np.sum(a * a)))
    if norm == 0.0:
        return np.zeros(n), v, 0
    iu = np.triu_indices(n, 1)
    sweeps = 0
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * float(np.sum(a[iu] ** 2)))
        if off < tol * norm:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweeps


# ---------------------------------------------------------------------------
# coordinate descent for the (elastic-net) Lasso
# ---------------------------------------------------------------------------


def _active_newton_loops(Ft, yv, n_div, l2, thr, theta, resid, piv_tol):
    # Exact minimiser of the objective restricted to the current support and
    # sign pattern. Applied in place only when it keeps every sign; returns
    # the largest coefficient change (0.0 when rejected).
    r, n = Ft.shape
    m = 0
    for j in range(r):
        if theta[j] != 0.0:
            m += 1
    if m == 0 or m > n:
        return 0.0
    act = np.empty(m, dtype=np.int64)
    k = 0
    for j in range(r):
        if theta[j] != 0.0:
            act[k] = j
            k += 1
    G = np.empty((m, m))
    rhs = np.empty(m)
    for a in range(m):
        ja = act[a]
        for b in range(a + 1):
            jb = act[b]
            acc = 0.0
            for i in range(n):
                acc += Ft[ja, i] * Ft[jb, i]
            G[a, b] = acc / n_div
            G[b, a] = G[a, b]
        G[a, a] += 0.5 * l2
        acc = 0.0
        for i in range(n):
            acc += Ft[ja, i] * yv[i]
        sgn = 1.0 if theta[ja] > 0.0 else -1.0
        rhs[a] = acc / n_div - thr * sgn
    L = np.zeros((m, m))
    for j in range(m):
        d = G[j, j]
        for q in range(j):
            d -= L[j, q] * L[j, q]
        if not d > piv_tol * G[j, j]:
            return 0.0
        L[j, j] = math.sqrt(d)
        for i in range(j + 1, m):
            acc = G[i, j]
            for q in range(j):
                acc -= L[i, q] * L[j, q]
            L[i, j] = acc / L[j, j]
    z = np.empty(m)
    for j in range(m):
        acc = rhs[j]
        for q in range(j):
            acc -= L[j, q] * z[q]
        z[j] = acc / L[j, j]
    sol = np.empty(m)
    for j in range(m - 1, -1, -1):
        acc = z[j]
        for q in range(j + 1, m):
            acc -= L[q, j] * sol[q]
        sol[j] = acc / L[j, j]
    for a in range(m):
        if sol[a] * theta[act[a]] <= 0.0:
            return 0.0
    max_change = 0.0
    for a in range(m):
        j = act[a]
        delta = sol[a] - theta[j]
        if delta != 0.0:
            for i in range(n):
                resid[i] -= Ft[j, i] * delta
            theta[j] = sol[a]
            if abs(delta) > max_change:
                max_change = abs(delta)
    return max_change


_active_newton = njit(_active_newton_loops)


def _active_newton_numpy(Ft, yv, n_div, l2, thr, theta, resid, piv_tol):
    act = np.flatnonzero(theta)
    m = act.size
    if m == 0 or m > Ft.shape[1]:
        return 0.0
    FA = Ft[act]
    G = FA @ FA.T / n_div + 0.5 * l2 * np.eye(m)
    rhs = FA @ yv / n_div - thr * np.sign(theta[act])
    sol, ok = _batched_cholesky_solve(G[None], rhs[None], piv_tol)
    sol = sol[0]
    if not ok[0] or np.any(sol * theta[act] <= 0.0):
        return 0.0
    delta = sol - theta[act]
    resid -= delta @ FA
    theta[act] = sol
    return float(np.max(np.abs(delta)))


def _cd_enet_loops(F, yv, n_div, l1, l2, theta0, tol, max_sweeps):
    # objective: (1/n_div)*||yv - F theta||^2 + l1*||theta||_1 + (l2/2)*||theta||^2
    # Full sweeps alternate with sweeps over the nonzero coordinates only, each
    # of the latter followed by an exact solve on the current sign pattern.
    # Convergence is declared after a full sweep moves nothing by tol or more.
    n, r = F.shape
    Ft = np.ascontiguousarray(F.T)
    theta = theta0.copy()
    resid = yv.copy()
    for j in range(r):
        if theta[j] != 0.0:
            for i in range(n):
                resid[i] -= Ft[j, i] * theta[j]
    colsq = np.zeros(r)
    for j in range(r):
        acc = 0.0
        for i in range(n):
            acc += Ft[j, i] * Ft[j, i]
        colsq[j] = acc / n_div
    trace = np.empty(max_sweeps + 1)
    n_trace = 0
    converged = False
    sweeps = 0
    full = True
    thr = 0.5 * l1
    while True:
        rss = 0.0
        for i in range(n):
            rss += resid[i] * resid[i]
        pen1 = 0.0
        pen2 = 0.0
        for j in range(r):
            pen1 += abs(theta[j])
            pen2 += theta[j] * theta[j]
        trace[n_trace] = rss / n_div + l1 * pen1 + 0.5 * l2 * pen2
        n_trace += 1
        if converged or sweeps == max_sweeps:
            break
        sweeps += 1
        max_change = 0.0
        for j in range(r):
            if colsq[j] <= 0.0 or (not full and theta[j] == 0.0):
                continue
            old = theta[j]
            acc = 0.0
            for i in range(n):
                acc += Ft[j, i] * resid[i]
            z = acc / n_div + colsq[j] * old
            if z > thr:
                new = (z - thr) / (colsq[j] + 0.5 * l2)
            elif z < -thr:
                new = (z + thr) / (colsq[j] + 0.5 * l2)
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                for i in range(n):
                    resid[i] -= Ft[j, i] * delta
                theta[j] = new
                if abs(delta) > max_change:
                    max_change = abs(delta)
        if not full:
            step = _active_newton(Ft, yv, n_div, l2, thr, theta, resid, NEWTON_PIVOT)
            if step > max_change:
                max_change = step
        if max_change < tol:
            if full:
                converged = True
            full = True
        else:
            full = False
    return theta, sweeps, converged, trace[:n_trace]


def _cd_enet_numpy(F, yv, n_div, l1, l2, theta0, tol, max_sweeps):
    n, r = F.shape
    theta = theta0.astype(np.float64, copy=True)
    resid = yv - F @ theta if np.any(theta) else yv.astype(np.float64, copy=True)
    colsq = np.einsum("ij,ij->j", F, F) / n_div
    Ft = np.ascontiguousarray(F.T)
    trace = []
    converged = False
    sweeps = 0
    full = True
    thr = 0.5 * l1
    while True:
        trace.append(float(resid @ resid) / n_div + l1 * float(np.abs(theta).sum())
                     + 0.5 * l2 * float(theta @ theta))
        if converged or sweeps == max_sweeps:
            break
        sweeps += 1
        max_change = 0.0
        coords = range(r) if full else np.flatnonzero(theta)
        for j in coords:
            if colsq[j] <= 0.0:
                continue
            old = theta[j]
            z = float(Ft[j] @ resid) / n_div + colsq[j] * old
            if z > thr:
                new = (z - thr) / (colsq[j] + 0.5 * l2)
            elif z < -thr:
                new = (z + thr) / (colsq[j] + 0.5 * l2)
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                resid -= Ft[j] * delta
                theta[j] = new
                max_change = max(max_change, abs(delta))
        if not full:
            step = _active_newton_numpy(Ft, yv, n_div, l2, thr, theta, resid, NEWTON_PIVOT)
            max_change = max(max_change, step)
        if max_change < tol:
            converged = converged or full
            full = True
        else:
            full = False
    return theta, sweeps, converged, np.asarray(trace)


def _make_cv_path(cd):
    def cv_path(F, y, h, psi_grid, min_train, alpha, tol, max_sweeps):
        # Expanding-window one-step-ahead squared errors, one column per psi.
        T, r = F.shape
        n_orig = T - h - min_train + 1
        g = psi_grid.shape[0]
        errors = np.zeros((n_orig, g))
        for o in range(n_orig):
            s = min_train + o
            Fw = np.ascontiguousarray(F[: s - h])
            yw = y[h:s].copy()
            theta = np.zeros(r)
            for k in range(g):
                psi = psi_grid[k]
                theta, _, _, _ = cd(Fw, yw, float(s), psi * alpha, psi * (1.0 - alpha),
                                    theta, tol, max_sweeps)
                pred = 0.0
                for j in range(r):
                    pred += F[s - 1, j] * theta[j]
                e = y[s - 1 + h] - pred
                errors[o, k] = e * e
        return errors

    return cv_path


# ---------------------------------------------------------------------------
# batched lag regressions  y_{t+h} ~ 1 + x_t + ... + x_{t-q+1}
# ---------------------------------------------------------------------------


def _lag_ols_loops(X, y, h, qs, qmax, piv_tol):
    p, T = X.shape
    n = T - h - qmax + 1
    start = qmax - 1
    coef = np.zeros((p, qmax))
    intercept = np.zeros(p)
    rss = np.zeros(p)
    ok = np.ones(p, dtype=np.bool_)
    ybar = 0.0
    for t in range(n):
        ybar += y[start + t + h]
    ybar /= n
    tss = 0.0
    for t in range(n):
        d = y[start + t + h] - ybar
        tss += d * d
    for i in range(p):
        q = qs[i]
        m = q + 1
        A = np.zeros((m, m))
        b = np.zeros(m)
        for t in range(n):
            tt = start + t
            yt = y[tt + h]
            b[0] += yt
            A[0, 0] += 1.0
            for l in range(q):
                xl = X[i, tt - l]
                A[0, l + 1] += xl
                b[l + 1] += xl * yt
                for k in range(l, q):
                    A[l + 1, k + 1] += xl * X[i, tt - k]
        for a_ in range(m):
            for b_ in range(a_ + 1, m):
                A[b_, a_] = A[a_, b_]
        L = np.zeros((m, m))
        good = True
        for j in range(m):
            d = A[j, j]
            for k in range(j):
                d -= L[j, k] * L[j, k]
            if not (d > piv_tol * A[j, j]):
                good = False
                break
            L[j, j] = math.sqrt(d)
            for r_ in range(j + 1, m):
                acc = A[r_, j]
                for k in range(j):
                    acc -= L[r_, k] * L[j, k]
                L[r_, j] = acc / L[j, j]
        if not good:
            ok[i] = False
            continue
        z = np.zeros(m)
        for j in range(m):
            acc = b[j]
            for k in range(j):
                acc -= L[j, k] * z[k]
            z[j] = acc / L[j, j]
        beta = np.zeros(m)
        for j in range(m - 1, -1, -1):
            acc = z[j]
            for k in range(j + 1, m):
                acc -= L[k, j] * beta[k]
            beta[j] = acc / L[j, j]
        intercept[i] = beta[0]
        for l in range(q):
            coef[i, l] = beta[l + 1]
        acc = 0.0
        for t in range(n):
            tt = start + t
            fit = beta[0]
            for l in range(q):
                fit += beta[l + 1] * X[i, tt - l]
            e = y[tt + h] - fit
            acc += e * e
        rss[i] = acc
    return coef, intercept, rss, tss, ok


def _batched_cholesky_solve(A, b, piv_tol):
    B, m, _ = A.shape
    L = np.zeros_like(A)
    ok = np.ones(B, dtype=bool)
    for j in range(m):
        d = A[:, j, j] - np.sum(L[:, j, :j] ** 2, axis=1)
        ok &= d > piv_tol * A[:, j, j]
        L[:, j, j] = np.sqrt(np.where(ok, d, 1.0))
        for r_ in range(j + 1, m):
            L[:, r_, j] = (A[:, r_, j] - np.sum(L[:, r_, :j] * L[:, j, :j], axis=1)) / L[:, j, j]
    z = np.zeros((B, m))
    for j in range(m):
        z[:, j] = (b[:, j] - np.sum(L[:, j, :j] * z[:, :j], axis=1)) / L[:, j, j]
    beta = np.zeros((B, m))
    for j in range(m - 1, -1, -1):
        beta[:, j] = (z[:, j] - np.sum(L[:, j + 1:, j] * beta[:, j + 1:], axis=1)) / L[:, j, j]
    return beta, ok


def _lag_ols_numpy(X, y, h, qs, qmax, piv_tol):
    p, T = X.shape
    n = T - h - qmax + 1
    start = qmax - 1
    yt = y[start + h: start + h + n]
    ybar = yt.sum() / n
    tss = float(np.sum((yt - ybar) ** 2))
    coef = np.zeros((p, qmax))
    intercept = np.zeros(p)
    rss = np.zeros(p)
    ok = np.ones(p, dtype=bool)
    for q in np.unique(qs):
        rows = np.flatnonzero(qs == q)
        m = int(q) + 1
        Z = np.ones((rows.size, n, m))
        for l in range(int(q)):
            Z[:, :, l + 1] = X[rows, start - l: start - l + n]
        A = np.einsum("pnm,pnk->pmk", Z, Z)
        b = np.einsum("pnm,n->pm", Z, yt)
        beta, good = _batched_cholesky_solve(A, b, piv_tol)
        resid = yt[None, :] - np.einsum("pnm,pm->pn", Z, beta)
        intercept[rows] = beta[:, 0]
        coef[rows, : int(q)] = beta[:, 1:]
        rss[rows] = np.sum(resid ** 2, axis=1)
        ok[rows] = good
    coef[~ok] = 0.0
    intercept[~ok] = 0.0
    rss[~ok] = 0.0
    return coef, intercept, rss, tss, ok


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    jacobi_numba = njit(_jacobi_loops)
    cd_enet_numba = njit(_cd_enet_loops)
    cv_path_numba = njit(_make_cv_path(cd_enet_numba))
    lag_ols_numba = njit(_lag_ols_loops)
else:  # pragma: no cover
    jacobi_numba = cd_enet_numba = cv_path_numba = lag_ols_numba = None

jacobi_numpy = _jacobi_numpy
cd_enet_numpy = _cd_enet_numpy
cv_path_numpy = _make_cv_path(_cd_enet_numpy)
lag_ols_numpy = _lag_ols_numpy

if USE_NUMBA:
    jacobi = jacobi_numba
    cd_enet = cd_enet_numba
    cv_path = cv_path_numba
    lag_ols = lag_ols_numba
else:
    jacobi = jacobi_numpy
    cd_enet = cd_enet_numpy
    cv_path = cv_path_numpy
    lag_ols = lag_ols_numpy
