"""Slow, independent reference solvers used to validate the fast paths.

Nothing here shares code with the solvers it checks: the simplex
projection is a plain loop, the KL-center comes from generic projected
gradient with backtracking, and the SPD center from Riemannian gradient
descent with step halving.
"""

import numpy as np


def project_simplex_loop(v):
    """Euclidean projection onto the simplex by the sorted-threshold rule, one vector."""
    v = np.asarray(v, dtype=float)
    u = sorted(v, reverse=True)
    total = 0.0
    tau = 0.0
    for i, ui in enumerate(u, 1):
        total += ui
        t = (total - 1.0) / i
        if ui - t > 0:
            tau = t
    return np.maximum(v - tau, 0.0)


def weighted_kl_minimizer(F, alpha, iters=20000, tol=1e-15):
    """Minimize ``sum_i alpha_i KL(f_i, f)`` over the simplex numerically."""
    F = np.asarray(F, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    k = F.shape[1]

    def obj(f):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(F > 0, F * (np.log(F) - np.log(f)), 0.0)
        return float(alpha @ t.sum(axis=1))

    f = np.full(k, 1.0 / k)
    fv = obj(f)
    step = 1.0
    for _ in range(iters):
        g = -(alpha @ F) / f
        while True:
            cand = project_simplex_loop(f - step * g)
            cand = np.maximum(cand, 1e-300)
            cv = obj(cand)
            if cv <= fv + 1e-4 * g @ (cand - f):
                break
            step *= 0.5
            if step < 1e-30:
                return f
        move = np.abs(cand - f).sum()
        f, fv = cand, cv
        step *= 2.0
        if move < tol:
            break
    return f


def _sqrtm(X):
    w, V = np.linalg.eigh(X)
    return (V * np.sqrt(w)) @ V.T


def _expm_sym(V):
    w, Q = np.linalg.eigh((V + V.T) / 2)
    return (Q * np.exp(w)) @ Q.T


def weighted_j(Xs, w, M):
    """``sum_i w_i J(X_i, M)`` by direct evaluation."""
    n = M.shape[0]
    total = 0.0
    Minv = np.linalg.inv(M)
    for wi, X in zip(w, Xs):
        total += wi * 0.25 * (np.trace(np.linalg.solve(X, M)) + np.trace(Minv @ X) - 2 * n)
    return total


def spd_center_descent(Xs, w, iters=5000, tol=1e-9):
    """Minimize ``sum_i w_i J(X_i, M)`` by Riemannian gradient descent.

    Starts from the weighted arithmetic mean; the Riemannian gradient
    under the affine-invariant metric is ``(M B M - A) / 4``.
    """
    Xs = np.asarray(Xs, dtype=float)
    w = np.asarray(w, dtype=float)
    A = np.einsum("i,iab->ab", w, Xs)
    B = np.einsum("i,iab->ab", w, np.linalg.inv(Xs))
    M = A.copy()
    fv = weighted_j(Xs, w, M)
    step = 1.0
    for _ in range(iters):
        G = 0.25 * (M @ B @ M - A)
        s = _sqrtm(M)
        si = np.linalg.inv(s)
        gn = np.sum((si @ G @ si) ** 2)
        if gn < tol ** 2:
            break
        while True:
            cand = s @ _expm_sym(-step * si @ G @ si) @ s
            cand = (cand + cand.T) / 2
            cv = weighted_j(Xs, w, cand)
            if cv <= fv - 1e-4 * step * gn:
                break
            step *= 0.5
            if step < 1e-12:
                # no representable decrease left
                return M
        M, fv = cand, cv
        step *= 2.0
    return M


def central_difference(fun, x, direction, h):
    """Directional derivative of ``fun`` at ``x`` along ``direction``."""
    return (fun(x + h * direction) - fun(x - h * direction)) / (2 * h)
