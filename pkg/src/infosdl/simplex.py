"""Simplex projections and a batched Nesterov-accelerated projected descent.

The descent routine solves many independent problems at once: the leading
axis of the iterate indexes the problem ("row"), each row has its own step
size, momentum state and stopping flag, and all trailing axes belong to
the row's variable.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError


def _project_sum(v, total):
    # sort-and-threshold projection onto {x >= 0, sum(x) = total}, last axis
    k = v.shape[-1]
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - total
    ind = np.arange(1, k + 1)
    cond = u - css / ind > 0
    rho = k - 1 - np.argmax(cond[..., ::-1], axis=-1)
    tau = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1)
    return np.maximum(v - tau, 0.0)


def simplex_project(v):
    """Euclidean projection onto the probability simplex.

    Parameters
    ----------
    v : array_like, shape (..., k)
        Points to project; the last axis is projected, leading axes are
        treated as a batch.

    Returns
    -------
    ndarray, shape (..., k)
        Nonnegative rows summing to one. Rows that already lie on the
        simplex are returned unchanged.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim == 0 or v.shape[-1] == 0:
        raise DimensionError("cannot project an empty vector onto the simplex")
    if not np.all(np.isfinite(v)):
        raise ParameterError("simplex_project requires finite entries")
    out = _project_sum(v, 1.0)
    feasible = np.all(v >= 0, axis=-1) & (np.abs(v.sum(axis=-1) - 1.0) <= 1e-15 * v.shape[-1])
    if np.any(feasible):
        out[feasible] = v[feasible]
    return out


def floor_simplex_project(v, floor):
    """Project onto the simplex restricted to entries ``>= floor``.

    Used to keep dictionary atoms strictly positive so that KL terms
    against them stay finite.
    """
    v = np.asarray(v, dtype=float)
    k = v.shape[-1]
    if floor < 0 or floor * k >= 1:
        raise ParameterError(f"floor={floor} infeasible for {k} bins")
    if floor == 0:
        return simplex_project(v)
    return floor + _project_sum(v - floor, 1.0 - k * floor)


def nesterov_lambda(lam):
    """Next momentum parameter, ``(1 + sqrt(1 + 4 lam^2)) / 2``."""
    return 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * np.square(lam)))


def nesterov_gamma(lam, lam_next):
    """Interpolation factor ``(1 - lam) / lam_next`` (nonpositive)."""
    return (1.0 - lam) / lam_next


_ROUNDOFF = 8 * np.finfo(float).eps


def _rowdot(a, b):
    return np.sum((a * b).reshape(a.shape[0], -1), axis=1)


def _rownorm(a):
    return np.sqrt(_rowdot(a, a))


def _bshape(x, like):
    return x.reshape((-1,) + (1,) * (like.ndim - 1))


def projected_step(fun, idx, x, fx, g, eta, project, backtracking=True,
                   armijo=1e-4, max_halvings=60):
    """One projected gradient step per row, with optional backtracking.

    A step ``y = P(x - eta g)`` is accepted when it satisfies both the
    quadratic upper bound ``f(y) <= f(x) + g.(y-x) + |y-x|^2 / (2 eta)``
    and the Armijo condition ``f(y) <= f(x) + armijo * g.(y-x)``; otherwise
    ``eta`` is halved.

    Returns the candidate rows, their objective values, the accepted step
    sizes and a flag marking rows that needed no halving. Rows whose step
    collapses below every usable size stay where they are.
    """
    eta = np.array(eta, dtype=float)
    eta0 = eta.copy()
    y = project(x - _bshape(eta, x) * g)
    fy = fun(y, idx)
    if not backtracking:
        return y, fy, eta, np.ones(len(idx), dtype=bool)
    first = np.ones(len(idx), dtype=bool)
    # roundoff allowance so steps below objective resolution are not rejected
    slack = _ROUNDOFF * np.abs(fx)

    def rejected(y, fy, fx, g, x, eta, slack):
        d = y - x
        gd = _rowdot(g, d)
        quad = fy <= fx + gd + _rowdot(d, d) / (2.0 * eta) + slack
        return ~(quad & (fy <= fx + armijo * gd + slack))

    for _ in range(max_halvings):
        bad = rejected(y, fy, fx, g, x, eta, slack)
        if not bad.any():
            break
        first[bad] = False
        eta[bad] *= 0.5
        b = np.flatnonzero(bad)
        yb = project(x[b] - _bshape(eta[b], x[b]) * g[b])
        y[b] = yb
        fy[b] = fun(yb, idx[b])
    else:
        bad = rejected(y, fy, fx, g, x, eta, slack)
        y[bad] = x[bad]
        fy[bad] = fx[bad]
        eta[bad] = eta0[bad]
    return y, fy, eta, first


class NesterovRows:
    """Momentum state for a batch of independent projected-descent problems.

    Holds the accepted points ``y`` (one per row), the extrapolated points
    ``x`` where gradients are taken, the momentum parameters ``lam`` and
    the per-row step sizes.
    """

    def __init__(self, x0, eta, project=simplex_project, backtracking=True,
                 armijo=1e-4, growth=2.0):
        self.y = np.array(x0, dtype=float)
        self.x = self.y.copy()
        n = self.y.shape[0]
        self.lam = np.ones(n)
        self.step = np.full(n, float(eta))
        self.eta_max = float(eta) * 1e8
        self.project = project
        self.backtracking = backtracking
        self.armijo = armijo
        self.growth = growth

    def iterate(self, fun, grad, idx=None, fy=None):
        """Advance rows ``idx`` by one accelerated step.

        ``fy`` is the objective at the current accepted points of those rows
        (computed when omitted). Returns the new accepted values. With
        backtracking no row ends worse than it started.
        """
        if idx is None:
            idx = np.arange(self.y.shape[0])
        xa, ya = self.x[idx], self.y[idx]
        fya = fun(ya, idx) if fy is None else np.asarray(fy, dtype=float)
        fxa = fun(xa, idx)
        ga = grad(xa, idx)
        cand, fc, st, first = projected_step(fun, idx, xa, fxa, ga, self.step[idx],
                                             self.project, self.backtracking, self.armijo)
        lam_a = self.lam[idx]
        worse = ~(fc <= fya + _ROUNDOFF * np.abs(fya))
        if worse.any():
            w = np.flatnonzero(worse)
            gw = grad(ya[w], idx[w])
            c2, f2, s2, fr2 = projected_step(fun, idx[w], ya[w], fya[w], gw, self.step[idx[w]],
                                             self.project, self.backtracking, self.armijo)
            cand[w], fc[w], st[w], first[w] = c2, f2, s2, fr2
            lam_a[w] = 1.0
        # adaptive restart: momentum pointing uphill is dropped
        uphill = _rowdot(ga, cand - ya) > 0
        lam_a[uphill] = 1.0
        lam_next = nesterov_lambda(lam_a)
        gamma = _bshape(nesterov_gamma(lam_a, lam_next), cand)
        self.x[idx] = self.project((1.0 - gamma) * cand + gamma * ya)
        self.y[idx] = cand
        self.lam[idx] = lam_next
        if self.backtracking:
            st = np.where(first, np.minimum(st * self.growth, self.eta_max), st)
        self.step[idx] = st
        return fc


@dataclass
class DescentResult:
    """Outcome of :func:`accelerated_projected_descent`."""

    x: np.ndarray
    values: np.ndarray
    trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    row_converged: np.ndarray = None


def accelerated_projected_descent(fun, grad, x0, *, eta, tol, max_iters,
                                  project=simplex_project, backtracking=True,
                                  armijo=1e-4, growth=2.0, stop="change",
                                  callback=None):
    """Minimize independent row objectives over a convex set.

    Uses the momentum schedule ``lam <- (1 + sqrt(1 + 4 lam^2)) / 2`` and
    ``gamma = (1 - lam) / lam_next``; the new extrapolated point is
    ``(1 - gamma) * y_new + gamma * y_old``, projected back onto the
    feasible set. A row whose gradient step would increase its objective
    has its momentum reset and steps from its last accepted point instead;
    momentum is also reset whenever the last move points uphill.

    Parameters
    ----------
    fun : callable
        ``fun(x_rows, idx) -> (len(idx),)`` objective of the selected rows.
    grad : callable
        ``grad(x_rows, idx)`` gradient with the shape of ``x_rows``.
    x0 : ndarray, shape (N, ...)
        Feasible starting point.
    eta : float
        Initial step size; halved by backtracking and allowed to grow by
        ``growth`` after a step that needed no halving.
    tol : float
        ``stop="change"``: a row stops once its objective changes by less
        than ``tol`` and a plain projected step from its accepted point
        promises a first-order decrease below ``tol`` as well. ``stop="gradient"``: once its gradient mapping norm
        ``||y - P(y - g(y))||`` is at most ``tol``.
    max_iters : int
    callback : callable, optional
        Called as ``callback(y, iteration)`` after every iteration.
    """
    if eta <= 0 or tol <= 0:
        raise ParameterError("eta and tol must be positive")
    state = NesterovRows(x0, eta, project, backtracking, armijo, growth)
    n = state.y.shape[0]
    fy = fun(state.y, np.arange(n))
    active = np.ones(n, dtype=bool)
    trace = [float(fy.sum())]
    it = 0
    for it in range(1, max_iters + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            it -= 1
            break
        old = fy[idx]
        new = state.iterate(fun, grad, idx, old)
        fy[idx] = new
        if stop == "gradient":
            yi = state.y[idx]
            done = _rownorm(yi - project(yi - grad(yi, idx))) <= tol
        else:
            done = np.abs(old - new) < tol
            if done.any():
                # a zero change can also come from momentum landing back on the
                # previous point; confirm with the decrease a plain step promises
                c = idx[done]
                yc = state.y[c]
                gc = grad(yc, c)
                d = project(yc - _bshape(state.step[c], yc) * gc) - yc
                done[done] = -_rowdot(gc, d) < tol
        active[idx[done]] = False
        trace.append(float(fy.sum()))
        if callback is not None:
            callback(state.y, it)
    return DescentResult(x=state.y, values=fy, trace=trace, iterations=it,
                         converged=not active.any(), row_converged=~active)
