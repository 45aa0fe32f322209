"""Dictionary learning and sparse coding for discrete densities.

Each data density ``f_i`` is reconstructed as the mixture
``f_hat_i = sum_j w_ij g_j`` of dictionary atoms, with the code row
``w_i`` on the probability simplex, and

    E = sum_i D(f_i, f_hat_i),   D = KL or squared Hellinger.

Nothing in ``E`` rewards sparsity; zero weights arise from the geometry
of the divergence. Codes and atoms are updated alternately with
accelerated projected gradient steps.
"""

import logging
import time
import warnings

import numpy as np
from scipy.special import xlogy

from .config import FitReport, KktReport, SdlConfig
from .density import _kl_rows, check_density_set, smooth_density
from .errors import DimensionError, InvariantError, NumericalError
from .kmeans import lloyd
from .simplex import NesterovRows, accelerated_projected_descent, floor_simplex_project

log = logging.getLogger(__name__)

ROW_TOL = 1e-8


def check_codes(W, n=None, r=None):
    """Validate a row-stochastic code matrix."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2:
        raise InvariantError(f"code matrix must be 2-D, got shape {W.shape}")
    if (n is not None and W.shape[0] != n) or (r is not None and W.shape[1] != r):
        raise DimensionError(f"code matrix has shape {W.shape}, expected ({n}, {r})")
    if not np.all(np.isfinite(W)) or np.any(W < 0):
        raise InvariantError("code matrix has negative or non-finite entries")
    bad = np.flatnonzero(np.abs(W.sum(axis=1) - 1.0) > ROW_TOL)
    if bad.size:
        raise InvariantError(f"code rows {bad[:5].tolist()} do not sum to 1")
    return W


def _check_problem(F, G, W=None):
    F = check_density_set(F, "data")
    G = check_density_set(G, "atoms")
    if F.shape[1] != G.shape[1]:
        raise DimensionError(f"data have {F.shape[1]} bins but atoms have {G.shape[1]}")
    if W is not None:
        W = check_codes(W, F.shape[0], G.shape[0])
    return F, G, W


def _ratio(num, den):
    # num / den with 0/0 = 0; a positive numerator over a zero bin is fatal
    if np.any((den <= 0) & (num > 0)):
        raise NumericalError("reconstruction has an empty bin where the data has mass; "
                             "smooth the atoms first")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(num > 0, num / den, 0.0)


def row_objective(F, G, W, divergence="kl"):
    """Per-sample divergences ``D(f_i, W_i G)``, shape ``(N,)``."""
    R = W @ G
    if divergence == "kl":
        return np.maximum(_kl_rows(F, R), 0.0)
    return np.maximum(1.0 - np.sum(np.sqrt(F * np.maximum(R, 0.0)), axis=1), 0.0)


def objective_density(F, G, W, divergence="kl"):
    """Total reconstruction divergence ``sum_i D(f_i, sum_j w_ij g_j)``."""
    F, G, W = _check_problem(F, G, W)
    return float(row_objective(F, G, W, divergence).sum())


def _code_grad(F, G, W, divergence):
    R = W @ G
    if divergence == "kl":
        return -_ratio(F, R) @ G.T
    return -0.5 * _ratio(np.sqrt(F), np.sqrt(R)) @ G.T


def _atom_grad(F, G, W, divergence):
    R = W @ G
    if divergence == "kl":
        return -W.T @ _ratio(F, R)
    return -0.5 * W.T @ _ratio(np.sqrt(F), np.sqrt(R))


def code_gradient(F, G, W, divergence="kl"):
    """Gradient of the objective in the codes, shape ``(N, r)``.

    KL: ``-sum_x f_i(x) g_j(x) / f_hat_i(x)``; Hellinger:
    ``-1/2 sum_x sqrt(f_i(x)) g_j(x) / sqrt(f_hat_i(x))``.
    """
    F, G, W = _check_problem(F, G, W)
    return _code_grad(F, G, W, divergence)


def atom_gradient(F, G, W, divergence="kl"):
    """Gradient of the objective in the atoms, shape ``(r, k)``.

    KL: ``-sum_i w_ij f_i(x) / f_hat_i(x)``.
    """
    F, G, W = _check_problem(F, G, W)
    return _atom_grad(F, G, W, divergence)


def pair_divergences(F, G, divergence="kl"):
    """Matrix of ``D(f_i, g_j)``, shape ``(N, r)``."""
    if divergence == "kl":
        return _kl_rows(F[:, None, :], G[None, :, :])
    return np.maximum(1.0 - np.sqrt(F) @ np.sqrt(G).T, 0.0)


def random_codes(n, r, rng):
    """Uniform random nonnegative rows normalized to sum to one."""
    W = rng.random((n, r))
    W[W.sum(axis=1) == 0] = 1.0
    return W / W.sum(axis=1, keepdims=True)


def density_kmeans(F, k, seed=0, max_iters=50, eps=1e-10):
    """k-means on densities with KL assignment and mixture (mean) centroids.

    Divergences are taken against smoothed centroids so that empty bins
    do not make every distance infinite.
    """
    F = check_density_set(F)

    def divergence(points, centers):
        return _kl_rows(points[:, None, :], smooth_density(centers, eps)[None, :, :])

    def center(idx):
        return F[idx].mean(axis=0)

    return lloyd(F, k, divergence, center, seed=seed, max_iters=max_iters)


def _atom_floor(k, eps):
    return eps / (1.0 + k * eps)


def _prepare_atoms(G, eps):
    G = np.asarray(G, dtype=float)
    floor = _atom_floor(G.shape[1], eps)
    if np.min(G) < floor:
        G = smooth_density(G, eps)
    return floor_simplex_project(G, floor)


def sparse_code_density(F, G, config=None, *, init=None, callback=None, return_result=False):
    """Codes of ``F`` over fixed atoms ``G``.

    Every row is an independent convex problem on the simplex, solved by
    Nesterov-accelerated projected gradient until its objective changes by
    less than ``config.code_tol`` (or ``config.code_max_iters`` is hit).
    The start point is random and normalized, drawn from ``config.seed``.

    Returns
    -------
    W : ndarray, shape (N, r)
    result : DescentResult
        Only when ``return_result`` is true.
    """
    cfg = (config or SdlConfig(num_atoms=np.shape(G)[0])).resolved("density")
    F, G, _ = _check_problem(F, G)
    G = _prepare_atoms(G, cfg.smoothing_eps)
    n, r = F.shape[0], G.shape[0]
    div = cfg.divergence
    if init is None:
        W0 = random_codes(n, r, np.random.default_rng(cfg.seed))
    else:
        W0 = check_codes(init, n, r).copy()

    def fun(Wr, idx):
        return row_objective(F[idx], G, Wr, div)

    def grad(Wr, idx):
        return _code_grad(F[idx], G, Wr, div)

    res = accelerated_projected_descent(fun, grad, W0, eta=cfg.eta, tol=cfg.code_tol,
                                        max_iters=cfg.code_max_iters,
                                        backtracking=cfg.backtracking, callback=callback)
    if not res.converged:
        log.info("sparse coding stopped at %d iterations with %d unconverged rows",
                 res.iterations, int((~res.row_converged).sum()))
    return (res.x, res) if return_result else res.x


def learn_density(F, config=None, *, callback=None):
    """Learn a density dictionary and codes by alternating accelerated steps.

    Atoms start from KL k-means centroids (smoothed), codes from random
    normalized rows. Every outer iteration re-codes all samples over the
    current atoms (warm-started accelerated projected gradient) and takes
    one accelerated projected step on the atoms (kept on the simplex with a
    small positive floor), then stops once ``|E - E_old| < tol``. A final
    coding pass over the learned atoms, identical to
    :func:`sparse_code_density`, produces the returned codes.

    Returns
    -------
    atoms : ndarray, shape (r, k)
    codes : ndarray, shape (N, r)
    report : FitReport
    """
    t0 = time.perf_counter()
    cfg = (config or SdlConfig()).resolved("density")
    F = check_density_set(F, "data")
    n, k = F.shape
    r = int(cfg.num_atoms)
    if n < r:
        warnings.warn(f"fewer samples ({n}) than atoms ({r})", RuntimeWarning, stacklevel=2)
    div = cfg.divergence
    floor = _atom_floor(k, cfg.smoothing_eps)
    project_atoms = lambda A: floor_simplex_project(A, floor)  # noqa: E731

    kr = min(r, n)
    centers, _, _ = density_kmeans(F, kr, seed=cfg.seed, max_iters=cfg.kmeans_iters,
                                   eps=cfg.smoothing_eps)
    if kr < r:
        extra = np.random.default_rng(cfg.seed).dirichlet(np.ones(k), r - kr)
        centers = np.vstack([centers, extra])
    G = _prepare_atoms(centers, cfg.smoothing_eps)
    W = random_codes(n, r, np.random.default_rng(cfg.seed))

    gstate = NesterovRows(G[None], cfg.eta, project=project_atoms, backtracking=cfg.backtracking)

    rows = row_objective(F, G, W, div)
    E = float(rows.sum())
    trace = [E]
    bound = [float(np.sum(W * pair_divergences(F, G, div)))]
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        G = gstate.y[0]

        def fun_w(Wr, idx):
            return row_objective(F[idx], G, Wr, div)

        def grad_w(Wr, idx):
            return _code_grad(F[idx], G, Wr, div)

        W = accelerated_projected_descent(fun_w, grad_w, W, eta=cfg.eta, tol=cfg.code_tol,
                                          max_iters=cfg.inner_iters,
                                          backtracking=cfg.backtracking).x

        def fun_g(Gs, idx):
            return np.array([row_objective(F, g, W, div).sum() for g in Gs])

        def grad_g(Gs, idx):
            return np.stack([_atom_grad(F, g, W, div) for g in Gs])

        gstate.iterate(fun_g, grad_g, fy=[fun_g(gstate.y, None)[0]])
        G = gstate.y[0]
        rows = row_objective(F, G, W, div)
        E_old, E = E, float(rows.sum())
        trace.append(E)
        bound.append(float(np.sum(W * pair_divergences(F, G, div))))
        if callback is not None:
            callback(it, G, W, E)
        if abs(E - E_old) < cfg.tol:
            converged = True
            break

    G = gstate.y[0].copy()
    W = sparse_code_density(F, G, cfg)
    E_final = float(row_objective(F, G, W, div).sum())
    report = FitReport(objective_trace=trace, objective=E_final,
                       sparsity=sparsity_measure(W, cfg.sparsity_threshold),
                       iterations=it, wall_time=time.perf_counter() - t0,
                       converged=converged, bound_trace=bound)
    return G, W, report


def kkt_report(F, G, W, threshold=0.01, divergence="kl"):
    """Optimality diagnostics of codes ``W`` for fixed atoms ``G``.

    At a minimizer over the simplex every partial derivative
    ``dE/dw_ij`` of an active atom equals a common value ``r_i`` and no
    inactive one falls below it. ``spread`` and ``slack`` measure how far
    ``W`` is from that structure; samples with no weight above
    ``threshold`` are flagged ``degenerate``.
    """
    F, G, W = _check_problem(F, G, W)
    grad = _code_grad(F, G, W, divergence)
    active = W > threshold
    degenerate = ~active.any(axis=1)
    counts = np.maximum(active.sum(axis=1), 1)
    dual = np.where(active, grad, 0.0).sum(axis=1) / counts
    dev = grad - dual[:, None]
    spread = np.where(active, np.abs(dev), 0.0).max(axis=1)
    slack = np.where(active, np.inf, dev).min(axis=1)
    pair = pair_divergences(F, G, divergence)
    surrogate = np.sum(W * pair, axis=1)
    E = float(row_objective(F, G, W, divergence).sum())
    return KktReport(dual=dual, spread=spread, slack=slack, active=active,
                     degenerate=degenerate, pair_divergence=pair, surrogate=surrogate,
                     objective=E, bound=float(surrogate.sum()))


def sparsity_measure(W, threshold=0.01):
    """Percentage of code entries at or below ``threshold``."""
    W = np.asarray(W, dtype=float)
    return float(100.0 * np.count_nonzero(W <= threshold) / W.size)


def reconstruct_density(G, W):
    """Reconstructed densities ``W @ G``."""
    return np.asarray(W, dtype=float) @ np.asarray(G, dtype=float)
