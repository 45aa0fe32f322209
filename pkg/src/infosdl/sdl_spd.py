"""Dictionary learning and sparse coding on SPD matrices.

Each data matrix ``X_i`` is reconstructed as the symmetrized weighted
KL-center of the atoms ``C_j`` under its code row ``w_i``,

    X_hat_i = B_i^{-1/2} (B_i^{1/2} A_i B_i^{1/2})^{1/2} B_i^{-1/2},
    A_i = sum_j w_ij C_j,   B_i = sum_j w_ij C_j^{-1},

and the objective is ``E = sum_i J(X_i, X_hat_i)`` with ``J`` the
J-divergence. Gradients are exact: the center solves ``M B M = A``, so
its differential follows from one Sylvester equation per sample, which
the eigenbasis of ``M B`` diagonalizes.

Codes take accelerated projected steps on the simplex. Atoms take
Riemannian steps ``Exp_C(-eta grad)`` under the affine-invariant metric,
with momentum carried by ``Exp_{Y_new}(gamma Log_{Y_new} Y_old)``.
"""

import logging
import time
import warnings

import numpy as np

from .config import KktReport, SdlConfig, SpdFitReport
from .errors import DimensionError, NumericalError
from .sdl_density import check_codes, random_codes, sparsity_measure
from .simplex import _ROUNDOFF, accelerated_projected_descent, nesterov_gamma, \
    nesterov_lambda
from .spd import (COND_LIMIT, CenterParts, airm_distance, check_spd_set, exp_map, log_map,
                  spd_inv, spd_kmeans, sym)

log = logging.getLogger(__name__)

FD_MAX_DIM = 3


def _check_problem(X, C, W=None):
    X = check_spd_set(X, "data")
    C = check_spd_set(C, "atoms")
    if X.shape[-1] != C.shape[-1]:
        raise DimensionError(f"data are {X.shape[-1]}x{X.shape[-1]} but atoms are "
                             f"{C.shape[-1]}x{C.shape[-1]}")
    if W is not None:
        W = check_codes(W, X.shape[0], C.shape[0])
    return X, C, W


def _j_rows(X, Xinv, M, Minv):
    n = X.shape[-1]
    t = np.einsum("...ab,...ab->...", Xinv, M) + np.einsum("...ab,...ab->...", Minv, X)
    return np.maximum(0.25 * (t - 2 * n), 0.0)


def reconstruct_spd(C, w):
    """Symmetrized weighted KL-center of the atoms for code row(s) ``w``.

    ``w`` may be one row of length ``r`` or a stack ``(N, r)``; the result
    has shape ``(n, n)`` or ``(N, n, n)`` accordingly.
    """
    C = check_spd_set(C, "atoms")
    w = np.asarray(w, dtype=float)
    W = check_codes(np.atleast_2d(w), None, C.shape[0])
    M = CenterParts(C, spd_inv(C), W).M
    return M[0] if w.ndim == 1 else M


def row_objective(X, Xinv, C, Cinv, W):
    """Per-sample ``J(X_i, X_hat_i)`` for precomputed inverses."""
    P = CenterParts(C, Cinv, W)
    return _j_rows(X, Xinv, P.M, P.Minv)


def objective_spd(X, C, W):
    """Total reconstruction J-divergence ``sum_i J(X_i, M_KL(C, w_i))``."""
    X, C, W = _check_problem(X, C, W)
    return float(row_objective(X, spd_inv(X), C, spd_inv(C), W).sum())


def _adjoints(X, Xinv, C, Cinv, W):
    # Z_i with tr(G_i dM_i) = tr(Z_i dA_i) - tr(Y_i dB_i), Y_i = M_i Z_i M_i
    P = CenterParts(C, Cinv, W)
    G = 0.25 * (Xinv - P.Minv @ X @ P.Minv)
    Z = P.adjoint(G)
    Y = sym(P.M @ Z @ P.M)
    return P, Z, Y


def _code_grad(X, Xinv, C, Cinv, W):
    _, Z, Y = _adjoints(X, Xinv, C, Cinv, W)
    return np.einsum("iab,jab->ij", Z, C) - np.einsum("iab,jab->ij", Y, Cinv)


def _code_grad_fd(X, Xinv, C, Cinv, W, h=1e-6):
    # central differences in each weight; the center is scale-invariant in
    # w, so unnormalized perturbations are well defined
    g = np.empty_like(W)
    for j in range(W.shape[1]):
        e = np.zeros(W.shape[1])
        e[j] = h
        up = row_objective(X, Xinv, C, Cinv, W + e)
        dn = row_objective(X, Xinv, C, Cinv, W - e)
        g[:, j] = (up - dn) / (2 * h)
    return g


def _atom_euclid_grad(X, Xinv, C, Cinv, W):
    _, Z, Y = _adjoints(X, Xinv, C, Cinv, W)
    WZ = np.einsum("ij,iab->jab", W, Z)
    WY = np.einsum("ij,iab->jab", W, Y)
    return sym(WZ + Cinv @ WY @ Cinv)


def _warn_conditioning(M):
    w = np.linalg.eigvalsh(M)
    if np.any(w[..., 0] * COND_LIMIT < w[..., -1]):
        warnings.warn(f"reconstruction is ill-conditioned (condition number > {COND_LIMIT:g})",
                      RuntimeWarning, stacklevel=3)


def weight_gradient_spd(X, C, W, method="analytic", h=1e-6):
    """Gradient of the objective in the codes, shape ``(N, r)``.

    ``dE/dw_ij = tr(Z_i C_j) - tr(M_i Z_i M_i C_j^{-1})`` where ``Z_i``
    solves ``(M_i B_i)^T Z + Z (M_i B_i) = (X_i^{-1} - M_i^{-1} X_i M_i^{-1}) / 4``.
    ``method="fd"`` uses central differences instead (matrices up to 3x3).
    """
    X, C, W = _check_problem(X, C, W)
    Xinv, Cinv = spd_inv(X), spd_inv(C)
    _warn_conditioning(CenterParts(C, Cinv, W).M)
    if method == "fd":
        if X.shape[-1] > FD_MAX_DIM:
            raise DimensionError(f"finite-difference gradients are limited to n <= {FD_MAX_DIM}")
        return _code_grad_fd(X, Xinv, C, Cinv, W, h)
    return _code_grad(X, Xinv, C, Cinv, W)


def atom_euclidean_gradient(X, C, W):
    """Symmetric Euclidean gradient of the objective in every atom, shape ``(r, n, n)``."""
    X, C, W = _check_problem(X, C, W)
    return _atom_euclid_grad(X, spd_inv(X), C, spd_inv(C), W)


def atom_riemannian_gradient(X, C, W, j=None):
    """Affine-invariant Riemannian gradient ``C_j (grad_euc E) C_j``.

    Returns the gradient of atom ``j``, or of all atoms when ``j`` is None.
    """
    X, C, W = _check_problem(X, C, W)
    egrad = _atom_euclid_grad(X, spd_inv(X), C, spd_inv(C), W)
    rgrad = sym(C @ egrad @ C)
    return rgrad if j is None else rgrad[j]


def sparse_code_spd(X, C, config=None, *, init=None, callback=None, return_result=False):
    """Codes of ``X`` over fixed atoms ``C``.

    Per-sample accelerated projected gradient on the simplex, stopping when
    a row's objective changes by less than ``config.code_tol``. With
    ``config.fd_gradient`` and ``n <= 3`` the code gradient comes from
    finite differences.
    """
    cfg = (config or SdlConfig(num_atoms=np.shape(C)[0])).resolved("spd")
    X, C, _ = _check_problem(X, C)
    Xinv, Cinv = spd_inv(X), spd_inv(C)
    n, r = X.shape[0], C.shape[0]
    if init is None:
        W0 = random_codes(n, r, np.random.default_rng(cfg.seed))
    else:
        W0 = check_codes(init, n, r).copy()
    gradient = _pick_code_grad(cfg, X.shape[-1])

    def fun(Wr, idx):
        return row_objective(X[idx], Xinv[idx], C, Cinv, Wr)

    def grad(Wr, idx):
        return gradient(X[idx], Xinv[idx], C, Cinv, Wr)

    res = accelerated_projected_descent(fun, grad, W0, eta=cfg.eta, tol=cfg.code_tol,
                                        max_iters=cfg.code_max_iters,
                                        backtracking=cfg.backtracking, callback=callback)
    if not res.converged:
        log.info("sparse coding stopped at %d iterations with %d unconverged rows",
                 res.iterations, int((~res.row_converged).sum()))
    return (res.x, res) if return_result else res.x


def _pick_code_grad(cfg, dim):
    if cfg.fd_gradient and dim <= FD_MAX_DIM:
        return _code_grad_fd
    return _code_grad


class RiemannianAtoms:
    """Accelerated Riemannian descent state for a set of SPD atoms.

    ``y`` are the accepted atoms and ``x`` the lookahead atoms where the
    gradient is taken. One step moves every atom along
    ``Exp_x(-eta grad)``; ``eta`` is halved until the Armijo condition in
    the Riemannian norm holds and doubled after a step accepted outright.
    """

    def __init__(self, C, eta, backtracking=True, armijo=1e-4, growth=2.0):
        self.y = np.array(C, dtype=float)
        self.x = self.y.copy()
        self.lam = 1.0
        self.step = float(eta)
        self.eta0 = float(eta)
        self.backtracking = backtracking
        self.armijo = armijo
        self.growth = growth

    def _descend(self, fun, rgrad_fn, base, fbase):
        rg = rgrad_fn(base)
        # squared Riemannian norm summed over atoms
        binv = spd_inv(base)
        gnorm2 = float(np.einsum("jab,jbc,jcd,jda->", binv, rg, binv, rg))
        eta = self.step
        first = True
        for _ in range(60):
            cand = exp_map(base, -eta * rg)
            fc = fun(cand)
            ok = fc <= fbase - self.armijo * eta * gnorm2 + _ROUNDOFF * abs(fbase)
            if ok or not self.backtracking:
                return cand, fc, eta, first
            first = False
            eta *= 0.5
        return base.copy(), fbase, self.eta0, False

    def iterate(self, fun, rgrad_fn, fy):
        """One accelerated step; returns the objective at the new accepted atoms."""
        fx = fun(self.x)
        cand, fc, eta, first = self._descend(fun, rgrad_fn, self.x, fx)
        lam = self.lam
        if not fc <= fy + _ROUNDOFF * abs(fy):
            # the lookahead step lost ground: restart from the accepted atoms
            cand, fc, eta, first = self._descend(fun, rgrad_fn, self.y, fy)
            lam = 1.0
        lam_next = nesterov_lambda(lam)
        gamma = nesterov_gamma(lam, lam_next)
        self.x = exp_map(cand, gamma * log_map(cand, self.y))
        self.y = cand
        self.lam = lam_next
        if self.backtracking and first:
            eta = min(eta * self.growth, self.eta0 * 1e8)
        self.step = eta
        return fc


def _initial_atoms(X, r, cfg):
    kr = min(r, X.shape[0])
    centers, _, _ = spd_kmeans(X, kr, seed=cfg.seed, max_iters=cfg.kmeans_iters)
    if kr < r:
        # more atoms than samples: perturb data points along random tangents
        rng = np.random.default_rng(cfg.seed)
        picks = rng.integers(X.shape[0], size=r - kr)
        V = sym(rng.standard_normal((r - kr,) + X.shape[1:]))
        V *= 0.1 / np.linalg.norm(V, axis=(1, 2), keepdims=True)
        base = X[picks]
        extra = exp_map(base, base @ V @ base)
        centers = np.concatenate([centers, extra])
    return centers


def learn_spd(X, config=None, *, callback=None):
    """Learn an SPD dictionary and codes.

    Atoms start from J-divergence k-means centers and codes from random
    normalized rows. Every outer iteration re-codes all samples over the
    current atoms (warm-started accelerated projected gradient) and takes
    one accelerated Riemannian step on the atoms, then stops once ``|E - E_old| < tol``. A final coding pass over the
    learned atoms, identical to :func:`sparse_code_spd`, produces the
    returned codes.

    Returns
    -------
    atoms : ndarray, shape (r, n, n)
    codes : ndarray, shape (N, r)
    report : SpdFitReport
    """
    t0 = time.perf_counter()
    cfg = (config or SdlConfig()).resolved("spd")
    X = check_spd_set(X, "data")
    N = X.shape[0]
    r = int(cfg.num_atoms)
    if N < r:
        warnings.warn(f"fewer samples ({N}) than atoms ({r})", RuntimeWarning, stacklevel=2)
    Xinv = spd_inv(X)
    code_grad = _pick_code_grad(cfg, X.shape[-1])

    C = _initial_atoms(X, r, cfg)
    W = random_codes(N, r, np.random.default_rng(cfg.seed))
    cstate = RiemannianAtoms(C, cfg.eta, backtracking=cfg.backtracking)

    rows = row_objective(X, Xinv, C, spd_inv(C), W)
    E = float(rows.sum())
    trace = [E]
    min_eig = float(np.linalg.eigvalsh(C).min())
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        C = cstate.y
        Cinv = spd_inv(C)

        def fun_w(Wr, idx):
            return row_objective(X[idx], Xinv[idx], C, Cinv, Wr)

        def grad_w(Wr, idx):
            return code_grad(X[idx], Xinv[idx], C, Cinv, Wr)

        W = accelerated_projected_descent(fun_w, grad_w, W, eta=cfg.eta, tol=cfg.code_tol,
                                          max_iters=cfg.inner_iters,
                                          backtracking=cfg.backtracking).x

        def fun_c(Cs):
            return float(row_objective(X, Xinv, Cs, spd_inv(Cs), W).sum())

        def rgrad_c(Cs):
            return sym(Cs @ _atom_euclid_grad(X, Xinv, Cs, spd_inv(Cs), W) @ Cs)

        cstate.iterate(fun_c, rgrad_c, fun_c(cstate.y))
        C = cstate.y
        min_eig = float(np.linalg.eigvalsh(C).min())
        if not min_eig > 0:
            raise NumericalError(f"atom lost positive definiteness (eigenvalue {min_eig:.3g})")
        rows = row_objective(X, Xinv, C, spd_inv(C), W)
        E_old, E = E, float(rows.sum())
        trace.append(E)
        if callback is not None:
            callback(it, C, W, E)
        if abs(E - E_old) < cfg.tol:
            converged = True
            break

    C = cstate.y.copy()
    W = sparse_code_spd(X, C, cfg)
    E_final = objective_spd(X, C, W)
    report = SpdFitReport(objective_trace=trace, objective=E_final,
                          sparsity=sparsity_measure(W, cfg.sparsity_threshold),
                          recon_error=mean_airm_error(X, C, W), iterations=it,
                          wall_time=time.perf_counter() - t0, converged=converged,
                          min_atom_eigenvalue=min_eig)
    return C, W, report


def mean_airm_error(X, C, W):
    """Mean affine-invariant distance between data and reconstructions."""
    X, C, W = _check_problem(X, C, W)
    M = CenterParts(C, spd_inv(C), W).M
    return float(np.mean(airm_distance(X, M)))


def kkt_report_spd(X, C, W, threshold=0.01):
    """Code optimality diagnostics for fixed atoms, as for densities.

    ``pair_divergence[i, j]`` is ``J(X_i, C_j)``; ``surrogate`` and
    ``bound`` are reported for symmetry with the density case.
    """
    from .spd import j_divergence_matrix

    X, C, W = _check_problem(X, C, W)
    Xinv, Cinv = spd_inv(X), spd_inv(C)
    grad = _code_grad(X, Xinv, C, Cinv, W)
    active = W > threshold
    degenerate = ~active.any(axis=1)
    counts = np.maximum(active.sum(axis=1), 1)
    dual = np.where(active, grad, 0.0).sum(axis=1) / counts
    dev = grad - dual[:, None]
    spread = np.where(active, np.abs(dev), 0.0).max(axis=1)
    slack = np.where(active, np.inf, dev).min(axis=1)
    pair = j_divergence_matrix(X, C)
    surrogate = np.sum(W * pair, axis=1)
    E = float(row_objective(X, Xinv, C, Cinv, W).sum())
    return KktReport(dual=dual, spread=spread, slack=slack, active=active,
                     degenerate=degenerate, pair_divergence=pair, surrogate=surrogate,
                     objective=E, bound=float(surrogate.sum()))
