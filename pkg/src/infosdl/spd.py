"""Geometry and divergences on the manifold of SPD matrices.

Matrix functions go through the symmetric eigendecomposition and work on
stacks: any function taking ``X`` of shape ``(n, n)`` also accepts
``(..., n, n)`` unless stated otherwise.
"""

import warnings

import numpy as np

from .errors import DimensionError, InvariantError, NumericalError, ParameterError

SYM_TOL = 1e-10
EIG_FLOOR = 1e-12
COND_LIMIT = 1e12


def sym(X):
    """Symmetric part ``(X + X^T) / 2`` over the last two axes."""
    X = np.asarray(X, dtype=float)
    return 0.5 * (X + np.swapaxes(X, -1, -2))


def check_spd(X, name="matrix"):
    """Validate an SPD matrix (or stack) and return its symmetrized copy.

    Asymmetry is measured relative to the largest entry magnitude (and
    absolutely for entries of order one or smaller).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim < 2 or X.shape[-1] != X.shape[-2] or X.shape[-1] < 1:
        raise InvariantError(f"{name} must be square, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvariantError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(X))))
    asym = float(np.max(np.abs(X - np.swapaxes(X, -1, -2))))
    if asym > SYM_TOL * scale:
        raise InvariantError(f"{name} is not symmetric (max asymmetry {asym:.3g})")
    X = sym(X)
    if np.min(np.linalg.eigvalsh(X)) <= 0:
        raise InvariantError(f"{name} is not positive definite")
    return X


def check_spd_set(Xs, name="SPD set"):
    """Validate a stack of SPD matrices of shape ``(N, n, n)``."""
    Xs = np.asarray(Xs, dtype=float)
    if Xs.ndim == 2:
        Xs = Xs[None]
    if Xs.ndim != 3 or Xs.shape[0] < 1:
        raise InvariantError(f"{name} must have shape (N, n, n), got {Xs.shape}")
    return check_spd(Xs, name)


def _same_dim(X, Y):
    if X.shape[-1] != Y.shape[-1]:
        raise DimensionError(f"matrix sizes differ: {X.shape[-1]} vs {Y.shape[-1]}")


def _eigh(X):
    w, V = np.linalg.eigh(X)
    if not np.all(np.isfinite(w)):
        raise NumericalError("eigendecomposition produced non-finite values")
    return w, V


def _from_eig(w, V):
    return sym((V * w[..., None, :]) @ np.swapaxes(V, -1, -2))


def funm(X, fn, clamp=True):
    """Apply a scalar function to the spectrum of a symmetric matrix."""
    w, V = _eigh(sym(X))
    if clamp:
        w = np.maximum(w, EIG_FLOOR)
    return _from_eig(fn(w), V)


def spd_sqrt(X):
    """Principal square root ``Y`` with ``Y @ Y = X``."""
    return funm(X, np.sqrt)


def spd_invsqrt(X):
    """Inverse principal square root ``X^{-1/2}``."""
    return funm(X, lambda w: 1.0 / np.sqrt(w))


def spd_inv(X):
    """Inverse of an SPD matrix through its spectrum."""
    return funm(X, lambda w: 1.0 / w)


def spd_logm(X):
    """Principal matrix logarithm of an SPD matrix."""
    return funm(X, np.log)


def sym_expm(V):
    """Matrix exponential of a symmetric matrix."""
    return funm(V, np.exp, clamp=False)


def condition_guard(X, name="matrix"):
    """Warn when ``X`` is numerically close to singular.

    Returns ``X`` unchanged, or with its eigenvalues clamped at
    ``EIG_FLOOR`` when the condition number exceeds ``COND_LIMIT``.
    """
    w = np.linalg.eigvalsh(X)
    lo, hi = w[..., 0], w[..., -1]
    if np.any(lo * COND_LIMIT < hi):
        warnings.warn(f"{name} is ill-conditioned (condition number > {COND_LIMIT:g})",
                      RuntimeWarning, stacklevel=2)
        return funm(X, lambda v: v)
    return X


def exp_map(X, V):
    """Affine-invariant exponential map ``X^{1/2} expm(X^{-1/2} V X^{-1/2}) X^{1/2}``."""
    X = np.asarray(X, dtype=float)
    V = sym(V)
    _same_dim(X, V)
    s, si = spd_sqrt(X), spd_invsqrt(X)
    return sym(s @ sym_expm(si @ V @ si) @ s)


def log_map(X, Y):
    """Affine-invariant logarithm map, the tangent vector at ``X`` pointing to ``Y``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    _same_dim(X, Y)
    s, si = spd_sqrt(X), spd_invsqrt(X)
    return sym(s @ spd_logm(si @ Y @ si) @ s)


def airm_distance(X, Y):
    """Affine-invariant Riemannian distance ``||logm(X^{-1/2} Y X^{-1/2})||_F``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    _same_dim(X, Y)
    si = spd_invsqrt(X)
    w = np.linalg.eigvalsh(sym(si @ Y @ si))
    d = np.sqrt(np.sum(np.log(np.maximum(w, EIG_FLOOR)) ** 2, axis=-1))
    return float(d) if np.ndim(d) == 0 else d


def riemannian_norm(X, V):
    """Norm of tangent vector ``V`` at ``X`` under the affine-invariant metric."""
    si = spd_invsqrt(X)
    W = si @ sym(V) @ si
    return np.sqrt(np.sum(W * W, axis=(-2, -1)))


def j_divergence(X, Y):
    """J-divergence ``(tr(X^{-1} Y) + tr(Y^{-1} X) - 2n) / 4``.

    This is the symmetrized KL divergence between zero-mean Gaussians with
    covariances ``X`` and ``Y`` (half their sum of both directions).

    Examples
    --------
    >>> j_divergence([[1.0]], [[2.0]])
    0.125
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    _same_dim(X, Y)
    n = X.shape[-1]
    t1 = np.trace(np.linalg.solve(X, Y), axis1=-2, axis2=-1)
    t2 = np.trace(np.linalg.solve(Y, X), axis1=-2, axis2=-1)
    d = np.maximum(0.25 * (t1 + t2 - 2 * n), 0.0)
    return float(d) if np.ndim(d) == 0 else d


class CenterParts:
    """Intermediate factors of the symmetrized weighted KL-center.

    For weights ``w`` and atoms ``C_j``, ``A = sum w_j C_j`` and
    ``B = sum w_j C_j^{-1}``; the center is ``M = B^{-1/2} S^{1/2} B^{-1/2}``
    with ``S = B^{1/2} A B^{1/2} = U diag(s) U^T``. It is the unique SPD
    solution of ``M B M = A`` and is invariant to rescaling ``w``.
    """

    def __init__(self, C, Cinv, W):
        W = np.asarray(W, dtype=float)
        self.A = np.einsum("...j,jab->...ab", W, C)
        self.B = np.einsum("...j,jab->...ab", W, Cinv)
        wb, Vb = _eigh(self.B)
        wb = np.maximum(wb, EIG_FLOOR)
        self.b_sqrt = _from_eig(np.sqrt(wb), Vb)
        self.b_isqrt = _from_eig(1.0 / np.sqrt(wb), Vb)
        s, U = _eigh(sym(self.b_sqrt @ self.A @ self.b_sqrt))
        self.s_root = np.sqrt(np.maximum(s, EIG_FLOOR))
        self.U = U
        # M = V diag(sqrt s) V^T and M^{-1} = V^{-T} diag(1/sqrt s) V^{-1}, V = B^{-1/2} U
        self.V = self.b_isqrt @ U
        self.Vinv_T = self.b_sqrt @ U
        self.M = sym((self.V * self.s_root[..., None, :]) @ np.swapaxes(self.V, -1, -2))
        self.Minv = sym((self.Vinv_T / self.s_root[..., None, :]) @ np.swapaxes(self.Vinv_T, -1, -2))

    def adjoint(self, G):
        """Solve ``K^T Z + Z K = G`` for ``Z``, where ``K = M B``.

        With ``dM`` the response of the center to ``dA`` and ``dB``,
        ``tr(G dM) = tr(Z dA) - tr(M Z M dB)``.
        """
        Vt = np.swapaxes(self.V, -1, -2)
        Gh = Vt @ G @ self.V
        Zh = Gh / (self.s_root[..., :, None] + self.s_root[..., None, :])
        return sym(self.Vinv_T @ Zh @ np.swapaxes(self.Vinv_T, -1, -2))


def symmetrized_weighted_kl_center(Xs, w):
    """Symmetrized weighted KL-center ``B^{-1/2} (B^{1/2} A B^{1/2})^{1/2} B^{-1/2}``.

    Parameters
    ----------
    Xs : array_like, shape (N, n, n)
        SPD matrices.
    w : array_like, shape (N,)
        Nonnegative weights summing to one.

    Returns
    -------
    ndarray, shape (n, n)
        The minimizer of ``sum_i w_i J(X_i, M)`` over SPD ``M``.
    """
    Xs = check_spd_set(Xs)
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size != Xs.shape[0]:
        raise DimensionError(f"weights have length {w.size}, expected {Xs.shape[0]}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise InvariantError("weights must be nonnegative and sum to 1")
    return CenterParts(Xs, spd_inv(Xs), w).M


def make_spd(S, sigma):
    """Regularize a symmetric PSD matrix to ``S + sigma I``."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    S = np.asarray(S, dtype=float)
    if S.ndim < 2 or S.shape[-1] != S.shape[-2]:
        raise InvariantError(f"expected a square matrix, got shape {S.shape}")
    S = sym(S)
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.min(np.linalg.eigvalsh(S)) < -1e-10 * scale:
        raise InvariantError("matrix is significantly indefinite")
    return S + sigma * np.eye(S.shape[-1])


def j_divergence_matrix(Xs, Cs):
    """Pairwise J-divergences, ``D[i, j] = J(X_i, C_j)``."""
    Xs = np.asarray(Xs, dtype=float)
    Cs = np.asarray(Cs, dtype=float)
    n = Xs.shape[-1]
    Xinv, Cinv = spd_inv(Xs), spd_inv(Cs)
    t1 = np.einsum("iab,jab->ij", Xinv, Cs)
    t2 = np.einsum("jab,iab->ij", Cinv, Xs)
    return np.maximum(0.25 * (t1 + t2 - 2 * n), 0.0)


def spd_kmeans(Xs, k, seed=0, max_iters=100):
    """Lloyd iterations on SPD matrices under the J-divergence.

    Points go to the center of smallest J-divergence; each center is
    replaced by the symmetrized KL-center of its cluster. Seeding is
    k-means++-style with sampling probability proportional to the
    J-divergence to the nearest chosen center.

    Returns
    -------
    centers : ndarray, shape (k, n, n)
    labels : ndarray of int, shape (N,)
    history : list of float
        Within-cluster J-divergence sum after every center update.
    """
    from .kmeans import lloyd

    Xs = check_spd_set(Xs)
    Xinv = spd_inv(Xs)

    def center(idx):
        w = np.full(len(idx), 1.0 / len(idx))
        return CenterParts(Xs[idx], Xinv[idx], w).M

    return lloyd(Xs, k, j_divergence_matrix, center, seed=seed, max_iters=max_iters)
