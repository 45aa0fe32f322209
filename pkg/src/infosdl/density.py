"""Discrete densities: divergences, entropy, mixtures and KL-centers.

A density is a 1-D float array of ``k`` nonnegative bins summing to one; a
density set is a 2-D array with one density per row. All logarithms are
natural, so divergences and entropies are in nats.
"""

import numpy as np
from scipy.special import entr, xlogy

from .errors import DimensionError, InvariantError, ParameterError
from .simplex import accelerated_projected_descent, simplex_project

SUM_TOL = 1e-9


def check_density(f, name="density"):
    """Validate and return ``f`` as a float array on the simplex."""
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or f.size < 1:
        raise InvariantError(f"{name} must be a non-empty 1-D array, got shape {f.shape}")
    if not np.all(np.isfinite(f)) or np.any(f < 0):
        raise InvariantError(f"{name} has negative or non-finite entries")
    if abs(f.sum() - 1.0) > SUM_TOL:
        raise InvariantError(f"{name} sums to {f.sum()!r}, not 1")
    return f


def check_density_set(F, name="density set"):
    """Validate a stack of densities of equal bin count, shape ``(N, k)``."""
    F = np.asarray(F, dtype=float)
    if F.ndim == 1:
        F = F[None, :]
    if F.ndim != 2 or F.shape[0] < 1 or F.shape[1] < 1:
        raise InvariantError(f"{name} must have shape (N, k) with N, k >= 1, got {F.shape}")
    if not np.all(np.isfinite(F)) or np.any(F < 0):
        raise InvariantError(f"{name} has negative or non-finite entries")
    bad = np.flatnonzero(np.abs(F.sum(axis=1) - 1.0) > SUM_TOL)
    if bad.size:
        raise InvariantError(f"{name} rows {bad[:5].tolist()} do not sum to 1")
    return F


def check_weights(alpha, n=None, name="weights"):
    """Validate simplex weights, optionally of length ``n``."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1:
        raise InvariantError(f"{name} must be 1-D")
    if n is not None and alpha.size != n:
        raise DimensionError(f"{name} has length {alpha.size}, expected {n}")
    if np.any(alpha < 0) or abs(alpha.sum() - 1.0) > SUM_TOL:
        raise InvariantError(f"{name} must be nonnegative and sum to 1")
    return alpha


def _same_bins(f, g):
    if f.shape[-1] != g.shape[-1]:
        raise DimensionError(f"bin counts differ: {f.shape[-1]} vs {g.shape[-1]}")


def _kl_rows(F, G):
    # rows of F against rows of G (broadcast); +inf where g = 0 < f
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = xlogy(F, F) - xlogy(F, G)
    terms = np.where((F > 0) & (G <= 0), np.inf, terms)
    return terms.sum(axis=-1)


def kl_divergence(f, g):
    """Kullback-Leibler divergence ``sum f log(f / g)`` in nats.

    Bins with ``f = 0`` contribute nothing; a bin with ``f > 0`` and
    ``g = 0`` makes the divergence infinite.
    Rounding below zero is clamped to zero.

    Examples
    --------
    >>> round(kl_divergence([1.0, 0.0], [0.5, 0.5]), 6)
    0.693147
    """
    f = check_density(f, "f")
    g = check_density(g, "g")
    _same_bins(f, g)
    return float(max(_kl_rows(f, g), 0.0))


def kl_p_divergence(F, f, p=1.0):
    """l_p norm of the vector ``(KL(f_1, f), ..., KL(f_N, f))``.

    ``p = np.inf`` gives the max-KL divergence from the set to ``f``.
    """
    if not p > 0:
        raise ParameterError(f"p must be positive, got {p}")
    F = check_density_set(F)
    f = check_density(f, "f")
    _same_bins(F, f)
    d = _kl_rows(F, f[None, :])
    if np.isinf(p):
        return float(d.max())
    if np.isinf(d).any():
        return np.inf
    return float(np.sum(d ** p) ** (1.0 / p))


def hellinger_sq(f, g):
    """Squared Hellinger distance ``1 - sum sqrt(f g)``, in ``[0, 1]``."""
    f = check_density(f, "f")
    g = check_density(g, "g")
    _same_bins(f, g)
    return float(min(max(1.0 - np.sum(np.sqrt(f * g)), 0.0), 1.0))


def shannon_entropy(f):
    """Shannon entropy ``-sum f log f`` in nats (``0 log 0 = 0``)."""
    f = check_density(f, "f")
    return float(entr(f).sum())


def mixture(F, alpha):
    """Weighted mixture ``sum_i alpha_i f_i``, renormalized to sum to one exactly."""
    F = check_density_set(F)
    alpha = check_weights(alpha, F.shape[0], "alpha")
    m = alpha @ F
    m = np.maximum(m, 0.0)
    return m / m.sum()


def jsd_weighted(F, alpha):
    """Generalized Jensen-Shannon divergence ``H(sum a_i f_i) - sum a_i H(f_i)``.

    Always nonnegative by concavity of entropy; for two densities with
    equal weights it is the classical Jensen-Shannon divergence.
    """
    F = check_density_set(F)
    alpha = check_weights(alpha, F.shape[0], "alpha")
    m = alpha @ F
    val = entr(m).sum() - alpha @ entr(F).sum(axis=1)
    return float(max(val, 0.0))


def weighted_kl_center(F, alpha):
    """Minimizer of ``sum_i alpha_i KL(f_i, f)`` over densities ``f``.

    The minimizer is the mixture itself, so no optimization is needed.
    """
    return mixture(F, alpha)


def kl_center_maxjsd(F, tol=1e-7, max_iters=10000):
    """KL-center (minimax KL) of a density set via JSD maximization.

    Maximizes the weighted JSD over the mixture weights by accelerated
    projected gradient ascent; the center is the mixture at the maximizing
    weights. The gradient of the JSD in ``alpha_i`` is ``KL(f_i, m) - 1``.

    Parameters
    ----------
    F : array_like, shape (N, k)
    tol : float
        Exit threshold on the norm of the projected-gradient mapping. Values
        much below ``1e-8`` sit under the resolution of the objective.
    max_iters : int
        Iteration cap. Hitting it is reported, not raised.

    Returns
    -------
    center : ndarray, shape (k,)
    alpha : ndarray, shape (N,)
    info : dict
        ``jsd`` (optimal value), ``iterations``, ``converged`` and
        ``gradient_norm`` at exit.
    """
    F = check_density_set(F)
    n = F.shape[0]
    hf = entr(F).sum(axis=1)

    def neg_jsd(a, idx):
        m = a @ F
        return -(entr(m).sum(axis=1) - a @ hf)

    def neg_grad(a, idx):
        m = np.maximum(a @ F, 1e-300)
        kl = np.sum(xlogy(F, F), axis=1)[None, :] - np.log(m) @ F.T
        return -(kl - 1.0)

    a0 = np.full((1, n), 1.0 / n)
    res = accelerated_projected_descent(neg_jsd, neg_grad, a0, eta=1.0, tol=tol,
                                        max_iters=max_iters, stop="gradient")
    alpha = res.x[0]
    g = neg_grad(res.x, None)
    gnorm = float(np.linalg.norm(res.x - simplex_project(res.x - g)))
    info = {
        "jsd": float(-res.values[0]),
        "iterations": res.iterations,
        "converged": res.converged,
        "gradient_norm": gnorm,
    }
    return mixture(F, alpha), alpha, info


def smooth_density(f, eps=1e-10):
    """Additive smoothing ``(f + eps) / (1 + k eps)``; output strictly positive."""
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    f = np.asarray(f, dtype=float)
    k = f.shape[-1]
    return (f + eps) / (1.0 + k * eps)
