"""Desk-scale self-test: gradients, centers, KKT structure and round trips.

Each check prints its measured value next to its tolerance. The whole
suite runs in a few seconds on one core.
"""

import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import density, io, oracles, sdl_density, sdl_spd, spd
from .config import SdlConfig

BUGS = ("gradient",)


@dataclass
class CheckResult:
    name: str
    measured: float
    tolerance: float
    seconds: float

    @property
    def passed(self):
        return bool(np.isfinite(self.measured) and self.measured <= self.tolerance)

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return (f"{mark}  {self.name:<44s} measured {self.measured:.3e}  "
                f"tolerance {self.tolerance:.1e}  ({self.seconds:.2f}s)")


def _random_spd(rng, n, m):
    A = rng.standard_normal((m, n, n))
    return A @ np.swapaxes(A, 1, 2) / n + 0.5 * np.eye(n)


def _rel(a, b):
    return float(np.linalg.norm(np.ravel(a) - np.ravel(b)) / max(np.linalg.norm(np.ravel(b)), 1e-12))


def check_density_gradients(rng, bug=None):
    worst = 0.0
    h = 1e-6
    for div in ("kl", "hellinger"):
        for _ in range(10):
            k, r, n = rng.integers(3, 9), rng.integers(2, 5), rng.integers(1, 4)
            F = rng.dirichlet(np.ones(k), n)
            G = rng.dirichlet(np.ones(k), r)
            W = rng.dirichlet(np.ones(r), n)
            g = sdl_density.code_gradient(F, G, W, div)
            if bug == "gradient":
                g = g * 1.01
            fd = np.zeros_like(W)
            for idx in np.ndindex(W.shape):
                E = np.zeros_like(W)
                E[idx] = h
                fd[idx] = (sdl_density.row_objective(F, G, W + E, div).sum()
                           - sdl_density.row_objective(F, G, W - E, div).sum()) / (2 * h)
            worst = max(worst, _rel(g, fd))
            ga = sdl_density.atom_gradient(F, G, W, div)
            fda = np.zeros_like(G)
            for idx in np.ndindex(G.shape):
                E = np.zeros_like(G)
                E[idx] = h
                fda[idx] = (sdl_density.row_objective(F, G + E, W, div).sum()
                            - sdl_density.row_objective(F, G - E, W, div).sum()) / (2 * h)
            worst = max(worst, _rel(ga, fda))
    return worst


def check_spd_gradients(rng, bug=None):
    worst = 0.0
    h = 1e-5
    for _ in range(10):
        n, r, N = rng.integers(1, 5), rng.integers(2, 5), rng.integers(1, 4)
        X, C = _random_spd(rng, n, N), _random_spd(rng, n, r)
        W = rng.dirichlet(np.ones(r), N)
        g = sdl_spd.weight_gradient_spd(X, C, W)
        if bug == "gradient":
            g = g * 1.01
        D = rng.standard_normal(W.shape)
        fd = oracles.central_difference(
            lambda V: sdl_spd.row_objective(X, spd.spd_inv(X), C, spd.spd_inv(C), V).sum(), W, D, h)
        worst = max(worst, abs(np.sum(g * D) - fd) / max(abs(fd), 1e-8))
        V = spd.sym(rng.standard_normal(C.shape))
        rg = sdl_spd.atom_riemannian_gradient(X, C, W)
        Ci = spd.spd_inv(C)
        analytic = float(np.einsum("jab,jbc,jcd,jda->", Ci, rg, Ci, V))
        fd = (sdl_spd.objective_spd(X, spd.exp_map(C, h * V), W)
              - sdl_spd.objective_spd(X, spd.exp_map(C, -h * V), W)) / (2 * h)
        worst = max(worst, abs(analytic - fd) / max(abs(fd), 1e-8))
    return worst


def check_kl_center(rng):
    worst = 0.0
    for _ in range(10):
        N, k = rng.integers(1, 6), rng.integers(2, 11)
        F = rng.dirichlet(np.ones(k), N)
        a = rng.dirichlet(np.ones(N))
        m = density.weighted_kl_center(F, a)
        worst = max(worst, 0.5 * np.abs(m - oracles.weighted_kl_minimizer(F, a)).sum())
    return worst


def check_spd_center(rng):
    worst = 0.0
    for _ in range(5):
        n, N = rng.integers(1, 5), rng.integers(1, 5)
        X = _random_spd(rng, n, N)
        w = rng.dirichlet(np.ones(N))
        M = spd.symmetrized_weighted_kl_center(X, w)
        worst = max(worst, _rel(M, oracles.spd_center_descent(X, w)))
    return worst


def check_kkt(rng):
    worst = 0.0
    for div in ("kl", "hellinger"):
        k, r = 12, 5
        F = rng.dirichlet(np.ones(k), 8)
        G = rng.dirichlet(np.ones(k), r)
        W = sdl_density.sparse_code_density(F, G, SdlConfig(num_atoms=r, tol=1e-10,
                                                             divergence=div))
        rep = sdl_density.kkt_report(F, G, W, 0.01, div)
        scale = np.abs(rep.dual)
        worst = max(worst, float(np.max(rep.spread / scale)),
                    float(np.max(np.maximum(-rep.slack, 0.0) / scale)))
    return worst


def check_geometry(rng):
    worst = 0.0
    for _ in range(10):
        n = rng.integers(1, 6)
        X, Y = _random_spd(rng, n, 2)
        V = spd.sym(rng.standard_normal((n, n)))
        V /= max(np.linalg.norm(V), 1.0)
        worst = max(worst, float(np.max(np.abs(spd.log_map(X, spd.exp_map(X, V)) - V))))
        G = rng.standard_normal((n, n)) + n * np.eye(n)
        d1 = spd.airm_distance(X, Y)
        d2 = spd.airm_distance(G @ X @ G.T, G @ Y @ G.T)
        worst = max(worst, abs(d1 - d2))
    return worst


def check_file_round_trip(rng):
    with tempfile.TemporaryDirectory() as tmp:
        F = rng.dirichlet(np.ones(7), 5)
        X = _random_spd(rng, 3, 4)
        p1, p2 = Path(tmp) / "d.txt", Path(tmp) / "x.spd"
        io.write_densities(p1, F)
        io.write_spd(p2, X, labels=[0, 1, 1, 0])
        F2, _ = io.read_densities(p1)
        X2, lab = io.read_spd(p2)
    return max(float(np.max(np.abs(F - F2))), float(np.max(np.abs(X - X2))),
               float(np.any(lab != [0, 1, 1, 0])))


CHECKS = [
    ("density gradients vs finite differences", check_density_gradients, 1e-5, True),
    ("SPD gradients vs finite differences", check_spd_gradients, 1e-4, True),
    ("weighted KL-center vs numerical minimizer", check_kl_center, 1e-6, False),
    ("SPD center vs Riemannian descent", check_spd_center, 1e-4, False),
    ("KKT spread and slack (relative)", check_kkt, 1e-3, False),
    ("Exp/Log round trip and AIRM invariance", check_geometry, 1e-8, False),
    ("dataset file round trip", check_file_round_trip, 1e-15, False),
]


def run_selftest(seed=0, inject_bug=None, out=print):
    """Run every check; returns the list of :class:`CheckResult`.

    ``inject_bug="gradient"`` perturbs the analytic code gradients by one
    percent before comparison, a negative control for the gradient checks.
    """
    if inject_bug is not None and inject_bug not in BUGS:
        raise ValueError(f"unknown bug {inject_bug!r}; choose from {BUGS}")
    rng = np.random.default_rng(seed)
    results = []
    for name, fn, tol, takes_bug in CHECKS:
        t0 = time.perf_counter()
        value = fn(rng, inject_bug) if takes_bug else fn(rng)
        res = CheckResult(name, float(value), tol, time.perf_counter() - t0)
        results.append(res)
        if out is not None:
            out(res.line())
    return results
