import numpy as np
import pytest

from _data import planted_density
from infosdl import SdlConfig, density
from infosdl import sdl_density as sd
from infosdl.errors import DimensionError, InvariantError, ParameterError


def literal_objective(F, G, W, divergence):
    """Term-by-term re-evaluation with plain loops."""
    total = 0.0
    for i in range(F.shape[0]):
        rec = [sum(W[i, j] * G[j, x] for j in range(G.shape[0])) for x in range(F.shape[1])]
        for x in range(F.shape[1]):
            if divergence == "kl":
                if F[i, x] > 0:
                    total += F[i, x] * np.log(F[i, x] / rec[x])
            else:
                total -= np.sqrt(F[i, x] * rec[x])
        if divergence == "hellinger":
            total += 1.0
    return total


def fd_gradient(fun, X, h=1e-6):
    out = np.zeros_like(X)
    for idx in np.ndindex(X.shape):
        E = np.zeros_like(X)
        E[idx] = h
        out[idx] = (fun(X + E) - fun(X - E)) / (2 * h)
    return out


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def random_problem(rng, n=None, k=None, r=None):
    n = n or rng.integers(1, 5)
    k = k or rng.integers(3, 9)
    r = r or rng.integers(2, 5)
    return rng.dirichlet(np.ones(k), n), rng.dirichlet(np.ones(k), r), rng.dirichlet(np.ones(r), n)


# objective

@pytest.mark.parametrize("div", ["kl", "hellinger"])
def test_objective_examples(rng, div):
    G = rng.dirichlet(np.ones(6), 3)
    assert sd.objective_density(G[[2, 0]], G, np.eye(3)[[2, 0]], div) == pytest.approx(0.0, abs=1e-14)
    f, g = rng.dirichlet(np.ones(6), 2)
    expected = density.kl_divergence(f, g) if div == "kl" else density.hellinger_sq(f, g)
    assert sd.objective_density(f[None], g[None], [[1.0]], div) == pytest.approx(expected, abs=1e-14)
    F, G, W = random_problem(rng)
    assert sd.objective_density(F, G, W, div) == pytest.approx(literal_objective(F, G, W, div), abs=1e-12)


def test_objective_rejects_bad_input(rng):
    F, G, W = random_problem(rng, n=2, r=3)
    with pytest.raises(InvariantError):
        sd.objective_density(F, G, W * 1.1)
    with pytest.raises(InvariantError):
        sd.objective_density(F, G, W - 1.0)
    with pytest.raises(DimensionError):
        sd.objective_density(F, G[:, :-1] / G[:, :-1].sum(1, keepdims=True), W)
    with pytest.raises(DimensionError):
        sd.objective_density(F, G, W[:, :2] / W[:, :2].sum(1, keepdims=True))


# gradients

def test_code_gradient_perfect_fit(rng):
    G = rng.dirichlet(np.ones(7), 3)
    W = rng.dirichlet(np.ones(3), 4)
    np.testing.assert_allclose(sd.code_gradient(W @ G, G, W, "kl"), -1.0, atol=1e-12)
    A = sd.atom_gradient(W @ G, G, W, "kl")
    np.testing.assert_allclose(A, -W.sum(axis=0)[:, None] * np.ones((1, 7)), atol=1e-12)


@pytest.mark.parametrize("div", ["kl", "hellinger"])
def test_gradients_match_finite_differences(rng, div):
    for _ in range(20):
        F, G, W = random_problem(rng)
        g = sd.code_gradient(F, G, W, div)
        assert rel(g, fd_gradient(lambda V: sd.row_objective(F, G, V, div).sum(), W)) <= 1e-5
        a = sd.atom_gradient(F, G, W, div)
        assert rel(a, fd_gradient(lambda H: sd.row_objective(F, H, W, div).sum(), G)) <= 1e-5


def test_code_gradient_overlap_monotonicity():
    f = np.array([[0.7, 0.2, 0.1]])
    W = np.array([[0.5, 0.5]])
    base = np.array([[0.2, 0.4, 0.4], [0.3, 0.3, 0.4]])
    more = base.copy()
    more[0] = [0.4, 0.3, 0.3]  # doubled mass on the bin where f concentrates
    g0 = sd.code_gradient(f, base, W)[0, 0]
    g1 = sd.code_gradient(f, more, W)[0, 0]
    assert g1 < g0


def test_atom_gradient_unused_atom_is_zero(rng):
    F, G, _ = random_problem(rng, r=3)
    W = rng.dirichlet(np.ones(2), F.shape[0])
    W = np.column_stack([W[:, 0], np.zeros(F.shape[0]), W[:, 1]])
    np.testing.assert_array_equal(sd.atom_gradient(F, G, W)[1], 0.0)


def test_gradient_needs_support():
    from infosdl.errors import NumericalError

    with pytest.raises(NumericalError):
        sd.code_gradient([[0.5, 0.5]], [[1.0, 0.0]], [[1.0]])


# sparse coding

def test_sparse_code_exact_representation(rng):
    G, F, labels = planted_density(r=4, k=16, per_atom=3)
    W = sd.sparse_code_density(F, G, SdlConfig(num_atoms=4, tol=1e-12))
    assert np.all(W[np.arange(len(F)), labels] >= 0.999)
    assert np.all(sd.row_objective(F, G, W) <= 1e-6)


def test_sparse_code_single_atom(rng):
    F = rng.dirichlet(np.ones(5), 6)
    W = sd.sparse_code_density(F, rng.dirichlet(np.ones(5), 1))
    np.testing.assert_array_equal(W, 1.0)


def test_sparse_code_identifiable_mixture():
    G = np.array([[0.7, 0.2, 0.05, 0.05], [0.05, 0.05, 0.2, 0.7]])
    f = 0.5 * G[0] + 0.5 * G[1]
    W = sd.sparse_code_density(f[None], G, SdlConfig(num_atoms=2, tol=1e-14))
    np.testing.assert_allclose(W[0], [0.5, 0.5], atol=1e-3)


def test_sparse_code_matches_grid_search(rng):
    for _ in range(5):
        f = rng.dirichlet(np.ones(3))
        G = rng.dirichlet(np.ones(3), 2)
        t = np.linspace(0, 1, 1001)
        grid = np.column_stack([t, 1 - t])
        best = sd.row_objective(np.repeat(f[None], len(t), 0), G, grid).min()
        W = sd.sparse_code_density(f[None], G, SdlConfig(num_atoms=2, tol=1e-14))
        assert sd.objective_density(f[None], G, W) <= best + 1e-6
        assert abs(sd.objective_density(f[None], G, W) - best) <= 1e-6


@pytest.mark.parametrize("div", ["kl", "hellinger"])
def test_sparse_code_kkt_structure(rng, div):
    F = rng.dirichlet(np.ones(12), 10)
    G = rng.dirichlet(np.ones(12), 5)
    W = sd.sparse_code_density(F, G, SdlConfig(num_atoms=5, tol=1e-12, divergence=div))
    rep = sd.kkt_report(F, G, W, 0.01, div)
    scale = np.abs(rep.dual)
    assert np.all(rep.spread <= 1e-3 * scale)
    assert np.all(rep.slack >= -1e-3 * scale)
    assert rep.bound_holds


def test_single_atom_preference():
    # data equal to an atom put (almost) all weight on it
    rng = np.random.default_rng(1)
    _, G, _ = random_problem(rng, k=10, r=6)
    W = sd.sparse_code_density(G, G, SdlConfig(num_atoms=6, tol=1e-12))
    assert np.all(np.diag(W) >= 0.99)


# KKT report

def test_kkt_report_one_hot_exact_fit(rng):
    G = rng.dirichlet(np.ones(5), 3)
    rep = sd.kkt_report(G, G, np.eye(3))
    np.testing.assert_allclose(rep.spread, 0.0, atol=1e-15)
    assert np.all(rep.slack >= 0)
    assert not rep.degenerate.any()
    assert rep.objective == pytest.approx(0.0, abs=1e-14)


def test_kkt_report_flags_degenerate_rows(rng):
    F = rng.dirichlet(np.ones(5), 1)
    G = rng.dirichlet(np.ones(5), 4)
    rep = sd.kkt_report(F, G, np.full((1, 4), 0.25), threshold=0.3)
    assert rep.degenerate[0]


def test_surrogate_bound_is_jensen(rng):
    for div in ("kl", "hellinger"):
        F, G, W = random_problem(rng, n=6, r=4)
        rep = sd.kkt_report(F, G, W, divergence=div)
        assert np.all(sd.row_objective(F, G, W, div) <= rep.surrogate + 1e-14)
        assert rep.bound_holds


# sparsity measure

def test_sparsity_measure_examples():
    assert sd.sparsity_measure(np.eye(2)) == 50.0
    assert sd.sparsity_measure(np.eye(5)) == pytest.approx(80.0)
    assert sd.sparsity_measure(np.full((3, 2), 0.5)) == 0.0
    assert sd.sparsity_measure(np.array([[0.01, 0.99]])) == 50.0


# learning

def test_learn_single_atom_is_mean(rng):
    F = rng.dirichlet(np.ones(8), 20)
    G, W, rep = sd.learn_density(F, SdlConfig(num_atoms=1, tol=1e-12, max_iters=300))
    assert 0.5 * np.abs(G[0] - F.mean(axis=0)).sum() <= 1e-6
    np.testing.assert_array_equal(W, 1.0)


def test_learn_recovers_spike_densities():
    F = np.eye(5)
    G, W, rep = sd.learn_density(F, SdlConfig(num_atoms=5, tol=1e-12, max_iters=200))
    perm = np.argmax(W, axis=1)
    assert sorted(perm) == list(range(5))
    assert np.max(0.5 * np.abs(G[perm] - F).sum(axis=1)) <= 1e-3
    assert rep.objective <= 1e-6


@pytest.mark.parametrize("div", ["kl", "hellinger"])
def test_learn_feasibility_and_monotone_trace(rng, div):
    F = rng.dirichlet(np.ones(10), 25)
    steps = []

    def cb(it, G, W, E):
        steps.append((G.copy(), W.copy()))

    G, W, rep = sd.learn_density(F, SdlConfig(num_atoms=4, max_iters=40, divergence=div), callback=cb)
    rep.check()
    assert np.all(np.diff(rep.objective_trace) <= 1e-10)
    for Gs, Ws in steps + [(G, W)]:
        assert np.all(Gs > 0) and np.all(Ws >= 0)
        np.testing.assert_allclose(Gs.sum(axis=1), 1.0, atol=1e-8)
        np.testing.assert_allclose(Ws.sum(axis=1), 1.0, atol=1e-8)
    assert len(rep.bound_trace) == len(rep.objective_trace)
    assert np.all(np.array(rep.objective_trace) <= np.array(rep.bound_trace) + 1e-12)


def test_learn_is_deterministic(rng):
    F = rng.dirichlet(np.ones(6), 12)
    cfg = SdlConfig(num_atoms=3, max_iters=20, seed=7)
    a = sd.learn_density(F, cfg)
    b = sd.learn_density(F, cfg)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert a[2].objective_trace == b[2].objective_trace


def test_learn_warns_when_atoms_exceed_samples(rng):
    F = rng.dirichlet(np.ones(6), 2)
    with pytest.warns(RuntimeWarning):
        G, W, _ = sd.learn_density(F, SdlConfig(num_atoms=3, max_iters=5))
    assert G.shape == (3, 6)


def test_config_validation():
    with pytest.raises(ParameterError):
        SdlConfig(num_atoms=0)
    with pytest.raises(ParameterError):
        SdlConfig(eta=-1.0)
    with pytest.raises(ParameterError):
        SdlConfig(tol=0.0)
    with pytest.raises(ParameterError):
        SdlConfig(divergence="l2")
    with pytest.raises(ParameterError):
        SdlConfig(sparsity_threshold=1.0)
    cfg = SdlConfig().resolved("density")
    assert (cfg.eta, cfg.max_iters, cfg.tol) == (0.1, 500, 1e-8)
    cfg = SdlConfig().resolved("spd")
    assert (cfg.eta, cfg.max_iters) == (0.01, 300)
