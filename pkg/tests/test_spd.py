import numpy as np
import pytest

from _data import random_spd
from infosdl import spd
from infosdl.errors import DimensionError, InvariantError, ParameterError
from infosdl.oracles import spd_center_descent, weighted_j


def test_check_spd_validation():
    with pytest.raises(InvariantError):
        spd.check_spd(np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(InvariantError):
        spd.check_spd(np.array([[1.0, 0.5], [0.0, 1.0]]))
    X = spd.check_spd(np.array([[2.0, 1e-12], [0.0, 2.0]]))
    assert np.array_equal(X, X.T)


def test_sqrt_examples(rng):
    np.testing.assert_allclose(spd.spd_sqrt(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(spd.spd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)
    X = random_spd(rng, 5, 1)[0]
    Y = spd.spd_sqrt(X)
    assert np.linalg.norm(Y @ Y - X) / np.linalg.norm(X) <= 1e-10
    Z = spd.spd_invsqrt(X)
    assert np.linalg.norm(Z @ X @ Z - np.eye(5)) <= 1e-10


def test_exp_log_examples():
    X = np.diag([2.0, 3.0])
    np.testing.assert_allclose(spd.exp_map(X, np.zeros((2, 2))), X, atol=1e-14)
    assert spd.exp_map(np.eye(1), np.eye(1))[0, 0] == pytest.approx(np.e, abs=1e-12)
    assert spd.exp_map(np.array([[2.0]]), np.array([[3.0]]))[0, 0] == pytest.approx(2 * np.exp(1.5))
    assert spd.log_map(np.eye(1), np.e * np.eye(1))[0, 0] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(spd.log_map(X, X), 0.0, atol=1e-14)
    with pytest.raises(DimensionError):
        spd.log_map(np.eye(2), np.eye(3))


def test_exp_log_round_trips(rng):
    for n in range(1, 11):
        for _ in range(5):
            X, Y = random_spd(rng, n, 2)
            V = spd.sym(rng.normal(size=(n, n)))
            V /= max(np.linalg.norm(V), 1.0)
            L = spd.log_map(X, spd.exp_map(X, V))
            assert np.max(np.abs(L - V)) <= 1e-8
            assert np.allclose(L, L.T, atol=1e-12)
            assert np.max(np.abs(spd.exp_map(X, spd.log_map(X, Y)) - Y)) <= 1e-8 * max(1, np.abs(Y).max())


def test_airm_examples_and_invariance(rng):
    X = random_spd(rng, 3, 1)[0]
    assert spd.airm_distance(X, X) == pytest.approx(0.0, abs=1e-12)
    assert spd.airm_distance(np.eye(1), 4 * np.eye(1)) == pytest.approx(np.log(4), abs=1e-12)
    for _ in range(20):
        n = rng.integers(1, 6)
        X, Y = random_spd(rng, n, 2)
        G = rng.normal(size=(n, n)) + n * np.eye(n)
        d = spd.airm_distance(X, Y)
        assert d == pytest.approx(spd.airm_distance(Y, X), abs=1e-10)
        assert abs(d - spd.airm_distance(G @ X @ G.T, G @ Y @ G.T)) <= 1e-8


def test_airm_matches_generalized_eigenvalues(rng):
    from scipy.linalg import eigh

    X, Y = random_spd(rng, 4, 2)
    lam = eigh(Y, X, eigvals_only=True)
    assert spd.airm_distance(X, Y) == pytest.approx(np.sqrt(np.sum(np.log(lam) ** 2)), rel=1e-10)


def test_airm_triangle_inequality(rng):
    for _ in range(1000):
        n = rng.integers(1, 5)
        X, Y, Z = random_spd(rng, n, 3)
        assert spd.airm_distance(X, Z) <= spd.airm_distance(X, Y) + spd.airm_distance(Y, Z) + 1e-9


def test_j_divergence_examples(rng):
    X, Y = random_spd(rng, 4, 2)
    assert spd.j_divergence(X, X) == pytest.approx(0.0, abs=1e-12)
    assert spd.j_divergence(np.eye(1), 2 * np.eye(1)) == pytest.approx(0.125, abs=1e-15)
    assert spd.j_divergence(X, Y) == pytest.approx(spd.j_divergence(Y, X), abs=1e-12)


def test_j_divergence_is_symmetrized_gaussian_kl(rng):
    # J = (KL(N(0,X) || N(0,Y)) + KL(N(0,Y) || N(0,X))) / 2 at every n
    for n in (1, 3):
        X, Y = random_spd(rng, n, 2)

        def kl(P, Q):
            return 0.5 * (np.trace(np.linalg.solve(Q, P)) - n + np.log(np.linalg.det(Q) / np.linalg.det(P)))

        assert spd.j_divergence(X, Y) == pytest.approx(0.5 * (kl(X, Y) + kl(Y, X)), rel=1e-10)


def test_j_divergence_nonnegative_on_random_pairs(rng):
    for _ in range(1000):
        n = rng.integers(1, 6)
        X, Y = random_spd(rng, n, 2)
        assert spd.j_divergence(X, Y) >= 0
        assert spd.j_divergence(X, X) <= 1e-10


def test_center_examples(rng):
    X = random_spd(rng, 3, 1)[0]
    np.testing.assert_allclose(spd.symmetrized_weighted_kl_center(np.stack([X, X, X]), [0.2, 0.3, 0.5]),
                               X, rtol=1e-10, atol=1e-12)
    Xs = np.array([[[1.0]], [[4.0]]])
    assert spd.symmetrized_weighted_kl_center(Xs, [0.5, 0.5])[0, 0] == pytest.approx(2.0, abs=1e-12)
    assert spd.symmetrized_weighted_kl_center(Xs, [0.8, 0.2])[0, 0] == pytest.approx(
        np.sqrt(1.6 / 0.85), abs=1e-12)
    assert np.sqrt(1.6 / 0.85) == pytest.approx(1.372, abs=1e-3)
    with pytest.raises(DimensionError):
        spd.symmetrized_weighted_kl_center(Xs, [1.0])


def test_center_diagonal_inputs(rng):
    for _ in range(20):
        n, N = rng.integers(1, 6), rng.integers(1, 7)
        d = rng.uniform(0.1, 10, size=(N, n))
        w = rng.dirichlet(np.ones(N))
        M = spd.symmetrized_weighted_kl_center(np.stack([np.diag(v) for v in d]), w)
        np.testing.assert_allclose(M, np.diag(np.sqrt((w @ d) / (w @ (1 / d)))), rtol=1e-10, atol=1e-12)


def test_center_matches_descent_oracle(rng):
    for _ in range(10):
        n, N = rng.integers(1, 6), rng.integers(1, 7)
        Xs = random_spd(rng, n, N)
        w = rng.dirichlet(np.ones(N))
        M = spd.symmetrized_weighted_kl_center(Xs, w)
        O = spd_center_descent(Xs, w)
        assert np.linalg.norm(M - O) / np.linalg.norm(O) <= 1e-4
        assert weighted_j(Xs, w, M) <= weighted_j(Xs, w, O) + 1e-12


def test_center_solves_riccati(rng):
    Xs = random_spd(rng, 4, 5)
    w = rng.dirichlet(np.ones(5))
    M = spd.symmetrized_weighted_kl_center(Xs, w)
    A = np.einsum("i,iab->ab", w, Xs)
    B = np.einsum("i,iab->ab", w, np.linalg.inv(Xs))
    np.testing.assert_allclose(M @ B @ M, A, rtol=1e-10, atol=1e-12)


def test_kmeans_examples(rng):
    Xs = random_spd(rng, 2, 5)
    centers, labels, _ = spd.spd_kmeans(Xs, 5, seed=0)
    for j in range(5):
        np.testing.assert_allclose(centers[j], Xs[labels == j][0], rtol=1e-10)
    centers, labels, _ = spd.spd_kmeans(Xs, 1)
    np.testing.assert_allclose(centers[0], spd.symmetrized_weighted_kl_center(Xs, np.full(5, 0.2)), rtol=1e-12)
    with pytest.raises(ParameterError):
        spd.spd_kmeans(Xs, 6)


def test_kmeans_separates_two_clusters(rng):
    a = np.eye(2) + 0.01 * spd.sym(rng.normal(size=(10, 2, 2)))
    b = 10 * np.eye(2) + 0.1 * spd.sym(rng.normal(size=(10, 2, 2)))
    Xs = np.concatenate([a, b])
    _, labels, _ = spd.spd_kmeans(Xs, 2, seed=3)
    assert len(set(labels[:10])) == 1 and len(set(labels[10:])) == 1 and labels[0] != labels[10]


def test_kmeans_history_non_increasing_and_spd(rng):
    for seed in range(5):
        Xs = random_spd(rng, 3, 40)
        centers, _, history = spd.spd_kmeans(Xs, 4, seed=seed)
        assert np.all(np.diff(history) <= 1e-10)
        assert np.all(np.linalg.eigvalsh(centers) > 0)


def test_make_spd_examples(rng):
    np.testing.assert_array_equal(spd.make_spd(np.zeros((3, 3)), 1.0), np.eye(3))
    v = np.array([1.0, 0.0])
    np.testing.assert_allclose(spd.make_spd(np.outer(v, v), 0.1), np.diag([1.1, 0.1]), atol=1e-15)
    S = random_spd(rng, 4, 1, floor=0.0)[0]
    np.testing.assert_allclose(np.linalg.eigvalsh(spd.make_spd(S, 0.3)), np.linalg.eigvalsh(S) + 0.3, atol=1e-12)
    with pytest.raises(InvariantError):
        spd.make_spd(-np.eye(2), 0.1)
    with pytest.raises(ParameterError):
        spd.make_spd(np.eye(2), 0.0)
