"""
Geometry of SPD matrices
========================

Exp/Log maps and the affine-invariant distance, the J-divergence and its
closed-form weighted center, and k-means initialization on P_n.
"""

import numpy as np

from infosdl import spd
from infosdl.oracles import spd_center_descent

rng = np.random.default_rng(1)


def random_spd(n, m):
    A = rng.standard_normal((m, n, n))
    return A @ np.swapaxes(A, 1, 2) / n + 0.5 * np.eye(n)


X, Y = random_spd(3, 2)

# Exp and Log are inverse to each other at every base point
V = spd.log_map(X, Y)
print("round trip error:", np.abs(spd.exp_map(X, V) - Y).max())

# the distance ignores any change of basis X -> G X G^T
G = rng.standard_normal((3, 3)) + 3 * np.eye(3)
print("AIRM:", spd.airm_distance(X, Y), " after congruence:",
      spd.airm_distance(G @ X @ G.T, G @ Y @ G.T))

# J is the symmetrized KL divergence between N(0, X) and N(0, Y)
print("J(X, Y) =", spd.j_divergence(X, Y), " J(Y, X) =", spd.j_divergence(Y, X))

# the weighted center solves M B M = A in closed form; a Riemannian descent
# on the weighted J sum lands on the same matrix
Xs = random_spd(3, 5)
w = rng.dirichlet(np.ones(5))
M = spd.symmetrized_weighted_kl_center(Xs, w)
O = spd_center_descent(Xs, w)
print("closed form vs descent, relative:", np.linalg.norm(M - O) / np.linalg.norm(O))

# scalars: the center of {1, 4} with equal weights is 2 (the geometric mean)
print("center of {1, 4}:", spd.symmetrized_weighted_kl_center(np.array([[[1.0]], [[4.0]]]), [0.5, 0.5]))

# k-means with J assignments and closed-form centers separates two clusters
a = np.eye(2) + 0.05 * spd.sym(rng.standard_normal((10, 2, 2)))
b = 10 * np.eye(2) + 0.5 * spd.sym(rng.standard_normal((10, 2, 2)))
centers, labels, history = spd.spd_kmeans(np.concatenate([a, b]), 2)
print("labels:", labels, " within-cluster J per iteration:", np.round(history, 4))
