"""
Divergences and KL-centers of discrete densities
================================================

The weighted KL-center of a set of densities is simply their mixture,
and the (minimax) KL-center is the mixture whose weights maximize the
Jensen-Shannon divergence.
"""

import numpy as np

from infosdl import density
from infosdl.oracles import weighted_kl_minimizer

rng = np.random.default_rng(0)

# two densities on two bins: KL is asymmetric, squared Hellinger is not
f, g = np.array([0.5, 0.5]), np.array([0.25, 0.75])
print("KL(f, g) =", density.kl_divergence(f, g), " KL(g, f) =", density.kl_divergence(g, f))
print("Hellinger^2 =", density.hellinger_sq(f, g))

# the mixture minimizes the weighted KL sum; compare with a generic
# projected-gradient minimizer that knows nothing about mixtures
F = rng.dirichlet(np.ones(6), 4)
alpha = rng.dirichlet(np.ones(4))
center = density.weighted_kl_center(F, alpha)
numeric = weighted_kl_minimizer(F, alpha)
print("total variation between mixture and minimizer:", 0.5 * np.abs(center - numeric).sum())

# the JSD of the mixture weights is concave; its maximizer gives the
# center that minimizes the worst-case KL from the data
c, a, info = density.kl_center_maxjsd(F)
print("max-JSD weights:", np.round(a, 4), " JSD =", round(info["jsd"], 6))
print("worst KL to the max-JSD center:", density.kl_p_divergence(F, c, np.inf))
print("worst KL to the uniform mixture:", density.kl_p_divergence(F, F.mean(axis=0), np.inf))

# several data densities are equidistant from the center; the others are
# inactive (zero weight) and closer
print("KL(f_i, center):", np.round([density.kl_divergence(fi, c) for fi in F], 6))
