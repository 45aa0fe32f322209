"""
Sparse codes of densities without a sparsity penalty
====================================================

Coding a density as a mixture of atoms by minimizing KL alone already
produces zero weights. At the optimum every active atom has the same
partial derivative, and inactive atoms have larger ones. Small
dictionaries can still give fully dense optimal codes.
"""

import numpy as np

from infosdl import SdlConfig, kkt_report, learn_density, sparse_code_density, sparsity_measure

rng = np.random.default_rng(2)

# a dictionary of 12 random atoms over 20 bins and 30 random data densities
G = rng.dirichlet(np.ones(20), 12)
F = rng.dirichlet(np.full(20, 0.5), 30)
W = sparse_code_density(F, G, SdlConfig(num_atoms=12, tol=1e-12))
print("sparsity (% of weights <= 0.01):", sparsity_measure(W))
print("nonzero weights per row:", (W > 0.01).sum(axis=1))

# optimality structure: equal derivatives on the active set, none smaller outside
rep = kkt_report(F, G, W)
print("max relative spread:", np.max(rep.spread / np.abs(rep.dual)))
print("min relative slack:", np.min(rep.slack / np.abs(rep.dual)))
print("objective", rep.objective, "<= surrogate bound", rep.bound)

# with only four atoms some optimal rows keep every weight above 0.01
G4 = rng.dirichlet(np.ones(20), 4)
W4 = sparse_code_density(F, G4, SdlConfig(num_atoms=4, tol=1e-12))
print("rows with no weight <= 0.01 using four atoms:", int(np.sum(W4.min(axis=1) > 0.01)), "of 30")

# learning: densities that are exactly atoms of a planted dictionary are
# coded one-hot once the dictionary is recovered
planted = np.zeros((8, 32))
for j in range(8):
    planted[j, 4 * j:4 * j + 4] = rng.dirichlet(np.ones(4))
data = planted[rng.integers(8, size=64)]
atoms, codes, report = learn_density(data, SdlConfig(num_atoms=8, tol=1e-12))
print("objective trace:", np.round(report.objective_trace[:6], 8), "...")
print("final objective:", report.objective, " sparsity:", report.sparsity)
