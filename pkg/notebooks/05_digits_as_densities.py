"""
Handwritten digits as probability mass functions
================================================

Each image becomes a density over its pixels (intensity divided by total
intensity). A 20-atom dictionary codes 100 digits; reconstructions are
rescaled by each image's total intensity before measuring squared error.
Requires scikit-learn for the digit images.
"""

import numpy as np
from scipy import ndimage
from sklearn.datasets import load_digits

from infosdl import SdlConfig, image_to_pmf, learn_density
from infosdl.metrics import density_mse

digits = load_digits()
rng = np.random.default_rng(0)
idx = np.concatenate([rng.choice(np.flatnonzero(digits.target == c), 10, replace=False)
                      for c in range(10)])

# upsample the 8x8 images to 28x28 so that the pmfs have 784 bins
images = np.stack([np.clip(ndimage.zoom(im, 28 / 8, order=1), 0, None) / 16 for im in digits.images[idx]])
F = np.stack([image_to_pmf(im) for im in images])
scales = images.reshape(len(idx), -1).sum(axis=1)

G, W, report = learn_density(F, SdlConfig(num_atoms=20))
print("iterations:", report.iterations, " seconds:", round(report.wall_time, 1))
print("sparsity:", report.sparsity)
print("scale-restored MSE:", density_mse(F, G, W, scales).mean())

# codes cluster by class: the atom with the largest weight per digit
top = np.argmax(W, axis=1)
for c in range(10):
    print(c, np.bincount(top[digits.target[idx] == c], minlength=20))
