"""Reconstruction metrics."""

import numpy as np

from .errors import DimensionError
from .sdl_density import sparsity_measure
from .sdl_spd import mean_airm_error


def density_mse(F, G, W, scales=None):
    """Per-sample mean squared error of reconstructed densities.

    With ``scales`` (the total intensity of each original image) both the
    data pmf and its reconstruction are multiplied back to intensities
    before comparison, since a pmf only determines an image up to scale.
    """
    F = np.asarray(F, dtype=float)
    R = np.asarray(W, dtype=float) @ np.asarray(G, dtype=float)
    if scales is not None:
        s = np.asarray(scales, dtype=float).reshape(-1, 1)
        if s.shape[0] != F.shape[0]:
            raise DimensionError(f"{s.shape[0]} scales for {F.shape[0]} samples")
        F, R = F * s, R * s
    return np.mean((R - F) ** 2, axis=1)


__all__ = ["density_mse", "mean_airm_error", "sparsity_measure"]
