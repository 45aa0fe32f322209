"""Image features: probability mass functions and covariance descriptors.

Images are 2-D arrays of nonnegative intensities indexed ``[y, x]``.
Derivatives use central differences with replicated borders:
``[-1/2, 0, 1/2]`` for first and ``[1, -2, 1]`` for second derivatives.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateInputError, DimensionError, InvariantError, ParameterError
from .spd import make_spd

BANKS = ("gradient5", "texture_eth80")
SIGMA_SCALE = 1e-6
SIGMA_FLOOR = 1e-6
MIN_MASK_PIXELS = 36
LOG_SIGMA = 1.0
LOG_RADIUS = 2

_D1 = np.array([-0.5, 0.0, 0.5])
_D2 = np.array([1.0, -2.0, 1.0])
# separable texture kernels H1 H1^T, H2 H2^T, H3 H3^T
_TEXTURE = [np.outer(h, h) for h in
            (np.array([1.0, 2.0, 1.0]), np.array([-1.0, 0.0, 1.0]), np.array([-1.0, 2.0, -1.0]))]


@dataclass
class FeatureConfig:
    """Descriptor extraction settings.

    ``sigma`` is the regularizer added to every descriptor; when None it is
    ``1e-6`` times the mean diagonal of the image's descriptors, or
    ``1e-6`` outright when that mean is zero.
    """

    block_size: int = 32
    sigma: float = None
    filter_bank: str = "gradient5"

    def __post_init__(self):
        if int(self.block_size) < 1:
            raise ParameterError(f"block_size must be >= 1, got {self.block_size}")
        if self.sigma is not None and not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if self.filter_bank not in BANKS:
            raise ParameterError(f"filter_bank must be one of {BANKS}")


def check_image(img):
    """Validate a grayscale image and return it as a float array."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2 or img.size == 0:
        raise InvariantError(f"image must be a non-empty 2-D array, got shape {img.shape}")
    if not np.all(np.isfinite(img)) or np.any(img < 0):
        raise InvariantError("image intensities must be finite and nonnegative")
    return img


def image_to_pmf(img):
    """Density over pixels, bin ``(y, x)`` holding ``I(x, y) / sum I`` (row-major).

    Examples
    --------
    >>> image_to_pmf([[1, 3], [0, 4]]).tolist()
    [0.125, 0.375, 0.0, 0.5]
    """
    img = check_image(img)
    total = img.sum()
    if not total > 0:
        raise DegenerateInputError("image has zero total intensity")
    f = img.ravel() / total
    return f / f.sum()


def _diff(img, kernel, axis):
    return ndimage.correlate1d(img, kernel, axis=axis, mode="nearest")


def _default_sigma(S):
    scale = float(np.mean(np.trace(S, axis1=-2, axis2=-1))) / S.shape[-1]
    return SIGMA_SCALE * scale if scale > 0 else SIGMA_FLOOR


def gradient_features(img):
    """Per-pixel 5-vectors ``(I, |I_x|, |I_y|, |I_xx|, |I_yy|)``, shape ``(H, W, 5)``."""
    img = check_image(img)
    return np.stack([img,
                     np.abs(_diff(img, _D1, 1)), np.abs(_diff(img, _D1, 0)),
                     np.abs(_diff(img, _D2, 1)), np.abs(_diff(img, _D2, 0))], axis=-1)


def gradient_covariance_descriptor(img, cfg=None):
    """Block scatter descriptors ``sum F F^T + sigma I`` on 5x5 SPD matrices.

    Derivatives are taken over the whole image; the image is then cut into
    non-overlapping ``block_size`` squares in row-major block order, and
    pixels past the last full block are dropped.

    Returns
    -------
    ndarray, shape (floor(H / b) * floor(W / b), 5, 5)
    """
    cfg = cfg or FeatureConfig()
    img = check_image(img)
    b = int(cfg.block_size)
    h, w = img.shape
    if h < b or w < b:
        raise DimensionError(f"image of size {w}x{h} is smaller than one {b}x{b} block")
    F = gradient_features(img)
    by, bx = h // b, w // b
    F = F[:by * b, :bx * b].reshape(by, b, bx, b, 5).transpose(0, 2, 1, 3, 4)
    F = F.reshape(by * bx, b * b, 5)
    S = np.einsum("npa,npb->nab", F, F)
    sigma = cfg.sigma if cfg.sigma is not None else _default_sigma(S)
    return make_spd(S, sigma)


def log_kernel(sigma=LOG_SIGMA, radius=LOG_RADIUS):
    """Discrete Laplacian-of-Gaussian kernel with its mean removed.

    Sampling the continuous kernel on a small support leaves a nonzero sum;
    subtracting the mean restores a zero response on constant images.
    """
    y, x = np.mgrid[-radius:radius + 1, -radius:radius + 1].astype(float)
    r2 = x ** 2 + y ** 2
    g = np.exp(-r2 / (2 * sigma ** 2))
    k = g / g.sum() * (r2 - 2 * sigma ** 2) / sigma ** 4
    return k - k.mean()


_LOG = log_kernel()


def texture_features(img):
    """Per-pixel 6-vectors of texture-filter, gradient and LoG responses, shape ``(H, W, 6)``.

    Channels: the three separable texture kernels ``H1 H1^T``,
    ``H2 H2^T``, ``H3 H3^T`` with ``H1 = [1, 2, 1]``, ``H2 = [-1, 0, 1]``,
    ``H3 = [-1, 2, -1]``; ``|I_x|`` and ``|I_y|``; and the magnitude of the
    Laplacian of Gaussian at scale 1 on a 5x5 support (see :func:`log_kernel`).
    """
    img = check_image(img)
    chans = [ndimage.correlate(img, k, mode="nearest") for k in _TEXTURE]
    chans += [np.abs(_diff(img, _D1, 1)), np.abs(_diff(img, _D1, 0))]
    chans.append(np.abs(ndimage.correlate(img, _LOG, mode="nearest")))
    return np.stack(chans, axis=-1)


def texture_covariance_descriptor(img, mask=None, cfg=None):
    """Centered covariance of the texture features over a mask, plus ``sigma I``.

    Parameters
    ----------
    img : array_like, shape (H, W)
    mask : array_like of bool, shape (H, W), optional
        Foreground pixels; the whole image when omitted. At least 36
        pixels are required.
    cfg : FeatureConfig, optional

    Returns
    -------
    ndarray, shape (6, 6)
    """
    cfg = cfg or FeatureConfig(filter_bank="texture_eth80")
    img = check_image(img)
    if mask is None:
        mask = np.ones(img.shape, dtype=bool)
    else:
        mask = np.asarray(mask) != 0
        if mask.shape != img.shape:
            raise DimensionError(f"mask shape {mask.shape} differs from image shape {img.shape}")
    count = int(mask.sum())
    if count < MIN_MASK_PIXELS:
        raise DegenerateInputError(f"mask selects {count} pixels, need at least {MIN_MASK_PIXELS}")
    V = texture_features(img)[mask]
    V = V - V.mean(axis=0)
    S = V.T @ V / (count - 1)
    sigma = cfg.sigma if cfg.sigma is not None else _default_sigma(S)
    return make_spd(S, sigma)
