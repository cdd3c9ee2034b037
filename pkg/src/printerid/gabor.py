"""Gabor filter bank: 3 scales x 2 orientations (0 and 90 degrees), fixed
10x10 kernels. The two orientations of a scale are folded into a single
energy plane so each letter yields exactly 3 response planes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .config import PipelineConfig


@dataclass(frozen=True)
class GaborBank:
    wavelengths: tuple[float, ...]
    sigma_ratio: float
    aspect: float
    phase: float
    size: int
    kernels: np.ndarray      # (n_scales, 2, size, size), orientation 0 then 90

    @property
    def n_scales(self) -> int:
        return len(self.wavelengths)


def _kernel(size: int, wavelength: float, sigma: float, gamma: float,
            psi: float, theta: float) -> np.ndarray:
    c = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    xg, yg = np.meshgrid(c, c)
    xr = xg * np.cos(theta) + yg * np.sin(theta)
    yr = -xg * np.sin(theta) + yg * np.cos(theta)
    k = np.exp(-(xr ** 2 + (gamma * yr) ** 2) / (2.0 * sigma ** 2)) \
        * np.cos(2.0 * np.pi * xr / wavelength + psi)
    return k - k.mean()     # zero mean: constant input gives zero response


def build_bank(config: PipelineConfig) -> GaborBank:
    w = tuple(config.gabor_wavelengths)
    if any(x <= 0 for x in w) or list(w) != sorted(w) or len(set(w)) != len(w):
        raise ValueError("gabor wavelengths must be positive and strictly increasing")
    kernels = np.empty((len(w), 2, config.gabor_size, config.gabor_size))
    for s, lam in enumerate(w):
        sigma = config.gabor_sigma_ratio * lam
        for o, theta in enumerate((0.0, np.pi / 2.0)):
            kernels[s, o] = _kernel(config.gabor_size, lam, sigma,
                                    config.gabor_aspect, config.gabor_phase, theta)
    return GaborBank(w, config.gabor_sigma_ratio, config.gabor_aspect,
                     config.gabor_phase, config.gabor_size, kernels)


def scale_response(plane: np.ndarray, bank: GaborBank, scale: int) -> np.ndarray:
    """Orientation-folded energy plane sqrt(conv0^2 + conv90^2) at one scale.

    Convolution uses replicate padding and preserves the plane's shape; the
    plane must be at least kernel-sized.
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.shape[0] < bank.size or plane.shape[1] < bank.size:
        raise ValueError(
            f"plane {plane.shape} smaller than the {bank.size}x{bank.size} Gabor support"
        )
    # anchoring to one sample is a no-op for zero-mean kernels but makes
    # constant offsets cancel before convolution, so integer gray shifts of
    # integer planes leave the response bit-identical
    plane = plane - plane.flat[0]
    r0 = ndimage.convolve(plane, bank.kernels[scale, 0], mode="nearest")
    r90 = ndimage.convolve(plane, bank.kernels[scale, 1], mode="nearest")
    return np.hypot(r0, r90)
