"""Letter candidate extraction: Otsu binarization, 8-connected components,
median-area filtering. No OCR; a "letter" is any ink blob of plausible size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateImage
from .image_io import ensure_gray

_STRUCT8 = np.ones((3, 3), dtype=bool)

# Ink-mass bounds relative to the page median component area.
AREA_LOWER_FACTOR = 0.5
AREA_UPPER_FACTOR = 4.0


@dataclass(frozen=True)
class Component:
    bbox: tuple[int, int, int, int]   # x, y, w, h
    area: int                         # foreground pixel count
    mask: np.ndarray                  # (h, w) bool, local to bbox

    def pixels(self) -> np.ndarray:
        """Foreground coordinates as (n, 2) array of (y, x) in page coords."""
        ys, xs = np.nonzero(self.mask)
        x, y, _, _ = self.bbox
        return np.column_stack([ys + y, xs + x])


@dataclass(frozen=True)
class LetterBox:
    bbox: tuple[int, int, int, int]
    area: int
    index: int                        # raster order of bbox origin on the page


def otsu_threshold(img: np.ndarray) -> int:
    """Threshold t maximizing between-class variance; foreground is intensity <= t."""
    ensure_gray(img)
    counts = np.bincount(img.ravel(), minlength=256).astype(np.float64)
    total = counts.sum()
    p = counts / total
    omega0 = np.cumsum(p)[:-1]            # class {<= t}, t = 0..254
    omega1 = 1.0 - omega0
    cum_mean = np.cumsum(p * np.arange(256))[:-1]
    grand = cum_mean[-1] + p[255] * 255
    valid = (omega0 > 0) & (omega1 > 0)
    sigma_b = np.zeros(255)
    mu0 = np.where(valid, cum_mean / np.where(valid, omega0, 1.0), 0.0)
    mu1 = np.where(valid, (grand - cum_mean) / np.where(valid, omega1, 1.0), 0.0)
    sigma_b[valid] = (omega0 * omega1 * (mu0 - mu1) ** 2)[valid]
    if not np.any(sigma_b > 0):
        raise DegenerateImage("image has no foreground/background split (constant intensity)")
    return int(np.argmax(sigma_b))


def binarize(img: np.ndarray) -> np.ndarray:
    """Boolean ink mask: True where intensity <= the Otsu threshold."""
    return img <= otsu_threshold(img)


def connected_components(mask: np.ndarray) -> list[Component]:
    """8-connected foreground components, sorted by bbox raster order."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("binary image has no foreground pixels")
    labels, n = ndimage.label(mask, structure=_STRUCT8)
    comps = []
    for i, sl in enumerate(ndimage.find_objects(labels, n)):
        if sl is None:
            continue
        local = labels[sl] == (i + 1)
        y, x = sl[0].start, sl[1].start
        h, w = local.shape
        comps.append(Component((x, y, w, h), int(local.sum()), local))
    comps.sort(key=lambda c: (c.bbox[1], c.bbox[0], c.bbox[3], c.bbox[2]))
    return comps


def filter_components(comps: list[Component]) -> list[LetterBox]:
    """Keep components with area in [0.5, 4] x median area (inclusive) and
    assign raster-order indexes. Empty result means the page has no usable
    letters and should be skipped."""
    if not comps:
        raise ValueError("filter_components requires a nonempty component list")
    areas = np.array([c.area for c in comps], dtype=np.float64)
    med = float(np.median(areas))
    lo, hi = AREA_LOWER_FACTOR * med, AREA_UPPER_FACTOR * med
    survivors = [c for c in comps if lo <= c.area <= hi]
    survivors.sort(key=lambda c: (c.bbox[1], c.bbox[0], c.bbox[3], c.bbox[2]))
    return [LetterBox(c.bbox, c.area, i) for i, c in enumerate(survivors)]
