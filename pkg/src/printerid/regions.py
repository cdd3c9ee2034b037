"""Per-letter region segmentation.

Each letter bbox is split on its (smoothed, bimodal) intensity histogram into
Flat ink, Edge transition and Background paper, using multiplicative
thresholds on the mean of the two histogram peaks. Flat pixels that touch the
edge region are then excluded so downstream texture stats never mix the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .letters import LetterBox

FLAT, EDGE, BACKGROUND, EXCLUDED = 0, 1, 2, 3

MIN_LETTER_BBOX_AREA = 25
PEAK_MIN_SEPARATION = 32
_SMOOTH_RADIUS = 2


@dataclass(frozen=True)
class LetterRegion:
    box: LetterBox
    labels: np.ndarray        # (h, w) uint8 of FLAT/EDGE/BACKGROUND/EXCLUDED
    mu: float                 # mean of the two peak intensities
    peaks: tuple[int, int]

    def mask(self, label: int) -> np.ndarray:
        return self.labels == label


def letter_histogram(img: np.ndarray, box: LetterBox) -> np.ndarray:
    """256-bin intensity histogram of the bbox interior (float counts)."""
    x, y, w, h = box.bbox
    ih, iw = img.shape
    if x < 0 or y < 0 or x + w > iw or y + h > ih:
        raise ValueError(f"letter bbox {box.bbox} falls outside the {iw}x{ih} image")
    patch = img[y:y + h, x:x + w]
    return np.bincount(patch.ravel(), minlength=256).astype(np.float64)


def smooth_histogram(hist: np.ndarray) -> np.ndarray:
    """Size-5 mean filter with replicate padding at both ends."""
    padded = np.concatenate([hist[:1], hist[:1], hist, hist[-1:], hist[-1:]])
    return np.convolve(padded, np.full(5, 0.2), mode="valid")


def _local_maxima(hist: np.ndarray) -> list[int]:
    idx = []
    n = len(hist)
    for i in range(n):
        if hist[i] <= 0:
            continue
        left_ok = i == 0 or hist[i] >= hist[i - 1]
        right_ok = i == n - 1 or hist[i] >= hist[i + 1]
        if left_ok and right_ok:
            idx.append(i)
    return idx


def find_two_peaks(hist: np.ndarray) -> tuple[int, int] | None:
    """Locations of the two highest local maxima at least PEAK_MIN_SEPARATION
    apart, as (dark, light). Ties prefer larger separation, then lower
    intensities. Returns None when the histogram is effectively unimodal."""
    maxima = _local_maxima(hist)
    best = None
    best_key = None
    for a in range(len(maxima)):
        for b in range(a + 1, len(maxima)):
            i, j = maxima[a], maxima[b]
            if j - i < PEAK_MIN_SEPARATION:
                continue
            hi, hj = hist[i], hist[j]
            key = (max(hi, hj), min(hi, hj), j - i, -i, -j)
            if best_key is None or key > best_key:
                best_key = key
                best = (i, j)
    return best


def segment_regions(
    img: np.ndarray, box: LetterBox, peaks: tuple[int, int],
    alpha: float = 0.71, beta: float = 1.52,
) -> LetterRegion:
    """Label every bbox pixel: Flat if I <= alpha*mu, Edge if alpha*mu < I <= beta*mu,
    else Background, with mu the mean of the two peak intensities."""
    p_dark, p_light = peaks
    if not p_dark < p_light:
        raise ValueError(f"peaks must satisfy dark < light, got {peaks}")
    mu = (p_dark + p_light) / 2.0
    x, y, w, h = box.bbox
    patch = img[y:y + h, x:x + w].astype(np.float64)
    labels = np.full((h, w), BACKGROUND, dtype=np.uint8)
    labels[patch <= beta * mu] = EDGE
    labels[patch <= alpha * mu] = FLAT
    return LetterRegion(box, labels, mu, (int(p_dark), int(p_light)))


def remove_flat_border(region: LetterRegion) -> LetterRegion:
    """Relabel Flat pixels with any Edge pixel in their 3x3 neighborhood as
    Excluded, in one simultaneous pass. Edge pixels are left untouched."""
    labels = region.labels.copy()
    edge = labels == EDGE
    near_edge = ndimage.binary_dilation(edge, structure=np.ones((3, 3), dtype=bool))
    labels[(labels == FLAT) & near_edge] = EXCLUDED
    return LetterRegion(region.box, labels, region.mu, region.peaks)
