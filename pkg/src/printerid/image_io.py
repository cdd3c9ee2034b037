"""Page image loading, saving and margin cropping.

Images are plain numpy arrays: shape (h, w), dtype uint8, 0 = black ink and
255 = white paper. Multi-channel inputs are collapsed to gray by the
unweighted channel mean, rounding half up.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

MIN_CROPPED_SIDE = 32


def ensure_gray(img: np.ndarray) -> np.ndarray:
    if not isinstance(img, np.ndarray) or img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError("expected a 2-D uint8 grayscale array")
    if img.size == 0:
        raise ValueError("image has zero area")
    return img


def to_gray(channels: np.ndarray) -> np.ndarray:
    """Collapse an (h, w, c) uint8 array to gray by channel mean, half-up rounding."""
    if channels.ndim == 2:
        return channels.astype(np.uint8)
    mean = channels.astype(np.float64).mean(axis=2)
    return np.floor(mean + 0.5).astype(np.uint8)


def load_page(path) -> np.ndarray:
    """Load an 8-bit raster (PNG/PGM and friends) as a grayscale page.

    Single-channel input is preserved bit-exactly; color input is averaged
    over its color channels (alpha dropped). Raises OSError for unreadable
    files and ValueError for unsupported or zero-area rasters.
    """
    with Image.open(path) as im:
        if im.mode == "L":
            arr = np.asarray(im, dtype=np.uint8)
        elif im.mode == "1":
            arr = np.asarray(im, dtype=np.uint8) * 255
        elif im.mode in ("LA", "RGB", "RGBA", "P"):
            rgb = im.convert("RGBA") if "A" in im.mode or im.mode == "P" else im
            chans = np.asarray(rgb.convert("RGB") if rgb.mode != "RGB" else rgb, dtype=np.uint8)
            arr = to_gray(chans)
        else:
            raise ValueError(f"{path}: unsupported raster mode {im.mode!r}, need 8-bit data")
    if arr.size == 0:
        raise ValueError(f"{path}: zero-area image")
    return arr


def save_page(img: np.ndarray, path) -> None:
    """Write a grayscale page losslessly (format chosen from the extension)."""
    ensure_gray(img)
    Image.fromarray(img, mode="L").save(path)


def crop_margins(img: np.ndarray, fraction: float) -> np.ndarray:
    """Remove floor(fraction * dim) pixels from each side; fraction 0 is identity."""
    ensure_gray(img)
    if not 0.0 <= fraction <= 0.25:
        raise ValueError(f"crop fraction must be in [0, 0.25], got {fraction}")
    if fraction == 0.0:
        return img
    h, w = img.shape
    dy = int(fraction * h)
    dx = int(fraction * w)
    out = img[dy:h - dy, dx:w - dx]
    if out.shape[0] < MIN_CROPPED_SIDE or out.shape[1] < MIN_CROPPED_SIDE:
        raise ValueError(
            f"cropping {fraction} of a {w}x{h} image leaves {out.shape[1]}x{out.shape[0]}, "
            f"need at least {MIN_CROPPED_SIDE}x{MIN_CROPPED_SIDE}"
        )
    return out
