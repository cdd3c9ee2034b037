"""Synthetic printed pages from virtual printers with controllable intrinsic
signatures, used as ground truth for end-to-end verification.

A virtual printer's signature combines boundary-intensity jitter, signed dot
gain (morphological thickening/thinning), sinusoidal banding across rows,
background speckle, and its toner darkness. Flat-ink and paper noise scale
with the boundary jitter (0.3x and 0.1x), so a profile with all magnitudes
zero prints an exactly two-valued patch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

_STRUCT8 = np.ones((3, 3), dtype=bool)

INK_NOISE_RATIO = 0.1      # flat-ink noise sigma as a fraction of edge jitter
PAPER_NOISE_RATIO = 0.04   # paper noise sigma as a fraction of edge jitter
SPECKLE_SIGMA = 15.0

# Printed noise is band-limited (toner scatter plus scanner optics), not
# white: every noise field is low-passed at this correlation scale, which is
# what keeps texture statistics stable under small resampling rotations.
NOISE_CORRELATION_SIGMA = 0.8

# Scanner point-spread emulation: ink coverage is low-passed at this scale,
# giving every boundary the ~1px midtone transition a real scan has. Without
# it the pages are not band-limited and even tiny resampling rotations would
# shift texture statistics wholesale.
SCAN_PSF_SIGMA = 0.7


def _noise_gain(corr_sigma: float) -> float:
    impulse = np.zeros((33, 33))
    impulse[16, 16] = 1.0
    kernel = ndimage.gaussian_filter(impulse, corr_sigma)
    return float(np.sqrt((kernel ** 2).sum()))


_NOISE_GAIN = _noise_gain(NOISE_CORRELATION_SIGMA)


def _smooth_noise(rng, shape, sigma: float) -> np.ndarray:
    """Zero-mean correlated noise with pointwise standard deviation sigma."""
    white = rng.normal(0.0, 1.0, shape)
    return ndimage.gaussian_filter(white, NOISE_CORRELATION_SIGMA) * (sigma / _NOISE_GAIN)

GLYPH_AREA_LO = 230        # ideal glyph ink area band; hi <= 2*lo keeps every
GLYPH_AREA_HI = 450        # glyph inside the median-area survival window
GLYPH_MIN_SIDE = 12


@dataclass(frozen=True)
class PrinterProfile:
    id: str
    edge_noise_sigma: float = 0.0
    dot_gain: float = 0.0
    banding_period: float = 0.0
    banding_amplitude: float = 0.0
    speckle_density: float = 0.0
    toner_darkness: float = 30.0
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("edge_noise_sigma", "banding_period", "banding_amplitude",
                     "speckle_density", "toner_darkness"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.banding_amplitude > 0 and self.banding_period < 2:
            raise ValueError("banding_period must be >= 2 when banding_amplitude > 0")
        if not 0 <= self.toner_darkness <= 80:
            raise ValueError("toner_darkness must be in [0, 80]")

    def to_dict(self) -> dict:
        return {
            "id": self.id, "edge_noise_sigma": self.edge_noise_sigma,
            "dot_gain": self.dot_gain, "banding_period": self.banding_period,
            "banding_amplitude": self.banding_amplitude,
            "speckle_density": self.speckle_density,
            "toner_darkness": self.toner_darkness, "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PrinterProfile":
        return cls(**d)


@dataclass(frozen=True)
class GlyphTruth:
    index: int
    bbox: tuple[int, int, int, int]   # x, y, w, h in page coords
    ink_count: int


@dataclass(frozen=True)
class SyntheticPage:
    image: np.ndarray
    truth: tuple[GlyphTruth, ...]
    label: str


@dataclass(frozen=True)
class PageLayout:
    canvas: tuple[int, int] = (3508, 2480)   # (h, w): A4 at 300 dpi
    cell: int = 96
    jitter: int = 10
    margin: int = 150
    size_range: tuple[int, int] = (18, 40)

    def grid(self) -> tuple[int, int]:
        h, w = self.canvas
        return ((h - 2 * self.margin) // self.cell, (w - 2 * self.margin) // self.cell)

    def __post_init__(self):
        lo, hi = self.size_range
        if not (GLYPH_MIN_SIDE <= lo <= hi <= 60):
            raise ValueError("size_range must lie within [12, 60]")
        if self.cell < hi + 2 * self.jitter + 10:
            raise ValueError("cell too small for the glyph size range plus jitter")


def _bar(canvas_side: int, rng, anchor=None) -> np.ndarray:
    mask = np.zeros((canvas_side, canvas_side), dtype=bool)
    tw = int(rng.integers(3, 6))
    length = int(rng.integers(max(tw + 1, canvas_side // 2), canvas_side + 1))
    horizontal = bool(rng.integers(0, 2))
    span_y, span_x = (tw, length) if horizontal else (length, tw)
    if anchor is None:
        y0 = int(rng.integers(0, canvas_side - span_y + 1))
        x0 = int(rng.integers(0, canvas_side - span_x + 1))
    else:
        ay, ax = anchor
        y0 = int(np.clip(ay - rng.integers(0, span_y), 0, canvas_side - span_y))
        x0 = int(np.clip(ax - rng.integers(0, span_x), 0, canvas_side - span_x))
    mask[y0:y0 + span_y, x0:x0 + span_x] = True
    return mask


def _arc(canvas_side: int, rng, anchor=None) -> np.ndarray:
    r = float(rng.integers(canvas_side // 4, canvas_side // 2 + 1))
    t = float(rng.integers(3, 6))
    a0 = rng.uniform(0, 2 * math.pi)
    span = rng.uniform(math.pi / 2, 2 * math.pi)
    if anchor is None:
        cy = rng.uniform(0, canvas_side)
        cx = rng.uniform(0, canvas_side)
    else:
        am = a0 + rng.uniform(0, span)
        cy = anchor[0] - r * math.sin(am)
        cx = anchor[1] - r * math.cos(am)
    yy, xx = np.mgrid[0:canvas_side, 0:canvas_side]
    dist = np.hypot(yy - cy, xx - cx)
    ang = np.arctan2(yy - cy, xx - cx) % (2 * math.pi)
    in_span = ((ang - a0) % (2 * math.pi)) <= span
    return (np.abs(dist - r) <= t / 2) & in_span


def gen_glyph(rng, size_range=(18, 40)) -> np.ndarray:
    """Random connected stroke figure (bars and arcs), cropped tight.

    The ink area always lands in [GLYPH_AREA_LO, GLYPH_AREA_HI], which keeps
    any page of such glyphs entirely inside the letter filter's median-area
    window.
    """
    lo, hi = size_range
    if not (GLYPH_MIN_SIDE <= lo <= hi <= 60):
        raise ValueError(f"size_range must lie within [{GLYPH_MIN_SIDE}, 60], got {size_range}")
    for _ in range(500):
        side = int(rng.integers(lo, hi + 1))
        mask = _bar(side, rng) if rng.integers(0, 2) else _arc(side, rng)
        if not mask.any():
            continue
        for _k in range(int(rng.integers(1, 5))):
            ys, xs = np.nonzero(mask)
            pick = int(rng.integers(0, len(ys)))
            anchor = (int(ys[pick]), int(xs[pick]))
            stroke = _bar(side, rng, anchor) if rng.integers(0, 2) else _arc(side, rng, anchor)
            mask |= stroke
        ys, xs = np.nonzero(mask)
        mask = mask[ys.min():ys.max() + 1, xs.min():xs.max() + 1]
        area = int(mask.sum())
        h, w = mask.shape
        if not (GLYPH_AREA_LO <= area <= GLYPH_AREA_HI):
            continue
        if min(h, w) < GLYPH_MIN_SIDE or max(h, w) > hi:
            continue
        _, n = ndimage.label(mask, structure=_STRUCT8)
        if n == 1:
            return mask
    raise RuntimeError("glyph generation failed to satisfy constraints in 500 attempts")


def _apply_dot_gain(mask: np.ndarray, gain: float, rng) -> np.ndarray:
    if gain == 0:
        return mask
    whole = int(math.floor(abs(gain)))
    frac = abs(gain) - whole
    grow = gain > 0
    m = mask
    for _ in range(whole):
        m = ndimage.binary_dilation(m, _STRUCT8) if grow else ndimage.binary_erosion(m, _STRUCT8)
    if frac > 0:
        if grow:
            candidates = ndimage.binary_dilation(m, _STRUCT8) & ~m
        else:
            candidates = m & ~ndimage.binary_erosion(m, _STRUCT8)
        ys, xs = np.nonzero(candidates)
        take = rng.random(len(ys)) < frac
        m = m.copy()
        m[ys[take], xs[take]] = grow
    return m


def render_letter(glyph: np.ndarray, profile: PrinterProfile, rng,
                  row_offset: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Print one ideal glyph: returns (uint8 patch, ink mask in patch coords).

    The patch pads the glyph enough to hold dot gain and the boundary band.
    `row_offset` is the patch's top row on the page so banding stays
    page-coherent.
    """
    pad = int(math.ceil(max(0.0, profile.dot_gain))) + 2
    h, w = glyph.shape
    mask = np.zeros((h + 2 * pad, w + 2 * pad), dtype=bool)
    mask[pad:pad + h, pad:pad + w] = glyph
    mask = _apply_dot_gain(mask, profile.dot_gain, rng)

    shape = mask.shape
    coverage = ndimage.gaussian_filter(mask.astype(np.float64), SCAN_PSF_SIGMA)
    patch = 255.0 + coverage * (profile.toner_darkness - 255.0)
    paper_sigma = PAPER_NOISE_RATIO * profile.edge_noise_sigma
    ink_sigma = INK_NOISE_RATIO * profile.edge_noise_sigma
    if paper_sigma > 0:
        patch += _smooth_noise(rng, shape, paper_sigma)
    if ink_sigma > 0:
        patch[mask] += _smooth_noise(rng, shape, ink_sigma)[mask]

    if profile.edge_noise_sigma > 0:
        band = (ndimage.binary_dilation(mask, _STRUCT8)
                & ~ndimage.binary_erosion(mask, _STRUCT8))
        patch[band] += _smooth_noise(rng, shape, profile.edge_noise_sigma)[band]

    if profile.banding_amplitude > 0:
        rows = np.arange(shape[0]) + row_offset
        wave = profile.banding_amplitude * np.sin(2 * np.pi * rows / profile.banding_period)
        patch += coverage * wave[:, None]

    if profile.speckle_density > 0:
        dots = (rng.random(shape) < profile.speckle_density) & ~mask
        patch[dots] = profile.toner_darkness + rng.normal(0.0, SPECKLE_SIGMA, int(dots.sum()))

    return np.clip(np.rint(patch), 0, 255).astype(np.uint8), mask


def apply_signature(glyph: np.ndarray, profile: PrinterProfile, rng) -> np.ndarray:
    """Grayscale letter patch carrying the profile's intrinsic signature."""
    patch, _ = render_letter(glyph, profile, rng)
    return patch


def gen_page(profile: PrinterProfile, n_letters: int, layout: PageLayout, rng) -> SyntheticPage:
    """Glyphs on a jittered grid; records each glyph's ink bbox and pixel count."""
    rows, cols = layout.grid()
    if n_letters > rows * cols:
        raise ValueError(f"layout holds {rows * cols} letters, requested {n_letters}")
    h, w = layout.canvas
    page = np.full((h, w), 255, dtype=np.uint8)
    truth = []
    placed_rects = []
    for i in range(n_letters):
        r, c = divmod(i, cols)
        glyph = gen_glyph(rng, layout.size_range)
        oy = layout.margin + r * layout.cell + int(rng.integers(-layout.jitter, layout.jitter + 1))
        ox = layout.margin + c * layout.cell + int(rng.integers(-layout.jitter, layout.jitter + 1))
        gy = oy + (layout.cell - glyph.shape[0]) // 2
        gx = ox + (layout.cell - glyph.shape[1]) // 2
        pad = int(math.ceil(max(0.0, profile.dot_gain))) + 2
        patch, mask = render_letter(glyph, profile, rng, row_offset=gy - pad)
        py, px = gy - pad, gx - pad
        ph, pw = patch.shape
        page[py:py + ph, px:px + pw] = patch
        placed_rects.append((py, px, ph, pw))
        ys, xs = np.nonzero(mask)
        bx, by = px + xs.min(), py + ys.min()
        truth.append(GlyphTruth(i, (int(bx), int(by),
                                    int(xs.max() - xs.min() + 1),
                                    int(ys.max() - ys.min() + 1)),
                                int(mask.sum())))
    for a in range(len(placed_rects)):
        for b in range(a + 1, len(placed_rects)):
            ya, xa, ha, wa = placed_rects[a]
            yb, xb, hb, wb = placed_rects[b]
            if ya < yb + hb and yb < ya + ha and xa < xb + wb and xb < xa + wa:
                raise AssertionError("glyph patches overlap; layout cell too small")

    if profile.speckle_density > 0:
        outside = np.ones((h, w), dtype=bool)
        for py, px, ph, pw in placed_rects:
            outside[py:py + ph, px:px + pw] = False
        dots = (rng.random((h, w)) < profile.speckle_density) & outside
        vals = profile.toner_darkness + rng.normal(0.0, SPECKLE_SIGMA, int(dots.sum()))
        page[dots] = np.clip(np.rint(vals), 0, 255).astype(np.uint8)

    return SyntheticPage(page, tuple(truth), profile.id)


def rotate_page(img: np.ndarray, degrees: float) -> np.ndarray:
    """Bilinear rotation about the page center, white fill, same shape."""
    out = ndimage.rotate(img.astype(np.float64), degrees, reshape=False,
                         order=1, mode="constant", cval=255.0)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def default_profiles() -> list[PrinterProfile]:
    """Four virtual printers, each dominated by a different artifact.

    Speckle densities stay low enough that glyphs, not dots, set the median
    component area of a 200-letter page.
    """
    return [
        PrinterProfile("vp-edge", edge_noise_sigma=22.0, dot_gain=1.0,
                       banding_period=11.0, banding_amplitude=18.0,
                       speckle_density=5e-6, toner_darkness=20.0, rng_seed=11),
        PrinterProfile("vp-band", edge_noise_sigma=12.0, dot_gain=1.2,
                       banding_period=7.0, banding_amplitude=24.0,
                       speckle_density=5e-6, toner_darkness=45.0, rng_seed=12),
        PrinterProfile("vp-gain", edge_noise_sigma=10.0, dot_gain=2.2,
                       banding_period=31.0, banding_amplitude=10.0,
                       speckle_density=5e-6, toner_darkness=65.0, rng_seed=13),
        PrinterProfile("vp-speck", edge_noise_sigma=16.0, dot_gain=1.4,
                       banding_period=19.0, banding_amplitude=14.0,
                       speckle_density=8e-6, toner_darkness=5.0, rng_seed=14),
    ]


def same_model_profiles() -> list[PrinterProfile]:
    """Two near-twins differing only by 10% in edge jitter, plus two distinct
    printers, emulating the same-brand-and-model scenario."""
    twin_a = PrinterProfile("vp-twin-a", edge_noise_sigma=20.0, dot_gain=1.2,
                            banding_period=13.0, banding_amplitude=16.0,
                            speckle_density=5e-6, toner_darkness=30.0, rng_seed=21)
    twin_b = PrinterProfile("vp-twin-b", edge_noise_sigma=22.0, dot_gain=1.2,
                            banding_period=13.0, banding_amplitude=16.0,
                            speckle_density=5e-6, toner_darkness=30.0, rng_seed=22)
    others = [p for p in default_profiles() if p.id in ("vp-band", "vp-gain")]
    return [twin_a, twin_b] + others


PROFILE_PRESETS = {
    "default4": default_profiles,
    "same-model": same_model_profiles,
}
