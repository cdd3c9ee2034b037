"""Feature vector assembly and pooling.

Each usable letter yields a histogram block per (region in {Flat, Edge},
scale plane, channel): 13 channels (12 tetra-direction channels plus the
gradient-magnitude channel) of 59 uniform-pattern bins. With the 3-scale
Gabor bank that is 2*3*13*59 = 4602 dimensions; on the raw plane alone it is
2*13*59 = 1534. Every channel code is histogrammed at every stencil-valid
pixel of the region; a pixel whose center direction does not match a
direction channel contributes that channel's code 0. Blocks are normalized
to unit mass, or left all-zero when the region has no valid pixel.

Groups of n2 consecutive letters (page raster order) are averaged into
pooled samples; a trailing short group is discarded.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import letters, regions, texture
from .config import PipelineConfig
from .errors import LayoutMismatch
from .gabor import GaborBank, build_bank, scale_response
from .image_io import crop_margins

N_REGIONS = 2            # Flat, Edge


@dataclass(frozen=True)
class FeatureLayout:
    gabor: bool
    n_scales: int

    @property
    def dim(self) -> int:
        return N_REGIONS * self.n_scales * texture.N_CHANNELS * texture.N_BINS

    def descriptor(self) -> str:
        return (
            f"printerid-layout-v1|regions=F,E|scales={self.n_scales}"
            f"|gabor={'on' if self.gabor else 'off'}"
            f"|channels={texture.N_CHANNELS}|bins={texture.N_BINS}"
            f"|order=region,scale,channel,bin"
        )

    def layout_hash(self) -> str:
        return hashlib.sha256(self.descriptor().encode("utf-8")).hexdigest()

    def block_slice(self, region: int, scale: int, channel: int) -> slice:
        nb = texture.N_BINS
        i = ((region * self.n_scales + scale) * texture.N_CHANNELS + channel) * nb
        return slice(i, i + nb)

    @classmethod
    def for_config(cls, config: PipelineConfig) -> "FeatureLayout":
        return cls(config.gabor, len(config.gabor_wavelengths) if config.gabor else 1)


@dataclass(frozen=True)
class PooledSample:
    page_id: str
    group_index: int
    letter_count: int
    vector: np.ndarray
    label: str | None = None


@dataclass
class PageDiagnostics:
    page_id: str = ""
    n_components: int = 0
    n_letter_boxes: int = 0
    n_too_small: int = 0
    n_unimodal: int = 0
    n_sparse_region: int = 0
    n_features: int = 0
    n_groups: int = 0
    n_discarded_tail: int = 0
    warnings: list = field(default_factory=list)


def _channel_histograms(plane: np.ndarray, region_masks, offsets) -> list[np.ndarray]:
    """One (13, 59) unit-normalized block per region mask (zeros when empty)."""
    codes3, mag_codes, dirs = texture.ltrp_code_maps(plane, offsets)
    blocks = []
    for mask in region_masks:
        valid = texture.stencil_valid(mask)
        n = int(valid.sum())
        block = np.zeros((texture.N_CHANNELS, texture.N_BINS))
        if n > 0:
            u3 = texture.UNIFORM_LUT[codes3[:, valid]]                 # (3, n)
            ch = (dirs[valid] - 1) * 3 + np.arange(3)[:, None]         # (3, n)
            counts = np.bincount(
                (ch * texture.N_BINS + u3).ravel(), minlength=12 * texture.N_BINS
            ).astype(np.float64).reshape(12, texture.N_BINS)
            dir_counts = np.bincount(dirs[valid], minlength=5)
            for c in range(4):
                counts[3 * c:3 * c + 3, 0] += n - dir_counts[c + 1]
            mag_hist = np.bincount(
                texture.UNIFORM_LUT[mag_codes[valid]], minlength=texture.N_BINS
            ).astype(np.float64)
            block = np.vstack([counts, mag_hist[None, :]]) / n
        blocks.append(block)
    return blocks


def letter_feature(
    region: regions.LetterRegion,
    img: np.ndarray,
    bank: GaborBank | None,
    config: PipelineConfig,
) -> np.ndarray | None:
    """Feature vector for one segmented letter, or None when the letter is
    too sparse to contribute (fewer than min_region_pixels in Flat+Edge, or a
    bbox smaller than the Gabor support in Gabor mode)."""
    flat = region.mask(regions.FLAT)
    edge = region.mask(regions.EDGE)
    if int(flat.sum() + edge.sum()) < config.min_region_pixels:
        return None
    x, y, w, h = region.box.bbox
    if bank is not None and (h < bank.size or w < bank.size):
        return None
    patch = img[y:y + h, x:x + w].astype(np.float64)
    planes = (
        [scale_response(patch, bank, s) for s in range(bank.n_scales)]
        if bank is not None else [patch]
    )
    layout = FeatureLayout(bank is not None, len(planes))
    vec = np.zeros(layout.dim)
    for s, plane in enumerate(planes):
        for r, block in enumerate(_channel_histograms(plane, (flat, edge), config.neighborhood)):
            for c in range(texture.N_CHANNELS):
                vec[layout.block_slice(r, s, c)] = block[c]
    return vec


def poep(vectors: list[np.ndarray], n2: int) -> list[np.ndarray]:
    """Average consecutive disjoint groups of exactly n2 vectors; the trailing
    remainder (< n2) is dropped. Fewer than n2 vectors gives an empty list."""
    if n2 < 1:
        raise ValueError(f"n2 must be >= 1, got {n2}")
    out = []
    for start in range(0, len(vectors) - n2 + 1, n2):
        group = np.stack(vectors[start:start + n2])
        # mean of deviations from the first member: algebraically the group
        # mean, and exactly the member itself when all members coincide
        out.append(group[0] + (group - group[0]).mean(axis=0))
    return out


def extract_page(
    img: np.ndarray,
    page_id: str,
    config: PipelineConfig,
    bank: GaborBank | None = None,
    label: str | None = None,
) -> tuple[list[PooledSample], PageDiagnostics]:
    """Full per-page pipeline: crop, binarize, find letters, segment regions,
    extract letter features, pool groups of n2."""
    diag = PageDiagnostics(page_id=page_id)
    if config.gabor and bank is None:
        bank = build_bank(config)
    if config.crop_fraction > 0:
        img = crop_margins(img, config.crop_fraction)

    mask = letters.binarize(img)
    comps = letters.connected_components(mask)
    diag.n_components = len(comps)
    boxes = letters.filter_components(comps)
    diag.n_letter_boxes = len(boxes)

    vectors = []
    for box in boxes:
        x, y, w, h = box.bbox
        if w * h < regions.MIN_LETTER_BBOX_AREA:
            diag.n_too_small += 1
            continue
        hist = regions.smooth_histogram(regions.letter_histogram(img, box))
        peaks = regions.find_two_peaks(hist)
        if peaks is None:
            diag.n_unimodal += 1
            continue
        region = regions.segment_regions(img, box, peaks, config.alpha, config.beta)
        region = regions.remove_flat_border(region)
        vec = letter_feature(region, img, bank if config.gabor else None, config)
        if vec is None:
            diag.n_sparse_region += 1
            continue
        vectors.append(vec)
    diag.n_features = len(vectors)

    pooled = poep(vectors, config.n2)
    diag.n_groups = len(pooled)
    diag.n_discarded_tail = len(vectors) - diag.n_groups * config.n2
    if not pooled:
        diag.warnings.append(
            f"page {page_id}: {len(vectors)} usable letters < n2={config.n2}, page skipped"
        )
    samples = [
        PooledSample(page_id, i, config.n2, v, label) for i, v in enumerate(pooled)
    ]
    return samples, diag


# Feature file format: three hash-prefixed header lines (format tag, layout,
# canonical config JSON) then CSV rows `page_id,group_index,label,v0,...`.

FEATURE_FORMAT = "printerid-features v1"


def save_features(path, samples: list[PooledSample], config: PipelineConfig) -> str:
    layout = FeatureLayout.for_config(config)
    lines = [
        f"# {FEATURE_FORMAT}",
        f"# layout={layout.layout_hash()} dim={layout.dim}",
        f"# config={config.canonical_json()}",
    ]
    for s in sorted(samples, key=lambda s: (s.page_id, s.group_index)):
        if s.vector.shape != (layout.dim,):
            raise LayoutMismatch(
                f"sample {s.page_id}/{s.group_index} has dim {s.vector.shape[0]}, "
                f"layout expects {layout.dim}"
            )
        vals = ",".join(repr(float(v)) for v in s.vector)
        lines.append(f"{s.page_id},{s.group_index},{s.label or '?'},{vals}")
    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return layout.layout_hash()


def load_features(path) -> tuple[list[PooledSample], PipelineConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) < 3 or lines[0] != f"# {FEATURE_FORMAT}":
        raise LayoutMismatch(f"{path}: not a {FEATURE_FORMAT} file")
    head = lines[1]
    if not head.startswith("# layout="):
        raise LayoutMismatch(f"{path}: missing layout header")
    layout_hash, dim_part = head[len("# layout="):].split(" dim=")
    dim = int(dim_part)
    if not lines[2].startswith("# config="):
        raise LayoutMismatch(f"{path}: missing config header")
    config = PipelineConfig.from_dict(json.loads(lines[2][len("# config="):]))
    expected = FeatureLayout.for_config(config)
    if expected.layout_hash() != layout_hash or expected.dim != dim:
        raise LayoutMismatch(f"{path}: layout header does not match its config")
    samples = []
    for lineno, line in enumerate(lines[3:], start=4):
        if not line:
            continue
        page_id, group_index, label, rest = line.split(",", 3)
        vec = np.fromiter((float(v) for v in rest.split(",")), dtype=np.float64)
        if vec.shape[0] != dim:
            raise LayoutMismatch(f"{path}:{lineno}: row has {vec.shape[0]} values, expected {dim}")
        samples.append(PooledSample(page_id, int(group_index), 0, vec,
                                    None if label == "?" else label))
    return samples, config
