"""Local texture pattern operators on grayscale planes.

All operators compare intensity differences, so they accept real-valued
planes (raw gray or filter responses). Sign conventions: the unit step u[x]
is 1 for x >= 0, and gradients use the right neighbor (horizontal) and the
down neighbor (vertical) of a pixel.

Per-pixel functions (`lbp`, `ltp`, `direction_code`, `ltrp`, `ltrp_binary_split`,
`magnitude_pattern`) implement the operators literally and are the reference
surface. `ltrp_code_maps` is the vectorized whole-plane equivalent used by
feature extraction.
"""

from __future__ import annotations

import numpy as np

from .config import NEIGHBOR_OFFSETS

N_CHANNELS = 13          # 12 direction channels + 1 magnitude channel
N_BINS = 59              # 58 uniform codes + 1 catch-all

# Non-center directions for each center direction 1..4, ascending.
_OTHER_DIRS = np.array([[2, 3, 4], [1, 3, 4], [1, 2, 4], [1, 2, 3]], dtype=np.int64)


def transitions(code: int) -> int:
    """Number of circular 0<->1 transitions in an 8-bit code."""
    rotated = ((code << 1) | (code >> 7)) & 0xFF
    return bin((code ^ rotated) & 0xFF).count("1")


UNIFORM_CODES: tuple[int, ...] = tuple(c for c in range(256) if transitions(c) <= 2)
_UNIFORM_RANK = {c: i for i, c in enumerate(UNIFORM_CODES)}
UNIFORM_LUT = np.array(
    [_UNIFORM_RANK.get(c, len(UNIFORM_CODES)) for c in range(256)], dtype=np.int64
)


def uniform_index(code: int) -> int:
    """Histogram bin for an 8-bit code: rank among uniform codes, or 58."""
    return _UNIFORM_RANK.get(int(code), len(UNIFORM_CODES))


def _check_interior(plane: np.ndarray, y: int, x: int, margin_lo: int, margin_hi: int) -> None:
    h, w = plane.shape
    if not (margin_lo <= y <= h - 1 - margin_hi and margin_lo <= x <= w - 1 - margin_hi):
        raise ValueError(f"pixel ({y}, {x}) lacks the required neighborhood in a {h}x{w} plane")


def lbp(plane: np.ndarray, y: int, x: int, offsets=NEIGHBOR_OFFSETS) -> int:
    """8-bit sign code of neighbor-minus-center differences."""
    _check_interior(plane, y, x, 1, 1)
    c = plane[y, x]
    code = 0
    for n, (dy, dx) in enumerate(offsets):
        if plane[y + dy, x + dx] - c >= 0:
            code |= 1 << n
    return code


def ltp(plane: np.ndarray, y: int, x: int, t: float, offsets=NEIGHBOR_OFFSETS) -> tuple[int, int]:
    """Ternary code with dead zone (-t, t), split into (upper, lower) binary codes."""
    if t <= 0:
        raise ValueError(f"ltp threshold must be > 0, got {t}")
    _check_interior(plane, y, x, 1, 1)
    c = plane[y, x]
    upper = lower = 0
    for n, (dy, dx) in enumerate(offsets):
        d = plane[y + dy, x + dx] - c
        if d >= t:
            upper |= 1 << n
        elif d <= -t:
            lower |= 1 << n
    return upper, lower


def direction_code(plane: np.ndarray, y: int, x: int) -> int:
    """Quadrant 1..4 of (horizontal, vertical) gradient signs at a pixel."""
    h, w = plane.shape
    if y + 1 >= h or x + 1 >= w:
        raise ValueError(f"pixel ({y}, {x}) lacks right/down neighbors in a {h}x{w} plane")
    gh = plane[y, x + 1] - plane[y, x]
    gv = plane[y + 1, x] - plane[y, x]
    if gh >= 0:
        return 1 if gv >= 0 else 4
    return 2 if gv >= 0 else 3


def _gradient_magnitude(plane: np.ndarray, y: int, x: int) -> float:
    gh = plane[y, x + 1] - plane[y, x]
    gv = plane[y + 1, x] - plane[y, x]
    return float(np.hypot(gh, gv))


def ltrp(plane: np.ndarray, y: int, x: int, offsets=NEIGHBOR_OFFSETS) -> tuple[int, ...]:
    """Tetra symbols for the 8 neighbors: 0 where a neighbor's direction matches
    the center's, else the neighbor's direction."""
    _check_interior(plane, y, x, 1, 2)
    center = direction_code(plane, y, x)
    out = []
    for dy, dx in offsets:
        d = direction_code(plane, y + dy, x + dx)
        out.append(0 if d == center else d)
    return tuple(out)


def ltrp_binary_split(tetra, center_dir: int) -> tuple[int, int, int]:
    """Binary codes for the 3 non-center directions, ascending direction order."""
    if center_dir not in (1, 2, 3, 4):
        raise ValueError(f"center direction must be 1..4, got {center_dir}")
    if len(tetra) != 8 or any(s not in (0, 1, 2, 3, 4) for s in tetra):
        raise ValueError("tetra must be 8 symbols in 0..4")
    codes = []
    for d in _OTHER_DIRS[center_dir - 1]:
        code = 0
        for n, s in enumerate(tetra):
            if s == d:
                code |= 1 << n
        codes.append(code)
    return tuple(codes)


def ltrp_channel_index(center_dir: int, d: int) -> int:
    """Flat channel id 0..11 for the (center direction, other direction) pair."""
    others = list(_OTHER_DIRS[center_dir - 1])
    return (center_dir - 1) * 3 + others.index(d)


def magnitude_pattern(plane: np.ndarray, y: int, x: int, offsets=NEIGHBOR_OFFSETS) -> int:
    """8-bit sign code of center-minus-neighbor gradient magnitudes."""
    _check_interior(plane, y, x, 1, 2)
    gm = _gradient_magnitude(plane, y, x)
    code = 0
    for n, (dy, dx) in enumerate(offsets):
        if gm - _gradient_magnitude(plane, y + dy, x + dx) >= 0:
            code |= 1 << n
    return code


def ltrp_code_maps(plane: np.ndarray, offsets=NEIGHBOR_OFFSETS):
    """Vectorized tetra-channel and magnitude codes for a whole plane.

    Returns (codes3, mag_codes, dirs):
      codes3    (3, h, w) int64, the pixel's three non-center-direction codes
                in ascending direction order,
      mag_codes (h, w)    int64, the magnitude sign code,
      dirs      (h, w)    int64, center direction 1..4.

    Values are only meaningful where the full operator stencil is available;
    callers mask with `stencil_valid`. Border entries are zero-filled.
    """
    plane = np.asarray(plane, dtype=np.float64)
    h, w = plane.shape
    dirs = np.zeros((h, w), dtype=np.int64)
    codes3 = np.zeros((3, h, w), dtype=np.int64)
    mag = np.zeros((h, w), dtype=np.int64)
    if h < 2 or w < 2:
        return codes3, mag, dirs

    gh = np.zeros((h, w))
    gv = np.zeros((h, w))
    gh[:, :-1] = plane[:, 1:] - plane[:, :-1]
    gv[:-1, :] = plane[1:, :] - plane[:-1, :]
    dirs = np.where(gh >= 0, np.where(gv >= 0, 1, 4), np.where(gv >= 0, 2, 3)).astype(np.int64)
    gmag = np.hypot(gh, gv)

    if h < 3 or w < 3:
        return codes3, mag, dirs

    center = dirs[1:-1, 1:-1]
    gmag_c = gmag[1:-1, 1:-1]
    other = _OTHER_DIRS[center - 1]                      # (h-2, w-2, 3)
    acc3 = np.zeros((3,) + center.shape, dtype=np.int64)
    acc_mag = np.zeros(center.shape, dtype=np.int64)
    for n, (dy, dx) in enumerate(offsets):
        nbr = dirs[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
        sym = np.where(nbr == center, 0, nbr)
        for k in range(3):
            acc3[k] |= (sym == other[:, :, k]).astype(np.int64) << n
        nbr_gm = gmag[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
        acc_mag |= (gmag_c - nbr_gm >= 0).astype(np.int64) << n
    codes3[:, 1:-1, 1:-1] = acc3
    mag[1:-1, 1:-1] = acc_mag
    return codes3, mag, dirs


def stencil_valid(mask: np.ndarray) -> np.ndarray:
    """Pixels whose full tetra/magnitude stencil lies inside `mask`.

    A pixel needs gradient support (itself plus right and down neighbors in
    the mask) at itself and at all 8 neighbors.
    """
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    valid = np.zeros((h, w), dtype=bool)
    if h < 4 or w < 4:
        return valid
    dval = np.zeros((h, w), dtype=bool)
    dval[:-1, :-1] = mask[:-1, :-1] & mask[:-1, 1:] & mask[1:, :-1]
    v = dval[1:-1, 1:-1].copy()
    for dy, dx in NEIGHBOR_OFFSETS:
        v &= dval[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
    valid[1:-1, 1:-1] = v
    return valid
