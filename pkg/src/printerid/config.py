"""Pipeline configuration: one dataclass holding every tunable constant.

The effective config is serialized canonically (sorted-key JSON) so that a
config hash can be embedded in every artifact header and checked when
artifacts are combined.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

# Fixed traversal of the 8 neighbors in a 3x3 window: top-left, then clockwise.
# Stored with every model; any consistent order works but it must never change
# between extraction and prediction.
NEIGHBOR_OFFSETS: tuple[tuple[int, int], ...] = (
    (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1),
)


@dataclass(frozen=True)
class PipelineConfig:
    crop_fraction: float = 0.0
    alpha: float = 0.71          # flat/edge intensity threshold factor
    beta: float = 1.52           # edge/background intensity threshold factor
    n2: int = 40                 # letters pooled per feature sample
    gabor: bool = True
    gabor_wavelengths: tuple[float, ...] = (2.0, 4.0, 8.0)
    gabor_sigma_ratio: float = 0.56
    gabor_aspect: float = 0.5
    gabor_phase: float = 0.0
    gabor_size: int = 10
    svm_c: float = 1.0
    svm_tol: float = 1e-4
    svm_max_passes: int = 100_000
    seed: int = 0
    min_region_pixels: int = 10
    neighborhood: tuple[tuple[int, int], ...] = NEIGHBOR_OFFSETS

    def __post_init__(self):
        if not 0.0 <= self.crop_fraction <= 0.25:
            raise ValueError(f"crop_fraction must be in [0, 0.25], got {self.crop_fraction}")
        if self.n2 < 1:
            raise ValueError(f"n2 must be >= 1, got {self.n2}")
        if self.svm_c <= 0:
            raise ValueError(f"svm_c must be > 0, got {self.svm_c}")
        w = tuple(self.gabor_wavelengths)
        if any(x <= 0 for x in w) or list(w) != sorted(set(w)):
            raise ValueError("gabor_wavelengths must be positive and strictly increasing")
        offs = tuple(tuple(o) for o in self.neighborhood)
        expected = {(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1)} - {(0, 0)}
        if set(offs) != expected or len(offs) != 8:
            raise ValueError("neighborhood must be the 8 distinct 3x3 offsets excluding (0,0)")
        object.__setattr__(self, "gabor_wavelengths", w)
        object.__setattr__(self, "neighborhood", offs)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["gabor_wavelengths"] = list(self.gabor_wavelengths)
        d["neighborhood"] = [list(o) for o in self.neighborhood]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        kw = dict(d)
        if "gabor_wavelengths" in kw:
            kw["gabor_wavelengths"] = tuple(kw["gabor_wavelengths"])
        if "neighborhood" in kw:
            kw["neighborhood"] = tuple(tuple(o) for o in kw["neighborhood"])
        return cls(**kw)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    """Read a JSON config file and apply overrides on top; either may be None."""
    base = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            base = json.load(fh)
        if not isinstance(base, dict):
            raise ValueError(f"config file {path} must contain a JSON object")
    if overrides:
        base.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig.from_dict(base)
