"""Dataset manifests: CSV files mapping page images to printer labels and splits.

Format: UTF-8 CSV with header ``path,label,page_id,split``. Paths are resolved
relative to the manifest file's directory. ``split`` is one of train, test,
unassigned.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import ManifestError

SPLITS = ("train", "test", "unassigned")
HEADER = ["path", "label", "page_id", "split"]


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: str
    page_id: str
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(sorted({e.label for e in self.entries}))

    def filter_split(self, split: str) -> "DatasetManifest":
        if split == "all":
            return self
        return DatasetManifest(tuple(e for e in self.entries if e.split == split))


def load_manifest(path, check_paths: bool = True) -> DatasetManifest:
    path = Path(path)
    base = path.parent
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != HEADER:
            raise ManifestError(f"{path}: expected header {','.join(HEADER)!r}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ManifestError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            p, label, page_id, split = (c.strip() for c in row)
            if split not in SPLITS:
                raise ManifestError(f"{path}:{lineno}: split must be one of {SPLITS}, got {split!r}")
            if not label or not page_id:
                raise ManifestError(f"{path}:{lineno}: empty label or page_id")
            entries.append(ManifestEntry(base / p, label, page_id, split))
    if not entries:
        raise ManifestError(f"{path}: manifest has no entries")
    seen: dict[str, int] = {}
    for e in entries:
        if e.page_id in seen:
            raise ManifestError(f"{path}: duplicate page_id {e.page_id!r}")
        seen[e.page_id] = 1
    if check_paths:
        missing = [str(e.path) for e in entries if not e.path.is_file()]
        if missing:
            raise ManifestError(f"{path}: missing image files: {', '.join(missing)}")
    return DatasetManifest(tuple(entries))


def save_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    base = path.parent
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        for e in manifest.entries:
            try:
                rel = e.path.relative_to(base)
            except ValueError:
                rel = e.path
            writer.writerow([str(rel), e.label, e.page_id, e.split])
