"""Command-line entry point: synth, extract, train, predict, evaluate, inspect.

Every artifact is written atomically (temp file + rename) and accompanied by
a `<name>.run.json` manifest echoing the effective config, its hash, and the
sha256 of every input consumed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import multiprocessing
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, classifier, features, synth
from .config import PipelineConfig, load_config
from .errors import PipelineError
from .features import FEATURE_FORMAT
from .image_io import load_page, save_page
from .letters import binarize, connected_components, filter_components
from .manifest import DatasetManifest, ManifestEntry, load_manifest, save_manifest
from .regions import (BACKGROUND, EDGE, EXCLUDED, FLAT, MIN_LETTER_BBOX_AREA,
                      find_two_peaks, letter_histogram, remove_flat_border,
                      segment_regions, smooth_histogram)

REGION_COLORS = {FLAT: (0, 0, 0), EDGE: (220, 30, 30),
                 BACKGROUND: (255, 255, 255), EXCLUDED: (128, 128, 128)}


def write_atomic(path, data) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_run_manifest(artifact_path, subcommand: str, config: PipelineConfig | None,
                       inputs: list) -> None:
    doc = {
        "tool": "printerid",
        "tool_version": __version__,
        "subcommand": subcommand,
        "config": config.to_dict() if config else None,
        "config_hash": config.config_hash() if config else None,
        "inputs": {str(p): _sha256_file(p) for p in inputs},
    }
    write_atomic(str(artifact_path) + ".run.json",
                 json.dumps(doc, sort_keys=True, indent=1) + "\n")


def _config_from_args(args) -> PipelineConfig:
    overrides = {}
    for field in ("crop_fraction", "alpha", "beta", "n2", "seed", "svm_c", "svm_tol"):
        if getattr(args, field, None) is not None:
            overrides[field] = getattr(args, field)
    if getattr(args, "no_gabor", False):
        overrides["gabor"] = False
    return load_config(getattr(args, "config", None), overrides)


def cmd_synth(args) -> int:
    preset = synth.PROFILE_PRESETS.get(args.profiles)
    if preset is not None:
        profiles = preset()
    else:
        with open(args.profiles, "r", encoding="utf-8") as fh:
            profiles = [synth.PrinterProfile.from_dict(d) for d in json.load(fh)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    layout = synth.PageLayout()
    entries = []
    truth_lines = ["page_id,glyph_index,x,y,w,h,ink_count"]
    for profile in profiles:
        for p in range(args.pages_per_printer):
            rng = np.random.default_rng([args.seed, profile.rng_seed, p])
            page = synth.gen_page(profile, args.letters_per_page, layout, rng)
            page_id = f"{profile.id}-p{p:03d}"
            img_path = out / f"{page_id}.png"
            save_page(page.image, img_path)
            split = "train" if p < args.train_pages else "test"
            entries.append(ManifestEntry(img_path, profile.id, page_id, split))
            for g in page.truth:
                x, y, w, h = g.bbox
                truth_lines.append(f"{page_id},{g.index},{x},{y},{w},{h},{g.ink_count}")
    manifest_path = out / "manifest.csv"
    save_manifest(DatasetManifest(tuple(entries)), manifest_path)
    write_atomic(out / "truth.csv", "\n".join(truth_lines) + "\n")
    write_atomic(out / "profiles.json",
                 json.dumps([p.to_dict() for p in profiles], sort_keys=True, indent=1) + "\n")
    write_run_manifest(manifest_path, "synth", None, [])
    print(f"wrote {len(entries)} pages for {len(profiles)} printers to {out}")
    return 0


def _extract_one(job):
    entry_path, page_id, label, config = job
    img = load_page(entry_path)
    samples, diag = features.extract_page(img, page_id, config, label=label)
    return samples, diag


def cmd_extract(args) -> int:
    config = _config_from_args(args)
    manifest = load_manifest(args.manifest).filter_split(args.split)
    if not manifest.entries:
        raise PipelineError(f"no manifest entries match split {args.split!r}")
    jobs = [(e.path, e.page_id, e.label, config) for e in manifest.entries]
    if args.jobs > 1:
        with multiprocessing.Pool(args.jobs) as pool:
            results = pool.map(_extract_one, jobs)
    else:
        results = [_extract_one(j) for j in jobs]
    all_samples = []
    for samples, diag in results:
        all_samples.extend(samples)
        for wmsg in diag.warnings:
            print(f"warning: {wmsg}", file=sys.stderr)
    if not all_samples:
        raise PipelineError("no feature samples produced from any page")
    all_samples.sort(key=lambda s: (s.page_id, s.group_index))
    tmp_target = Path(args.out)
    buf_path = tmp_target.with_suffix(tmp_target.suffix + ".part")
    features.save_features(buf_path, all_samples, config)
    os.replace(buf_path, tmp_target)
    write_run_manifest(tmp_target, "extract", config,
                       [args.manifest] + [e.path for e in manifest.entries])
    print(f"wrote {len(all_samples)} samples ({features.FeatureLayout.for_config(config).dim} dims) "
          f"from {len(manifest.entries)} pages to {args.out}")
    return 0


def cmd_train(args) -> int:
    samples, config = features.load_features(args.features)
    params = classifier.TrainParams(
        C=args.svm_c if args.svm_c is not None else config.svm_c,
        tol=args.svm_tol if args.svm_tol is not None else config.svm_tol,
        max_passes=config.svm_max_passes,
        seed=config.seed,
    )
    model = classifier.train(samples, config, params)
    tmp = Path(args.out).with_suffix(".part")
    classifier.save_model(model, tmp)
    os.replace(tmp, args.out)
    write_run_manifest(args.out, "train", config, [args.features])
    print(f"trained {len(model.classes)}-class model ({len(model.pairs)} pair functions) "
          f"on {len(samples)} samples -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = classifier.load_model(args.model)
    img = load_page(args.image)
    page_id = Path(args.image).stem
    samples, diag = features.extract_page(img, page_id, model.config)
    if not samples:
        raise PipelineError(f"page {page_id} produced no groups: {diag.warnings}")
    groups = []
    labels = []
    margins = []
    for s in samples:
        lab, votes, marg = classifier.predict_group(model, s.vector)
        labels.append(lab)
        margins.append(marg)
        groups.append({"group_index": s.group_index, "label": lab, "votes": votes})
    page_label = classifier.page_decision(labels, margins)
    doc = {"page_id": page_id, "label": page_label, "groups": groups}
    text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    if args.out:
        write_atomic(args.out, text)
        write_run_manifest(args.out, "predict", model.config, [args.model, args.image])
    print(text, end="")
    return 0


def cmd_evaluate(args) -> int:
    model = classifier.load_model(args.model)
    samples, feat_config = features.load_features(args.features)
    if feat_config.config_hash() != model.config.config_hash():
        raise PipelineError(
            "feature file and model were produced with different configs "
            f"({feat_config.config_hash()[:12]} vs {model.config.config_hash()[:12]}); refusing"
        )
    group_cm, page_cm = classifier.evaluate(model, samples)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_atomic(out / "group_confusion.csv", group_cm.to_csv())
    write_atomic(out / "page_confusion.csv", page_cm.to_csv())
    summary = (group_cm.to_text("Group-level confusion (rows = true)") + "\n\n"
               + page_cm.to_text("Page-level confusion (rows = true)") + "\n")
    write_atomic(out / "confusion.txt", summary)
    write_run_manifest(out / "confusion.txt", "evaluate", model.config,
                       [args.model, args.features])
    print(summary, end="")
    return 0


def cmd_inspect(args) -> int:
    config = _config_from_args(args)
    img = load_page(args.image)
    page_id = args.page_id or Path(args.image).stem
    boxes = filter_components(connected_components(binarize(img)))
    lines = ["page_id,index,x,y,w,h,area"]
    for b in boxes:
        x, y, w, h = b.bbox
        lines.append(f"{page_id},{b.index},{x},{y},{w},{h},{b.area}")
    write_atomic(args.out, "\n".join(lines) + "\n")
    write_run_manifest(args.out, "inspect", config, [args.image])
    print(f"wrote {len(boxes)} letter boxes to {args.out}")
    if args.regions:
        from PIL import Image

        rdir = Path(args.regions)
        rdir.mkdir(parents=True, exist_ok=True)
        n_written = 0
        for b in boxes:
            x, y, w, h = b.bbox
            if w * h < MIN_LETTER_BBOX_AREA:
                continue
            peaks = find_two_peaks(smooth_histogram(letter_histogram(img, b)))
            if peaks is None:
                continue
            region = remove_flat_border(
                segment_regions(img, b, peaks, config.alpha, config.beta))
            rgb = np.zeros((h, w, 3), dtype=np.uint8)
            for lab, color in REGION_COLORS.items():
                rgb[region.labels == lab] = color
            Image.fromarray(rgb, "RGB").save(rdir / f"{page_id}-{b.index:04d}.png")
            n_written += 1
        print(f"wrote {n_written} region maps to {rdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="printerid",
        description="Source printer identification from scanned text pages "
                    "via local texture patterns.",
    )
    ap.add_argument("--version", action="version",
                    version=f"printerid {__version__} (features: {FEATURE_FORMAT}, "
                            f"model: {classifier.MODEL_FORMAT} v{classifier.MODEL_FORMAT_VERSION})")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def add_config_flags(p, classifier_flags=False):
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--crop-fraction", dest="crop_fraction", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--n2", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--no-gabor", dest="no_gabor", action="store_true",
                       help="use the 1534-dim raw-plane features")
        if classifier_flags:
            p.add_argument("-C", "--svm-c", dest="svm_c", type=float)
            p.add_argument("--svm-tol", dest="svm_tol", type=float)

    p = sub.add_parser("synth", help="generate a synthetic dataset from virtual printers")
    p.add_argument("--profiles", default="default4",
                   help="profile preset name (default4, same-model) or a JSON file")
    p.add_argument("--pages-per-printer", type=int, default=6)
    p.add_argument("--letters-per-page", type=int, default=200)
    p.add_argument("--train-pages", type=int, default=1,
                   help="pages per printer tagged as the train split")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("extract", help="extract pooled feature vectors from manifest pages")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", default="all", choices=["train", "test", "unassigned", "all"])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    add_config_flags(p)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("train", help="train the one-vs-one classifier on a feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("-C", "--svm-c", dest="svm_c", type=float)
    p.add_argument("--svm-tol", dest="svm_tol", type=float)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("predict", help="predict the printer of one page image")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("evaluate", help="confusion matrices for a labeled feature file")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("inspect", help="dump letter boxes (and optionally region maps)")
    p.add_argument("--image", required=True)
    p.add_argument("--page-id", dest="page_id")
    p.add_argument("--out", required=True)
    p.add_argument("--regions", help="directory for false-color region rasters")
    add_config_flags(p)
    p.set_defaults(fn=cmd_inspect)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (PipelineError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
