"""Acceptance suite: one test per criterion, each printing a PASS line.

The end-to-end criteria build a shared synthetic dataset (4 virtual printers,
6 A4 pages of ~200 letters each) once per session; the same-model and
reproducibility criteria build their own smaller datasets.
"""

import time

import numpy as np
import pytest
from scipy import ndimage

from printerid import classifier, features, letters, regions, synth, texture
from printerid.cli import main as cli_main
from printerid.config import PipelineConfig
from printerid.features import FeatureLayout, extract_page, letter_feature, poep
from printerid.gabor import build_bank, scale_response
from printerid.letters import LetterBox

import oracles

N_PAGES = 6
N_LETTERS = 200


def _announce(num, name, t0):
    print(f"ACCEPTANCE {num:02d} [{name}]: PASS ({time.monotonic() - t0:.1f}s)")


@pytest.fixture(scope="session")
def e2e():
    """Criterion 6 protocol: train on page 0 of each printer, test on 1..5."""
    cfg = PipelineConfig(n2=40)
    layout = synth.PageLayout()
    train_s, test_s, test_pages = [], [], []
    for profile in synth.default_profiles():
        for p in range(N_PAGES):
            rng = np.random.default_rng([0, profile.rng_seed, p])
            page = synth.gen_page(profile, N_LETTERS, layout, rng)
            pid = f"{profile.id}-p{p:03d}"
            samples, diag = extract_page(page.image, pid, cfg, label=profile.id)
            assert samples, f"page {pid} produced no samples: {diag}"
            if p == 0:
                train_s.extend(samples)
            else:
                test_s.extend(samples)
                test_pages.append((pid, page.image, profile.id))
    model = classifier.train(train_s, cfg)
    group_cm, page_cm = classifier.evaluate(model, test_s)
    return {"config": cfg, "model": model, "train": train_s, "test": test_s,
            "test_pages": test_pages, "group_cm": group_cm, "page_cm": page_cm}


def test_criterion_01_operator_oracle_suite():
    t0 = time.monotonic()
    rng = np.random.default_rng(20240917)
    for _ in range(1000):
        p3 = rng.integers(0, 256, (3, 3)).astype(float)
        l3 = p3.tolist()
        assert texture.lbp(p3, 1, 1) == oracles.oracle_lbp(l3, 1, 1)
        t = float(rng.integers(1, 60))
        assert texture.ltp(p3, 1, 1, t) == oracles.oracle_ltp(l3, 1, 1, t)

        p5 = rng.integers(0, 256, (5, 5)).astype(float)
        l5 = p5.tolist()
        assert texture.direction_code(p5, 2, 2) == oracles.oracle_direction(l5, 2, 2)
        tetra = texture.ltrp(p5, 2, 2)
        assert tetra == oracles.oracle_tetra(l5, 2, 2)
        center = texture.direction_code(p5, 2, 2)
        assert texture.ltrp_binary_split(tetra, center) == oracles.oracle_split(tetra, center)
        assert texture.magnitude_pattern(p5, 2, 2) == oracles.oracle_magnitude(l5, 2, 2)
    elapsed = time.monotonic() - t0
    assert elapsed < 5.0, f"oracle suite took {elapsed:.1f}s"
    _announce(1, "operator oracle suite, 1000 patches exact", t0)


def test_criterion_02_uniform_census():
    t0 = time.monotonic()
    uniform = [c for c in range(256) if texture.transitions(c) <= 2]
    assert len(uniform) == 58
    ranks = [texture.uniform_index(c) for c in uniform]
    assert sorted(ranks) == list(range(58))            # bijective onto 0..57
    assert all(texture.uniform_index(c) == 58 for c in range(256) if c not in uniform)
    elapsed = time.monotonic() - t0
    assert elapsed < 1.0
    _announce(2, "uniform census = 58, index bijective", t0)


def _segmented_letter(patch):
    h, w = patch.shape
    box = LetterBox((0, 0, w, h), w * h, 0)
    hist = regions.smooth_histogram(regions.letter_histogram(patch, box))
    peaks = regions.find_two_peaks(hist)
    if peaks is None:
        return None
    return regions.remove_flat_border(regions.segment_regions(patch, box, peaks))


def test_criterion_03_dimension_contract():
    t0 = time.monotonic()
    cfg = PipelineConfig()
    profile = synth.default_profiles()[1]
    rng = np.random.default_rng(17)
    glyph = synth.gen_glyph(rng)
    patch, _ = synth.render_letter(glyph, profile, rng)
    region = _segmented_letter(patch)
    assert region is not None
    for bank, dim in ((build_bank(cfg), 4602), (None, 1534)):
        vec = letter_feature(region, patch, bank, cfg)
        assert vec.shape == (dim,)
        blocks = vec.reshape(-1, 59)
        sums = blocks.sum(axis=1)
        nonempty = sums > 0
        assert nonempty.any()
        assert np.all(np.abs(sums[nonempty] - 1.0) < 1e-9)
    _announce(3, "dims 4602 gabor / 1534 raw, blocks sum to 1", t0)


def test_criterion_04_invariance_suite():
    t0 = time.monotonic()
    rng = np.random.default_rng(4)
    # gray-shift invariance of every sign-based code
    for _ in range(300):
        plane = rng.integers(30, 220, (5, 5)).astype(float)
        c = float(rng.integers(-29, 35))
        assert texture.lbp(plane, 2, 2) == texture.lbp(plane + c, 2, 2)
        assert texture.ltp(plane, 2, 2, 5.0) == texture.ltp(plane + c, 2, 2, 5.0)
        assert texture.direction_code(plane, 2, 2) == texture.direction_code(plane + c, 2, 2)
        assert texture.ltrp(plane, 2, 2) == texture.ltrp(plane + c, 2, 2)
        assert texture.magnitude_pattern(plane, 2, 2) == \
            texture.magnitude_pattern(plane + c, 2, 2)
    # Gabor response exactly zero on constant planes
    bank = build_bank(PipelineConfig())
    for value in (0.0, 128.0, 255.0):
        plane = np.full((25, 25), value)
        for s in range(bank.n_scales):
            assert np.abs(scale_response(plane, bank, s)).max() < 1e-9
    # LTP scale non-invariance witnessed
    plane = np.full((3, 3), 10.0)
    plane[0, 1] = 14.0
    assert texture.ltp(plane, 1, 1, 6.0) != texture.ltp(plane * 3.0, 1, 1, 6.0)
    # border-removal post-condition on 100 synthetic letters
    profile = synth.default_profiles()[0]
    checked = 0
    g = np.random.default_rng(99)
    while checked < 100:
        glyph = synth.gen_glyph(g)
        patch, _ = synth.render_letter(glyph, profile, g)
        region = _segmented_letter(patch)
        if region is None:
            continue
        flat = region.mask(regions.FLAT)
        edge = region.mask(regions.EDGE)
        near_edge = ndimage.binary_dilation(edge, np.ones((3, 3), dtype=bool))
        assert not (flat & near_edge).any()
        checked += 1
    elapsed = time.monotonic() - t0
    assert elapsed < 30.0, f"invariance suite took {elapsed:.1f}s"
    _announce(4, "invariance suite incl. 100-letter border postcondition", t0)


def test_criterion_05_poep_properties():
    t0 = time.monotonic()
    rng = np.random.default_rng(5)
    v = rng.random(16)
    out = poep([v.copy() for _ in range(40)], 40)
    assert len(out) == 1 and np.array_equal(out[0], v)           # fixed point
    vecs = [rng.random(16) for _ in range(95)]
    for n2 in (1, 7, 40, 95):
        groups = poep(vecs, n2)
        assert len(groups) == len(vecs) // n2                     # group count
        lo = np.min(vecs, axis=0) - 1e-12
        hi = np.max(vecs, axis=0) + 1e-12
        for gvec in groups:
            assert ((gvec >= lo) & (gvec <= hi)).all()            # convexity
    g1 = poep(vecs, 40)
    g2 = poep([x.copy() for x in vecs], 40)
    assert all(np.array_equal(a, b) for a, b in zip(g1, g2))      # determinism
    _announce(5, "poep fixed point, convexity, count, determinism", t0)


def test_criterion_06_end_to_end_distinct_models(e2e):
    t0 = time.monotonic()
    # separability premise: pooled class means are pairwise farther apart
    # than the within-class spread along the line joining them
    by_class = {}
    for s in e2e["train"] + e2e["test"]:
        by_class.setdefault(s.label, []).append(s.vector)
    means = {c: np.mean(v, axis=0) for c, v in by_class.items()}
    for a in means:
        for b in means:
            if a >= b:
                continue
            axis = means[b] - means[a]
            dist = np.linalg.norm(axis)
            assert dist > 0
            axis = axis / dist
            for c in (a, b):
                proj = [float((x - means[c]) @ axis) for x in by_class[c]]
                assert dist > np.std(proj), f"premise fails for {a} vs {b}"
    group_acc = e2e["group_cm"].average_accuracy()
    page_acc = e2e["page_cm"].average_accuracy()
    assert group_acc >= 0.90, e2e["group_cm"].to_text("group-level")
    assert page_acc >= 0.95, e2e["page_cm"].to_text("page-level")
    print(f"  group accuracy {group_acc:.1%}, page accuracy {page_acc:.1%}")
    _announce(6, "end-to-end 4 printers, 1 train page", t0)


def test_criterion_07_same_model_stress():
    t0 = time.monotonic()
    cfg = PipelineConfig(n2=40)
    layout = synth.PageLayout()
    train_s, test_s = [], []
    for profile in synth.same_model_profiles():
        for p in range(10):
            rng = np.random.default_rng([0, profile.rng_seed, p])
            page = synth.gen_page(profile, N_LETTERS, layout, rng)
            pid = f"{profile.id}-p{p:03d}"
            samples, _ = extract_page(page.image, pid, cfg, label=profile.id)
            (train_s if p < 5 else test_s).extend(samples)
    model = classifier.train(train_s, cfg)
    group_cm, _ = classifier.evaluate(model, test_s)
    classes = list(group_cm.classes)
    ia, ib = classes.index("vp-twin-a"), classes.index("vp-twin-b")
    pair_mass = int(group_cm.counts[ia, ib] + group_cm.counts[ib, ia])
    others = [int(group_cm.counts[i, j]) for i in range(len(classes))
              for j in range(len(classes)) if i != j and {i, j} != {ia, ib}]
    assert pair_mass >= 3 * max(others), group_cm.to_text("same-model")
    elapsed = time.monotonic() - t0
    assert elapsed < 600.0
    print(f"  twin-pair confusion mass {pair_mass}, max other cell {max(others)}")
    _announce(7, "same-model confusion concentrated in the twin pair", t0)


def test_criterion_08_rotation_robustness(e2e):
    t0 = time.monotonic()
    base_acc = e2e["group_cm"].average_accuracy()
    for angle in (2.0, -2.0):
        rot_samples = []
        for pid, img, label in e2e["test_pages"]:
            samples, _ = extract_page(synth.rotate_page(img, angle), pid,
                                      e2e["config"], label=label)
            rot_samples.extend(samples)
        rot_cm, _ = classifier.evaluate(e2e["model"], rot_samples)
        drop = base_acc - rot_cm.average_accuracy()
        assert drop <= 0.05, (
            f"rotation {angle:+}deg dropped accuracy by {100 * drop:.1f}pp"
        )
        print(f"  rotation {angle:+}deg: accuracy {rot_cm.average_accuracy():.1%} "
              f"(drop {100 * drop:.1f}pp)")
    _announce(8, "±2 degree rotation costs <= 5pp", t0)


def test_criterion_09_classifier_sanity():
    t0 = time.monotonic()
    cfg = PipelineConfig(gabor=False)
    dim = FeatureLayout.for_config(cfg).dim
    rng = np.random.default_rng(9)
    samples = []
    for label, (cx, cy) in {"A": (0, 0), "B": (1, 0), "C": (0, 1)}.items():
        for i in range(5):
            vec = np.zeros(dim)
            vec[0] = cx + rng.normal(0, 0.03)
            vec[1] = cy + rng.normal(0, 0.03)
            samples.append(features.PooledSample(f"p{label}{i}", 0, 1, vec, label))
    model = classifier.train(samples, cfg)
    for s in samples:                                   # 100% training accuracy
        label, votes, _ = classifier.predict_group(model, s.vector)
        assert label == s.label
        assert sum(votes.values()) == 3                 # vote conservation
    m2 = classifier.train(samples, cfg)
    for p1, p2 in zip(model.pairs, m2.pairs):           # deterministic retrain
        assert np.array_equal(p1.weights, p2.weights) and p1.bias == p2.bias
    _announce(9, "separable toy 100%, votes conserved, retrain identical", t0)


def test_criterion_10_reproducibility(tmp_path):
    t0 = time.monotonic()
    outputs = {}
    for run in ("run1", "run2"):
        root = tmp_path / run
        data = root / "data"
        assert cli_main(["synth", "--profiles", "default4", "--pages-per-printer", "2",
                         "--letters-per-page", "120", "--train-pages", "1",
                         "--seed", "11", "--out", str(data)]) == 0
        train_feat, test_feat = root / "train.feat", root / "test.feat"
        for split, path in (("train", train_feat), ("test", test_feat)):
            assert cli_main(["extract", "--manifest", str(data / "manifest.csv"),
                             "--split", split, "--n2", "20", "--out", str(path)]) == 0
        model = root / "model.json"
        assert cli_main(["train", "--features", str(train_feat),
                         "--out", str(model)]) == 0
        import json
        assert len(json.loads(model.read_text())["classes"]) == 4
        ev = root / "eval"
        assert cli_main(["evaluate", "--model", str(model),
                         "--features", str(test_feat), "--out-dir", str(ev)]) == 0
        outputs[run] = {
            "train.feat": train_feat.read_bytes(),
            "test.feat": test_feat.read_bytes(),
            "model.json": model.read_bytes(),
            "group_confusion.csv": (ev / "group_confusion.csv").read_bytes(),
            "page_confusion.csv": (ev / "page_confusion.csv").read_bytes(),
            "confusion.txt": (ev / "confusion.txt").read_bytes(),
        }
    for name in outputs["run1"]:
        assert outputs["run1"][name] == outputs["run2"][name], f"{name} differs"
    _announce(10, "synth->extract->train->evaluate chain byte-identical", t0)
