#!/usr/bin/env python3
"""Quick separability check for a virtual-printer suite: generates a few
pages per profile, trains on the first page of each, and prints group/page
confusion plus per-class mean-vector distances.

Usage: profile_separability.py [default4|same-model] [pages] [letters] [seed]
"""

import sys
import time

import numpy as np

from printerid import classifier, features, synth
from printerid.config import PipelineConfig


def main():
    suite = sys.argv[1] if len(sys.argv) > 1 else "default4"
    pages = int(sys.argv[2]) if len(sys.argv) > 2 else 3
    letters = int(sys.argv[3]) if len(sys.argv) > 3 else 200
    seed = int(sys.argv[4]) if len(sys.argv) > 4 else 0
    train_pages = 1 if suite == "default4" else 5

    profiles = synth.PROFILE_PRESETS[suite]()
    cfg = PipelineConfig(n2=40)
    layout = synth.PageLayout()
    t0 = time.time()
    train_s, test_s = [], []
    for profile in profiles:
        for p in range(pages):
            rng = np.random.default_rng([seed, profile.rng_seed, p])
            page = synth.gen_page(profile, letters, layout, rng)
            samples, diag = features.extract_page(
                page.image, f"{profile.id}-p{p:03d}", cfg, label=profile.id)
            (train_s if p < train_pages else test_s).extend(samples)
            print(f"  {profile.id} p{p} letters={diag.n_features} groups={len(samples)} "
                  f"[{time.time() - t0:.1f}s]")

    by_class = {}
    for s in train_s + test_s:
        by_class.setdefault(s.label, []).append(s.vector)
    means = {c: np.mean(v, axis=0) for c, v in by_class.items()}
    spreads = {c: np.mean([np.linalg.norm(x - means[c]) for x in v])
               for c, v in by_class.items()}
    print("\npairwise mean distance / max spread:")
    classes = sorted(means)
    for i, a in enumerate(classes):
        for b in classes[i + 1:]:
            d = np.linalg.norm(means[a] - means[b])
            print(f"  {a:>10} vs {b:>10}: dist={d:.3f} "
                  f"spread=({spreads[a]:.3f},{spreads[b]:.3f}) "
                  f"ratio={d / max(spreads[a], spreads[b]):.2f}")

    model = classifier.train(train_s, cfg)
    gcm, pcm = classifier.evaluate(model, test_s)
    print()
    print(gcm.to_text("group-level"))
    print()
    print(pcm.to_text("page-level"))
    print(f"\ntotal {time.time() - t0:.1f}s")


if __name__ == "__main__":
    main()
