"""One-vs-one linear max-margin classifier.

Each class pair gets a soft-margin linear SVM trained by dual coordinate
descent on the hinge-loss objective (bias handled as an augmented constant
feature). Features are min-max scaled to [0, 1] with statistics fitted on the
training set and stored inside the model, so prediction can never see
unscaled inputs. Group predictions are majority votes over the pair
functions; page decisions are majority votes over group predictions. All
ties break by summed signed margins, then by class order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .config import PipelineConfig
from .errors import LayoutMismatch, TrainingError
from .features import FeatureLayout, PooledSample

MODEL_FORMAT = "printerid-model"
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainParams:
    C: float = 1.0
    tol: float = 1e-4
    max_passes: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError(f"C must be > 0, got {self.C}")
        if self.tol <= 0 or self.max_passes < 1:
            raise ValueError("tol must be > 0 and max_passes >= 1")


@dataclass(frozen=True)
class PairFunction:
    pos: str                 # votes for this class when the margin is >= 0
    neg: str
    weights: np.ndarray
    bias: float

    def margin(self, x: np.ndarray) -> float:
        return float(self.weights @ x + self.bias)


@dataclass(frozen=True)
class Model:
    classes: tuple[str, ...]
    scale_min: np.ndarray
    scale_max: np.ndarray
    pairs: tuple[PairFunction, ...]
    config: PipelineConfig
    layout_hash: str
    train_params: TrainParams

    @property
    def dim(self) -> int:
        return self.scale_min.shape[0]

    def scale(self, x: np.ndarray) -> np.ndarray:
        span = self.scale_max - self.scale_min
        out = np.zeros_like(x, dtype=np.float64)
        nz = span > 0
        out[nz] = (x[nz] - self.scale_min[nz]) / span[nz]
        return out


def _dual_cd(X: np.ndarray, y: np.ndarray, params: TrainParams, rng) -> np.ndarray:
    """Dual coordinate descent for the L1 hinge soft-margin objective.

    Maximizes sum(a) - 0.5 * ||sum(a_i y_i x_i)||^2 over 0 <= a_i <= C by
    cyclic single-coordinate updates in a seeded random order per pass,
    stopping when the largest projected-gradient violation drops below tol.
    """
    n, d = X.shape
    alpha = np.zeros(n)
    w = np.zeros(d)
    qii = np.einsum("ij,ij->i", X, X)
    C = params.C
    for _ in range(params.max_passes):
        worst = 0.0
        for i in rng.permutation(n):
            g = y[i] * (X[i] @ w) - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= C:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                worst = max(worst, abs(pg))
                a_new = min(max(a - g / qii[i], 0.0), C)
                if a_new != a:
                    w += (a_new - a) * y[i] * X[i]
                    alpha[i] = a_new
        if worst < params.tol:
            break
    return w


def train(samples: list[PooledSample], config: PipelineConfig,
          params: TrainParams | None = None) -> Model:
    if params is None:
        params = TrainParams(C=config.svm_c, tol=config.svm_tol,
                             max_passes=config.svm_max_passes, seed=config.seed)
    labeled = [s for s in samples if s.label is not None]
    if len(labeled) != len(samples):
        raise TrainingError("training samples must all carry labels")
    if not labeled:
        raise TrainingError("no training samples")
    classes = tuple(sorted({s.label for s in labeled}))
    if len(classes) < 2:
        raise TrainingError(f"training needs at least 2 classes, got {classes}")
    layout = FeatureLayout.for_config(config)
    for s in labeled:
        if s.vector.shape != (layout.dim,):
            raise LayoutMismatch(
                f"sample {s.page_id}/{s.group_index}: dim {s.vector.shape[0]} != {layout.dim}"
            )
        if not np.all(np.isfinite(s.vector)):
            raise TrainingError(f"non-finite feature in sample {s.page_id}/{s.group_index}")

    X = np.stack([s.vector for s in labeled]).astype(np.float64)
    labels = np.array([s.label for s in labeled])
    scale_min = X.min(axis=0)
    scale_max = X.max(axis=0)
    span = scale_max - scale_min
    Xs = np.zeros_like(X)
    nz = span > 0
    Xs[:, nz] = (X[:, nz] - scale_min[nz]) / span[nz]

    pairs = []
    for pi, (a, b) in enumerate(combinations(classes, 2)):
        sel = (labels == a) | (labels == b)
        Xp = Xs[sel]
        yp = np.where(labels[sel] == a, 1.0, -1.0)
        Xa = np.hstack([Xp, np.ones((Xp.shape[0], 1))])    # augmented bias column
        rng = np.random.default_rng([params.seed, pi])
        w = _dual_cd(Xa, yp, params, rng)
        pairs.append(PairFunction(a, b, w[:-1], float(w[-1])))

    return Model(classes, scale_min, scale_max, tuple(pairs), config,
                 layout.layout_hash(), params)


def predict_group(model: Model, vector: np.ndarray):
    """Label, per-class vote counts and per-class summed signed margins for
    one pooled sample."""
    if vector.shape != (model.dim,):
        raise LayoutMismatch(f"sample dim {vector.shape[0]} != model dim {model.dim}")
    x = model.scale(vector)
    votes = {c: 0 for c in model.classes}
    margins = {c: 0.0 for c in model.classes}
    for pf in model.pairs:
        m = pf.margin(x)
        votes[pf.pos if m >= 0 else pf.neg] += 1
        margins[pf.pos] += m
        margins[pf.neg] -= m
    label = max(model.classes, key=lambda c: (votes[c], margins[c], -model.classes.index(c)))
    return label, votes, margins


def page_decision(group_labels: list[str], group_margins: list[dict] | None = None) -> str:
    """Most frequent group label; ties break by summed margins, then class order."""
    if not group_labels:
        raise ValueError("page has no group predictions to vote on")
    counts: dict[str, int] = {}
    margin_sum: dict[str, float] = {}
    for i, lab in enumerate(group_labels):
        counts[lab] = counts.get(lab, 0) + 1
        if group_margins is not None:
            for c, m in group_margins[i].items():
                margin_sum[c] = margin_sum.get(c, 0.0) + m
    order = sorted(counts)
    return max(order, key=lambda c: (counts[c], margin_sum.get(c, 0.0), -order.index(c)))


@dataclass(frozen=True)
class ConfusionMatrix:
    classes: tuple[str, ...]
    counts: np.ndarray       # rows = true class, columns = predicted

    def per_class_accuracy(self) -> np.ndarray:
        totals = self.counts.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            acc = np.where(totals > 0, np.diag(self.counts) / totals, 0.0)
        return acc

    def average_accuracy(self) -> float:
        return float(self.per_class_accuracy().mean())

    def to_text(self, title: str = "") -> str:
        width = max(8, max(len(c) for c in self.classes) + 2)
        lines = []
        if title:
            lines.append(title)
        header = " " * width + "".join(f"{c:>{width}}" for c in self.classes)
        lines.append(header)
        for i, c in enumerate(self.classes):
            row = f"{c:>{width}}" + "".join(f"{int(v):>{width}}" for v in self.counts[i])
            lines.append(row)
        accs = self.per_class_accuracy()
        lines.append("per-class accuracy: " +
                     ", ".join(f"{c}={a:.1%}" for c, a in zip(self.classes, accs)))
        lines.append(f"average accuracy: {self.average_accuracy():.2%}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        lines = ["true\\pred," + ",".join(self.classes)]
        for i, c in enumerate(self.classes):
            lines.append(c + "," + ",".join(str(int(v)) for v in self.counts[i]))
        return "\n".join(lines) + "\n"


def evaluate(model: Model, samples: list[PooledSample]) -> tuple[ConfusionMatrix, ConfusionMatrix]:
    """Group-level and page-level confusion matrices over labeled samples."""
    if not samples:
        raise ValueError("no test samples")
    unseen = {s.label for s in samples} - set(model.classes) - {None}
    if unseen:
        raise TrainingError(f"test labels not in the model: {sorted(unseen)}")
    if any(s.label is None for s in samples):
        raise TrainingError("evaluation samples must all carry labels")

    k = len(model.classes)
    cidx = {c: i for i, c in enumerate(model.classes)}
    group_counts = np.zeros((k, k), dtype=np.int64)
    by_page: dict[str, dict] = {}
    for s in sorted(samples, key=lambda s: (s.page_id, s.group_index)):
        pred, _, margins = predict_group(model, s.vector)
        group_counts[cidx[s.label], cidx[pred]] += 1
        page = by_page.setdefault(s.page_id, {"label": s.label, "preds": [], "margins": []})
        if page["label"] != s.label:
            raise TrainingError(f"page {s.page_id} carries conflicting labels")
        page["preds"].append(pred)
        page["margins"].append(margins)

    page_counts = np.zeros((k, k), dtype=np.int64)
    for page in by_page.values():
        decided = page_decision(page["preds"], page["margins"])
        page_counts[cidx[page["label"]], cidx[decided]] += 1
    return (ConfusionMatrix(model.classes, group_counts),
            ConfusionMatrix(model.classes, page_counts))


def save_model(model: Model, path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "layout_hash": model.layout_hash,
        "config": model.config.to_dict(),
        "classes": list(model.classes),
        "scale_min": [float(v) for v in model.scale_min],
        "scale_max": [float(v) for v in model.scale_max],
        "pairs": [
            {"pos": p.pos, "neg": p.neg, "bias": p.bias,
             "weights": [float(v) for v in p.weights]}
            for p in model.pairs
        ],
        "train_params": {"C": model.train_params.C, "tol": model.train_params.tol,
                         "max_passes": model.train_params.max_passes,
                         "seed": model.train_params.seed},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise LayoutMismatch(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise LayoutMismatch(f"{path}: unsupported model format version")
    config = PipelineConfig.from_dict(doc["config"])
    layout = FeatureLayout.for_config(config)
    if layout.layout_hash() != doc["layout_hash"]:
        raise LayoutMismatch(f"{path}: layout hash does not match the stored config")
    tp = doc["train_params"]
    pairs = tuple(
        PairFunction(p["pos"], p["neg"], np.array(p["weights"], dtype=np.float64),
                     float(p["bias"]))
        for p in doc["pairs"]
    )
    model = Model(tuple(doc["classes"]),
                  np.array(doc["scale_min"], dtype=np.float64),
                  np.array(doc["scale_max"], dtype=np.float64),
                  pairs, config, doc["layout_hash"],
                  TrainParams(tp["C"], tp["tol"], tp["max_passes"], tp["seed"]))
    if any(p.weights.shape != (model.dim,) for p in pairs):
        raise LayoutMismatch(f"{path}: pair weight dimensions disagree with scaling stats")
    return model
