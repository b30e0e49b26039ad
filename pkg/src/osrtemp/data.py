"""Synthetic open-set datasets, class-subset splits, two-view augmentation and I/O.

Every random draw is keyed off an explicit seed (plus a step or epoch counter
where relevant), so generation and batching are pure functions of their
arguments.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .losses import MultiViewBatch

PLACEMENTS = ("gaussian_means", "ring")
NONLINEARITIES = ("none", "radial_warp")
SPLITS = ("train", "test_known", "test_unknown")

# separate RNG streams for the two per-step draws
_SHUFFLE_STREAM = 0
_AUGMENT_STREAM = 1


@dataclass(frozen=True)
class GeneratorSpec:
    """Gaussian clusters, one per class; a seeded subset of classes is known.

    The default spread was picked with ``demos/tune_spread.py`` so that the
    nearest-true-mean rule classifies about 90% of known test samples
    correctly.
    """

    n_classes_total: int = 20
    n_known: int = 12
    dim: int = 16
    samples_per_class: int = 100
    cluster_spread: float = 1.1
    cluster_placement: str = "gaussian_means"
    nonlinearity: str = "none"
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.n_known < self.n_classes_total:
            raise ConfigError("need 1 <= n_known < n_classes_total")
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if self.samples_per_class < 4:
            raise ConfigError("samples_per_class must be >= 4")
        if self.cluster_spread < 0:
            raise ConfigError("cluster_spread must be non-negative")
        if self.cluster_placement not in PLACEMENTS:
            raise ConfigError(f"cluster_placement must be one of {PLACEMENTS}")
        if self.nonlinearity not in NONLINEARITIES:
            raise ConfigError(f"nonlinearity must be one of {NONLINEARITIES}")
        if self.cluster_placement == "ring" and self.dim < 2:
            raise ConfigError("ring placement needs dim >= 2")

    def to_dict(self):
        return asdict(self)


@dataclass
class DatasetSplit:
    """Closed-set training data plus known and unknown test samples.

    Labels are original class ids; ``known_classes`` is sorted, and a class's
    position in it is the network output index for that class.
    """

    train_x: np.ndarray
    train_y: np.ndarray
    test_known_x: np.ndarray
    test_known_y: np.ndarray
    test_unknown_x: np.ndarray
    test_unknown_y: np.ndarray
    known_classes: tuple
    unknown_classes: tuple
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        self.known_classes = tuple(int(c) for c in self.known_classes)
        self.unknown_classes = tuple(int(c) for c in self.unknown_classes)
        if set(self.known_classes) & set(self.unknown_classes):
            raise ConfigError("known and unknown class sets overlap")
        if not set(np.unique(self.train_y)) <= set(self.known_classes):
            raise ConfigError("training labels outside the known classes")
        if not set(np.unique(self.test_known_y)) <= set(self.known_classes):
            raise ConfigError("test_known labels outside the known classes")
        if not set(np.unique(self.test_unknown_y)) <= set(self.unknown_classes):
            raise ConfigError("test_unknown labels outside the unknown classes")
        counts = {c: int(np.sum(self.train_y == c)) for c in self.known_classes}
        thin = [c for c, n in counts.items() if n < 2]
        if thin:
            raise ConfigError(f"known classes with fewer than 2 training samples: {thin}")

    @property
    def dim(self):
        return self.train_x.shape[1]

    @property
    def num_classes(self):
        return len(self.known_classes)

    def class_index(self, labels):
        """Map original class ids to output indices ``0..C-1``."""
        lookup = {c: i for i, c in enumerate(self.known_classes)}
        return np.array([lookup[int(y)] for y in labels], dtype=np.int64)


def _radial_warp(x):
    # radius-dependent rescaling bends straight class boundaries
    r = np.linalg.norm(x, axis=1, keepdims=True)
    return x * (1.0 + 0.5 * np.sin(2.0 * r))


def generate(spec: GeneratorSpec) -> DatasetSplit:
    rng = np.random.default_rng(spec.seed)
    n, d = spec.n_classes_total, spec.dim
    if spec.cluster_placement == "gaussian_means":
        means = rng.normal(size=(n, d))
    else:
        angles = 2.0 * np.pi * np.arange(n) / n
        means = np.zeros((n, d))
        means[:, 0], means[:, 1] = 2.0 * np.cos(angles), 2.0 * np.sin(angles)

    features = means[:, None, :] + spec.cluster_spread * rng.normal(
        size=(n, spec.samples_per_class, d))
    if spec.nonlinearity == "radial_warp":
        features = _radial_warp(features.reshape(-1, d)).reshape(features.shape)

    known = np.sort(rng.permutation(n)[:spec.n_known])
    unknown = np.setdiff1d(np.arange(n), known)
    n_train = math.floor(0.8 * spec.samples_per_class)

    parts = {s: ([], []) for s in SPLITS}
    for c in range(n):
        x = features[c][rng.permutation(spec.samples_per_class)]
        if c in known:
            parts["train"][0].append(x[:n_train])
            parts["test_known"][0].append(x[n_train:])
            parts["train"][1].append(np.full(n_train, c))
            parts["test_known"][1].append(np.full(len(x) - n_train, c))
        else:
            parts["test_unknown"][0].append(x)
            parts["test_unknown"][1].append(np.full(len(x), c))

    arrays = {}
    for s, (xs, ys) in parts.items():
        arrays[f"{s}_x"] = np.concatenate(xs)
        arrays[f"{s}_y"] = np.concatenate(ys).astype(np.int64)
    return DatasetSplit(**arrays, known_classes=tuple(known.tolist()),
                        unknown_classes=tuple(unknown.tolist()), spec=spec.to_dict())


def make_class_splits(n_total, fractions, seed, nested=False):
    """Seeded subsets of ``range(n_total)`` known classes, one per fraction.

    Subset size is ``floor(fraction * n_total)`` and must be at least one. Indices
    refer to positions in the known-class list. With ``nested=True``
    each subset is a prefix of one shared permutation, so smaller subsets sit
    inside larger ones; otherwise each fraction draws its own permutation.
    """
    if n_total < 2:
        raise ValueError("need at least two classes to split")
    rng = np.random.default_rng(seed)
    shared = rng.permutation(n_total)
    subsets = []
    for frac in fractions:
        if not 0.0 < frac <= 1.0:
            raise ValueError(f"fraction {frac} outside (0, 1]")
        size = math.floor(frac * n_total)
        if size == 0:
            raise ValueError(f"fraction {frac} of {n_total} classes selects no class")
        order = shared if nested else rng.permutation(n_total)
        subsets.append(sorted(int(c) for c in order[:size]))
    return subsets


def restrict_known(split: DatasetSplit, classes) -> DatasetSplit:
    """Keep only ``classes`` as the closed set; the open set is left untouched."""
    classes = tuple(sorted(int(c) for c in classes))
    if not set(classes) <= set(split.known_classes):
        raise ValueError("can only restrict to a subset of the known classes")
    tr = np.isin(split.train_y, classes)
    te = np.isin(split.test_known_y, classes)
    return DatasetSplit(split.train_x[tr], split.train_y[tr],
                        split.test_known_x[te], split.test_known_y[te],
                        split.test_unknown_x, split.test_unknown_y,
                        classes, split.unknown_classes, dict(split.spec))


def two_view_batch(features, labels, aug_sigma, aug_scale_range, seed, step) -> MultiViewBatch:
    """Two independently jittered and rescaled copies of every sample, interleaved."""
    x = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    b = x.shape[0]
    if b < 2:
        raise ValueError("two-view batches need at least two samples")
    lo, hi = aug_scale_range
    rng = np.random.default_rng([seed, step, _AUGMENT_STREAM])
    views = np.repeat(x, 2, axis=0)
    views = views + aug_sigma * rng.normal(size=views.shape)
    views = views * rng.uniform(lo, hi, size=(2 * b, 1))
    return MultiViewBatch(views, np.repeat(labels, 2), np.repeat(np.arange(b), 2))


def epoch_batches(n, batch_size, seed, epoch):
    """Index arrays for one epoch: a seeded shuffle cut into ``batch_size`` chunks.

    A trailing chunk is kept if it has at least two samples.
    """
    order = np.random.default_rng([seed, epoch, _SHUFFLE_STREAM]).permutation(n)
    batches = [order[i:i + batch_size] for i in range(0, n, batch_size)]
    if batches and len(batches[-1]) < 2:
        batches.pop()
    return batches


def save_dataset(split: DatasetSplit, csv_path, manifest_path=None) -> None:
    """Write ``split,label,f0..f{d-1}`` rows plus a JSON manifest next to them."""
    csv_path = Path(csv_path)
    manifest_path = Path(manifest_path) if manifest_path else csv_path.with_suffix(".json")
    d = split.dim
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["split", "label", *(f"f{j}" for j in range(d))])
        for s in SPLITS:
            xs, ys = getattr(split, f"{s}_x"), getattr(split, f"{s}_y")
            for x, y in zip(xs, ys):
                writer.writerow([s, int(y), *(repr(float(v)) for v in x)])
    manifest = {
        "generator": split.spec,
        "known_classes": list(split.known_classes),
        "unknown_classes": list(split.unknown_classes),
        "seed": split.spec.get("seed"),
        "dim": d,
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_dataset(csv_path, manifest_path=None) -> DatasetSplit:
    csv_path = Path(csv_path)
    manifest_path = Path(manifest_path) if manifest_path else csv_path.with_suffix(".json")
    manifest = json.loads(manifest_path.read_text())
    rows = {s: ([], []) for s in SPLITS}
    with open(csv_path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        d = len(header) - 2
        if header[:2] != ["split", "label"] or d != manifest["dim"]:
            raise ValueError("dataset CSV header does not match its manifest")
        for row in reader:
            rows[row[0]][0].append([float(v) for v in row[2:]])
            rows[row[0]][1].append(int(row[1]))
    arrays = {}
    for s, (xs, ys) in rows.items():
        arrays[f"{s}_x"] = np.array(xs, dtype=np.float64).reshape(-1, d)
        arrays[f"{s}_y"] = np.array(ys, dtype=np.int64)
    return DatasetSplit(**arrays, known_classes=tuple(manifest["known_classes"]),
                        unknown_classes=tuple(manifest["unknown_classes"]),
                        spec=manifest["generator"])
