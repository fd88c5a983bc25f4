"""Material classification of 224x224 crops via quantized visual words.

A crop is mean-subtracted, summarized as color + gradient-orientation
histograms, and snapped to its nearest clustering centroid (its "visual
word"). Per-class word frequencies with add-one smoothing then give a
posterior over material classes under uniform priors. Everything is
deterministic for a fixed seed: centroid initialization draws indices from
the shared SplitMix sequence, iteration order is fixed, and tie-breaks go
to the lowest index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadDimensions,
    DimensionMismatch,
    EmptyClass,
    InvalidK,
    SchemaError,
    TooFewVectors,
    UntrainedModel,
)
from .rng import sample_distinct_indices

CROP_SIZE = 224
COLOR_BINS = 16  # per channel
ORIENT_BINS = 18
FEATURE_DIM = 3 * COLOR_BINS + ORIENT_BINS  # 66

DEFAULT_TEXTURE_CLASSES = [
    "fabric",
    "foliage",
    "glass",
    "leather",
    "metal",
    "plastic",
    "water",
    "paper",
    "wood",
    "stone",
    "other",
]

DEFAULT_K = 64
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 100


@dataclass(frozen=True)
class ChannelMeans:
    """Per-channel pixel means of the training corpus, in [0, 255]."""

    mean_r: float
    mean_g: float
    mean_b: float

    def as_array(self) -> np.ndarray:
        return np.array([self.mean_r, self.mean_g, self.mean_b], dtype=np.float64)


@dataclass
class Codebook:
    k: int
    centroids: np.ndarray  # (k, FEATURE_DIM) float64
    rng_seed: int


@dataclass
class ClusterAssignment:
    """Labels per training vector, final objective, and its per-iteration trace."""

    labels: np.ndarray  # (n,) int64
    objective: float
    objective_history: list[float]

    @property
    def clusters(self) -> list[np.ndarray]:
        k = int(self.labels.max()) + 1 if len(self.labels) else 0
        return [np.flatnonzero(self.labels == i) for i in range(k)]


@dataclass
class MaterialModel:
    classes: list[str]
    codebook: Codebook
    word_freq: dict[str, np.ndarray]  # class -> (k,) smoothed probabilities
    channel_means: ChannelMeans


MaterialDistribution = dict[str, float]


# --- preprocessing and features ----------------------------------------------


def preprocess_crop(
    crop: np.ndarray, means: ChannelMeans, source_order: str = "RGB"
) -> np.ndarray:
    """Reorder to RGB if needed and subtract the per-channel training means."""
    crop = np.asarray(crop)
    if crop.shape != (CROP_SIZE, CROP_SIZE, 3):
        raise BadDimensions(f"expected {CROP_SIZE}x{CROP_SIZE}x3 crop, got {crop.shape}")
    if source_order not in ("RGB", "BGR"):
        raise ValueError(f"source_order must be 'RGB' or 'BGR', got {source_order!r}")
    raster = crop.astype(np.float64)
    if source_order == "BGR":
        raster = raster[:, :, ::-1]
    return raster - means.as_array()


def extract_features(raster: np.ndarray) -> np.ndarray:
    """66-dim descriptor: 16 color bins per channel + 18 orientation bins.

    Color values (range -255..255 after mean subtraction) are shifted to
    [0, 1] and histogrammed per channel. Gradient orientations come from
    central differences on the channel-mean image over interior pixels,
    weighted by gradient magnitude. Each of the four blocks is
    L1-normalized; a gradient-free crop gets a uniform orientation block.
    """
    raster = np.asarray(raster, dtype=np.float64)
    if raster.shape != (CROP_SIZE, CROP_SIZE, 3):
        raise BadDimensions(f"expected {CROP_SIZE}x{CROP_SIZE}x3 raster, got {raster.shape}")

    blocks = []
    shifted = (raster + 255.0) / 510.0
    bins = np.clip((shifted * COLOR_BINS).astype(np.int64), 0, COLOR_BINS - 1)
    for ch in range(3):
        hist = np.bincount(bins[:, :, ch].ravel(), minlength=COLOR_BINS).astype(np.float64)
        blocks.append(hist / hist.sum())

    gray = raster.mean(axis=2)
    gx = (gray[1:-1, 2:] - gray[1:-1, :-2]) / 2.0
    gy = (gray[2:, 1:-1] - gray[:-2, 1:-1]) / 2.0
    mag = np.hypot(gx, gy)
    ang = np.arctan2(gy, gx)  # (-pi, pi]
    obins = np.clip(
        ((ang + np.pi) * (ORIENT_BINS / (2.0 * np.pi))).astype(np.int64), 0, ORIENT_BINS - 1
    )
    weights = np.bincount(obins.ravel(), weights=mag.ravel(), minlength=ORIENT_BINS)
    total = float(weights.sum())
    if total == 0.0:
        blocks.append(np.full(ORIENT_BINS, 1.0 / ORIENT_BINS))
    else:
        blocks.append(weights / total)
    return np.concatenate(blocks)


# --- clustering ----------------------------------------------------------------


def kmeans_fit(
    vectors,
    k: int,
    seed: int,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    initial_indices: list[int] | None = None,
) -> tuple[Codebook, ClusterAssignment]:
    """Lloyd iterations minimizing the total within-cluster squared distance.

    Initialization picks k distinct vector indices from the seeded
    SplitMix sequence (or the explicit `initial_indices`). Each vector is
    assigned to its nearest centroid (ties to the lowest index), centroids
    move to member means, and clusters left empty are reseeded with the
    point currently farthest from its own centroid. Iteration stops once
    the objective improves by less than `tol` or `max_iter` assignment
    rounds have run; the objective never increases along the way, and the
    returned labels are consistent with the returned centroids.
    """
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D vector array, got shape {X.shape}")
    n = len(X)
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    if n < k:
        raise TooFewVectors(f"need at least k={k} vectors, got {n}")

    if initial_indices is None:
        initial_indices = sample_distinct_indices(n, k, seed)
    elif len(set(initial_indices)) != k or not all(0 <= i < n for i in initial_indices):
        raise InvalidK(f"initial_indices must be {k} distinct indices below {n}")
    centroids = X[initial_indices].copy()

    labels = np.zeros(n, dtype=np.int64)
    history: list[float] = []
    prev = math.inf
    for it in range(max_iter):
        d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)  # argmin takes the lowest index on ties
        point_d2 = d2[np.arange(n), labels]
        objective = float(point_d2.sum())
        history.append(objective)
        if prev - objective < tol:
            break
        prev = objective
        if it == max_iter - 1:
            break  # keep labels consistent with the centroids they used
        counts = np.bincount(labels, minlength=k).astype(np.float64)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, X)
        nonempty = counts > 0
        centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
        if not nonempty.all():
            taken: set[int] = set()
            farthest = np.argsort(-point_d2, kind="stable")
            for c in np.flatnonzero(~nonempty):
                for idx in farthest:
                    if int(idx) not in taken:
                        taken.add(int(idx))
                        centroids[c] = X[idx]
                        break

    assignment = ClusterAssignment(
        labels=labels, objective=history[-1], objective_history=history
    )
    return Codebook(k=k, centroids=centroids, rng_seed=seed), assignment


def assign_word(v, codebook: Codebook) -> int:
    """Index of the nearest centroid by squared distance; ties to lowest index."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (codebook.centroids.shape[1],):
        raise DimensionMismatch(
            f"vector has shape {v.shape}, centroids expect ({codebook.centroids.shape[1]},)"
        )
    d2 = ((codebook.centroids - v) ** 2).sum(axis=1)
    return int(d2.argmin())


# --- model training and inference ----------------------------------------------


def train_material_model(
    corpus,
    k: int = DEFAULT_K,
    seed: int = 42,
    classes: list[str] | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> MaterialModel:
    """Fit channel means, codebook, and per-class word frequencies.

    `corpus` is a sequence of (crop, label) pairs with RGB uint8 crops.
    Every declared class needs at least one crop. Word frequencies use
    add-one smoothing, so each class vector sums to one.
    """
    corpus = list(corpus)
    labels = [label for _, label in corpus]
    if classes is None:
        classes = sorted(set(labels))
    missing = [c for c in classes if c not in labels]
    if not corpus or missing:
        raise EmptyClass(f"classes with no training crops: {missing or classes}")
    stray = sorted(set(labels) - set(classes))
    if stray:
        raise ValueError(f"corpus labels not in the declared class list: {stray}")

    crops = [np.asarray(crop) for crop, _ in corpus]
    for crop in crops:
        if crop.shape != (CROP_SIZE, CROP_SIZE, 3):
            raise BadDimensions(f"corpus crop has shape {crop.shape}")
    stacked = np.stack(crops).astype(np.float64)
    mr, mg, mb = (float(stacked[..., ch].mean()) for ch in range(3))
    means = ChannelMeans(mr, mg, mb)

    features = np.stack(
        [extract_features(preprocess_crop(crop, means)) for crop in crops]
    )
    codebook, assignment = kmeans_fit(features, k=k, seed=seed, max_iter=max_iter, tol=tol)

    word_freq: dict[str, np.ndarray] = {}
    for cls in classes:
        members = [assignment.labels[i] for i, lab in enumerate(labels) if lab == cls]
        counts = np.bincount(np.asarray(members, dtype=np.int64), minlength=k).astype(np.float64)
        word_freq[cls] = (counts + 1.0) / (counts.sum() + k)
    return MaterialModel(
        classes=list(classes), codebook=codebook, word_freq=word_freq, channel_means=means
    )


def classify_material(crop: np.ndarray, model: MaterialModel) -> MaterialDistribution:
    """Posterior over material classes for one RGB crop.

    Uniform class priors times the smoothed probability of the crop's
    visual word, normalized to sum to one.
    """
    if model.codebook is None or not model.classes or not model.word_freq:
        raise UntrainedModel("material model has no codebook or classes")
    raster = preprocess_crop(crop, model.channel_means)
    word = assign_word(extract_features(raster), model.codebook)
    weights = {cls: float(model.word_freq[cls][word]) for cls in model.classes}
    total = sum(weights.values())
    return {cls: w / total for cls, w in weights.items()}


# --- serialization ---------------------------------------------------------------


def material_model_to_json(model: MaterialModel) -> str:
    doc = {
        "classes": model.classes,
        "k": model.codebook.k,
        "seed": model.codebook.rng_seed,
        "channelMeans": [
            model.channel_means.mean_r,
            model.channel_means.mean_g,
            model.channel_means.mean_b,
        ],
        "centroids": [[float(x) for x in row] for row in model.codebook.centroids],
        "wordFreq": {cls: [float(x) for x in model.word_freq[cls]] for cls in model.classes},
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def material_model_from_json(text: str) -> MaterialModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"model file is not valid JSON: {exc}") from None
    try:
        classes = [str(c) for c in doc["classes"]]
        k = int(doc["k"])
        seed = int(doc["seed"])
        means = ChannelMeans(*(float(x) for x in doc["channelMeans"]))
        centroids = np.asarray(doc["centroids"], dtype=np.float64)
        word_freq = {
            cls: np.asarray(doc["wordFreq"][cls], dtype=np.float64) for cls in classes
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad model document: {exc}") from None
    if centroids.ndim != 2 or len(centroids) != k:
        raise SchemaError(f"model expects {k} centroids, got shape {centroids.shape}")
    for cls, freq in word_freq.items():
        if freq.shape != (k,):
            raise SchemaError(f"word frequencies for '{cls}' have shape {freq.shape}")
    return MaterialModel(
        classes=classes,
        codebook=Codebook(k=k, centroids=centroids, rng_seed=seed),
        word_freq=word_freq,
        channel_means=means,
    )


def save_material_model(model: MaterialModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(material_model_to_json(model))


def load_material_model(path) -> MaterialModel:
    with open(path, "r", encoding="utf-8") as fh:
        return material_model_from_json(fh.read())
