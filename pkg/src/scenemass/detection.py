"""Pixel-space object detections: box decoding, filtering, NMS, cropping.

Detections come from one of two backends: an oracle annotation file (ground
truth standing in for a trained detector) or a raw grid-prediction tensor
decoded with cell offsets and anchor priors. Boxes are kept center-size
internally and converted to corner form only for overlap computations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyCrop,
    InvalidAnchor,
    InvalidCell,
    NonPositiveArea,
    SchemaError,
    UnknownClass,
)

CROP_SIZE = 224


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in pixels, corner form."""

    left: float
    top: float
    width: float
    height: float

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class GridSpec:
    """Prediction grid geometry: image size, cell size, anchor priors."""

    image_w: int
    image_h: int
    cell_size: int
    anchors: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.image_w % self.cell_size or self.image_h % self.cell_size:
            raise ValueError(
                f"image {self.image_w}x{self.image_h} not divisible by cell size {self.cell_size}"
            )
        if not self.anchors or any(pw <= 0 or ph <= 0 for pw, ph in self.anchors):
            raise ValueError("anchors must be non-empty with positive sizes")

    @property
    def cells_x(self) -> int:
        return self.image_w // self.cell_size

    @property
    def cells_y(self) -> int:
        return self.image_h // self.cell_size


@dataclass(frozen=True)
class RawPrediction:
    cell_x: int
    cell_y: int
    anchor: int
    tx: float
    ty: float
    tw: float
    th: float
    objectness: float
    class_scores: tuple[float, ...]


@dataclass(frozen=True)
class DecodedBox:
    center_x: float
    center_y: float
    width: float
    height: float
    score: float
    class_id: int
    class_name: str

    def rect(self) -> Rect:
        return Rect(
            self.center_x - self.width / 2.0,
            self.center_y - self.height / 2.0,
            self.width,
            self.height,
        )


@dataclass(frozen=True)
class Detection:
    """Final localization: corner-form box, class label, confidence.

    `material` is only set by the oracle backend when the annotation carries
    an explicit texture label; the model backend leaves it None.
    """

    box: Rect
    class_name: str
    confidence: float
    material: str | None = field(default=None, compare=False)


def sigmoid(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def softmax(scores) -> list[float]:
    m = max(scores)
    exps = [math.exp(s - m) for s in scores]
    total = sum(exps)
    return [e / total for e in exps]


def decode_box(raw: RawPrediction, grid: GridSpec, class_names: list[str]) -> DecodedBox:
    """Turn a grid-relative prediction into a pixel-space box.

    Centers are the sigmoid-squashed offsets added to the cell origin; sizes
    are the anchor priors scaled by e^t. The confidence is the sigmoid
    objectness times the softmax probability of the winning class (ties go
    to the lowest class index).
    """
    if not (0 <= raw.cell_x < grid.cells_x and 0 <= raw.cell_y < grid.cells_y):
        raise InvalidCell(
            f"cell ({raw.cell_x}, {raw.cell_y}) outside {grid.cells_x}x{grid.cells_y} grid"
        )
    if not 0 <= raw.anchor < len(grid.anchors):
        raise InvalidAnchor(f"anchor index {raw.anchor} outside 0..{len(grid.anchors) - 1}")
    if len(class_names) != len(raw.class_scores):
        raise SchemaError(
            f"{len(raw.class_scores)} class scores but {len(class_names)} class names"
        )
    pw, ph = grid.anchors[raw.anchor]
    probs = softmax(raw.class_scores)
    class_id = max(range(len(probs)), key=lambda i: (probs[i], -i))
    return DecodedBox(
        center_x=(sigmoid(raw.tx) + raw.cell_x) * grid.cell_size,
        center_y=(sigmoid(raw.ty) + raw.cell_y) * grid.cell_size,
        width=pw * math.exp(raw.tw),
        height=ph * math.exp(raw.th),
        score=sigmoid(raw.objectness) * probs[class_id],
        class_id=class_id,
        class_name=class_names[class_id],
    )


def filter_objectness(boxes: list[DecodedBox], threshold: float) -> list[DecodedBox]:
    """Keep boxes scoring at least `threshold`, preserving order."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    return [b for b in boxes if b.score >= threshold]


def iou(a: Rect, b: Rect) -> float:
    """Intersection over union of two positive-area rectangles."""
    if a.width <= 0 or a.height <= 0 or b.width <= 0 or b.height <= 0:
        raise NonPositiveArea(f"rectangles must have positive area: {a}, {b}")
    iw = min(a.right, b.right) - max(a.left, b.left)
    ih = min(a.bottom, b.bottom) - max(a.top, b.top)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def nms(dets: list[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy per-class non-maximum suppression.

    Detections are visited by descending confidence (equal confidences keep
    their input order); each survivor suppresses later same-class boxes that
    overlap it with IoU >= iou_threshold. The result is ordered by
    descending confidence and is idempotent.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou threshold must be in (0, 1), got {iou_threshold}")
    order = sorted(range(len(dets)), key=lambda i: -dets[i].confidence)
    kept: list[int] = []
    for i in order:
        suppressed = any(
            dets[j].class_name == dets[i].class_name
            and iou(dets[i].box, dets[j].box) >= iou_threshold
            for j in kept
        )
        if not suppressed:
            kept.append(i)
    return [dets[i] for i in kept]


def to_detection(box: DecodedBox) -> Detection:
    return Detection(box=box.rect(), class_name=box.class_name, confidence=box.score)


# --- oracle backend -----------------------------------------------------------


def _clip_rect(left, top, width, height, image_w, image_h) -> Rect | None:
    l = max(float(left), 0.0)
    t = max(float(top), 0.0)
    r = min(float(left) + float(width), float(image_w))
    b = min(float(top) + float(height), float(image_h))
    if r <= l or b <= t:
        return None
    return Rect(l, t, r - l, b - t)


def load_oracle_detections(
    content: str | dict,
    image_w: int,
    image_h: int,
    classes: list[str] | None = None,
) -> list[Detection]:
    """Read ground-truth detections from an annotation document.

    Schema: {"image": str, "width": int, "height": int,
             "objects": [{"class": str, "bbox": [l, t, w, h],
                          "confidence": optional, "material": optional}]}

    Boxes are clipped to the image; missing confidence defaults to 1.0.
    When `classes` is given, unknown class names raise UnknownClass.
    """
    if isinstance(content, str):
        try:
            doc = json.loads(content)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"annotation is not valid JSON: {exc}") from None
    else:
        doc = content
    if not isinstance(doc, dict):
        raise SchemaError("annotation root must be a JSON object")
    for key, kind in (("image", str), ("width", int), ("height", int), ("objects", list)):
        if not isinstance(doc.get(key), kind):
            raise SchemaError(f"annotation needs {key!r} of type {kind.__name__}")

    detections: list[Detection] = []
    for i, obj in enumerate(doc["objects"]):
        if not isinstance(obj, dict):
            raise SchemaError(f"objects[{i}] must be an object")
        name = obj.get("class")
        if not isinstance(name, str):
            raise SchemaError(f"objects[{i}] needs a string 'class'")
        if classes is not None and name not in classes:
            raise UnknownClass(f"objects[{i}]: class '{name}' not in the configured class list")
        bbox = obj.get("bbox")
        if (
            not isinstance(bbox, list)
            or len(bbox) != 4
            or not all(isinstance(x, (int, float)) for x in bbox)
        ):
            raise SchemaError(f"objects[{i}] needs 'bbox' of four numbers")
        if bbox[2] <= 0 or bbox[3] <= 0:
            raise SchemaError(f"objects[{i}]: bbox has non-positive size")
        confidence = obj.get("confidence", 1.0)
        if not isinstance(confidence, (int, float)) or not 0.0 <= confidence <= 1.0:
            raise SchemaError(f"objects[{i}]: confidence must be in [0, 1]")
        material = obj.get("material")
        if material is not None and not isinstance(material, str):
            raise SchemaError(f"objects[{i}]: material must be a string")
        rect = _clip_rect(*bbox, image_w, image_h)
        if rect is None:
            raise SchemaError(f"objects[{i}]: bbox {bbox} lies outside the image")
        detections.append(
            Detection(box=rect, class_name=name, confidence=float(confidence), material=material)
        )
    return detections


# --- tensor backend -----------------------------------------------------------


def load_raw_predictions(
    content: str | dict,
) -> tuple[GridSpec, list[str], list[RawPrediction]]:
    """Read a raw-prediction document: grid spec, class names, predictions."""
    if isinstance(content, str):
        try:
            doc = json.loads(content)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"prediction file is not valid JSON: {exc}") from None
    else:
        doc = content
    if not isinstance(doc, dict) or not isinstance(doc.get("grid"), dict):
        raise SchemaError("prediction document needs a 'grid' object")
    g = doc["grid"]
    try:
        grid = GridSpec(
            image_w=int(g["imageW"]),
            image_h=int(g["imageH"]),
            cell_size=int(g["cellSize"]),
            anchors=tuple((float(a[0]), float(a[1])) for a in g["anchors"]),
        )
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise SchemaError(f"bad grid spec: {exc}") from None
    classes = doc.get("classes")
    if not isinstance(classes, list) or not all(isinstance(c, str) for c in classes):
        raise SchemaError("prediction document needs a 'classes' list of strings")
    preds_raw = doc.get("predictions")
    if not isinstance(preds_raw, list):
        raise SchemaError("prediction document needs a 'predictions' list")
    preds = []
    for i, p in enumerate(preds_raw):
        try:
            preds.append(
                RawPrediction(
                    cell_x=int(p["cx"]),
                    cell_y=int(p["cy"]),
                    anchor=int(p["anchor"]),
                    tx=float(p["tx"]),
                    ty=float(p["ty"]),
                    tw=float(p["tw"]),
                    th=float(p["th"]),
                    objectness=float(p["obj"]),
                    class_scores=tuple(float(s) for s in p["scores"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"predictions[{i}]: {exc}") from None
    return grid, classes, preds


# --- cropping -----------------------------------------------------------------


def crop_and_resize(image: np.ndarray, det: Detection) -> np.ndarray:
    """Nearest-neighbour resample of the detection's clipped box to 224x224."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise EmptyCrop(f"expected (H, W, 3) image, got shape {image.shape}")
    h, w = image.shape[:2]
    rect = _clip_rect(det.box.left, det.box.top, det.box.width, det.box.height, w, h)
    if rect is None:
        raise EmptyCrop(f"box {det.box} does not intersect the {w}x{h} image")
    # Half-pixel-center mapping: an exactly 224x224 box copies pixels verbatim.
    xs = np.floor(rect.left + (np.arange(CROP_SIZE) + 0.5) * rect.width / CROP_SIZE)
    ys = np.floor(rect.top + (np.arange(CROP_SIZE) + 0.5) * rect.height / CROP_SIZE)
    xs = np.clip(xs.astype(np.int64), 0, w - 1)
    ys = np.clip(ys.astype(np.int64), 0, h - 1)
    return image[ys[:, None], xs[None, :]]
