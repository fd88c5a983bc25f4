"""End-to-end scene processing: detections -> crops -> material -> mass.

Every post-suppression detection is cropped, classified (or labelled by
the oracle), mapped from its texture class to a density-database material,
and paired with its class's canonical mesh; density times mesh volume
gives the object mass, assuming solid material throughout. Failures in a
single object (unknown material, missing or leaky mesh) are recorded as
structured errors and do not abort the rest of the scene.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import detection as det_mod
from .density import (
    DensityDatabase,
    default_density_database,
    dominant_material,
    load_density_csv,
    lookup_density,
)
from .detection import Detection, crop_and_resize, decode_box, filter_objectness, nms
from .errors import (
    ConfigError,
    NonPositiveInput,
    SceneMassError,
    SchemaError,
    UnknownMaterial,
    UnregisteredClass,
)
from .geometry import Mesh, MeshRegistry, load_mesh, load_mesh_registry, mesh_volume, scale_mesh
from .material import MaterialModel, classify_material, load_material_model


@dataclass
class PipelineConfig:
    """Static run configuration; paths are relative to `base_dir`."""

    classes: list[str]
    mesh_registry: str
    density_db: str | None = None  # None -> packaged default database
    material_model: str | None = None
    texture_to_material: dict[str, str] = field(default_factory=dict)
    objectness_threshold: float = 0.5
    nms_iou_threshold: float = 0.45
    per_class_scale: dict[str, float] = field(default_factory=dict)
    texture_source: str = "model"  # "model" | "oracle"
    # off by default: density from the dominant texture class only; when on,
    # the whole confidence distribution contributes a weighted density
    composite_density: bool = False
    base_dir: str = "."

    def resolve(self, path: str) -> str:
        return os.path.join(self.base_dir, path)


def load_pipeline_config(path) -> PipelineConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    classes = doc.get("classes")
    if not isinstance(classes, list) or not all(isinstance(c, str) for c in classes):
        raise ConfigError("config needs a 'classes' list of strings")
    registry = doc.get("meshRegistry")
    if not isinstance(registry, str):
        raise ConfigError("config needs a 'meshRegistry' path")
    texture_source = doc.get("textureSource", "model")
    if texture_source not in ("model", "oracle"):
        raise ConfigError(f"textureSource must be 'model' or 'oracle', got {texture_source!r}")
    t2m = doc.get("textureToMaterial", {})
    if not isinstance(t2m, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in t2m.items()
    ):
        raise ConfigError("textureToMaterial must map strings to strings")
    scales = doc.get("perClassScale", {})
    if not isinstance(scales, dict) or not all(
        isinstance(v, (int, float)) and v > 0 for v in scales.values()
    ):
        raise ConfigError("perClassScale must map class names to positive numbers")
    for key in ("objectnessThreshold", "nmsIouThreshold"):
        if key in doc and not isinstance(doc[key], (int, float)):
            raise ConfigError(f"{key} must be a number")
    if not isinstance(doc.get("compositeDensity", False), bool):
        raise ConfigError("compositeDensity must be a boolean")
    model_path = doc.get("materialModel")
    if texture_source == "model" and not isinstance(model_path, str):
        raise ConfigError("textureSource 'model' requires a 'materialModel' path")
    return PipelineConfig(
        classes=classes,
        mesh_registry=registry,
        density_db=doc.get("densityDb"),
        material_model=model_path,
        texture_to_material={k: v for k, v in t2m.items()},
        objectness_threshold=float(doc.get("objectnessThreshold", 0.5)),
        nms_iou_threshold=float(doc.get("nmsIouThreshold", 0.45)),
        per_class_scale={k: float(v) for k, v in scales.items()},
        texture_source=texture_source,
        base_dir=os.path.dirname(os.path.abspath(str(path))),
    )


# --- detection sources ----------------------------------------------------------


@dataclass
class DetectionSource:
    """A parsed detections document: oracle annotations or a raw tensor."""

    kind: str  # "oracle" | "tensor"
    payload: dict
    path: str | None = None


def detection_source_from_dict(doc: dict, path: str | None = None) -> DetectionSource:
    if not isinstance(doc, dict):
        raise SchemaError("detections document must be a JSON object")
    if "objects" in doc:
        return DetectionSource(kind="oracle", payload=doc, path=path)
    if "predictions" in doc:
        return DetectionSource(kind="tensor", payload=doc, path=path)
    raise SchemaError("detections document needs either 'objects' or 'predictions'")


def load_detection_source(path) -> DetectionSource:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read detections {path}: {exc}") from None
    return detection_source_from_dict(doc, path=str(path))


# --- reports ----------------------------------------------------------------------


@dataclass
class Provenance:
    backend: str
    texture_source: str
    hashes: dict[str, str | None]

    def to_dict(self) -> dict:
        return {"backend": self.backend, "textureSource": self.texture_source, **self.hashes}


@dataclass
class ObjectReport:
    class_name: str
    box: det_mod.Rect
    material_distribution: dict[str, float]
    dominant: str
    mesh_id: str
    volume_dm3: float
    density_kg_dm3: float
    mass_kg: float
    provenance: Provenance

    def to_dict(self) -> dict:
        return {
            "class": self.class_name,
            "bbox": [self.box.left, self.box.top, self.box.width, self.box.height],
            "materials": {k: self.material_distribution[k] for k in sorted(self.material_distribution)},
            "dominantMaterial": self.dominant,
            "meshId": self.mesh_id,
            "volume_dm3": self.volume_dm3,
            "density_kg_dm3": self.density_kg_dm3,
            "mass_kg": self.mass_kg,
        }


@dataclass
class ObjectError:
    index: int
    class_name: str
    stage: str
    error: str
    message: str

    def to_dict(self) -> dict:
        return {
            "objectIndex": self.index,
            "class": self.class_name,
            "stage": self.stage,
            "error": self.error,
            "message": self.message,
        }


@dataclass
class SceneReport:
    image_id: str
    objects: list[ObjectReport]
    errors: list[ObjectError]
    provenance: Provenance

    @property
    def total_volume_dm3(self) -> float:
        return sum(o.volume_dm3 for o in self.objects)

    @property
    def total_mass_kg(self) -> float:
        return sum(o.mass_kg for o in self.objects)

    def to_dict(self) -> dict:
        return {
            "image": self.image_id,
            "objects": [o.to_dict() for o in self.objects],
            "totals": {"volume_dm3": self.total_volume_dm3, "mass_kg": self.total_mass_kg},
            "errors": [e.to_dict() for e in self.errors],
            "provenance": self.provenance.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


# --- orchestration -----------------------------------------------------------------


def object_mass(volume_dm3: float, density_kg_dm3: float) -> float:
    """Mass in kg of a solid object: density times volume."""
    if volume_dm3 <= 0 or density_kg_dm3 <= 0:
        raise NonPositiveInput(
            f"volume and density must be positive, got {volume_dm3}, {density_kg_dm3}"
        )
    return density_kg_dm3 * volume_dm3


def assign_mesh(
    class_name: str, registry: MeshRegistry, scale_overrides: dict[str, float] | None = None
) -> Mesh:
    """Load the single registered mesh for a class, with all scaling applied.

    The registry's canonical scale and any per-class override multiply.
    """
    entry = registry.resolve(class_name)
    mesh = load_mesh(registry.resolved_path(class_name))
    scale = entry.scale * (scale_overrides or {}).get(class_name, 1.0)
    if scale != 1.0:
        mesh = scale_mesh(mesh, scale)
    return mesh


def _file_sha256(path: str | None) -> str | None:
    if path is None:
        return None
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return digest.hexdigest()


class ScenePipeline:
    """Loads all shared assets once; `process` may then run per scene.

    Meshes, the density database, and the material model are read-only
    after construction, so independent scenes can be processed in
    parallel. Mesh problems (missing registration, parse failures, leaky
    surfaces) are kept per class and surface as per-object errors rather
    than failing construction, so one bad class cannot poison a batch.
    """

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.registry = load_mesh_registry(config.resolve(config.mesh_registry))
        if config.density_db is None:
            self.db: DensityDatabase = default_density_database()
            db_hash = "builtin"
        else:
            self.db = load_density_csv(config.resolve(config.density_db))
            db_hash = _file_sha256(config.resolve(config.density_db))
        self.model: MaterialModel | None = None
        model_hash = None
        if config.texture_source == "model":
            if config.material_model is None:
                raise ConfigError("textureSource 'model' requires a material model")
            self.model = load_material_model(config.resolve(config.material_model))
            model_hash = _file_sha256(config.resolve(config.material_model))
        self._hashes = {
            "meshRegistry": _file_sha256(config.resolve(config.mesh_registry)),
            "densityDb": db_hash,
            "materialModel": model_hash,
        }

        self._volumes: dict[str, tuple[str, float]] = {}  # class -> (mesh id, dm^3)
        self._mesh_errors: dict[str, SceneMassError] = {}
        for class_name in config.classes:
            try:
                mesh = assign_mesh(class_name, self.registry, config.per_class_scale)
                self._volumes[class_name] = (mesh.id, mesh_volume(mesh))
            except (SceneMassError, OSError) as exc:
                self._mesh_errors[class_name] = (
                    exc
                    if isinstance(exc, SceneMassError)
                    else UnregisteredClass(f"mesh for '{class_name}' unreadable: {exc}")
                )

    # -- detections ------------------------------------------------------------

    def _detections(self, source: DetectionSource, image_w: int, image_h: int) -> list[Detection]:
        if source.kind == "oracle":
            dets = det_mod.load_oracle_detections(
                source.payload, image_w, image_h, classes=self.config.classes
            )
        elif source.kind == "tensor":
            grid, class_names, preds = det_mod.load_raw_predictions(source.payload)
            boxes = [decode_box(p, grid, class_names) for p in preds]
            boxes = filter_objectness(boxes, self.config.objectness_threshold)
            dets = [det_mod.to_detection(b) for b in boxes]
        else:
            raise SchemaError(f"unknown detection source kind '{source.kind}'")
        return nms(dets, self.config.nms_iou_threshold)

    # -- per-scene work ----------------------------------------------------------

    def process(
        self, image: np.ndarray, source: DetectionSource, image_id: str | None = None
    ) -> SceneReport:
        """Produce the scene report for one image.

        Objects are reported in descending detection confidence. Any
        object whose stages fail is recorded under `errors` with the stage
        name and the offending object's index.
        """
        h, w = image.shape[:2]
        provenance = Provenance(
            backend=source.kind,
            texture_source=self.config.texture_source,
            hashes=dict(self._hashes),
        )
        if image_id is None:
            image_id = str(source.payload.get("image", "scene"))

        objects: list[ObjectReport] = []
        errors: list[ObjectError] = []
        for index, det in enumerate(self._detections(source, w, h)):
            stage = "crop"
            try:
                crop = crop_and_resize(image, det)
                stage = "texture"
                if self.config.texture_source == "oracle":
                    if det.material is None:
                        raise UnknownMaterial(
                            "oracle texture source but annotation has no 'material'"
                        )
                    dist = {det.material: 1.0}
                else:
                    dist = classify_material(crop, self.model)
                dominant = dominant_material(dist)
                material = self.config.texture_to_material.get(dominant, "other")
                stage = "density"
                density = lookup_density(self.db, material)
                stage = "mesh"
                if det.class_name in self._mesh_errors:
                    raise self._mesh_errors[det.class_name]
                if det.class_name not in self._volumes:
                    raise UnregisteredClass(
                        f"class '{det.class_name}' is not in the configured class list"
                    )
                mesh_id, volume = self._volumes[det.class_name]
                stage = "mass"
                mass = object_mass(volume, density)
            except SceneMassError as exc:
                errors.append(
                    ObjectError(
                        index=index,
                        class_name=det.class_name,
                        stage=stage,
                        error=type(exc).__name__,
                        message=str(exc),
                    )
                )
                continue
            objects.append(
                ObjectReport(
                    class_name=det.class_name,
                    box=det.box,
                    material_distribution=dist,
                    dominant=dominant,
                    mesh_id=mesh_id,
                    volume_dm3=volume,
                    density_kg_dm3=density,
                    mass_kg=mass,
                    provenance=provenance,
                )
            )
        return SceneReport(
            image_id=image_id, objects=objects, errors=errors, provenance=provenance
        )


def process_scene(
    image: np.ndarray,
    source: DetectionSource,
    config: PipelineConfig,
    image_id: str | None = None,
) -> SceneReport:
    """One-shot convenience wrapper around ScenePipeline for a single scene."""
    return ScenePipeline(config).process(image, source, image_id=image_id)
