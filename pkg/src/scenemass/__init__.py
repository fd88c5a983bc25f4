"""Per-object material, volume, density, and mass inference for 2D scenes."""

from .density import (
    CompositionProfile,
    DensityDatabase,
    DensityRecord,
    ErrorRow,
    composite_density,
    default_density_database,
    dominant_material,
    load_composition_profile,
    load_density_csv,
    lookup_density,
    make_error_row,
    percent_error,
)
from .detection import (
    DecodedBox,
    Detection,
    GridSpec,
    RawPrediction,
    Rect,
    crop_and_resize,
    decode_box,
    filter_objectness,
    iou,
    load_oracle_detections,
    load_raw_predictions,
    nms,
)
from .geometry import (
    Mesh,
    MeshRegistry,
    MeshSection,
    MeshStats,
    WatertightReport,
    load_mesh,
    load_mesh_registry,
    mesh_stats,
    mesh_volume,
    parse_mesh,
    scale_mesh,
    signed_triangle_volume,
    signed_volume_cm3,
    validate_watertight,
)
from .material import (
    ChannelMeans,
    ClusterAssignment,
    Codebook,
    MaterialModel,
    assign_word,
    classify_material,
    extract_features,
    kmeans_fit,
    load_material_model,
    preprocess_crop,
    save_material_model,
    train_material_model,
)
from .pipeline import (
    DetectionSource,
    ObjectReport,
    PipelineConfig,
    SceneReport,
    ScenePipeline,
    assign_mesh,
    load_detection_source,
    load_pipeline_config,
    object_mass,
    process_scene,
)
from .ppm import read_ppm, read_ppm_bytes, write_ppm

__version__ = "0.1.0"
