"""Command-line interface: mesh tools, training, detection, batch runs.

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 validation
failure. All JSON outputs are written atomically (temp file + rename) and
are byte-stable across identical runs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

from .density import dominant_material, load_density_csv
from .detection import load_oracle_detections, load_raw_predictions, decode_box, filter_objectness, nms, to_detection
from .errors import (
    ConfigError,
    MeshParseError,
    NotWatertight,
    PpmError,
    SceneMassError,
    SchemaError,
)
from .geometry import load_mesh, mesh_stats, mesh_volume, scale_mesh, validate_watertight
from .material import (
    classify_material,
    load_material_model,
    material_model_to_json,
    train_material_model,
)
from .pipeline import ScenePipeline, load_detection_source, load_pipeline_config
from .ppm import read_ppm

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_VALIDATION = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we reserve that
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _emit(doc) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _write_atomic(path, text: str) -> None:
    parent = os.path.dirname(os.path.abspath(str(path))) or "."
    fd, tmp = tempfile.mkstemp(dir=parent, prefix=".scenemass-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, str(path))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _edges_doc(edges) -> list[list]:
    return [[section, int(u), int(v)] for section, u, v in edges]


# --- commands ---------------------------------------------------------------


def _cmd_mesh_info(args) -> int:
    try:
        mesh = load_mesh(args.mesh)
    except (OSError, MeshParseError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    stats = mesh_stats(mesh)
    doc = {
        "triangles": stats.triangle_count,
        "vertices": stats.vertex_count,
        "extent_cm": list(stats.bounding_extent),
        "watertight": stats.watertight,
    }
    if not stats.watertight:
        report = validate_watertight(mesh)
        doc["openEdges"] = _edges_doc(report.open_edges)
        doc["inconsistentEdges"] = _edges_doc(report.inconsistent_edges)
    _emit(doc)
    return EXIT_OK if stats.watertight else EXIT_VALIDATION


def _cmd_volume(args) -> int:
    try:
        mesh = load_mesh(args.mesh)
        if args.scale != 1.0:
            mesh = scale_mesh(mesh, args.scale)
    except (OSError, MeshParseError, SceneMassError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    try:
        volume = mesh_volume(mesh)
    except NotWatertight as exc:
        print(f"error: {exc}", file=sys.stderr)
        _emit(
            {
                "watertight": False,
                "openEdges": _edges_doc(exc.report.open_edges),
                "inconsistentEdges": _edges_doc(exc.report.inconsistent_edges),
            }
        )
        return EXIT_VALIDATION
    _emit({"volume_dm3": volume})
    return EXIT_OK


def _load_corpus_dir(corpus_dir):
    classes = sorted(
        d for d in os.listdir(corpus_dir) if os.path.isdir(os.path.join(corpus_dir, d))
    )
    corpus = []
    for cls in classes:
        for name in sorted(os.listdir(os.path.join(corpus_dir, cls))):
            if name.endswith(".ppm"):
                corpus.append((read_ppm(os.path.join(corpus_dir, cls, name)), cls))
    return classes, corpus


def _cmd_train(args) -> int:
    try:
        classes, corpus = _load_corpus_dir(args.corpus)
        model = train_material_model(corpus, k=args.k, seed=args.seed, classes=classes)
    except (OSError, SceneMassError, ValueError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    text = material_model_to_json(model)
    _write_atomic(args.out, text)
    correct = sum(
        1
        for crop, label in corpus
        if dominant_material(classify_material(crop, model)) == label
    )
    _emit(
        {
            "classes": classes,
            "k": args.k,
            "seed": args.seed,
            "vectors": len(corpus),
            "selfAccuracy": correct / len(corpus),
            "out": args.out,
            "sha256": hashlib.sha256(text.encode()).hexdigest(),
        }
    )
    return EXIT_OK


def _cmd_classify(args) -> int:
    try:
        model = load_material_model(args.model)
        crop = read_ppm(args.image)
        dist = classify_material(crop, model)
    except (OSError, SceneMassError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    _emit({"materials": {k: dist[k] for k in sorted(dist)}})
    return EXIT_OK


def _detections_doc(dets) -> dict:
    return {
        "detections": [
            {
                "class": d.class_name,
                "bbox": [d.box.left, d.box.top, d.box.width, d.box.height],
                "confidence": d.confidence,
            }
            for d in dets
        ]
    }


def _cmd_detect(args) -> int:
    try:
        with open(args.input, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(f"cannot read {args.input}: {exc}", EXIT_INPUT)
    classes = args.classes.split(",") if args.classes else None
    try:
        if args.backend == "oracle":
            dets = load_oracle_detections(
                payload, payload.get("width", 0), payload.get("height", 0), classes=classes
            )
        else:
            grid, class_names, preds = load_raw_predictions(payload)
            boxes = filter_objectness(
                [decode_box(p, grid, class_names) for p in preds], args.objectness
            )
            dets = [to_detection(b) for b in boxes]
        dets = nms(dets, args.nms_iou)
    except SceneMassError as exc:
        return _fail(str(exc), EXIT_INPUT)
    _emit(_detections_doc(dets))
    return EXIT_OK


def _cmd_db_check(args) -> int:
    try:
        db = load_density_csv(args.db)
    except (OSError, SchemaError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    _emit({"materials": len(db), "ok": True})
    return EXIT_OK


def _load_manifest(path) -> tuple[list[tuple[str, str]], str | None]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise SchemaError("manifest needs an 'entries' list")
    base = os.path.dirname(os.path.abspath(str(path)))
    entries = []
    for i, entry in enumerate(doc["entries"]):
        if (
            not isinstance(entry, dict)
            or not isinstance(entry.get("image"), str)
            or not isinstance(entry.get("source"), str)
        ):
            raise SchemaError(f"entries[{i}] needs 'image' and 'source' paths")
        entries.append((os.path.join(base, entry["image"]), os.path.join(base, entry["source"])))
    out_dir = doc.get("outputDir")
    if out_dir is not None:
        out_dir = os.path.join(base, str(out_dir))
    return entries, out_dir


def _cmd_run(args) -> int:
    try:
        entries, manifest_out = _load_manifest(args.manifest)
        config = load_pipeline_config(args.config)
        pipeline = ScenePipeline(config)
    except (OSError, json.JSONDecodeError, SceneMassError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    out_dir = args.out or manifest_out
    if out_dir is None:
        return _fail("no output directory (set 'outputDir' in the manifest or pass --out)", EXIT_USAGE)
    missing = [p for pair in entries for p in pair if not os.path.exists(p)]
    if missing:
        return _fail(f"manifest references missing files: {missing}", EXIT_INPUT)
    os.makedirs(out_dir, exist_ok=True)

    def run_entry(pair):
        image_path, source_path = pair
        image = read_ppm(image_path)
        source = load_detection_source(source_path)
        report = pipeline.process(image, source)
        return report

    try:
        if args.threads > 1:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                reports = list(pool.map(run_entry, entries))
        else:
            reports = [run_entry(pair) for pair in entries]
    except (PpmError, SchemaError, OSError) as exc:
        return _fail(str(exc), EXIT_INPUT)

    rows = []
    total_mass = 0.0
    total_volume = 0.0
    for (image_path, _), report in zip(entries, reports):
        stem = os.path.splitext(os.path.basename(image_path))[0]
        _write_atomic(os.path.join(out_dir, f"{stem}.report.json"), report.to_json())
        for obj in report.objects:
            rows.append(
                (report.image_id, obj.class_name, obj.dominant, obj.density_kg_dm3, obj.mass_kg)
            )
        total_mass += report.total_mass_kg
        total_volume += report.total_volume_dm3

    print(f"{'image':<24} {'class':<12} {'material':<10} {'density':>8} {'mass_kg':>12}")
    for image_id, cls, material, density, mass in rows:
        print(f"{image_id:<24} {cls:<12} {material:<10} {density:>8.3f} {mass:>12.6f}")
    print(f"objects={len(rows)} total_volume_dm3={total_volume!r} total_mass_kg={total_mass!r}")
    return EXIT_OK


# --- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scenemass", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh-info", help="parse a mesh and report stats")
    p.add_argument("mesh")
    p.set_defaults(func=_cmd_mesh_info)

    p = sub.add_parser("volume", help="enclosed volume of a watertight mesh (dm^3)")
    p.add_argument("mesh")
    p.add_argument("--scale", type=float, default=1.0)
    p.set_defaults(func=_cmd_volume)

    p = sub.add_parser("train", help="train a material model from a corpus directory")
    p.add_argument("corpus")
    p.add_argument("--k", type=int, default=64)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("classify", help="classify the material of a 224x224 PPM crop")
    p.add_argument("image")
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("detect", help="produce detections from an oracle or tensor file")
    p.add_argument("backend", choices=["oracle", "tensor"])
    p.add_argument("input")
    p.add_argument("--classes", default=None, help="comma-separated allowed class names")
    p.add_argument("--objectness", type=float, default=0.5)
    p.add_argument("--nms-iou", type=float, default=0.45)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("run", help="process a manifest of scenes into report files")
    p.add_argument("manifest")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output directory (overrides the manifest)")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("db", help="density database tools")
    db_sub = p.add_subparsers(dest="db_command", required=True)
    q = db_sub.add_parser("check", help="validate a density CSV")
    q.add_argument("db")
    q.set_defaults(func=_cmd_db_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


def app() -> None:
    sys.exit(main())


if __name__ == "__main__":
    app()
