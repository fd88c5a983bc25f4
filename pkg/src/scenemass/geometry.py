"""Sectioned triangle meshes: parsing, validation, scaling, and volume.

Coordinates are centimetres. Volumes are the sum of per-triangle signed
tetrahedron contributions (one tetrahedron per triangle, apex at the
origin); for a closed, consistently oriented surface the inward-facing
parts subtract, so enclosed cavities reduce the total. The absolute value
is taken once at the end, which makes the result independent of whether
the authoring convention winds outward faces clockwise or
counter-clockwise, as long as it is consistent. Totals are reported in
dm^3 so that densities in kg/dm^3 multiply directly to kilograms.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DegenerateTriangle,
    EmptyMesh,
    IndexOutOfRange,
    MalformedLine,
    NonPositiveScale,
    NonTriangleFace,
    NotWatertight,
    UnregisteredClass,
)

CM3_PER_DM3 = 1000.0


@dataclass
class MeshSection:
    """One named sub-object: a vertex table plus triangles indexing into it."""

    name: str
    vertices: np.ndarray  # (n, 3) float64, centimetres
    triangles: np.ndarray  # (m, 3) int32, indices into `vertices`


@dataclass
class Mesh:
    """An immutable-by-convention collection of sections."""

    id: str
    sections: list[MeshSection]
    units_per_cm: float = 1.0


@dataclass
class WatertightReport:
    """Outcome of the closed-surface check; defects keyed by section name."""

    watertight: bool
    open_edges: list[tuple[str, int, int]] = field(default_factory=list)
    inconsistent_edges: list[tuple[str, int, int]] = field(default_factory=list)


@dataclass
class MeshStats:
    triangle_count: int
    vertex_count: int
    bounding_extent: tuple[float, float, float]  # max - min per axis, cm
    watertight: bool


# --- parsing ----------------------------------------------------------------

_DIRECTIVES = {"v", "f", "o", "g"}


def parse_mesh(content: str | bytes, mesh_id: str = "mesh") -> Mesh:
    """Parse the supported OBJ subset into a Mesh.

    Supported lines: ``v x y z``, ``f i j k`` (1-based indices, no slashes),
    ``o name``/``g name`` opening a new section, ``#`` comments, and blank
    lines. Face indices must reference vertices of the section being built.
    Zero-area faces are rejected outright because they corrupt the edge
    bookkeeping of the watertightness check.

    Raises:
        MalformedLine: unsupported directive or unparsable fields.
        NonTriangleFace: a face without exactly three vertices.
        IndexOutOfRange: a face index outside the current section.
        DegenerateTriangle: a face with zero area.
        EmptyMesh: no triangles in the whole file.
    """
    if isinstance(content, bytes):
        try:
            content = content.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedLine(f"not valid UTF-8: {exc}") from None

    sections: list[dict] = [{"name": "default", "base": 0, "verts": [], "tris": []}]
    total_vertices = 0

    for line_no, raw in enumerate(content.split("\n"), start=1):
        line = raw.rstrip("\r")
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        head = tokens[0]
        if head not in _DIRECTIVES:
            raise MalformedLine(f"unsupported directive {head!r}", line_no)
        current = sections[-1]

        if head in ("o", "g"):
            if len(tokens) != 2:
                raise MalformedLine(f"'{head}' needs exactly one name", line_no)
            if not current["verts"] and not current["tris"]:
                current["name"] = tokens[1]  # rename the still-empty section
            else:
                sections.append(
                    {"name": tokens[1], "base": total_vertices, "verts": [], "tris": []}
                )

        elif head == "v":
            if len(tokens) != 4:
                raise MalformedLine("'v' needs exactly three coordinates", line_no)
            try:
                point = [float(t) for t in tokens[1:]]
            except ValueError:
                raise MalformedLine(f"bad coordinate in {line!r}", line_no) from None
            if not all(math.isfinite(c) for c in point):
                raise MalformedLine("non-finite coordinate", line_no)
            current["verts"].append(point)
            total_vertices += 1

        else:  # "f"
            if any("/" in t for t in tokens[1:]):
                raise MalformedLine("face indices with slashes are not supported", line_no)
            if len(tokens) != 4:
                raise NonTriangleFace(
                    f"face has {len(tokens) - 1} vertices, expected 3", line_no
                )
            try:
                refs = [int(t) for t in tokens[1:]]
            except ValueError:
                raise MalformedLine(f"bad face index in {line!r}", line_no) from None
            base = current["base"]
            local = []
            for ref in refs:
                if not base < ref <= base + len(current["verts"]):
                    raise IndexOutOfRange(
                        f"face index {ref} outside section "
                        f"'{current['name']}' (valid: {base + 1}..{base + len(current['verts'])})",
                        line_no,
                    )
                local.append(ref - base - 1)
            a, b, c = (np.asarray(current["verts"][i], dtype=np.float64) for i in local)
            cross = np.cross(b - a, c - a)
            if float(cross @ cross) == 0.0:
                raise DegenerateTriangle(f"face {refs} has zero area", line_no)
            current["tris"].append(local)

    built = [
        MeshSection(
            name=s["name"],
            vertices=np.asarray(s["verts"], dtype=np.float64).reshape(-1, 3),
            triangles=np.asarray(s["tris"], dtype=np.int32).reshape(-1, 3),
        )
        for s in sections
    ]
    if sum(len(s.triangles) for s in built) == 0:
        raise EmptyMesh("no faces found")
    return Mesh(id=mesh_id, sections=built)


def load_mesh(path, mesh_id: str | None = None) -> Mesh:
    with open(path, "rb") as fh:
        data = fh.read()
    if mesh_id is None:
        mesh_id = os.path.splitext(os.path.basename(str(path)))[0]
    return parse_mesh(data, mesh_id=mesh_id)


# --- validation -------------------------------------------------------------


def validate_watertight(mesh: Mesh) -> WatertightReport:
    """Check that every section is a closed, consistently oriented surface.

    An undirected edge must be used by exactly two triangles, traversing it
    in opposite directions. Edges used once are reported as open; edges used
    twice in the same direction, or more than twice, as inconsistent.
    """
    open_edges: list[tuple[str, int, int]] = []
    inconsistent: list[tuple[str, int, int]] = []
    for section in mesh.sections:
        uses: dict[tuple[int, int], list[int]] = {}
        for a, b, c in section.triangles.tolist():
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                uses.setdefault(key, []).append(1 if u < v else -1)
        for (u, v), signs in uses.items():
            if len(signs) == 1:
                open_edges.append((section.name, u, v))
            elif len(signs) != 2 or signs[0] + signs[1] != 0:
                inconsistent.append((section.name, u, v))
    return WatertightReport(
        watertight=not open_edges and not inconsistent,
        open_edges=open_edges,
        inconsistent_edges=inconsistent,
    )


# --- volume -----------------------------------------------------------------


def signed_triangle_volume(a, b, c) -> float:
    """Signed volume (cm^3) of the tetrahedron (origin, a, b, c).

    Equals the scalar triple product a . (b x c) / 6. Positive when the
    triangle faces away from the origin under the right-hand rule; swapping
    two vertices negates the result exactly.
    """
    ax, ay, az = (float(x) for x in a)
    bx, by, bz = (float(x) for x in b)
    cx, cy, cz = (float(x) for x in c)
    return (
        ax * (by * cz - bz * cy)
        + ay * (bz * cx - bx * cz)
        + az * (bx * cy - by * cx)
    ) / 6.0


def signed_volume_cm3(mesh: Mesh) -> float:
    """Sum of signed triangle volumes over all sections, before the abs().

    Each section is evaluated relative to its own first vertex. For closed
    sections this leaves the total unchanged (the tetrahedra over any fixed
    apex telescope to the same enclosed volume) while avoiding catastrophic
    cancellation when a small mesh sits far from the origin.
    """
    total = 0.0
    for section in mesh.sections:
        if len(section.triangles) == 0 or len(section.vertices) == 0:
            continue
        local = section.vertices - section.vertices[0]
        a = local[section.triangles[:, 0]]
        b = local[section.triangles[:, 1]]
        c = local[section.triangles[:, 2]]
        vols = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
        total += float(vols.sum())
    return total


def mesh_volume(mesh: Mesh) -> float:
    """Enclosed volume in dm^3; requires a watertight mesh.

    Raises:
        NotWatertight: the defect report is attached to the exception.
    """
    report = validate_watertight(mesh)
    if not report.watertight:
        raise NotWatertight(mesh.id, report)
    return abs(signed_volume_cm3(mesh)) / CM3_PER_DM3


def scale_mesh(mesh: Mesh, s: float) -> Mesh:
    """Uniformly scale all vertices by s > 0 (volume scales by s^3)."""
    if not (isinstance(s, (int, float)) and math.isfinite(s) and s > 0):
        raise NonPositiveScale(f"scale must be a positive finite number, got {s!r}")
    s = float(s)
    return Mesh(
        id=mesh.id,
        sections=[
            MeshSection(sec.name, sec.vertices * s, sec.triangles.copy())
            for sec in mesh.sections
        ],
        units_per_cm=mesh.units_per_cm,
    )


def mesh_stats(mesh: Mesh) -> MeshStats:
    """Counts, axis-aligned extent, and the computed watertight flag."""
    triangle_count = sum(len(s.triangles) for s in mesh.sections)
    vertex_count = sum(len(s.vertices) for s in mesh.sections)
    stacked = [s.vertices for s in mesh.sections if len(s.vertices)]
    if stacked:
        allv = np.vstack(stacked)
        extent = tuple(float(x) for x in (allv.max(axis=0) - allv.min(axis=0)))
    else:
        extent = (0.0, 0.0, 0.0)
    return MeshStats(
        triangle_count=triangle_count,
        vertex_count=vertex_count,
        bounding_extent=extent,
        watertight=validate_watertight(mesh).watertight,
    )


# --- class -> mesh registry --------------------------------------------------


@dataclass
class RegistryEntry:
    mesh_path: str
    scale: float = 1.0


@dataclass
class MeshRegistry:
    """Maps each object class to exactly one mesh file (plus canonical scale)."""

    entries: dict[str, RegistryEntry]
    base_dir: str = "."

    def resolve(self, class_name: str) -> RegistryEntry:
        entry = self.entries.get(class_name)
        if entry is None:
            raise UnregisteredClass(f"no mesh registered for class '{class_name}'")
        return entry

    def resolved_path(self, class_name: str) -> str:
        return os.path.join(self.base_dir, self.resolve(class_name).mesh_path)


def load_mesh_registry(path) -> MeshRegistry:
    """Load a registry JSON: {"class": {"mesh": path, "scale": real}, ...}."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read mesh registry {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("mesh registry must be a JSON object")
    entries: dict[str, RegistryEntry] = {}
    for name, spec in raw.items():
        if not isinstance(spec, dict) or "mesh" not in spec:
            raise ConfigError(f"registry entry for '{name}' needs a 'mesh' path")
        scale = spec.get("scale", 1.0)
        if not isinstance(scale, (int, float)) or scale <= 0:
            raise ConfigError(f"registry entry for '{name}' has bad scale {scale!r}")
        entries[name] = RegistryEntry(mesh_path=str(spec["mesh"]), scale=float(scale))
    return MeshRegistry(entries=entries, base_dir=os.path.dirname(os.path.abspath(str(path))))
