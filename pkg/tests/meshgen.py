"""Deterministic builders for closed test meshes and OBJ fixtures."""

from __future__ import annotations

import numpy as np

from scenemass.geometry import Mesh, MeshSection


def orient_outward(verts, faces):
    """Fix winding of a convex solid so every face points away from its center."""
    verts = np.asarray(verts, dtype=np.float64)
    center = verts.mean(axis=0)
    fixed = []
    for a, b, c in faces:
        normal = np.cross(verts[b] - verts[a], verts[c] - verts[a])
        outward = (verts[a] + verts[b] + verts[c]) / 3.0 - center
        fixed.append((a, b, c) if float(normal @ outward) > 0 else (a, c, b))
    return [tuple(map(int, f)) for f in fixed]


def reverse_faces(faces):
    return [(a, c, b) for a, b, c in faces]


def box(sx=1.0, sy=None, sz=None, center=(0.0, 0.0, 0.0)):
    """Axis-aligned box; defaults to a cube with edge sx."""
    sy = sx if sy is None else sy
    sz = sx if sz is None else sz
    cx, cy, cz = center
    hx, hy, hz = sx / 2.0, sy / 2.0, sz / 2.0
    verts = [
        (cx - hx, cy - hy, cz - hz),
        (cx + hx, cy - hy, cz - hz),
        (cx + hx, cy + hy, cz - hz),
        (cx - hx, cy + hy, cz - hz),
        (cx - hx, cy - hy, cz + hz),
        (cx + hx, cy - hy, cz + hz),
        (cx + hx, cy + hy, cz + hz),
        (cx - hx, cy + hy, cz + hz),
    ]
    quads = [
        (0, 1, 2, 3),  # z-
        (4, 5, 6, 7),  # z+
        (0, 1, 5, 4),  # y-
        (3, 2, 6, 7),  # y+
        (0, 3, 7, 4),  # x-
        (1, 2, 6, 5),  # x+
    ]
    faces = []
    for a, b, c, d in quads:
        faces.append((a, b, c))
        faces.append((a, c, d))
    return verts, orient_outward(verts, faces)


def unit_cube(center=(0.5, 0.5, 0.5)):
    return box(1.0, center=center)


def tetra(center=(0.0, 0.0, 0.0), half=0.5):
    """Regular tetrahedron on alternating cube corners."""
    cx, cy, cz = center
    verts = [
        (cx + half, cy + half, cz + half),
        (cx + half, cy - half, cz - half),
        (cx - half, cy + half, cz - half),
        (cx - half, cy - half, cz + half),
    ]
    faces = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
    return verts, orient_outward(verts, faces)


def bipyramid(radius=1.0, height=1.0, sides=6, center=(0.0, 0.0, 0.0)):
    cx, cy, cz = center
    ring = [
        (
            cx + radius * np.cos(2 * np.pi * j / sides),
            cy + radius * np.sin(2 * np.pi * j / sides),
            cz,
        )
        for j in range(sides)
    ]
    verts = ring + [(cx, cy, cz + height), (cx, cy, cz - height)]
    top, bottom = sides, sides + 1
    faces = []
    for j in range(sides):
        nj = (j + 1) % sides
        faces.append((top, j, nj))
        faces.append((bottom, nj, j))
    return verts, orient_outward(verts, faces)


def uv_sphere(rx=1.0, ry=1.0, rz=1.0, segments=8, rings=4, center=(0.0, 0.0, 0.0)):
    """Closed ellipsoid with poles on the y axis.

    Vertex count = segments*rings + 2, triangle count = 2*segments*rings.
    """
    cx, cy, cz = center
    verts = [(cx, cy + ry, cz)]
    for i in range(1, rings + 1):
        theta = np.pi * i / (rings + 1)
        for j in range(segments):
            phi = 2 * np.pi * j / segments
            verts.append(
                (
                    cx + rx * np.sin(theta) * np.cos(phi),
                    cy + ry * np.cos(theta),
                    cz + rz * np.sin(theta) * np.sin(phi),
                )
            )
    verts.append((cx, cy - ry, cz))
    bottom = len(verts) - 1
    ring0 = lambda i, j: 1 + i * segments + (j % segments)  # noqa: E731
    faces = []
    for j in range(segments):
        faces.append((0, ring0(0, j), ring0(0, j + 1)))
    for i in range(rings - 1):
        for j in range(segments):
            a, b = ring0(i, j), ring0(i, j + 1)
            c, d = ring0(i + 1, j + 1), ring0(i + 1, j)
            faces.append((a, b, c))
            faces.append((a, c, d))
    for j in range(segments):
        faces.append((bottom, ring0(rings - 1, j + 1), ring0(rings - 1, j)))
    return verts, orient_outward(verts, faces)


def translate(verts, offset):
    ox, oy, oz = offset
    return [(x + ox, y + oy, z + oz) for x, y, z in verts]


def obj_text(sections) -> str:
    """Serialize [(name, verts, faces), ...] with global 1-based face indices."""
    lines = []
    base = 0
    for name, verts, faces in sections:
        lines.append(f"o {name}")
        for x, y, z in verts:
            lines.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
        for a, b, c in faces:
            lines.append(f"f {base + a + 1} {base + b + 1} {base + c + 1}")
        base += len(verts)
    return "\n".join(lines) + "\n"


def mesh_from_sections(sections, mesh_id="mesh") -> Mesh:
    """Build a Mesh object directly (bypassing the OBJ round-trip)."""
    return Mesh(
        id=mesh_id,
        sections=[
            MeshSection(
                name=name,
                vertices=np.asarray(verts, dtype=np.float64).reshape(-1, 3),
                triangles=np.asarray(faces, dtype=np.int32).reshape(-1, 3),
            )
            for name, verts, faces in sections
        ],
    )


def cavity_sections(outer=10.0, inner=5.0):
    """Outer cube with an enclosed inner cube wound inward (a cavity)."""
    overts, ofaces = box(outer, center=(0.0, 0.0, 0.0))
    iverts, ifaces = box(inner, center=(0.0, 0.0, 0.0))
    return [("outer", overts, ofaces), ("cavity", iverts, reverse_faces(ifaces))]


def bicycle_sections():
    """Closed multi-part fixture: 4159 vertices, 5022 triangles, 50x198x114 cm.

    One ellipsoid shell (867 vertices, 1730 triangles) plus a lattice of 823
    small tetrahedra (3292 vertices, 3292 triangles) strictly inside the
    shell's bounding box, so only the shell determines the extent.
    """
    shell_verts, shell_faces = uv_sphere(rx=25.0, ry=99.0, rz=57.0, segments=173, rings=5)
    lat_verts: list[tuple] = []
    lat_faces: list[tuple] = []
    count = 0
    for iy in range(17):
        for iz in range(7):
            for ix in range(7):
                if count == 823:
                    break
                center = (-18.0 + ix * 6.0, -88.0 + iy * 11.0, -48.0 + iz * 16.0)
                tverts, tfaces = tetra(center=center, half=0.5)
                offset = len(lat_verts)
                lat_verts.extend(tverts)
                lat_faces.extend((a + offset, b + offset, c + offset) for a, b, c in tfaces)
                count += 1
    assert count == 823
    return [("shell", shell_verts, shell_faces), ("lattice", lat_verts, lat_faces)]


def random_closed_sections(rng: np.random.Generator):
    """One random convex closed solid with a random offset, <= 200 triangles."""
    kind = rng.integers(0, 4)
    offset = tuple(rng.uniform(-50, 50, size=3))
    if kind == 0:
        verts, faces = box(
            sx=float(rng.uniform(0.5, 20)),
            sy=float(rng.uniform(0.5, 20)),
            sz=float(rng.uniform(0.5, 20)),
        )
    elif kind == 1:
        verts, faces = tetra(half=float(rng.uniform(0.2, 5)))
    elif kind == 2:
        verts, faces = bipyramid(
            radius=float(rng.uniform(0.5, 10)),
            height=float(rng.uniform(0.5, 10)),
            sides=int(rng.integers(3, 40)),
        )
    else:
        segments = int(rng.integers(3, 12))
        rings = int(rng.integers(2, min(8, 100 // segments)))
        verts, faces = uv_sphere(
            rx=float(rng.uniform(0.5, 10)),
            ry=float(rng.uniform(0.5, 10)),
            rz=float(rng.uniform(0.5, 10)),
            segments=segments,
            rings=rings,
        )
    return [("solid", translate(verts, offset), faces)]
