"""
Binary STL export of the printable filter body.

The body is a solid of revolution: an outer cylinder minus the acoustic
cavity (primary duct opening on the top face, expansion chamber below it)
minus the microphone mounting bore, whose ceiling is the nodal plane.
Coordinates are written in millimeters.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .geometry import FilterGeometry, validate_geometry

HEADER_TEXT = b"spurfilter revolved body; units=mm"


@dataclass(frozen=True)
class StlParams:
    """
    Body dimensions in meters.

    ``body_height`` is the total height; the port must open on the top face
    and the bore on the bottom face, so it has to equal
    ``l0 + l1 + mount_bore_depth``. Leave it ``None`` to derive it.
    The O-ring groove is cut into the bore wall when ``groove_depth`` and
    ``groove_width`` are both positive; ``groove_offset`` is its distance
    from the bottom face.
    """

    outer_radius: float
    mount_bore_radius: float
    mount_bore_depth: float
    revolve_segments: int = 256
    body_height: float | None = None
    groove_depth: float = 0.0
    groove_width: float = 0.0
    groove_offset: float = 0.0


def body_profile(geom: FilterGeometry, params: StlParams) -> np.ndarray:
    """Counter-clockwise (r, z) polygon of the solid's meridian section."""
    validate_geometry(geom)
    p = params
    if p.revolve_segments < 16:
        raise GeometryError("revolve_segments must be >= 16")
    a0, l0, a1, l1 = geom.a0, geom.l0, geom.a1, geom.l1
    top = l0 + l1
    bottom = -p.mount_bore_depth
    if not p.mount_bore_depth > 0:
        raise GeometryError("mount_bore_depth must be positive")
    if p.body_height is not None and not math.isclose(p.body_height, top - bottom, rel_tol=1e-9):
        raise GeometryError(
            f"body_height={p.body_height:g} m must equal l0 + l1 + mount_bore_depth = {top - bottom:g} m"
        )
    if not p.outer_radius > a1:
        raise GeometryError(f"outer_radius={p.outer_radius:g} m must exceed a1={a1:g} m")
    if not p.mount_bore_radius > a1:
        raise GeometryError("mount_bore_radius must exceed a1 so the chamber seats on the microphone")
    grooved = p.groove_depth > 0 and p.groove_width > 0
    wall_r = p.mount_bore_radius + (p.groove_depth if grooved else 0.0)
    if not wall_r < p.outer_radius:
        raise GeometryError("mounting bore (with groove) intersects the outer shell")

    pts = [(a0, top), (a0, l1)]
    if a1 > a0:
        pts.append((a1, l1))
    pts += [(a1, 0.0), (p.mount_bore_radius, 0.0)]
    if grooved:
        g_lo = bottom + p.groove_offset
        g_hi = g_lo + p.groove_width
        if not (bottom < g_lo and g_hi < 0.0):
            raise GeometryError("O-ring groove must lie strictly inside the bore wall")
        pts += [(p.mount_bore_radius, g_hi), (wall_r, g_hi), (wall_r, g_lo), (p.mount_bore_radius, g_lo)]
    pts += [(p.mount_bore_radius, bottom), (p.outer_radius, bottom), (p.outer_radius, top)]
    return np.array(pts, dtype=float)


def cylinder_profile(radius: float, height: float) -> np.ndarray:
    """Meridian section of a solid cylinder touching the axis."""
    return np.array([(0.0, 0.0), (radius, 0.0), (radius, height), (0.0, height)], dtype=float)


def revolve(profile: np.ndarray, segments: int):
    """
    Revolve a CCW (r, z) polygon about the z axis.

    Returns ``(vertices, faces)`` with shared vertex indices; vertices on
    the axis are emitted once, edges lying on the axis are skipped.
    """
    profile = np.asarray(profile, dtype=float)
    theta = 2.0 * np.pi * np.arange(segments) / segments
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    vertices = []
    ring = []
    for r, z in profile:
        if r == 0.0:
            ring.append([len(vertices)] * segments)
            vertices.append((0.0, 0.0, z))
        else:
            ring.append(list(range(len(vertices), len(vertices) + segments)))
            vertices.extend(zip(r * cos_t, r * sin_t, np.full(segments, z)))
    faces = []
    n = len(profile)
    for i in range(n):
        j = (i + 1) % n
        ri, rj = profile[i, 0], profile[j, 0]
        if ri == 0.0 and rj == 0.0:
            continue
        for s in range(segments):
            t = (s + 1) % segments
            a, b = ring[i][s], ring[i][t]
            c, d = ring[j][t], ring[j][s]
            # profile CCW in (r, z) means the outward side is to the right of
            # the edge direction; this winding yields outward normals
            if ri == 0.0:
                faces.append((a, c, d))
            elif rj == 0.0:
                faces.append((a, b, c))
            else:
                faces.append((a, b, c))
                faces.append((a, c, d))
    return np.array(vertices, dtype=float), np.array(faces, dtype=np.int64)


def stl_bytes(vertices: np.ndarray, faces: np.ndarray, header: bytes = HEADER_TEXT) -> bytes:
    """Serialize a triangle mesh as binary STL (little-endian)."""
    tri = vertices[faces].astype(np.float32)
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]).astype(np.float64)
    norm = np.linalg.norm(n, axis=1, keepdims=True)
    n = np.divide(n, norm, out=np.zeros_like(n), where=norm > 0).astype(np.float32)
    record = np.zeros(len(faces), dtype=np.dtype([
        ("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2"),
    ]))
    record["normal"] = n
    record["v"] = tri
    return header[:80].ljust(80, b"\0") + struct.pack("<I", len(faces)) + record.tobytes()


def read_stl(data: bytes):
    """Parse binary STL into ``(header, normals, triangles)``; triangles have shape (n, 3, 3)."""
    if len(data) < 84:
        raise ValueError("truncated STL header")
    (count,) = struct.unpack_from("<I", data, 80)
    if len(data) != 84 + 50 * count:
        raise ValueError(f"STL declares {count} triangles but holds {(len(data) - 84) / 50:g}")
    rec = np.frombuffer(data, dtype=np.dtype([
        ("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2"),
    ]), count=count, offset=84)
    return data[:80], rec["normal"].copy(), rec["v"].astype(np.float64)


def export_stl(geom: FilterGeometry, params: StlParams) -> bytes:
    """Binary STL of the revolved filter body, in millimeters."""
    profile = body_profile(geom, params) * 1e3
    vertices, faces = revolve(profile, params.revolve_segments)
    return stl_bytes(vertices, faces)


def signed_volume(triangles: np.ndarray) -> float:
    """Divergence-theorem volume of a closed triangle soup (n, 3, 3)."""
    t = np.asarray(triangles, dtype=np.float64)
    return float(np.einsum("ij,ij->i", t[:, 0], np.cross(t[:, 1], t[:, 2])).sum() / 6.0)


def edge_use_counts(triangles: np.ndarray) -> dict:
    """Map each undirected edge (by exact vertex coordinates) to its use count."""
    counts = {}
    for tri in np.asarray(triangles):
        keys = [tuple(v) for v in tri]
        for a, b in ((0, 1), (1, 2), (2, 0)):
            edge = (keys[a], keys[b]) if keys[a] < keys[b] else (keys[b], keys[a])
            counts[edge] = counts.get(edge, 0) + 1
    return counts


def is_watertight(triangles: np.ndarray) -> bool:
    """Every undirected edge is shared by exactly two triangles."""
    return all(c == 2 for c in edge_use_counts(triangles).values())
