"""
Parametric filter geometry, its axisymmetric (r, z) profile and the
structured quadratic-triangle mesh used by the FEM solver.

The acoustic domain is the union of two axis-aligned rectangles::

    z = l1 + l0  +----+            PORT on top, r <= a0
                 |    |  primary duct, radius a0
    z = l1       |    +--------+
                 |             |   expansion, radius a1
    z = 0        +----+--------+
                 NODAL  WALL

The nodal plane is the footprint of the primary duct on the bottom face
(r <= a0); the rest of the bottom, the rim and both shoulders are walls.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import GeometryError, MeshError


#: Exponent of the power-law cell stretching toward the re-entrant corner; 1 is uniform.
CORNER_GRADING = 2.0


class Tag(str, Enum):
    PORT = "PORT"
    WALL = "WALL"
    NODAL_PLANE = "NODAL_PLANE"
    AXIS = "AXIS"


@dataclass(frozen=True)
class FilterGeometry:
    """
    Design dimensions of the filter, all in meters.

    ``a1`` may be ``None`` in a design template whose expansion radius is
    still to be optimized.
    """

    a0: float
    l0: float
    a1: float | None
    l1: float
    d_ch: float

    def with_a1(self, a1: float) -> "FilterGeometry":
        return FilterGeometry(a0=self.a0, l0=self.l0, a1=a1, l1=self.l1, d_ch=self.d_ch)

    def scaled(self, s: float) -> "FilterGeometry":
        return FilterGeometry(
            a0=self.a0 * s, l0=self.l0 * s, a1=None if self.a1 is None else self.a1 * s,
            l1=self.l1 * s, d_ch=self.d_ch * s,
        )

    @property
    def total_length(self) -> float:
        return self.l0 + self.l1


def validate_geometry(geom: FilterGeometry, require_a1: bool = True) -> FilterGeometry:
    """Return ``geom`` unchanged if every invariant holds, else raise GeometryError."""
    problems = []
    for name in ("a0", "l0", "l1", "d_ch"):
        value = getattr(geom, name)
        if not (value is not None and math.isfinite(value) and value > 0):
            problems.append(f"{name}={value!r} must be > 0")
    if geom.a1 is None:
        if require_a1:
            problems.append("a1 is unset")
    elif not math.isfinite(geom.a1) or geom.a0 is None or not geom.a1 >= geom.a0:
        problems.append(f"a1={geom.a1!r} must be >= a0={geom.a0!r}")
    if not problems and geom.d_ch / 2.0 > geom.a0:
        problems.append(f"d_ch={geom.d_ch!r} must satisfy d_ch/2 <= a0={geom.a0!r}")
    if problems:
        raise GeometryError("invalid filter geometry: " + "; ".join(problems))
    return geom


@dataclass(frozen=True)
class Profile:
    """Closed counter-clockwise polygon in the (r, z) half-plane; ``tags[i]``
    labels the edge from ``vertices[i]`` to ``vertices[i+1]``."""

    vertices: np.ndarray
    tags: tuple

    def edges(self):
        n = len(self.vertices)
        for i in range(n):
            yield self.vertices[i], self.vertices[(i + 1) % n], self.tags[i]

    def area(self) -> float:
        """Shoelace area of the polygon (m^2)."""
        r, z = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(r * np.roll(z, -1) - np.roll(r, -1) * z))

    def tag_length(self, tag: Tag) -> float:
        return sum(float(np.hypot(*(b - a))) for a, b, t in self.edges() if t == tag)

    def to_csv(self) -> str:
        return _dump_points_csv(self.vertices, [t.value for t in self.tags])


def build_profile(geom: FilterGeometry) -> Profile:
    """L-shaped profile of the acoustic domain; a rectangle when ``a1 == a0``."""
    validate_geometry(geom)
    a0, l0, a1, l1 = geom.a0, geom.l0, geom.a1, geom.l1
    top = l1 + l0
    if a1 == a0:
        verts = [(0.0, 0.0), (a0, 0.0), (a0, top), (0.0, top)]
        tags = (Tag.NODAL_PLANE, Tag.WALL, Tag.PORT, Tag.AXIS)
    else:
        verts = [(0.0, 0.0), (a0, 0.0), (a1, 0.0), (a1, l1), (a0, l1), (a0, top), (0.0, top)]
        tags = (Tag.NODAL_PLANE, Tag.WALL, Tag.WALL, Tag.WALL, Tag.WALL, Tag.PORT, Tag.AXIS)
    return Profile(vertices=np.array(verts, dtype=float), tags=tags)


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Quadratic triangle mesh.

    ``triangles`` holds corner-node triples (counter-clockwise) and
    ``midnodes`` the matching mid-edge nodes for edges (0,1), (1,2), (2,0).
    ``boundary_edges`` holds ``(start, mid, end)`` node triples, oriented
    with the domain on the left, and ``boundary_tags`` their tags.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    midnodes: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: tuple
    profile: Profile
    divisions: tuple = field(default=())

    def __post_init__(self):
        for arr in (self.nodes, self.triangles, self.midnodes, self.boundary_edges):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def p2_connectivity(self) -> np.ndarray:
        """(T, 6) node indices: three corners then three mid-edge nodes."""
        return np.hstack([self.triangles, self.midnodes])

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def max_edge(self) -> float:
        p = self.nodes[self.triangles]
        lengths = np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2)
        return float(lengths.max())

    def edges_with_tag(self, tag: Tag) -> np.ndarray:
        mask = np.array([t == tag for t in self.boundary_tags], dtype=bool)
        return self.boundary_edges[mask]

    def tag_length(self, tag: Tag) -> float:
        e = self.edges_with_tag(tag)
        return float(np.linalg.norm(self.nodes[e[:, 2]] - self.nodes[e[:, 0]], axis=1).sum())

    def to_csv(self) -> str:
        """Boundary nodes with their tag (interior nodes tagged empty)."""
        labels = [""] * self.n_nodes
        for edge, tag in zip(self.boundary_edges, self.boundary_tags):
            for n in edge:
                if not labels[n]:
                    labels[n] = tag.value
        return _dump_points_csv(self.nodes, labels)


def _dump_points_csv(points, labels) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r_m", "z_m", "tag"])
    for (r, z), tag in zip(points, labels):
        w.writerow([repr(float(r)), repr(float(z)), tag])
    return buf.getvalue()


def mesh_divisions(profile: Profile, target_edge: float) -> tuple:
    """
    Cell counts ``(n_r0, n_r1, n_z1, n_z0)`` so that the cell diagonal,
    the longest triangle edge, does not exceed ``target_edge``.
    """
    if not target_edge > 0:
        raise MeshError("target edge length must be positive")
    a0, a1, l1, l0 = _profile_dims(profile)
    step = target_edge / math.sqrt(2.0)

    def count(length):
        return max(1, math.ceil(length / step - 1e-9)) if length > 0 else 0

    return count(a0), count(a1 - a0), count(l1), count(l0)


def generate_mesh(profile: Profile, f_max: float, elements_per_wavelength: float,
                  sound_speed: float = 343.2, divisions: tuple | None = None,
                  corner_grading: float = CORNER_GRADING) -> Mesh:
    """
    Mesh the profile with quadratic triangles whose edges do not exceed
    ``sound_speed / (f_max * elements_per_wavelength)``.

    Each rectangle is divided into a tensor grid of cells and every cell
    split along its rising diagonal. ``divisions`` overrides the cell counts
    (see :func:`mesh_divisions`); counts may only be raised above the
    resolution minimum. Cells shrink toward the re-entrant corner of the
    L-shaped domain, where the pressure gradient is singular: a segment of
    ``n`` uniform cells becomes ``ceil(g * n)`` cells placed by the map
    ``1 - (1 - t)**g`` with ``g = corner_grading``, so no cell grows beyond
    the uniform size and the counts still scale with ``1 / edge``.
    """
    if not 1.0 <= corner_grading <= 4.0:
        raise MeshError("corner_grading must lie in [1, 4]")
    if elements_per_wavelength < 6:
        raise MeshError("elements_per_wavelength must be >= 6")
    if not f_max > 0:
        raise MeshError("f_max must be positive")
    if profile.area() <= 0:
        raise MeshError("degenerate profile: non-positive area")
    a0, a1, l1, l0 = _profile_dims(profile)
    needed = mesh_divisions(profile, sound_speed / (f_max * elements_per_wavelength))
    if divisions is None:
        divisions = needed
    else:
        divisions = tuple(int(d) for d in divisions)
        if any(d < n for d, n in zip(divisions, needed)):
            raise MeshError(f"divisions {divisions} coarser than required {needed}")
    n_r0, n_r1, n_z1, n_z0 = divisions
    if a1 == a0:
        n_r1 = 0

    # graded toward the re-entrant corner (a0, l1) only when there is one
    g = corner_grading if n_r1 else 1.0
    r_cells = r_inner = _graded(0.0, a0, n_r0, g, at_end=True)
    if n_r1:
        r_cells = np.concatenate([r_cells, _graded(a0, a1, n_r1, g, at_end=False)[1:]])
    z_lower = _graded(0.0, l1, n_z1, g, at_end=True)
    z_cells = np.concatenate([z_lower, _graded(l1, l1 + l0, n_z0, g, at_end=False)[1:]])
    # half-step grid so that mid-edge nodes fall on grid points
    r_lines, z_lines = _half_step(r_cells), _half_step(z_cells)
    i_a0 = 2 * (len(r_inner) - 1)
    j_l1 = 2 * (len(z_lower) - 1)
    nr, nz = len(r_lines), len(z_lines)

    inside = np.ones((nz, nr), dtype=bool)
    inside[j_l1 + 1:, i_a0 + 1:] = False
    index = -np.ones((nz, nr), dtype=np.int64)
    index[inside] = np.arange(int(inside.sum()))
    jj, ii = np.nonzero(inside)
    nodes = np.column_stack([r_lines[ii], z_lines[jj]])

    corners, mids = [], []
    for j in range(0, nz - 1, 2):
        for i in range(0, nr - 1, 2):
            if not inside[j + 2, i + 2]:
                continue
            n = lambda dj, di: index[j + dj, i + di]  # noqa: E731
            # (corner, corner, corner) counter-clockwise in (r, z)
            corners.append((n(0, 0), n(2, 2), n(2, 0)))
            mids.append((n(1, 1), n(2, 1), n(1, 0)))
            corners.append((n(0, 0), n(0, 2), n(2, 2)))
            mids.append((n(0, 1), n(1, 2), n(1, 1)))
    triangles = np.array(corners, dtype=np.int64)
    midnodes = np.array(mids, dtype=np.int64)

    edges, tags = _boundary_edges(nodes, triangles, midnodes, profile)
    mesh = Mesh(nodes=nodes, triangles=triangles, midnodes=midnodes, boundary_edges=edges,
                boundary_tags=tags, profile=profile, divisions=(n_r0, n_r1, n_z1, n_z0))
    if np.any(mesh.signed_areas() <= 0):
        raise MeshError("mesh contains non-positive triangles")
    return mesh


def _graded(start, stop, n, g, at_end):
    """Boundaries of ``ceil(g * n)`` cells on ``[start, stop]``, shrinking toward one end."""
    m = max(1, math.ceil(g * n - 1e-9))
    t = np.linspace(0.0, 1.0, m + 1)
    x = 1.0 - (1.0 - t) ** g
    x[0], x[-1] = 0.0, 1.0
    b = start + (stop - start) * (x if at_end else 1.0 - x[::-1])
    return b


def _half_step(cells):
    lines = np.empty(2 * len(cells) - 1)
    lines[0::2] = cells
    lines[1::2] = 0.5 * (cells[:-1] + cells[1:])
    return lines


def _profile_dims(profile: Profile):
    v = profile.vertices
    top = float(v[:, 1].max())
    a1 = float(v[:, 0].max())
    if len(v) == 4:
        return a1, a1, top / 2.0, top / 2.0
    if len(v) != 7:
        raise MeshError(f"unsupported profile with {len(v)} vertices")
    a0 = float(v[1, 0])
    l1 = float(v[3, 1])
    return a0, a1, l1, top - l1


def _boundary_edges(nodes, triangles, midnodes, profile):
    local = ((0, 1, 0), (1, 2, 1), (2, 0, 2))
    count = {}
    owner = {}
    for t, (tri, mid) in enumerate(zip(triangles, midnodes)):
        for a, b, m in local:
            key = (min(tri[a], tri[b]), max(tri[a], tri[b]))
            count[key] = count.get(key, 0) + 1
            owner[key] = (tri[a], mid[m], tri[b])
    edges, tags = [], []
    for key in sorted(count):
        if count[key] != 1:
            continue
        start, mid, end = owner[key]
        tag = _tag_for_segment(nodes[start], nodes[end], profile)
        if tag is None:
            raise MeshError(f"boundary edge {key} does not lie on the profile")
        edges.append((start, mid, end))
        tags.append(tag)
    return np.array(edges, dtype=np.int64), tuple(tags)


def _tag_for_segment(p, q, profile, rtol=1e-9):
    scale = float(np.abs(profile.vertices).max())
    for a, b, tag in profile.edges():
        d = b - a
        length2 = float(d @ d)
        if length2 == 0:
            continue
        ok = True
        for x in (p, q):
            s = float((x - a) @ d) / length2
            dist = abs(float(d[0] * (x - a)[1] - d[1] * (x - a)[0])) / math.sqrt(length2)
            if not (-rtol <= s <= 1 + rtol and dist <= rtol * scale):
                ok = False
                break
        if ok:
            return tag
    return None
