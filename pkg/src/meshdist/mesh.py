"""Triangle mesh representation, OBJ ingestion, and rigid motion.

Meshes are indexed triangle soups: an (n, 3) float64 vertex array plus an
(m, 3) int array of index triples. The index buffer is authoritative; no
vertex welding is performed. Zero-area triangles with distinct indices are
kept (they still have well-defined distances); faces that repeat an index
are rejected at load.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTriangleError, ObjParseError


@dataclass(frozen=True)
class TriangleMesh:
    """Immutable indexed triangle soup.

    vertices: (n, 3) float64 positions.
    triangles: (m, 3) int64 index triples into vertices.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        verts = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        tris = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise ValueError(f"vertices must be (n, 3), got {verts.shape}")
        if tris.size == 0:
            tris = tris.reshape(0, 3)
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise ValueError(f"triangles must be (m, 3), got {tris.shape}")
        if tris.size:
            if tris.min() < 0 or tris.max() >= len(verts):
                raise ValueError("triangle index out of range")
            repeated = (
                (tris[:, 0] == tris[:, 1])
                | (tris[:, 1] == tris[:, 2])
                | (tris[:, 0] == tris[:, 2])
            )
            if repeated.any():
                bad = [
                    (int(i), tuple(int(v) for v in tris[i]))
                    for i in np.flatnonzero(repeated)
                ]
                raise DegenerateTriangleError(bad)
        verts.setflags(write=False)
        tris.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_points(self, dtype=np.float64) -> np.ndarray:
        """Return (m, 3, 3) corner positions, one row of 3 points per triangle."""
        return self.vertices.astype(dtype, copy=False)[self.triangles]


@dataclass(frozen=True)
class RigidTransform:
    """Rotation (3x3 orthonormal) followed by translation."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-6):
            raise ValueError("rotation matrix is not orthonormal within 1e-6")
        rot.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", t)

    @classmethod
    def from_axis_angle(cls, axis, angle_rad: float, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        """Rodrigues rotation about `axis` by `angle_rad`, then translate."""
        a = np.asarray(axis, dtype=np.float64)
        norm = np.linalg.norm(a)
        if norm == 0.0:
            raise ValueError("rotation axis must be nonzero")
        a = a / norm
        c, s = math.cos(angle_rad), math.sin(angle_rad)
        cross = np.array(
            [[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]]
        )
        rot = c * np.eye(3) + s * cross + (1.0 - c) * np.outer(a, a)
        return cls(rotation=rot, translation=np.asarray(translation, dtype=np.float64))


def apply_transform(mesh: TriangleMesh, xf: RigidTransform) -> TriangleMesh:
    """Map every vertex v to R @ v + t. Topology is shared, not copied."""
    moved = mesh.vertices @ xf.rotation.T + xf.translation
    return TriangleMesh(vertices=moved, triangles=mesh.triangles)


def _fan_triangulate(indices: list[int]) -> list[tuple[int, int, int]]:
    return [(indices[0], indices[i], indices[i + 1]) for i in range(1, len(indices) - 1)]


def load_obj(path: str | os.PathLike) -> TriangleMesh:
    """Load a Wavefront OBJ file.

    Supported subset: `v` and `f` records plus `#` comments; polygon faces
    are fan-triangulated; normals, texcoords and all other record types are
    ignored. Negative (relative) face indices are resolved against the
    vertex count at the point of use.
    """
    path = os.fspath(path)
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise ObjParseError(path, line_no, "vertex needs 3 coordinates")
                try:
                    vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError as exc:
                    raise ObjParseError(path, line_no, f"bad vertex coordinate: {exc}") from None
            elif tag == "f":
                if len(parts) < 4:
                    raise ObjParseError(path, line_no, "face needs at least 3 vertices")
                idx: list[int] = []
                for token in parts[1:]:
                    head = token.split("/", 1)[0]
                    try:
                        ref = int(head)
                    except ValueError:
                        raise ObjParseError(path, line_no, f"bad face index {token!r}") from None
                    if ref == 0:
                        raise ObjParseError(path, line_no, "face index 0 is not valid OBJ")
                    resolved = ref - 1 if ref > 0 else len(vertices) + ref
                    if resolved < 0 or resolved >= len(vertices):
                        raise ObjParseError(
                            path, line_no, f"face index {ref} out of range (have {len(vertices)} vertices)"
                        )
                    idx.append(resolved)
                faces.extend(_fan_triangulate(idx))
            # all other record types (vn, vt, o, g, s, usemtl, ...) ignored
    try:
        return TriangleMesh(
            vertices=np.asarray(vertices, dtype=np.float64).reshape(len(vertices), 3),
            triangles=np.asarray(faces, dtype=np.int64).reshape(len(faces), 3),
        )
    except DegenerateTriangleError:
        raise
