"""Synthetic two-mesh scenes for tests and benchmarks.

Every generator is deterministic: the same kind, parameters and seed
produce bitwise-identical meshes. Scene kinds:

  random-blobs          two Gaussian triangle clusters with a controllable
                        bounding-box gap along x
  intersecting-clusters two clusters that share one guaranteed common point
                        (minimum distance is exactly zero by construction)
  nested-shells         two concentric tessellated spheres
  offset-grids          two stacked height-field grids whose construction
                        forces the minimum distance to equal `gap` exactly
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import SceneError
from .mesh import TriangleMesh

_TAU = 2.0 * np.pi


def _soup(points: np.ndarray) -> TriangleMesh:
    """Wrap (m, 3, 3) triangle corner points as an unindexed soup mesh."""
    m = len(points)
    return TriangleMesh(
        vertices=points.reshape(m * 3, 3),
        triangles=np.arange(m * 3, dtype=np.int64).reshape(m, 3),
    )


def _scatter_triangles(rng: np.random.Generator, n: int, center, spread: float, tri_size: float) -> np.ndarray:
    """n small random triangles with Gaussian-scattered centroids, as (n, 3, 3)."""
    centroids = rng.normal(loc=center, scale=spread, size=(n, 3))
    corners = rng.normal(scale=tri_size, size=(n, 3, 3))
    corners -= corners.mean(axis=1, keepdims=True)
    return centroids[:, None, :] + corners


def _gen_random_blobs(n: int = 200, seed: int = 0, gap: float = 0.5, spread: float = 1.0, tri_size: float = 0.05):
    if n < 1:
        raise SceneError("random-blobs: n must be >= 1")
    if gap < 0:
        raise SceneError("random-blobs: gap must be >= 0")
    seq_a, seq_b = np.random.SeedSequence(seed).spawn(2)
    tris_a = _scatter_triangles(np.random.default_rng(seq_a), n, (0.0, 0.0, 0.0), spread, tri_size)
    tris_b = _scatter_triangles(np.random.default_rng(seq_b), n, (0.0, 0.0, 0.0), spread, tri_size)
    # slide B along +x until the box gap equals `gap`
    shift = tris_a[..., 0].max() - tris_b[..., 0].min() + gap
    tris_b[..., 0] += shift
    return _soup(tris_a), _soup(tris_b)


def _gen_intersecting_clusters(
    n: int = 1000,
    seed: int = 0,
    spread: float = 1.0,
    separation: float = 4.0,
    tri_size: float = 0.05,
    point=(0.0, 0.0, 0.0),
):
    """Two clusters plus one anchor triangle per mesh touching `point` exactly.

    The anchors force a true minimum distance of exactly zero. They are
    appended after the scattered triangles so traversals meet them in
    natural (unprivileged) order.
    """
    if n < 1:
        raise SceneError("intersecting-clusters: n must be >= 1")
    p0 = np.asarray(point, dtype=np.float64)
    seq_a, seq_b = np.random.SeedSequence(seed).spawn(2)
    rng_a, rng_b = np.random.default_rng(seq_a), np.random.default_rng(seq_b)
    half = 0.5 * separation * spread
    center_a = p0 + np.array([-half, 0.0, 0.0])
    center_b = p0 + np.array([half, 0.0, 0.0])

    def one_mesh(rng, center):
        blob = _scatter_triangles(rng, max(n - 1, 1), center, spread, tri_size)
        u, v = rng.normal(size=3), rng.normal(size=3)
        anchor = np.stack([p0, p0 + tri_size * u, p0 + tri_size * v])
        pts = np.concatenate([blob, anchor[None]]) if n > 1 else anchor[None]
        return _soup(pts)

    return one_mesh(rng_a, center_a), one_mesh(rng_b, center_b)


def _uv_sphere(lat: int, lon: int, radius: float, center) -> np.ndarray:
    """Triangle corner points of a UV sphere: 2*lon*(lat-1) triangles."""
    c = np.asarray(center, dtype=np.float64)
    thetas = np.linspace(0.0, np.pi, lat + 1)
    phis = np.arange(lon) * (_TAU / lon)
    rings = []
    for th in thetas[1:-1]:
        ring = np.stack(
            [
                radius * np.sin(th) * np.cos(phis),
                radius * np.sin(th) * np.sin(phis),
                np.full(lon, radius * np.cos(th)),
            ],
            axis=1,
        )
        rings.append(ring + c)
    north = c + np.array([0.0, 0.0, radius])
    south = c + np.array([0.0, 0.0, -radius])
    tris = []
    first, last = rings[0], rings[-1]
    for j in range(lon):
        k = (j + 1) % lon
        tris.append([north, first[j], first[k]])
        tris.append([south, last[k], last[j]])
    for a, b in zip(rings[:-1], rings[1:]):
        for j in range(lon):
            k = (j + 1) % lon
            tris.append([a[j], b[j], b[k]])
            tris.append([a[j], b[k], a[k]])
    return np.asarray(tris)


def _gen_nested_shells(lat: int = 8, lon: int = 12, r_inner: float = 0.8, r_outer: float = 1.2, center=(0.0, 0.0, 0.0)):
    if lat < 2 or lon < 3:
        raise SceneError("nested-shells: need lat >= 2 and lon >= 3")
    if not 0 < r_inner < r_outer:
        raise SceneError("nested-shells: need 0 < r_inner < r_outer")
    return _soup(_uv_sphere(lat, lon, r_inner, center)), _soup(_uv_sphere(lat, lon, r_outer, center))


def _gen_offset_grids(res: int = 12, gap: float = 0.5, amp: float = 0.3, extent: float = 4.0, seed: int = 0):
    """Two bumpy grids stacked in z.

    Grid A's heights stay in [0, amp] and grid B's in [amp+gap, 2*amp+gap],
    and one shared interior grid column is pinned to exactly amp and
    amp+gap, so the scene's true minimum distance is exactly `gap`.
    """
    if res < 2:
        raise SceneError("offset-grids: res must be >= 2")
    if gap <= 0:
        raise SceneError("offset-grids: gap must be > 0")
    rng = np.random.default_rng(seed)
    xs = np.linspace(0.0, extent, res)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    ha = amp * rng.uniform(size=(res, res))
    hb = gap + amp + amp * rng.uniform(size=(res, res))
    pin = res // 2
    ha[pin, pin] = amp
    hb[pin, pin] = gap + amp

    def grid_mesh(heights):
        verts = np.stack([gx, gy, heights], axis=-1).reshape(res * res, 3)
        idx = np.arange(res * res).reshape(res, res)
        a, b = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
        c, d = idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
        tris = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
        return TriangleMesh(vertices=verts, triangles=tris)

    return grid_mesh(ha), grid_mesh(hb)


_GENERATORS: dict[str, Callable] = {
    "random-blobs": _gen_random_blobs,
    "intersecting-clusters": _gen_intersecting_clusters,
    "nested-shells": _gen_nested_shells,
    "offset-grids": _gen_offset_grids,
}


def scene_kinds() -> list[str]:
    return sorted(_GENERATORS)


def gen_scene(kind: str, params: dict | None = None) -> tuple[TriangleMesh, TriangleMesh]:
    """Build the (mesh A, mesh B) pair for a scene kind.

    Raises SceneError for unknown kinds or parameters the kind does not
    accept; parameter values are validated by the generator itself.
    """
    if kind not in _GENERATORS:
        raise SceneError(f"unknown scene kind {kind!r}; known kinds: {', '.join(scene_kinds())}")
    gen = _GENERATORS[kind]
    params = dict(params or {})
    allowed = set(gen.__code__.co_varnames[: gen.__code__.co_argcount])
    unknown = set(params) - allowed
    if unknown:
        raise SceneError(
            f"{kind}: unknown parameter(s) {sorted(unknown)}; accepted: {sorted(allowed)}"
        )
    try:
        return gen(**params)
    except SceneError:
        raise
    except (TypeError, ValueError) as exc:
        raise SceneError(f"{kind}: invalid parameters: {exc}") from None
