"""Implicit full-binary AABB tree with 1 or 2 triangles per leaf.

The tree is stored as a flat array in BFS order: node i's children are
2i+1 and 2i+2, so no child pointers are needed and the offset-th
descendant k levels below node i is (i+1)*2^k - 1 + offset. Leaves are the
last `leaf_count` entries; their triangle payloads live in a parallel
(leaf_count, 2) array, second column -1 for single-triangle leaves.

Triangles are ordered by the Morton code of their centroid (21 bits per
axis over the scene box). When the triangle count is not a power of two,
adjacent triangles in Morton order are merged pairwise - greedily by
smallest merged-box surface area - until it is.

Every box is exact (componentwise min/max of its subtree's vertices) and
is never fattened: the enhanced distance bounds in `bounds` are only valid
for such tight boxes.
"""

from __future__ import annotations

import heapq
import json
import os
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import TopologyMismatchError
from .mesh import TriangleMesh

_MORTON_BITS = 21
_MORTON_SCALE = float(1 << _MORTON_BITS)


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box. `tight` asserts every face touches the contents."""

    min: np.ndarray
    max: np.ndarray
    tight: bool = False

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=np.float64).reshape(3)
        hi = np.asarray(self.max, dtype=np.float64).reshape(3)
        if not (lo <= hi).all():
            raise ValueError(f"invalid box: min {lo} exceeds max {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @classmethod
    def from_points(cls, points) -> "Aabb":
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return cls(min=pts.min(axis=0), max=pts.max(axis=0), tight=True)


def _spread_bits_3(x: np.ndarray) -> np.ndarray:
    """Spread the low 21 bits of each value so they occupy every third bit."""
    x = x.astype(np.uint64) & np.uint64(0x1FFFFF)
    x = (x | (x << np.uint64(32))) & np.uint64(0x1F00000000FFFF)
    x = (x | (x << np.uint64(16))) & np.uint64(0x1F0000FF0000FF)
    x = (x | (x << np.uint64(8))) & np.uint64(0x100F00F00F00F00F)
    x = (x | (x << np.uint64(4))) & np.uint64(0x10C30C30C30C30C3)
    x = (x | (x << np.uint64(2))) & np.uint64(0x1249249249249249)
    return x


def morton_codes(mesh: TriangleMesh) -> tuple[np.ndarray, np.ndarray]:
    """63-bit Morton codes of triangle centroids, sorted ascending.

    Centroids are normalized into the mesh's own bounding box and
    quantized to 21 bits per axis; bits interleave as x, y, z from the
    least significant position. Returns (codes, triangle_ids) sorted by
    (code, id) so equal codes break ties by triangle id. A zero-extent
    axis maps every centroid to bucket 0 on that axis.
    """
    if mesh.n_triangles == 0:
        raise ValueError("mesh has no triangles")
    pts = mesh.triangle_points()
    centroids = pts.mean(axis=1)
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    extent = hi - lo
    safe = np.where(extent > 0.0, extent, 1.0)
    t = np.clip((centroids - lo) / safe, 0.0, None)
    q = np.minimum((t * _MORTON_SCALE).astype(np.uint64), np.uint64((1 << _MORTON_BITS) - 1))
    codes = (
        _spread_bits_3(q[:, 0])
        | (_spread_bits_3(q[:, 1]) << np.uint64(1))
        | (_spread_bits_3(q[:, 2]) << np.uint64(2))
    )
    ids = np.arange(mesh.n_triangles, dtype=np.int64)
    perm = np.lexsort((ids, codes))
    return codes[perm], ids[perm]


def _pair_to_power_of_two(order: np.ndarray, tri_min: np.ndarray, tri_max: np.ndarray) -> np.ndarray:
    """Merge Morton-adjacent triangles until their count is a power of two.

    Greedy: repeatedly take the adjacent singleton pair whose merged box
    has the smallest surface area. A merged leaf never merges again, so a
    blind greedy can strand singletons with no adjacent partner; a merge
    is therefore only accepted while the remaining runs of singletons can
    still supply the outstanding merges (parity bookkeeping below).

    Returns (leaf_count, 2) triangle ids, second column -1 for singles.
    """
    n = len(order)
    leaf_count = 1 << (n.bit_length() - 1)
    if leaf_count == n:
        out = np.full((n, 2), -1, dtype=np.int64)
        out[:, 0] = order
        return out

    need = n - leaf_count
    lo = np.minimum(tri_min[order[:-1]], tri_min[order[1:]])
    hi = np.maximum(tri_max[order[:-1]], tri_max[order[1:]])
    ext = (hi - lo).astype(np.float64)
    sa = ext[:, 0] * ext[:, 1] + ext[:, 1] * ext[:, 2] + ext[:, 2] * ext[:, 0]

    heap: list[tuple[float, int]] = [(float(sa[i]), i) for i in range(n - 1)]
    heapq.heapify(heap)
    deferred: list[tuple[float, int]] = []
    merged = np.zeros(n, dtype=bool)
    pair_left: list[int] = []

    # runs of consecutive singletons: sorted starts + start -> end
    run_starts = [0]
    run_end = {0: n - 1}
    supply = n // 2  # sum of len(run)//2 over runs

    while need:
        if not heap:
            heap, deferred = deferred, []
            heapq.heapify(heap)
        key, i = heapq.heappop(heap)
        if merged[i] or merged[i + 1]:
            continue
        s = run_starts[bisect_right(run_starts, i) - 1]
        e = run_end[s]
        m = e - s + 1
        j = i - s
        costs_extra = (m % 2 == 0) and (j % 2 == 1)
        if costs_extra and supply - need <= 0:
            deferred.append((key, i))
            continue
        merged[i] = merged[i + 1] = True
        pair_left.append(i)
        need -= 1
        supply += j // 2 + (m - j - 2) // 2 - m // 2
        idx = run_starts.index(s)
        del run_starts[idx]
        del run_end[s]
        if j > 0:
            run_starts.insert(idx, s)
            run_end[s] = i - 1
            idx += 1
        if i + 2 <= e:
            run_starts.insert(idx, i + 2)
            run_end[i + 2] = e
        run_starts.sort()
        if deferred:
            for item in deferred:
                heapq.heappush(heap, item)
            deferred = []

    pairs = set(pair_left)
    out = np.full((leaf_count, 2), -1, dtype=np.int64)
    rank = 0
    i = 0
    while i < n:
        out[rank, 0] = order[i]
        if i in pairs:
            out[rank, 1] = order[i + 1]
            i += 2
        else:
            i += 1
        rank += 1
    assert rank == leaf_count
    return out


@dataclass
class F12Bvh:
    """Full binary AABB tree in implicit BFS storage.

    node_min / node_max: (2*leaf_count - 1, 3) box corners.
    leaf_tris: (leaf_count, 2) triangle ids, -1 for absent second triangle.
    prim_order: Morton-sorted triangle ids (the build permutation).
    depth: levels from root to leaves; leaf_count == 2**depth.
    """

    node_min: np.ndarray
    node_max: np.ndarray
    leaf_tris: np.ndarray
    prim_order: np.ndarray
    depth: int
    tight: bool = field(default=True)

    @property
    def n_nodes(self) -> int:
        return len(self.node_min)

    @property
    def leaf_count(self) -> int:
        return (self.n_nodes + 1) // 2

    @property
    def dtype(self) -> np.dtype:
        return self.node_min.dtype

    def is_leaf(self, node: int) -> bool:
        return node >= self.leaf_count - 1

    def leaf_rank(self, node: int) -> int:
        return node - (self.leaf_count - 1)

    def leaf_prims(self, rank: int) -> tuple[int, ...]:
        t0, t1 = self.leaf_tris[rank]
        return (int(t0),) if t1 < 0 else (int(t0), int(t1))

    def node_box(self, node: int) -> Aabb:
        return Aabb(min=self.node_min[node], max=self.node_max[node], tight=self.tight)

    def to_debug_dict(self) -> dict:
        """Node boxes and leaf assignments, for golden tests and inspection."""
        return {
            "depth": self.depth,
            "leaf_count": self.leaf_count,
            "node_min": self.node_min.astype(np.float64).tolist(),
            "node_max": self.node_max.astype(np.float64).tolist(),
            "leaf_tris": self.leaf_tris.tolist(),
            "prim_order": self.prim_order.tolist(),
        }

    def dump_json(self, path: str | os.PathLike) -> None:
        with open(os.fspath(path), "w", encoding="utf-8") as fh:
            json.dump(self.to_debug_dict(), fh, indent=1)


def _fill_boxes(bvh: F12Bvh, mesh: TriangleMesh) -> None:
    """Recompute every box bottom-up from current vertex positions."""
    pts = mesh.triangle_points(bvh.dtype)
    tri_min = pts.min(axis=1)
    tri_max = pts.max(axis=1)
    L = bvh.leaf_count
    t0 = bvh.leaf_tris[:, 0]
    t1 = bvh.leaf_tris[:, 1]
    lmin = tri_min[t0].copy()
    lmax = tri_max[t0].copy()
    has2 = t1 >= 0
    lmin[has2] = np.minimum(tri_min[t0[has2]], tri_min[t1[has2]])
    lmax[has2] = np.maximum(tri_max[t0[has2]], tri_max[t1[has2]])
    bvh.node_min[L - 1 :] = lmin
    bvh.node_max[L - 1 :] = lmax
    for level in range(bvh.depth - 1, -1, -1):
        first = (1 << level) - 1
        child_first = (1 << (level + 1)) - 1
        child_last = (1 << (level + 2)) - 1
        cmin = bvh.node_min[child_first:child_last]
        cmax = bvh.node_max[child_first:child_last]
        bvh.node_min[first:child_first] = np.minimum(cmin[0::2], cmin[1::2])
        bvh.node_max[first:child_first] = np.maximum(cmax[0::2], cmax[1::2])


def build_f12(mesh: TriangleMesh, dtype=np.float64) -> F12Bvh:
    """Build the tree for a mesh. `dtype` sets the box arithmetic precision.

    Morton ordering always runs in float64 so both precision modes share
    an identical topology; only the stored boxes honor `dtype`.
    """
    if mesh.n_triangles < 1:
        raise ValueError("cannot build a BVH over an empty mesh")
    pts64 = mesh.triangle_points()
    _, order = morton_codes(mesh)
    leaf_tris = _pair_to_power_of_two(order, pts64.min(axis=1), pts64.max(axis=1))
    leaf_count = len(leaf_tris)
    depth = leaf_count.bit_length() - 1
    n_nodes = 2 * leaf_count - 1
    bvh = F12Bvh(
        node_min=np.empty((n_nodes, 3), dtype=dtype),
        node_max=np.empty((n_nodes, 3), dtype=dtype),
        leaf_tris=leaf_tris,
        prim_order=order,
        depth=depth,
    )
    _fill_boxes(bvh, mesh)
    return bvh


def refit(bvh: F12Bvh, mesh: TriangleMesh) -> F12Bvh:
    """Recompute all boxes for moved vertices; topology stays fixed.

    Runs the same bottom-up pass as the build, so refitting with the
    original mesh reproduces the node arrays bitwise. Mutates `bvh` in
    place and returns it. Must not run concurrently with queries on the
    same structure.
    """
    if mesh.n_triangles != len(bvh.prim_order):
        raise TopologyMismatchError(
            f"refit mesh has {mesh.n_triangles} triangles, "
            f"tree was built over {len(bvh.prim_order)}"
        )
    _fill_boxes(bvh, mesh)
    return bvh


def descendant(node: int, k: int, offset: int, n_nodes: int | None = None) -> int:
    """Index of the offset-th node k levels below `node` in BFS order.

    Pure index arithmetic: (node+1)*2^k - 1 + offset. When `n_nodes` is
    given, results beyond the array raise IndexError.
    """
    if k < 0 or not 0 <= offset < (1 << k):
        raise ValueError(f"bad descendant query: k={k}, offset={offset}")
    out = ((node + 1) << k) - 1 + offset
    if n_nodes is not None and out >= n_nodes:
        raise IndexError(
            f"descendant {out} of node {node} (k={k}, offset={offset}) "
            f"is outside the {n_nodes}-node array"
        )
    return out


def node_level(node: int) -> int:
    """Levels between the root and `node` (root is level 0)."""
    return (node + 1).bit_length() - 1


def remaining_depth(bvh: F12Bvh, node: int) -> int:
    """Levels from `node` down to the leaf level; 0 for leaves."""
    if not 0 <= node < bvh.n_nodes:
        raise ValueError(f"node {node} outside the {bvh.n_nodes}-node array")
    return bvh.depth - node_level(node)
