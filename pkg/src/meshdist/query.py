"""Front-based traversal engine for exact mesh-to-mesh distance queries.

A query walks two implicit AABB trees together. The working set (the
"front") is a flat batch of tree-node pairs, all at a uniform pair of
depths. Each iteration picks an expansion depth k from the front size,
replaces every entry with the surviving combinations of its nodes'
depth-k descendants, and maintains one shared scalar bound:

  min query  a falling upper bound on the minimum distance; a candidate
             pair survives while its box lower bound stays below it
  max query  a rising lower bound on the maximum distance; a candidate
             survives while its box upper bound stays above it

Bound updates are monotone (a compare-and-update cell), so the returned
distance is identical under any batch interleaving; only per-iteration
statistics and the witness pair may vary between parallel schedules.
Sequential execution (threads=1) is the deterministic reference.

Candidates that land on leaf pairs run the exact triangle narrow phase
instead of being emitted, so the final bound converges to the true
distance. Culling uses strict comparison: a pair tying the bound exactly
can be dropped while the returned distance stays correct, so the witness
pair is only guaranteed when `guarantee_witness` relaxes the leaf-level
test to keep ties.
"""

from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bounds import (
    batch_enhanced_max_lower,
    batch_enhanced_min_upper,
    batch_max_upper,
    batch_min_lower,
    batch_tri_tri_max,
    batch_tri_tri_min,
)
from .bvh import F12Bvh
from .errors import ConfigError, FrontOverflowError, SizeGuardError
from .mesh import TriangleMesh

BRUTE_FORCE_PAIR_LIMIT = 10_000_000


@dataclass(frozen=True)
class EngineConfig:
    """Engine tuning knobs.

    front_cap: target C for adaptive expansion; depth k is the largest
        value with 4**k * front_size < C (at least 1, at most depth_cap).
    precision: 32 or 64; the tree must be built with the matching dtype.
    threads: worker count or "auto" (cpu count). threads=1 is the
        deterministic reference schedule.
    culling: disable only to validate that culling never changes results.
    guarantee_witness: keep exact ties at leaf level so the reported
        witness pair always attains the returned distance.
    front_hard_cap: hard limit on candidate/emitted entries per expansion;
        exceeding it raises FrontOverflowError rather than thrashing.
    """

    front_cap: int = 262_144
    depth_cap: int = 5
    precision: int = 64
    threads: int | str = 1
    enhanced_bounds: bool = True
    culling: bool = True
    guarantee_witness: bool = False
    front_hard_cap: int = 16_777_216
    batch_size: int = 65_536

    def __post_init__(self):
        if self.front_cap < 4:
            raise ConfigError(f"front_cap must be >= 4, got {self.front_cap}")
        if not 1 <= self.depth_cap <= 16:
            raise ConfigError(f"depth_cap must be in [1, 16], got {self.depth_cap}")
        if self.precision not in (32, 64):
            raise ConfigError(f"precision must be 32 or 64, got {self.precision}")
        if self.batch_size < 4:
            raise ConfigError(f"batch_size must be >= 4, got {self.batch_size}")
        if self.front_hard_cap < 4:
            raise ConfigError("front_hard_cap must be >= 4")
        if isinstance(self.threads, str):
            if self.threads != "auto":
                raise ConfigError(f"threads must be a positive int or 'auto', got {self.threads!r}")
        elif self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    @property
    def dtype(self):
        return np.float32 if self.precision == 32 else np.float64

    @property
    def worker_count(self) -> int:
        if self.threads == "auto":
            return os.cpu_count() or 1
        return int(self.threads)


@dataclass(frozen=True)
class FrontEntry:
    """One unresolved node pair. `lower` caches the culling-side bound at
    insertion time: the pair's box minimum distance for min queries, its
    box maximum distance for max queries."""

    node_a: int
    node_b: int
    lower: float


@dataclass
class Front:
    """A whole front as flat arrays. All entries share one depth pair."""

    node_a: np.ndarray
    node_b: np.ndarray
    lower: np.ndarray
    depth_a: int
    depth_b: int

    def __len__(self) -> int:
        return len(self.node_a)

    def entries(self) -> list[FrontEntry]:
        return [
            FrontEntry(int(a), int(b), float(lo))
            for a, b, lo in zip(self.node_a, self.node_b, self.lower)
        ]


@dataclass(frozen=True)
class Witness:
    """A concrete triangle pair (and points on them) attaining a distance."""

    distance: float
    tri_a: int
    tri_b: int
    point_a: np.ndarray
    point_b: np.ndarray


@dataclass(frozen=True)
class IterationStat:
    k: int
    front_in: int
    front_out: int
    culled: int
    bound_after: float

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "front_in": self.front_in,
            "front_out": self.front_out,
            "culled": self.culled,
            "bound_after": self.bound_after,
        }


class QueryState:
    """Shared query state: the monotone global bound, the best exact
    witness seen, and per-iteration statistics.

    The bound cell only ever moves in the query's improving direction
    (down for min, up for max) no matter how concurrent commits
    interleave. Witness ties (equal distance) resolve to the
    lexicographically smallest (tri_a, tri_b) pair, which makes the
    sequential schedule's witness deterministic.
    """

    def __init__(self, kind: str, bound: float):
        if kind not in ("min", "max"):
            raise ValueError(f"kind must be 'min' or 'max', got {kind!r}")
        self.kind = kind
        self._bound = float(bound)
        self._witness: Witness | None = None
        self._lock = threading.Lock()
        self.iterations: list[IterationStat] = []
        self.expanded_pairs = 0
        self.narrow_pairs = 0

    @property
    def bound(self) -> float:
        with self._lock:
            return self._bound

    def offer_bound(self, value: float) -> None:
        value = float(value)
        with self._lock:
            if (self.kind == "min" and value < self._bound) or (
                self.kind == "max" and value > self._bound
            ):
                self._bound = value

    @property
    def witness(self) -> Witness | None:
        with self._lock:
            return self._witness

    def offer_witness(self, distance: float, tri_a: int, tri_b: int, point_a, point_b) -> None:
        distance = float(distance)
        with self._lock:
            w = self._witness
            better = w is None
            if not better:
                if self.kind == "min":
                    better = distance < w.distance
                else:
                    better = distance > w.distance
                if not better and distance == w.distance:
                    better = (tri_a, tri_b) < (w.tri_a, w.tri_b)
            if better:
                self._witness = Witness(
                    distance, int(tri_a), int(tri_b), np.array(point_a), np.array(point_b)
                )

    def add_narrow_pairs(self, n: int) -> None:
        with self._lock:
            self.narrow_pairs += n

    def record_iteration(self, k: int, front_in: int, front_out: int, culled: int) -> None:
        self.iterations.append(IterationStat(k, front_in, front_out, culled, self.bound))


@dataclass(frozen=True)
class QueryResult:
    kind: str
    distance: float
    witness: Witness | None
    iterations: tuple[IterationStat, ...]
    expanded_pairs: int
    narrow_pairs: int
    visited_nodes: int | None = None

    @property
    def witness_exact(self) -> bool:
        return self.witness is not None and self.witness.distance == self.distance

    @property
    def peak_front(self) -> int:
        return max((s.front_out for s in self.iterations), default=0)

    def to_json_dict(self) -> dict:
        w = self.witness
        return {
            "kind": self.kind,
            "distance": self.distance,
            "witness_exact": self.witness_exact,
            "tri_a": None if w is None else w.tri_a,
            "tri_b": None if w is None else w.tri_b,
            "point_a": None if w is None else [float(x) for x in w.point_a],
            "point_b": None if w is None else [float(x) for x in w.point_b],
            "iterations": [s.to_json_dict() for s in self.iterations],
            "expanded_pairs": self.expanded_pairs,
            "narrow_pairs": self.narrow_pairs,
            "peak_front": self.peak_front,
            "visited_nodes": self.visited_nodes,
        }


def adaptive_depth(n: int, cfg: EngineConfig, max_remaining: int) -> int:
    """Expansion depth for a front of n entries.

    The largest k with 4**k * n < front_cap, clamped by depth_cap and by
    the levels actually remaining; never below 1 (the front must shrink
    or descend even when it already exceeds the cap).
    """
    if n < 1:
        raise ValueError("front size must be >= 1")
    if max_remaining < 1:
        raise ValueError("max_remaining must be >= 1")
    k = 1
    while (
        k < cfg.depth_cap
        and k < max_remaining
        and (n << (2 * (k + 1))) < cfg.front_cap
    ):
        k += 1
    return k


def _narrow_update(
    state: QueryState,
    tri_ids_a: np.ndarray,
    tri_ids_b: np.ndarray,
    pts_a: np.ndarray,
    pts_b: np.ndarray,
) -> None:
    """Run the exact narrow phase on triangle id pairs and commit the best."""
    if len(tri_ids_a) == 0:
        return
    if state.kind == "min":
        d, p, q = batch_tri_tri_min(pts_a[tri_ids_a], pts_b[tri_ids_b])
        pick = np.lexsort((tri_ids_b, tri_ids_a, d))[0]
    else:
        d, p, q = batch_tri_tri_max(pts_a[tri_ids_a], pts_b[tri_ids_b])
        pick = np.lexsort((tri_ids_b, tri_ids_a, -d))[0]
    state.add_narrow_pairs(len(tri_ids_a))
    state.offer_bound(d[pick])
    state.offer_witness(
        d[pick], tri_ids_a[pick], tri_ids_b[pick], p[pick].astype(np.float64), q[pick].astype(np.float64)
    )


def process_leaf_pair(
    leaf_a_prims,
    leaf_b_prims,
    mesh_a: TriangleMesh,
    mesh_b: TriangleMesh,
    state: QueryState,
) -> QueryState:
    """Evaluate every triangle pair of two leaves (1-2 triangles each) and
    fold the exact distances into the state's bound and witness."""
    ids_a, ids_b = [], []
    for ta in leaf_a_prims:
        for tb in leaf_b_prims:
            ids_a.append(ta)
            ids_b.append(tb)
    _narrow_update(
        state,
        np.asarray(ids_a, dtype=np.int64),
        np.asarray(ids_b, dtype=np.int64),
        mesh_a.triangle_points(),
        mesh_b.triangle_points(),
    )
    return state


def _leaf_tri_pairs(bvh_a: F12Bvh, bvh_b: F12Bvh, na: np.ndarray, nb: np.ndarray):
    """Expand leaf-node pairs to their 1-4 triangle id pairs."""
    ra = na - (bvh_a.leaf_count - 1)
    rb = nb - (bvh_b.leaf_count - 1)
    ta = bvh_a.leaf_tris[ra]
    tb = bvh_b.leaf_tris[rb]
    out_a, out_b = [], []
    for i in (0, 1):
        for j in (0, 1):
            sel = (ta[:, i] >= 0) & (tb[:, j] >= 0)
            out_a.append(ta[sel, i])
            out_b.append(tb[sel, j])
    return np.concatenate(out_a), np.concatenate(out_b)


def expand_front(
    front: Front,
    k: int,
    state: QueryState,
    bvh_a: F12Bvh,
    bvh_b: F12Bvh,
    pts_a: np.ndarray,
    pts_b: np.ndarray,
    cfg: EngineConfig,
    pool: ThreadPoolExecutor | None = None,
) -> Front:
    """One expansion sweep: descend k levels (clamped per side), cull
    against the shared bound, narrow-phase leaf pairs, emit the rest.

    Work item t picks entry t >> (ka+kb); the low ka+kb bits split into
    the two descendant offsets. When one tree runs out of levels early its
    nodes self-pair (offset 0 at depth 0) while the other keeps
    descending.
    """
    rem_a = bvh_a.depth - front.depth_a
    rem_b = bvh_b.depth - front.depth_b
    ka = min(k, rem_a)
    kb = min(k, rem_b)
    shift = ka + kb
    n_in = len(front)
    n_candidates = n_in << shift
    if n_candidates > cfg.front_hard_cap:
        raise FrontOverflowError(n_candidates, n_in, cfg.front_hard_cap)
    to_leaves = k == max(rem_a, rem_b)
    state.expanded_pairs += n_candidates

    mask_b = (1 << kb) - 1

    def process(start: int, stop: int):
        idx = np.arange(start, stop, dtype=np.int64)
        e = idx >> shift
        off = idx & ((1 << shift) - 1)
        na = ((front.node_a[e] + 1) << ka) - 1 + (off >> kb)
        nb = ((front.node_b[e] + 1) << kb) - 1 + (off & mask_b)
        amin = bvh_a.node_min[na]
        amax = bvh_a.node_max[na]
        bmin = bvh_b.node_min[nb]
        bmax = bvh_b.node_max[nb]
        if state.kind == "min":
            key = batch_min_lower(amin, amax, bmin, bmax)
        else:
            key = batch_max_upper(amin, amax, bmin, bmax)
        bound = state.bound
        if not cfg.culling:
            keep = np.ones(len(idx), dtype=bool)
        elif state.kind == "min":
            if to_leaves and cfg.guarantee_witness:
                keep = key <= bound
            else:
                keep = key < bound
        else:
            if to_leaves and cfg.guarantee_witness:
                keep = key >= bound
            else:
                keep = key > bound
        culled = int(len(idx) - keep.sum())
        na, nb, key = na[keep], nb[keep], key[keep]
        if to_leaves:
            if len(na):
                ids_a, ids_b = _leaf_tri_pairs(bvh_a, bvh_b, na, nb)
                _narrow_update(state, ids_a, ids_b, pts_a, pts_b)
            return culled, None, None, None
        if len(na):
            kept = (amin[keep], amax[keep], bmin[keep], bmax[keep])
            if state.kind == "min":
                update_fn = batch_enhanced_min_upper if cfg.enhanced_bounds else batch_max_upper
                state.offer_bound(update_fn(*kept).min())
            else:
                update_fn = batch_enhanced_max_lower if cfg.enhanced_bounds else batch_min_lower
                state.offer_bound(update_fn(*kept).max())
        return culled, na, nb, key

    spans = [
        (start, min(start + cfg.batch_size, n_candidates))
        for start in range(0, n_candidates, cfg.batch_size)
    ]
    if pool is not None and len(spans) > 1:
        results = list(pool.map(lambda s: process(*s), spans))
    else:
        results = [process(*span) for span in spans]

    total_culled = sum(r[0] for r in results)
    kept_a = [r[1] for r in results if r[1] is not None and len(r[1])]
    out = Front(
        node_a=np.concatenate(kept_a) if kept_a else np.empty(0, dtype=np.int64),
        node_b=np.concatenate([r[2] for r in results if r[2] is not None and len(r[2])])
        if kept_a
        else np.empty(0, dtype=np.int64),
        lower=np.concatenate([r[3] for r in results if r[3] is not None and len(r[3])])
        if kept_a
        else np.empty(0, dtype=np.float64),
        depth_a=front.depth_a + ka,
        depth_b=front.depth_b + kb,
    )
    if len(out) > cfg.front_hard_cap:
        raise FrontOverflowError(len(out), n_in, cfg.front_hard_cap)
    state.record_iteration(k, n_in, len(out), total_culled)
    return out


def _root_bounds(bvh_a: F12Bvh, bvh_b: F12Bvh, kind: str, enhanced: bool) -> tuple[float, float]:
    """(culling key, initial global bound) for the root pair."""
    args = (
        bvh_a.node_min[:1],
        bvh_a.node_max[:1],
        bvh_b.node_min[:1],
        bvh_b.node_max[:1],
    )
    if kind == "min":
        key = float(batch_min_lower(*args)[0])
        bound = float((batch_enhanced_min_upper if enhanced else batch_max_upper)(*args)[0])
    else:
        key = float(batch_max_upper(*args)[0])
        bound = float((batch_enhanced_max_lower if enhanced else batch_min_lower)(*args)[0])
    return key, bound


def _check_build(cfg: EngineConfig, bvh_a: F12Bvh, bvh_b: F12Bvh) -> None:
    for name, bvh in (("A", bvh_a), ("B", bvh_b)):
        if bvh.dtype != np.dtype(cfg.dtype):
            raise ConfigError(
                f"BVH {name} was built as {bvh.dtype}, engine precision is {cfg.precision}-bit; "
                f"rebuild with build_f12(mesh, dtype=...) to match"
            )


def _run_query(
    mesh_a: TriangleMesh,
    mesh_b: TriangleMesh,
    bvh_a: F12Bvh,
    bvh_b: F12Bvh,
    cfg: EngineConfig,
    kind: str,
    warm_pair: tuple[int, int] | None = None,
) -> QueryResult:
    _check_build(cfg, bvh_a, bvh_b)
    pts_a = mesh_a.triangle_points(cfg.dtype)
    pts_b = mesh_b.triangle_points(cfg.dtype)
    key0, bound0 = _root_bounds(bvh_a, bvh_b, kind, cfg.enhanced_bounds)
    state = QueryState(kind, bound0)
    if warm_pair is not None:
        ta, tb = warm_pair
        _narrow_update(
            state,
            np.asarray([ta], dtype=np.int64),
            np.asarray([tb], dtype=np.int64),
            pts_a,
            pts_b,
        )
    front = Front(
        node_a=np.zeros(1, dtype=np.int64),
        node_b=np.zeros(1, dtype=np.int64),
        lower=np.asarray([key0]),
        depth_a=0,
        depth_b=0,
    )
    if bvh_a.depth == 0 and bvh_b.depth == 0:
        # both roots are leaves: narrow phase immediately
        ids_a, ids_b = _leaf_tri_pairs(bvh_a, bvh_b, front.node_a, front.node_b)
        _narrow_update(state, ids_a, ids_b, pts_a, pts_b)
        state.record_iteration(0, 1, 0, 0)
        w = state.witness
        return QueryResult(
            kind, state.bound, w, tuple(state.iterations), 0, state.narrow_pairs
        )

    workers = cfg.worker_count
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while len(front):
            rem = max(bvh_a.depth - front.depth_a, bvh_b.depth - front.depth_b)
            k = adaptive_depth(len(front), cfg, rem)
            front = expand_front(front, k, state, bvh_a, bvh_b, pts_a, pts_b, cfg, pool)
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    return QueryResult(
        kind,
        state.bound,
        state.witness,
        tuple(state.iterations),
        state.expanded_pairs,
        state.narrow_pairs,
    )


def run_min_query(
    mesh_a: TriangleMesh,
    mesh_b: TriangleMesh,
    bvh_a: F12Bvh,
    bvh_b: F12Bvh,
    cfg: EngineConfig | None = None,
    warm_pair: tuple[int, int] | None = None,
) -> QueryResult:
    """Exact minimum distance between two meshes.

    The trees must be built (or refit) against the given meshes with the
    configured precision. `warm_pair` optionally seeds the bound with one
    triangle pair's current exact distance (e.g. the previous frame's
    witness); it never changes the result, only the amount of work.
    """
    return _run_query(mesh_a, mesh_b, bvh_a, bvh_b, cfg or EngineConfig(), "min", warm_pair)


def run_max_query(
    mesh_a: TriangleMesh,
    mesh_b: TriangleMesh,
    bvh_a: F12Bvh,
    bvh_b: F12Bvh,
    cfg: EngineConfig | None = None,
    warm_pair: tuple[int, int] | None = None,
) -> QueryResult:
    """Exact maximum (spanning) distance between two meshes; the mirror of
    run_min_query with the bound roles swapped."""
    return _run_query(mesh_a, mesh_b, bvh_a, bvh_b, cfg or EngineConfig(), "max", warm_pair)


def _brute_force(mesh_a: TriangleMesh, mesh_b: TriangleMesh, kind: str, force: bool, dtype):
    na, nb = mesh_a.n_triangles, mesh_b.n_triangles
    n_pairs = na * nb
    if n_pairs == 0:
        raise ValueError("both meshes need at least one triangle")
    if n_pairs > BRUTE_FORCE_PAIR_LIMIT and not force:
        raise SizeGuardError(n_pairs, BRUTE_FORCE_PAIR_LIMIT)
    pts_a = mesh_a.triangle_points(dtype)
    pts_b = mesh_b.triangle_points(dtype)
    best: tuple[float, int, int] | None = None
    best_pq: tuple[np.ndarray, np.ndarray] | None = None
    chunk = 65_536
    for start in range(0, n_pairs, chunk):
        idx = np.arange(start, min(start + chunk, n_pairs), dtype=np.int64)
        ia = idx // nb
        ib = idx % nb
        if kind == "min":
            d, p, q = batch_tri_tri_min(pts_a[ia], pts_b[ib])
            pick = np.lexsort((ib, ia, d))[0]
            cand = (float(d[pick]), int(ia[pick]), int(ib[pick]))
            if best is None or cand < best:
                best, best_pq = cand, (p[pick], q[pick])
        else:
            d, p, q = batch_tri_tri_max(pts_a[ia], pts_b[ib])
            pick = np.lexsort((ib, ia, -d))[0]
            cand = (float(d[pick]), int(ia[pick]), int(ib[pick]))
            if best is None or (-cand[0], cand[1], cand[2]) < (-best[0], best[1], best[2]):
                best, best_pq = cand, (p[pick], q[pick])
    dist, ta, tb = best
    witness = Witness(dist, ta, tb, best_pq[0].astype(np.float64), best_pq[1].astype(np.float64))
    return dist, witness


def brute_force_min(
    mesh_a: TriangleMesh, mesh_b: TriangleMesh, force: bool = False, dtype=np.float64
) -> tuple[float, Witness]:
    """All-pairs exact minimum distance; the reference oracle.

    Refuses more than BRUTE_FORCE_PAIR_LIMIT triangle pairs unless forced.
    Ties resolve to the lexicographically smallest (tri_a, tri_b).
    """
    return _brute_force(mesh_a, mesh_b, "min", force, dtype)


def brute_force_max(
    mesh_a: TriangleMesh, mesh_b: TriangleMesh, force: bool = False, dtype=np.float64
) -> tuple[float, Witness]:
    """All-pairs exact maximum distance; the reference oracle."""
    return _brute_force(mesh_a, mesh_b, "max", force, dtype)


def run_dfs_baseline(
    mesh_a: TriangleMesh,
    mesh_b: TriangleMesh,
    bvh_b: F12Bvh,
    kind: str = "min",
) -> QueryResult:
    """Per-triangle descent baseline: each triangle of A walks B's tree
    depth-first (nearer child first), pruning against one shared monotone
    bound. Returns the same distance as the front engine and counts every
    node examination for traversal-cost comparisons."""
    state = QueryState(kind, float("inf") if kind == "min" else float("-inf"))
    pts_a64 = mesh_a.triangle_points()
    pts_b64 = mesh_b.triangle_points()
    nmin = bvh_b.node_min.astype(np.float64).tolist()
    nmax = bvh_b.node_max.astype(np.float64).tolist()
    n_leaf_first = bvh_b.leaf_count - 1
    tri_lo = pts_a64.min(axis=1).tolist()
    tri_hi = pts_a64.max(axis=1).tolist()
    visited = 0
    is_min = kind == "min"

    for ta in range(mesh_a.n_triangles):
        alo = tri_lo[ta]
        ahi = tri_hi[ta]

        def box_key(node: int) -> float:
            blo = nmin[node]
            bhi = nmax[node]
            acc = 0.0
            if is_min:
                for i in range(3):
                    g = alo[i] - bhi[i]
                    g2 = blo[i] - ahi[i]
                    if g2 > g:
                        g = g2
                    if g > 0.0:
                        acc += g * g
            else:
                for i in range(3):
                    g = abs(alo[i] - bhi[i])
                    g2 = abs(ahi[i] - blo[i])
                    if g2 > g:
                        g = g2
                    acc += g * g
            return acc ** 0.5

        stack = [0]
        while stack:
            node = stack.pop()
            visited += 1
            key = box_key(node)
            bound = state.bound
            if is_min:
                if not key < bound:
                    continue
            else:
                if not key > bound:
                    continue
            if node >= n_leaf_first:
                prims = bvh_b.leaf_prims(node - n_leaf_first)
                _narrow_update(
                    state,
                    np.full(len(prims), ta, dtype=np.int64),
                    np.asarray(prims, dtype=np.int64),
                    pts_a64,
                    pts_b64,
                )
                continue
            left, right = 2 * node + 1, 2 * node + 2
            kl, kr = box_key(left), box_key(right)
            near_first = kl <= kr if is_min else kl >= kr
            if near_first:
                stack.append(right)
                stack.append(left)
            else:
                stack.append(left)
                stack.append(right)

    return QueryResult(
        kind,
        state.bound,
        state.witness,
        (),
        0,
        state.narrow_pairs,
        visited_nodes=visited,
    )
