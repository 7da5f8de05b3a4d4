"""Distance bounds for AABB pairs and the exact triangle narrow phase.

Box-pair bounds come in two flavors:

  conventional  aabb_min_lower / aabb_max_upper - exact min and max
                distance between the boxes themselves, valid for any pair.
                The max doubles as the usual upper bound on the minimum
                distance between the boxes' contents.

  enhanced      enhanced_min_upper / enhanced_max_lower - valid only when
                both boxes are tight (every face touches the contained
                geometry). Each of the six bounding rectangles of a tight
                box contains a model point, so for every one of the 36
                face-rectangle pairs the rectangle-to-rectangle maximum
                bounds the content minimum from above (and the rectangle
                minimum bounds the content maximum from below). Face
                rectangles are just degenerate AABBs, so the same per-axis
                kernel serves both flavors. All 36 pairs are evaluated.

Fattening a box invalidates the enhanced bounds (the faces stop touching
geometry), which is why the builder never inflates and the scalar entry
points check the tight flag.

Everything is written twice over: scalar entry points on Aabb for the
public API, and `batch_*` array kernels that the traversal engine calls on
whole fronts. Scalar wrappers delegate to the batch kernels so both paths
evaluate identical formulas.
"""

from __future__ import annotations

import numpy as np

from .bvh import Aabb
from .errors import TightnessError


def _dot(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (u * v).sum(axis=-1)


# ---------------------------------------------------------------------------
# box-pair kernels
# ---------------------------------------------------------------------------


def batch_min_lower(amin, amax, bmin, bmax) -> np.ndarray:
    """Exact minimum distance between box pairs, (N,) for (N, 3) corners."""
    gap = np.maximum(amin - bmax, bmin - amax)
    np.maximum(gap, 0.0, out=gap)
    return np.sqrt(_dot(gap, gap))


def batch_max_upper(amin, amax, bmin, bmax) -> np.ndarray:
    """Exact maximum distance between box pairs (attained at corners)."""
    h = np.maximum(np.abs(amin - bmax), np.abs(amax - bmin))
    return np.sqrt(_dot(h, h))


def _face_boxes(bmin: np.ndarray, bmax: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The six face rectangles of each box as degenerate boxes, (N, 6, 3)."""
    fmin = np.repeat(bmin[:, None, :], 6, axis=1)
    fmax = np.repeat(bmax[:, None, :], 6, axis=1)
    for axis in range(3):
        fmax[:, 2 * axis, axis] = bmin[:, axis]
        fmin[:, 2 * axis + 1, axis] = bmax[:, axis]
    return fmin, fmax


def batch_enhanced_min_upper(amin, amax, bmin, bmax) -> np.ndarray:
    """Upper bound on the content minimum distance for tight box pairs.

    Minimum over the 36 face-rectangle pairs of the exact rectangle
    maximum distance. Never exceeds batch_max_upper. Callers guarantee
    tightness; the scalar wrapper enforces it.
    """
    afmin, afmax = _face_boxes(amin, amax)
    bfmin, bfmax = _face_boxes(bmin, bmax)
    h = np.maximum(
        np.abs(afmin[:, :, None, :] - bfmax[:, None, :, :]),
        np.abs(afmax[:, :, None, :] - bfmin[:, None, :, :]),
    )
    d = np.sqrt(_dot(h, h))
    return d.reshape(len(d), 36).min(axis=1)


def batch_enhanced_max_lower(amin, amax, bmin, bmax) -> np.ndarray:
    """Lower bound on the content maximum distance for tight box pairs.

    Maximum over the 36 face-rectangle pairs of the exact rectangle
    minimum distance. Never falls below batch_min_lower.
    """
    afmin, afmax = _face_boxes(amin, amax)
    bfmin, bfmax = _face_boxes(bmin, bmax)
    gap = np.maximum(
        afmin[:, :, None, :] - bfmax[:, None, :, :],
        bfmin[:, None, :, :] - afmax[:, :, None, :],
    )
    np.maximum(gap, 0.0, out=gap)
    d = np.sqrt(_dot(gap, gap))
    return d.reshape(len(d), 36).max(axis=1)


def _as_pair(a: Aabb, b: Aabb):
    return (
        a.min[None, :],
        a.max[None, :],
        b.min[None, :],
        b.max[None, :],
    )


def aabb_min_lower(a: Aabb, b: Aabb) -> float:
    """Exact minimum distance between two boxes (per-axis projected gaps)."""
    return float(batch_min_lower(*_as_pair(a, b))[0])


def aabb_max_upper(a: Aabb, b: Aabb) -> float:
    """Exact maximum distance between two boxes; also the conventional
    upper bound on the minimum distance between their contents."""
    return float(batch_max_upper(*_as_pair(a, b))[0])


def _require_tight(a: Aabb, b: Aabb, op: str) -> None:
    if not (a.tight and b.tight):
        raise TightnessError(f"{op} requires both boxes tight (got {a.tight}, {b.tight})")


def enhanced_min_upper(a: Aabb, b: Aabb) -> float:
    """36-face-pair upper bound on the content minimum distance."""
    _require_tight(a, b, "enhanced_min_upper")
    return float(batch_enhanced_min_upper(*_as_pair(a, b))[0])


def enhanced_max_lower(a: Aabb, b: Aabb) -> float:
    """36-face-pair lower bound on the content maximum distance."""
    _require_tight(a, b, "enhanced_max_lower")
    return float(batch_enhanced_max_lower(*_as_pair(a, b))[0])


# ---------------------------------------------------------------------------
# triangle narrow phase
# ---------------------------------------------------------------------------


def _div_clamp(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """num/den clamped to [0, 1]; 0 where den is 0."""
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den != 0)
    return np.clip(out, 0.0, 1.0)


def _seg_seg_closest(p0, u, q0, v):
    """Closest points between segments p0+t*u and q0+s*v, t,s in [0,1].

    Lumelsky's clamped projection scheme (Inf. Proc. Letters 21(2), 1985):
    solve the unconstrained line-line problem, then re-optimize each
    parameter once against the other's clamped value.
    """
    w0 = q0 - p0
    d0 = _dot(u, u)
    d1 = _dot(v, v)
    r = _dot(u, v)
    s0 = _dot(u, w0)
    s1 = _dot(v, w0)
    t = _div_clamp(s0 * d1 - s1 * r, d0 * d1 - r * r)
    s = _div_clamp(t * r - s1, d1)
    t = _div_clamp(s * r + s0, d0)
    return p0 + t[..., None] * u, q0 + s[..., None] * v


def _closest_on_triangle(p, a, b, c):
    """Closest point on triangle abc to p, all (N, 3).

    Voronoi-region walk after Ericson, Real-Time Collision Detection
    section 5.1.5, with guarded divisions so zero-area triangles degrade
    to their edges instead of dividing by zero.
    """
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = _dot(ab, ap)
    d2 = _dot(ac, ap)
    bp = p - b
    d3 = _dot(ab, bp)
    d4 = _dot(ac, bp)
    cp = p - c
    d5 = _dot(ab, cp)
    d6 = _dot(ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    v_ab = _div_clamp(d1, d1 - d3)
    on_ab = a + v_ab[..., None] * ab
    w_ac = _div_clamp(d2, d2 - d6)
    on_ac = a + w_ac[..., None] * ac
    w_bc = _div_clamp(d4 - d3, (d4 - d3) + (d5 - d6))
    on_bc = b + w_bc[..., None] * (c - b)

    total = va + vb + vc
    inv = np.zeros_like(total)
    np.divide(1.0, total, out=inv, where=total != 0)
    inner = a + (vb * inv)[..., None] * ab + (vc * inv)[..., None] * ac

    conditions = [
        (d1 <= 0) & (d2 <= 0),
        (d3 >= 0) & (d4 <= d3),
        (vc <= 0) & (d1 >= 0) & (d3 <= 0),
        (d6 >= 0) & (d5 <= d6),
        (vb <= 0) & (d2 >= 0) & (d6 <= 0),
        (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0),
        total == 0,  # degenerate fallback: nearest edge point via ab clamp
    ]
    choices = [a, b, on_ab, c, on_ac, on_bc, on_ab]
    out = inner.copy()
    # np.select semantics by hand to keep (N, 3) broadcasting simple:
    # apply in reverse priority so earlier conditions win.
    for cond, choice in zip(reversed(conditions), reversed(choices)):
        out = np.where(cond[..., None], choice, out)
    return out


def _segment_pierces_triangle(s0, s1, a, b, c):
    """True where segment s0-s1 crosses triangle abc transversally.

    Returns (mask, point). Coplanar and touching configurations are the
    narrow phase's job (their case distances are already zero); this only
    needs to catch clean pierces through the interior.
    """
    n = np.cross(b - a, c - a)
    d = s1 - s0
    denom = _dot(n, d)
    ok = denom != 0
    t = np.zeros_like(denom)
    np.divide(_dot(n, a - s0), denom, out=t, where=ok)
    ok &= (t >= 0.0) & (t <= 1.0)
    x = s0 + t[..., None] * d
    ok &= _dot(n, np.cross(b - a, x - a)) >= 0
    ok &= _dot(n, np.cross(c - b, x - b)) >= 0
    ok &= _dot(n, np.cross(a - c, x - c)) >= 0
    return ok, x


def batch_tri_tri_min(t1: np.ndarray, t2: np.ndarray):
    """Exact minimum distance between triangle pairs, with witness points.

    t1, t2: (N, 3, 3) corner points. Returns (dist, p_on_t1, q_on_t2).
    The minimum over all nine edge-edge pairs and six vertex-triangle
    projections is exact for non-penetrating (including degenerate)
    triangles; a transversal edge-through-interior test catches the
    remaining penetration case and forces the distance to zero there.
    """
    t1 = np.asarray(t1)
    t2 = np.asarray(t2)
    n = len(t1)
    best_d2 = np.full(n, np.inf, dtype=t1.dtype)
    best_p = np.zeros((n, 3), dtype=t1.dtype)
    best_q = np.zeros((n, 3), dtype=t1.dtype)

    def consider(d2, p, q):
        nonlocal best_d2, best_p, best_q
        better = d2 < best_d2
        best_d2 = np.where(better, d2, best_d2)
        best_p = np.where(better[:, None], p, best_p)
        best_q = np.where(better[:, None], q, best_q)

    for i in range(3):
        e1p = t1[:, i]
        e1d = t1[:, (i + 1) % 3] - e1p
        for j in range(3):
            e2p = t2[:, j]
            e2d = t2[:, (j + 1) % 3] - e2p
            p, q = _seg_seg_closest(e1p, e1d, e2p, e2d)
            consider(_dot(p - q, p - q), p, q)
    for i in range(3):
        p = t1[:, i]
        q = _closest_on_triangle(p, t2[:, 0], t2[:, 1], t2[:, 2])
        consider(_dot(p - q, p - q), p, q)
        q = t2[:, i]
        p = _closest_on_triangle(q, t1[:, 0], t1[:, 1], t1[:, 2])
        consider(_dot(p - q, p - q), p, q)

    positive = best_d2 > 0
    if positive.any():
        pierced = np.zeros(n, dtype=bool)
        point = np.zeros((n, 3), dtype=t1.dtype)
        for i in range(3):
            hit, x = _segment_pierces_triangle(
                t1[:, i], t1[:, (i + 1) % 3], t2[:, 0], t2[:, 1], t2[:, 2]
            )
            new = hit & ~pierced
            point = np.where(new[:, None], x, point)
            pierced |= hit
            hit, x = _segment_pierces_triangle(
                t2[:, i], t2[:, (i + 1) % 3], t1[:, 0], t1[:, 1], t1[:, 2]
            )
            new = hit & ~pierced
            point = np.where(new[:, None], x, point)
            pierced |= hit
        stab = positive & pierced
        best_d2 = np.where(stab, 0.0, best_d2)
        best_p = np.where(stab[:, None], point, best_p)
        best_q = np.where(stab[:, None], point, best_q)

    return np.sqrt(best_d2), best_p, best_q


def batch_tri_tri_max(t1: np.ndarray, t2: np.ndarray):
    """Exact maximum distance between triangle pairs, with witness vertices.

    The maximum distance between convex sets is attained at extreme
    points, so this is the maximum over the nine vertex pairs.
    """
    t1 = np.asarray(t1)
    t2 = np.asarray(t2)
    n = len(t1)
    best_d2 = np.full(n, -1.0, dtype=t1.dtype)
    best_p = np.zeros((n, 3), dtype=t1.dtype)
    best_q = np.zeros((n, 3), dtype=t1.dtype)
    for i in range(3):
        for j in range(3):
            p = t1[:, i]
            q = t2[:, j]
            d2 = _dot(p - q, p - q)
            better = d2 > best_d2
            best_d2 = np.where(better, d2, best_d2)
            best_p = np.where(better[:, None], p, best_p)
            best_q = np.where(better[:, None], q, best_q)
    return np.sqrt(best_d2), best_p, best_q


def tri_tri_min(t1, t2) -> tuple[float, np.ndarray, np.ndarray]:
    """Exact minimum distance between two triangles ((3, 3) corner arrays)
    and a witness point pair attaining it. Zero when they intersect."""
    d, p, q = batch_tri_tri_min(
        np.asarray(t1, dtype=np.float64)[None], np.asarray(t2, dtype=np.float64)[None]
    )
    return float(d[0]), p[0], q[0]


def tri_tri_max(t1, t2) -> tuple[float, np.ndarray, np.ndarray]:
    """Exact maximum distance between two triangles and the vertex pair
    attaining it."""
    d, p, q = batch_tri_tri_max(
        np.asarray(t1, dtype=np.float64)[None], np.asarray(t2, dtype=np.float64)[None]
    )
    return float(d[0]), p[0], q[0]
