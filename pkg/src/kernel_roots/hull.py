"""Exact convex hulls of small integer point sets in dimension <= 3.

Extreme points and polytope volumes here must be exact: the support-hull
scaling law hull(d*A) = d*hull(A) and the BKK dilation homomorphism are
tested as integer identities, not within tolerances. Strategy:

* dimension 1 and 2 (and rank-2 sets embedded in 3-space): pure integer
  arithmetic, monotone chain with integer cross products;
* rank-3 sets: Qhull proposes the facet planes, then everything that
  matters is re-verified exactly over the integers. Every proposed facet
  plane is checked to support the whole point set (one-sidedness of
  integer dot products), and a point is classified extreme iff the
  integer normals of the supporting planes through it have rank 3. Three
  independent supporting hyperplanes meet in a single point, so that rank
  condition characterizes vertices exactly; points interior to an edge
  (rank 2) or a facet (rank 1) are rejected. A failed verification raises
  InternalError rather than returning a possibly wrong hull.

Coordinates stay far below the ~1e5 range where 3x3 integer determinants
would stop being exact in double precision, so Qhull itself cannot
misclassify a strict side as a tie; the integer layer converts any
remaining doubt into a hard error.

Volumes are returned as Fractions (1D length, 2D shoelace over 2,
3D sum of oriented facet-triangle determinants over 6) so that the
polarization formula for mixed volumes stays exact end to end.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.spatial import ConvexHull

from .errors import InternalError, UnsupportedError

Point = tuple[int, ...]


def _dedupe(points: list[Point]) -> list[Point]:
    return sorted(set(points))


def _diff(p: Point, q: Point) -> Point:
    return tuple(a - b for a, b in zip(p, q))


def _dot(u: Point, v: Point) -> int:
    return sum(a * b for a, b in zip(u, v))


def _cross3(u: Point, v: Point) -> Point:
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def _cross2(u: Point, v: Point) -> int:
    return u[0] * v[1] - u[1] * v[0]


def _is_zero(u: Point) -> bool:
    return all(c == 0 for c in u)


def affine_rank(points: list[Point]) -> int:
    """Rank of the difference vectors, exact over the integers."""
    pts = _dedupe(points)
    if len(pts) <= 1:
        return 0
    base = pts[0]
    diffs = [_diff(p, base) for p in pts[1:]]
    n = len(base)
    u = next((d for d in diffs if not _is_zero(d)), None)
    if u is None:
        return 0
    if n == 1:
        return 1
    if n == 2:
        return 1 if all(_cross2(u, d) == 0 for d in diffs) else 2
    v = next((d for d in diffs if not _is_zero(_cross3(u, d))), None)
    if v is None:
        return 1
    w = _cross3(u, v)
    return 2 if all(_dot(w, d) == 0 for d in diffs) else 3


def _monotone_chain(pts2: list[Point]) -> list[Point]:
    # pts2 sorted lex, rank 2; strict turns only, so collinear points drop out
    def half(seq):
        out: list[Point] = []
        for p in seq:
            while len(out) >= 2 and _cross2(_diff(out[-1], out[-2]), _diff(p, out[-2])) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts2)
    upper = half(list(reversed(pts2)))
    return lower[:-1] + upper[:-1]


def hull_vertices_2d_cycle(points: list[Point]) -> list[Point]:
    """CCW vertex cycle of a rank-2 planar set, starting at the lex-min vertex."""
    pts = _dedupe(points)
    cyc = _monotone_chain(pts)
    # monotone chain as written starts at the lex-min point and runs CCW
    return cyc


def _project_rank2_in_3d(pts: list[Point]) -> tuple[list[Point], int]:
    base = pts[0]
    diffs = [_diff(p, base) for p in pts[1:]]
    u = next(d for d in diffs if not _is_zero(d))
    v = next(d for d in diffs if not _is_zero(_cross3(u, d)))
    normal = _cross3(u, v)
    drop = max(range(3), key=lambda k: abs(normal[k]))
    keep = [k for k in range(3) if k != drop]
    return [tuple(p[k] for k in keep) for p in pts], drop


def _rank_of_normals(normals: list[Point]) -> int:
    u = next((m for m in normals if not _is_zero(m)), None)
    if u is None:
        return 0
    v = next((m for m in normals if not _is_zero(_cross3(u, m))), None)
    if v is None:
        return 1
    w = _cross3(u, v)
    return 3 if any(_dot(w, m) != 0 for m in normals) else 2


def _facet_planes_3d(pts: list[Point]) -> tuple[np.ndarray, np.ndarray]:
    """Verified supporting planes of a rank-3 set: (normals, offsets), int64.

    Every returned plane N.p = off satisfies N.q <= off for all points q.
    """
    arr = np.asarray(pts, dtype=np.int64)
    hull = ConvexHull(arr.astype(np.float64))
    tri = arr[hull.simplices]  # (F, 3, 3)
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    keep = np.any(normals != 0, axis=1)
    normals = normals[keep]
    offsets = np.einsum("ij,ij->i", normals, tri[keep, 0])
    side = arr @ normals.T - offsets  # (m, F)
    neg = side.min(axis=0) >= 0
    pos = side.max(axis=0) <= 0
    if not np.all(neg | pos):
        raise InternalError("proposed hull facet does not support the point set")
    # orient all planes outward (N.q <= off)
    flip = neg & ~pos
    normals[flip] *= -1
    offsets[flip] *= -1
    return normals, offsets


def _hull_vertices_3d(pts: list[Point]) -> list[Point]:
    normals, offsets = _facet_planes_3d(pts)
    arr = np.asarray(pts, dtype=np.int64)
    side = arr @ normals.T - offsets
    out: list[Point] = []
    for i, p in enumerate(pts):
        on = [tuple(int(c) for c in normals[j]) for j in np.nonzero(side[i] == 0)[0]]
        if _rank_of_normals(on) == 3:
            out.append(p)
    if not out:
        raise InternalError("rank-3 point set produced no vertices")
    return out


def hull_vertices(points: list[Point]) -> list[Point]:
    """Extreme points of conv(points), canonically ordered.

    1D: [min, max]. Full-rank planar sets in ambient dimension 2: CCW cycle
    starting at the lex-min vertex. Everything else: lex-sorted list.
    """
    if not points:
        raise ValueError("empty point set")
    n = len(points[0])
    if n > 3:
        raise UnsupportedError(f"exact hulls not supported in dimension {n}")
    pts = _dedupe(points)
    rank = affine_rank(pts)
    if rank == 0:
        return [pts[0]]
    if rank == 1:
        base = pts[0]
        u = next(d for d in (_diff(p, base) for p in pts) if not _is_zero(d))
        lo = min(pts, key=lambda p: _dot(u, p))
        hi = max(pts, key=lambda p: _dot(u, p))
        return sorted([lo, hi])
    if rank == 2:
        if n == 2:
            return hull_vertices_2d_cycle(pts)
        proj, drop = _project_rank2_in_3d(pts)
        index = {}
        for p, q in zip(proj, pts):
            index[p] = q
        return sorted(index[p] for p in hull_vertices_2d_cycle(proj))
    return sorted(_hull_vertices_3d(pts))


def polytope_volume(points: list[Point]) -> Fraction:
    """Exact n-volume of conv(points) in its ambient dimension (0 if flat)."""
    if not points:
        raise ValueError("empty point set")
    n = len(points[0])
    if n > 3:
        raise UnsupportedError(f"exact volumes not supported in dimension {n}")
    pts = _dedupe(points)
    if affine_rank(pts) < n:
        return Fraction(0)
    if n == 1:
        return Fraction(pts[-1][0] - pts[0][0])
    if n == 2:
        cyc = hull_vertices_2d_cycle(pts)
        s = 0
        for i, p in enumerate(cyc):
            q = cyc[(i + 1) % len(cyc)]
            s += _cross2(p, q)
        return Fraction(abs(s), 2)
    return _volume_3d(pts)


def _volume_3d(pts: list[Point]) -> Fraction:
    arr = np.asarray(pts, dtype=np.int64)
    hull = ConvexHull(arr.astype(np.float64))
    tri = arr[hull.simplices]
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    live = np.any(normals != 0, axis=1)  # zero-area slivers contribute nothing
    offsets = np.einsum("ij,ij->i", normals[live], tri[live, 0])
    side = arr @ normals[live].T - offsets
    if not np.all((side.min(axis=0) >= 0) | (side.max(axis=0) <= 0)):
        raise InternalError("proposed hull facet does not support the point set")
    verts = sorted({tuple(int(c) for c in arr[i]) for i in hull.vertices})
    g = tuple(int(s) for s in np.sum(np.asarray(verts, dtype=np.int64), axis=0))
    k = len(verts)
    total = 0
    for simplex in hull.simplices[live]:
        a, b, c = (tuple(int(x) for x in arr[i]) for i in simplex)
        nrm = _cross3(_diff(b, a), _diff(c, a))
        # outward iff the interior point g/k sits on the negative side
        orient = _dot(nrm, _diff(g, tuple(k * x for x in a)))
        if orient == 0:
            raise InternalError("vertex centroid lies on a facet plane of a rank-3 hull")
        det = _dot(a, _cross3(b, c))
        total += det if orient < 0 else -det
    if total < 0:
        raise InternalError("negative oriented volume sum")
    return Fraction(total, 6)


def minkowski_sum(a: list[Point], b: list[Point]) -> list[Point]:
    """Vertex-set Minkowski sum (not reduced to extreme points)."""
    return [tuple(x + y for x, y in zip(p, q)) for p in a for q in b]
