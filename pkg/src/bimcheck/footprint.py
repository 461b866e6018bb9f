"""Storey footprint reconstruction and overlap percentages.

Pipeline per storey: horizontal section cut just above the storey
elevation -> points sampled every 20 cm along the cut segments ->
DBSCAN clustering (separates detached towers, drops noise) -> one
k-nearest-neighbours concave hull per cluster -> simple CCW polygons.
Overlap is the intersection area with the reference storey's footprint
as a percentage of the reference area.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import MultiPolygon as _ShMultiPolygon
from shapely.geometry import Polygon as _ShPolygon
from shapely.ops import unary_union

from . import _kernels
from .errors import DegenerateInput, EmptyCut, ZeroReference
from .geometry import polygon_area_2d, slice_meshes

logger = logging.getLogger(__name__)

POINT_WELD = 1e-6   # m, sampled points closer than this collapse


@dataclass(slots=True)
class FootprintParams:
    cut_offset: float = 1.0        # m above IfcBuildingStorey.Elevation
    sample_spacing: float = 0.2    # m along each cut segment
    dbscan_eps: float = 1.0        # m neighborhood radius
    dbscan_min_pts: int = 4
    hull_k: int = 7                # initial k for the concave hull

    def __post_init__(self):
        if self.sample_spacing <= 0:
            raise ValueError("sample_spacing must be > 0")
        if self.dbscan_eps <= 0:
            raise ValueError("dbscan_eps must be > 0")
        if self.dbscan_min_pts < 1:
            raise ValueError("dbscan_min_pts must be >= 1")
        if self.hull_k < 3:
            raise ValueError("hull_k must be >= 3")

    def to_dict(self):
        return {
            "cut_offset_m": round(float(self.cut_offset), 6),
            "sample_spacing_m": round(float(self.sample_spacing), 6),
            "dbscan_eps_m": round(float(self.dbscan_eps), 6),
            "dbscan_min_pts": int(self.dbscan_min_pts),
            "hull_k": int(self.hull_k),
        }

    def digest(self):
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha1(payload.encode("ascii")).hexdigest()


@dataclass(slots=True)
class Polygon2D:
    ring: np.ndarray               # (n, 2), CCW, not explicitly closed
    degenerate: bool = False

    @property
    def area(self):
        if self.degenerate or len(self.ring) < 3:
            return 0.0
        return abs(polygon_area_2d(self.ring))

    def to_coords(self, precision=3):
        return [[round(float(x), precision), round(float(y), precision)]
                for x, y in self.ring]


@dataclass(slots=True)
class FootprintSet:
    storey_names: list
    elevations: list                # meters
    polygons: list                  # list per storey of Polygon2D
    reference: int
    overlaps: list                  # percent per storey
    params: FootprintParams
    warnings: list = field(default_factory=list)

    def rows(self):
        """(storey_name, elevation_m, polygon_count, overlap_pct) rows."""
        return [
            (self.storey_names[i], round(self.elevations[i], 3),
             len(self.polygons[i]), round(self.overlaps[i], 1))
            for i in range(len(self.storey_names))
        ]


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample_segments(segments, spacing):
    """Points along each segment: both endpoints plus interior points at
    `spacing` intervals, welded at 1e-6 m across segments."""
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    segments = np.asarray(segments, dtype=float).reshape(-1, 4)
    bucket = {}
    for ax, ay, bx, by in segments:
        length = math.hypot(bx - ax, by - ay)
        if length <= 0:
            continue
        steps = int(length / spacing + 1e-12)
        ts = [i * spacing / length for i in range(steps + 1)]
        if 1.0 - ts[-1] > 1e-12:
            ts.append(1.0)
        for t in ts:
            x = ax + (bx - ax) * t
            y = ay + (by - ay) * t
            key = (round(x / POINT_WELD), round(y / POINT_WELD))
            if key not in bucket:
                bucket[key] = (x, y)
    if not bucket:
        return np.zeros((0, 2))
    return np.array(list(bucket.values()), dtype=float)


def dbscan(points, eps, min_pts):
    """Standard DBSCAN labels: cluster ids from 0, noise -1.

    A point is core iff it has >= min_pts neighbors within eps,
    inclusive and counting itself.
    """
    points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    return _kernels.dbscan_labels(points, float(eps), int(min_pts))


# ---------------------------------------------------------------------------
# concave hull (k nearest neighbours walk)
# ---------------------------------------------------------------------------

def _cw_angle_diff(a1, a2):
    return (a1 - a2) % (2.0 * math.pi)


def _hull_walk(points, k):
    """One attempt at the boundary walk; None if it self-blocks."""
    n = len(points)
    available = np.ones(n, dtype=bool)
    start = min(range(n), key=lambda i: (points[i][1], points[i][0]))
    hull = [start]
    available[start] = False
    current = start
    prev_angle = math.pi
    chain = np.empty((n + 2, 2))
    chain[0] = points[start]
    step = 2

    while (current != start or step == 2) and available.any():
        if step == 5:
            available[start] = True
        cand_idx = np.flatnonzero(available)
        deltas = points[cand_idx] - points[current]
        dists = np.hypot(deltas[:, 0], deltas[:, 1])
        order = np.argsort(dists, kind="stable")[:min(k, len(cand_idx))]
        nearest = cand_idx[order]
        angles = np.arctan2(points[nearest][:, 1] - points[current][1],
                            points[nearest][:, 0] - points[current][0])
        # quantize the turn so collinear candidates (equal up to atan2
        # noise) tie and the nearest-first order decides between them
        turn = [(round(float(_cw_angle_diff(prev_angle, a)), 9), j)
                for j, a in enumerate(angles)]
        turn.sort()

        chosen = -1
        nchain = len(hull)
        for _, j in turn:
            cand = int(nearest[j])
            if not _kernels.chain_blocks(chain, nchain, points[current],
                                         points[cand]):
                chosen = cand
                break
        if chosen < 0:
            return None
        hull.append(chosen)
        chain[len(hull) - 1] = points[chosen]
        prev_angle = math.atan2(points[current][1] - points[chosen][1],
                                points[current][0] - points[chosen][0])
        available[chosen] = False
        current = chosen
        step += 1
        if len(hull) > 2 * n + 2:
            return None
    if current == start:
        return hull[:-1]  # drop the closing duplicate
    # every point consumed: the ring closes implicitly, but only if the
    # closing edge does not cross the walked chain
    if _kernels.chain_blocks(chain, len(hull), points[current],
                             points[start]):
        return None
    return hull


def concave_hull(points, k=7):
    """Simple CCW polygon tightly enclosing the points.

    Walks the k nearest neighbours by largest right-hand turn from the
    lowest point, retrying with k+1 whenever the walk self-blocks or
    leaves an input point outside. Collinear input yields a zero-area
    two-point result flagged degenerate.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    pts = np.unique(pts, axis=0)
    n = len(pts)
    if n < 3:
        raise DegenerateInput(f"concave hull needs >= 3 distinct points, got {n}")

    d = pts - pts[0]
    cross = d[:, 0] * (pts[-1] - pts[0])[1] - d[:, 1] * (pts[-1] - pts[0])[0]
    if np.all(np.abs(cross) < 1e-9):
        along = d @ (pts[-1] - pts[0])
        lo, hi = pts[int(np.argmin(along))], pts[int(np.argmax(along))]
        return Polygon2D(np.array([lo, hi]), degenerate=True)

    kk = max(3, min(int(k), n - 1))
    while kk <= n - 1:
        hull = _hull_walk(pts, kk)
        if hull is not None:
            ring = pts[hull]
            inside = _kernels.points_in_polygon(pts, ring, 1e-9)
            if inside.all():
                if polygon_area_2d(ring) < 0:
                    ring = ring[::-1]
                return Polygon2D(np.array(ring))
        kk += 1
    raise DegenerateInput("concave hull failed up to k = n - 1")


def is_simple(ring, eps=1e-12):
    """No two non-adjacent edges of the closed ring intersect."""
    n = len(ring)
    if n < 3:
        return False
    closed = np.vstack((ring, ring[:1]))
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            p1, p2 = closed[i], closed[i + 1]
            p3, p4 = closed[j], closed[j + 1]
            d1 = p2 - p1
            d2 = p4 - p3
            cross = d1[0] * d2[1] - d1[1] * d2[0]
            if abs(cross) < eps:
                continue
            d3 = p1 - p3
            t1 = (d2[0] * d3[1] - d2[1] * d3[0]) / cross
            t2 = (d1[0] * d3[1] - d1[1] * d3[0]) / cross
            if 0 < t1 < 1 and 0 < t2 < 1:
                return False
    return True


# ---------------------------------------------------------------------------
# storey pipeline
# ---------------------------------------------------------------------------

def storey_footprint(model, storey_index, params=None):
    """Footprint polygons of one storey, one per detected point cluster."""
    params = params or FootprintParams()
    storey = model.storeys[storey_index]
    meshes = model.storey_meshes(storey_index)
    if not meshes:
        raise EmptyCut(f"storey {storey.name!r} has no sliceable geometry")
    z = storey.elevation + params.cut_offset
    segments = slice_meshes(meshes, z)
    if not len(segments):
        raise EmptyCut(f"storey {storey.name!r}: no cross-section at z = {z:.3f} m")
    points = sample_segments(segments, params.sample_spacing)
    labels = dbscan(points, params.dbscan_eps, params.dbscan_min_pts)

    polygons = []
    for label in range(int(labels.max()) + 1 if len(labels) else 0):
        cluster = points[labels == label]
        if len(cluster) < 3:
            logger.debug("storey %s cluster %d too small (%d points)",
                         storey.name, label, len(cluster))
            continue
        try:
            poly = concave_hull(cluster, params.hull_k)
        except DegenerateInput as exc:
            logger.warning("storey %s cluster %d: %s", storey.name, label, exc)
            continue
        if poly.degenerate or poly.area <= 0:
            logger.warning("storey %s cluster %d degenerate outline dropped",
                           storey.name, label)
            continue
        polygons.append(poly)
    return polygons


def _shapely_union(polys):
    shapes = []
    for poly in polys:
        if poly.degenerate or len(poly.ring) < 3:
            continue
        shape = _ShPolygon(poly.ring)
        if not shape.is_valid:
            shape = shape.buffer(0)
        if not shape.is_empty:
            shapes.append(shape)
    if not shapes:
        return None
    return unary_union(shapes)


def overlap_percentage(target_polys, reference_polys):
    """100 x area(target union ∩ reference union) / area(reference union)."""
    reference = _shapely_union(reference_polys)
    if reference is None or reference.area <= 1e-12:
        raise ZeroReference("reference footprint has zero area")
    target = _shapely_union(target_polys)
    if target is None:
        return 0.0
    return 100.0 * target.intersection(reference).area / reference.area


def overlap_table(model, params=None, reference_storey=None):
    """Per-storey overlap against the reference storey, elevation order."""
    params = params or FootprintParams()
    if reference_storey is None:
        reference = model.ground_storey
    else:
        reference = model.storey_index(reference_storey)

    warnings = []
    polygons = []
    for i, storey in enumerate(model.storeys):
        try:
            polys = storey_footprint(model, i, params)
        except EmptyCut as exc:
            warnings.append(str(exc))
            polys = []
        if not polys:
            warnings.append(f"storey {storey.name!r}: empty footprint, 0%")
        polygons.append(polys)

    if not polygons[reference]:
        raise ZeroReference(
            f"reference storey {model.storeys[reference].name!r} "
            "has no footprint")

    overlaps = []
    for i, polys in enumerate(polygons):
        if i == reference:
            overlaps.append(100.0)
        elif not polys:
            overlaps.append(0.0)
        else:
            overlaps.append(overlap_percentage(polys, polygons[reference]))
    return FootprintSet(
        storey_names=[s.name for s in model.storeys],
        elevations=[s.elevation for s in model.storeys],
        polygons=polygons,
        reference=reference,
        overlaps=overlaps,
        params=params,
        warnings=warnings,
    )
