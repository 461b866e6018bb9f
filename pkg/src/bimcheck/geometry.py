"""Placement resolution, tessellation, and horizontal mesh slicing.

Converts the supported representation items (extruded area solids over
polygon/rectangle/circle profiles, faceted breps, polygonal and
triangulated face sets, shell based surface models, mapped items,
boolean clipping results) into triangle meshes in the model frame, in
meters, and cuts them with horizontal planes.

Tolerances: vertex weld 1e-6 m, minimum segment length 1e-9 m,
plane-coincidence snap 1e-7 m, zero-area triangle 1e-12 m^2. Curved
profiles are discretized at 32 segments per full circle, with vertices
at the equal-area radius so the polygon area matches the analytic
cross-section.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    CyclicPlacement,
    DegenerateInput,
    UnsupportedRepresentation,
)
from .step_parser import EntityRef, EnumToken

logger = logging.getLogger(__name__)

WELD_TOL = 1e-6
MIN_SEGMENT = 1e-9
PLANE_SNAP = 1e-7
MIN_TRI_AREA = 1e-12
CIRCLE_SEGMENTS = 32

_SOLID_REP_TYPES = {
    "SWEPTSOLID", "BREP", "ADVANCEDBREP", "TESSELLATION", "SURFACEMODEL",
    "MAPPEDREPRESENTATION", "CSG", "CLIPPING", "SOLIDMODEL",
}


# ---------------------------------------------------------------------------
# placements
# ---------------------------------------------------------------------------

def _as_floats(values, count):
    out = [0.0] * count
    for i, v in enumerate(values[:count]):
        if isinstance(v, (int, float)):
            out[i] = float(v)
    return np.array(out, dtype=float)


def _direction3(graph, ref, default):
    inst = graph.deref(ref)
    if inst is None:
        return np.array(default, dtype=float)
    vec = _as_floats(graph.attr(inst, "DirectionRatios") or (), 3)
    norm = float(np.linalg.norm(vec))
    if norm < 1e-12:
        return np.array(default, dtype=float)
    return vec / norm


def _point3(graph, ref):
    inst = graph.deref(ref)
    if inst is None:
        return np.zeros(3)
    return _as_floats(graph.attr(inst, "Coordinates") or (), 3)


def axis2placement3d_matrix(graph, inst):
    """4x4 matrix from location/axis/ref-direction with orthonormalized axes."""
    loc = _point3(graph, graph.attr(inst, "Location"))
    z = _direction3(graph, graph.attr(inst, "Axis"), (0.0, 0.0, 1.0))
    x_hint = _direction3(graph, graph.attr(inst, "RefDirection"), (1.0, 0.0, 0.0))
    x = x_hint - np.dot(x_hint, z) * z
    norm = float(np.linalg.norm(x))
    if norm < 1e-9:
        # ref direction parallel to axis: pick any perpendicular
        seed = np.array((0.0, 1.0, 0.0)) if abs(z[0]) > 0.9 else np.array((1.0, 0.0, 0.0))
        x = seed - np.dot(seed, z) * z
        norm = float(np.linalg.norm(x))
    x /= norm
    y = np.cross(z, x)
    mat = np.eye(4)
    mat[:3, 0] = x
    mat[:3, 1] = y
    mat[:3, 2] = z
    mat[:3, 3] = loc
    return mat


def axis2placement2d_matrix(graph, inst):
    loc2 = np.zeros(2)
    loc_inst = graph.deref(graph.attr(inst, "Location"))
    if loc_inst is not None:
        loc2 = _as_floats(graph.attr(loc_inst, "Coordinates") or (), 2)
    xdir = np.array((1.0, 0.0))
    ref = graph.deref(graph.attr(inst, "RefDirection"))
    if ref is not None:
        vec = _as_floats(graph.attr(ref, "DirectionRatios") or (), 2)
        norm = float(np.linalg.norm(vec))
        if norm > 1e-12:
            xdir = vec / norm
    mat = np.eye(3)
    mat[0, 0], mat[1, 0] = xdir[0], xdir[1]
    mat[0, 1], mat[1, 1] = -xdir[1], xdir[0]
    mat[:2, 2] = loc2
    return mat


def placement_matrix(graph, placement_id):
    """Resolve an IfcLocalPlacement chain to one 4x4 matrix (model units)."""
    chain = []
    seen = set()
    current = placement_id
    while current is not None:
        if current in seen:
            raise CyclicPlacement(f"placement cycle through #{current}")
        seen.add(current)
        inst = graph.instances.get(current)
        if inst is None:
            break
        if inst.ifc_class == "IFCLOCALPLACEMENT":
            rel = graph.deref(graph.attr(inst, "RelativePlacement"))
            chain.append(rel)
            parent = graph.attr(inst, "PlacementRelTo")
            current = parent.id if isinstance(parent, EntityRef) else None
        elif inst.ifc_class == "IFCAXIS2PLACEMENT3D":
            chain.append(inst)
            current = None
        else:
            break
    mat = np.eye(4)
    for rel in reversed(chain):
        if rel is not None and rel.ifc_class == "IFCAXIS2PLACEMENT3D":
            mat = mat @ axis2placement3d_matrix(graph, rel)
    return mat


def apply_matrix(matrix, vertices):
    return vertices @ matrix[:3, :3].T + matrix[:3, 3]


# ---------------------------------------------------------------------------
# mesh container
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class Mesh:
    vertices: np.ndarray                 # (n, 3) float64, meters
    triangles: np.ndarray                # (m, 3) int32
    approximate: bool = False
    element_id: int | None = None

    @property
    def bbox(self):
        if len(self.vertices) == 0:
            return np.zeros(3), np.zeros(3)
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def transformed(self, matrix):
        return Mesh(apply_matrix(matrix, self.vertices),
                    self.triangles.copy(), self.approximate, self.element_id)


def weld_mesh(vertices, triangles, tol=WELD_TOL):
    """Merge near-coincident vertices and drop degenerate triangles."""
    vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
    triangles = np.asarray(triangles, dtype=np.int32).reshape(-1, 3)
    if len(vertices) == 0 or len(triangles) == 0:
        return Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int32))
    keys = np.round(vertices / tol).astype(np.int64)
    _, first_idx, inverse = np.unique(keys, axis=0, return_index=True,
                                      return_inverse=True)
    welded = vertices[first_idx]
    tris = inverse[triangles]
    # drop collapsed and zero-area triangles
    a = welded[tris[:, 0]]
    b = welded[tris[:, 1]]
    c = welded[tris[:, 2]]
    area2 = np.linalg.norm(np.cross(b - a, c - a), axis=1)
    keep = ((tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2])
            & (tris[:, 0] != tris[:, 2]) & (area2 > 2 * MIN_TRI_AREA))
    return Mesh(welded, tris[keep].astype(np.int32))


# ---------------------------------------------------------------------------
# 2D triangulation (ear clipping)
# ---------------------------------------------------------------------------

def polygon_area_2d(points):
    x = points[:, 0]
    y = points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def triangulate_polygon(points):
    """Ear-clip a simple 2D polygon; returns index triples into `points`.

    Falls back to a fan on input the clipper cannot resolve.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n < 3:
        return []
    if n == 3:
        return [(0, 1, 2)]
    order = list(range(n))
    if polygon_area_2d(points) < 0:
        order.reverse()
    tris = []
    eps = 1e-12
    guard = 0
    while len(order) > 3 and guard < 2 * n * n:
        guard += 1
        clipped = False
        m = len(order)
        for k in range(m):
            i0, i1, i2 = order[k - 1], order[k], order[(k + 1) % m]
            a, b, c = points[i0], points[i1], points[i2]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross <= eps:
                if abs(cross) <= eps:
                    # collinear vertex: remove without emitting a sliver
                    order.pop(k)
                    clipped = True
                    break
                continue
            contains = False
            for j in order:
                if j in (i0, i1, i2):
                    continue
                p = points[j]
                d1 = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
                d2 = (c[0] - b[0]) * (p[1] - b[1]) - (c[1] - b[1]) * (p[0] - b[0])
                d3 = (a[0] - c[0]) * (p[1] - c[1]) - (a[1] - c[1]) * (p[0] - c[0])
                if d1 >= -eps and d2 >= -eps and d3 >= -eps:
                    contains = True
                    break
            if contains:
                continue
            tris.append((i0, i1, i2))
            order.pop(k)
            clipped = True
            break
        if not clipped:
            logger.debug("ear clipping stalled at %d vertices; fanning", len(order))
            break
    if len(order) == 3:
        tris.append(tuple(order))
    elif len(order) > 3:
        for k in range(1, len(order) - 1):
            tris.append((order[0], order[k], order[k + 1]))
    return tris


def _newell_normal(points3):
    normal = np.zeros(3)
    for i in range(len(points3)):
        u = points3[i]
        v = points3[(i + 1) % len(points3)]
        normal[0] += (u[1] - v[1]) * (u[2] + v[2])
        normal[1] += (u[2] - v[2]) * (u[0] + v[0])
        normal[2] += (u[0] - v[0]) * (u[1] + v[1])
    return normal


def triangulate_face3d(points3):
    """Triangulate a planar 3D loop by projecting onto its dominant plane."""
    points3 = np.asarray(points3, dtype=float)
    if len(points3) < 3:
        return []
    if len(points3) == 3:
        return [(0, 1, 2)]
    normal = _newell_normal(points3)
    axis = int(np.argmax(np.abs(normal)))
    cols = [c for c in (0, 1, 2) if c != axis]
    return triangulate_polygon(points3[:, cols])


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------

def _profile_polygon(graph, profile_inst):
    """Closed 2D outline (k, 2) of a profile definition, CCW."""
    cls = profile_inst.ifc_class
    if cls == "IFCARBITRARYCLOSEDPROFILEDEF":
        curve = graph.deref(graph.attr(profile_inst, "OuterCurve"))
        if curve is None or curve.ifc_class != "IFCPOLYLINE":
            raise UnsupportedRepresentation(
                curve.ifc_class if curve else "missing profile curve")
        pts = []
        for ref in graph.attr(curve, "Points") or ():
            inst = graph.deref(ref)
            if inst is not None:
                pts.append(_as_floats(graph.attr(inst, "Coordinates") or (), 2))
        poly = np.array(pts, dtype=float)
        if len(poly) >= 2 and np.linalg.norm(poly[0] - poly[-1]) < 1e-9:
            poly = poly[:-1]
        if len(poly) < 3:
            raise DegenerateInput("profile polyline has fewer than 3 points")
    elif cls == "IFCRECTANGLEPROFILEDEF":
        xd = float(graph.attr(profile_inst, "XDim") or 0.0) / 2.0
        yd = float(graph.attr(profile_inst, "YDim") or 0.0) / 2.0
        if xd <= 0 or yd <= 0:
            raise DegenerateInput("rectangle profile with non-positive dims")
        poly = np.array([(-xd, -yd), (xd, -yd), (xd, yd), (-xd, yd)])
    elif cls == "IFCCIRCLEPROFILEDEF":
        r = float(graph.attr(profile_inst, "Radius") or 0.0)
        if r <= 0:
            raise DegenerateInput("circle profile with non-positive radius")
        n = CIRCLE_SEGMENTS
        step = 2.0 * math.pi / n
        # equal-area radius: keeps the polygon area at pi*r^2
        r_eq = r * math.sqrt(step / math.sin(step))
        ang = np.arange(n) * step
        poly = np.column_stack((r_eq * np.cos(ang), r_eq * np.sin(ang)))
    else:
        raise UnsupportedRepresentation(cls)

    if polygon_area_2d(poly) < 0:
        poly = poly[::-1]
    pos = graph.deref(graph.attr(profile_inst, "Position"))
    if pos is not None and pos.ifc_class == "IFCAXIS2PLACEMENT2D":
        mat = axis2placement2d_matrix(graph, pos)
        poly = poly @ mat[:2, :2].T + mat[:2, 2]
    return poly


# ---------------------------------------------------------------------------
# representation items
# ---------------------------------------------------------------------------

class _MeshBuilder:
    def __init__(self):
        self.vertices = []
        self.triangles = []
        self.approximate = False

    def add(self, verts, tris):
        base = len(self.vertices)
        self.vertices.extend(verts)
        self.triangles.extend((a + base, b + base, c + base)
                              for a, b, c in tris)


def _tess_extruded(graph, item, matrix, out):
    profile = graph.deref(graph.attr(item, "SweptArea"))
    if profile is None:
        raise UnsupportedRepresentation("missing swept area")
    poly = _profile_polygon(graph, profile)
    local = np.eye(4)
    pos = graph.deref(graph.attr(item, "Position"))
    if pos is not None and pos.ifc_class == "IFCAXIS2PLACEMENT3D":
        local = axis2placement3d_matrix(graph, pos)
    direction = _direction3(graph, graph.attr(item, "ExtrudedDirection"),
                            (0.0, 0.0, 1.0))
    depth = float(graph.attr(item, "Depth") or 0.0)
    if depth <= 0:
        raise DegenerateInput("extrusion with non-positive depth")
    full = matrix @ local
    n = len(poly)
    base3 = np.column_stack((poly, np.zeros(n)))
    top3 = base3 + direction * depth
    verts = apply_matrix(full, np.vstack((base3, top3)))
    tris = []
    cap = triangulate_polygon(poly)
    tris.extend((a, c, b) for a, b, c in cap)                  # bottom
    tris.extend((a + n, b + n, c + n) for a, b, c in cap)      # top
    for i in range(n):
        j = (i + 1) % n
        tris.append((i, j, j + n))
        tris.append((i, j + n, i + n))
    out.add(verts, tris)


def _loop_points(graph, loop_inst):
    pts = []
    for ref in graph.attr(loop_inst, "Polygon") or ():
        inst = graph.deref(ref)
        if inst is not None:
            pts.append(_as_floats(graph.attr(inst, "Coordinates") or (), 3))
    return np.array(pts, dtype=float) if pts else np.zeros((0, 3))


def _tess_faces(graph, face_refs, matrix, out):
    for fref in face_refs:
        face = graph.deref(fref)
        if face is None or face.ifc_class != "IFCFACE":
            continue
        outer = None
        inner = 0
        for bref in graph.attr(face, "Bounds") or ():
            bound = graph.deref(bref)
            if bound is None:
                continue
            if bound.ifc_class == "IFCFACEOUTERBOUND" or outer is None:
                outer = bound
            else:
                inner += 1
        if inner:
            logger.debug("face #%d inner bounds ignored", face.id)
        if outer is None:
            continue
        loop = graph.deref(graph.attr(outer, "Bound"))
        if loop is None or loop.ifc_class != "IFCPOLYLOOP":
            continue
        pts = _loop_points(graph, loop)
        if len(pts) < 3:
            continue
        tris = triangulate_face3d(pts)
        out.add(apply_matrix(matrix, pts), tris)


def _coord_list(graph, ref):
    inst = graph.deref(ref)
    if inst is None:
        return np.zeros((0, 3))
    rows = graph.attr(inst, "CoordList") or ()
    pts = [_as_floats(row, 3) for row in rows if isinstance(row, tuple)]
    return np.array(pts, dtype=float) if pts else np.zeros((0, 3))


def _tess_item(graph, item, matrix, out, depth=0):
    if depth > 16:
        raise UnsupportedRepresentation("representation nesting too deep")
    cls = item.ifc_class
    if cls == "IFCEXTRUDEDAREASOLID":
        _tess_extruded(graph, item, matrix, out)
    elif cls == "IFCFACETEDBREP":
        shell = graph.deref(graph.attr(item, "Outer"))
        if shell is not None:
            _tess_faces(graph, graph.attr(shell, "CfsFaces") or (), matrix, out)
    elif cls == "IFCSHELLBASEDSURFACEMODEL":
        for sref in graph.attr(item, "SbsmBoundary") or ():
            shell = graph.deref(sref)
            if shell is not None:
                _tess_faces(graph, graph.attr(shell, "CfsFaces") or (),
                            matrix, out)
    elif cls == "IFCPOLYGONALFACESET":
        coords = _coord_list(graph, graph.attr(item, "Coordinates"))
        for fref in graph.attr(item, "Faces") or ():
            face = graph.deref(fref)
            if face is None:
                continue
            idx = [int(i) - 1 for i in graph.attr(face, "CoordIndex") or ()
                   if isinstance(i, (int, float))]
            if len(idx) < 3 or min(idx) < 0 or max(idx) >= len(coords):
                continue
            pts = coords[idx]
            out.add(apply_matrix(matrix, pts), triangulate_face3d(pts))
    elif cls == "IFCTRIANGULATEDFACESET":
        coords = _coord_list(graph, graph.attr(item, "Coordinates"))
        verts = apply_matrix(matrix, coords)
        tris = []
        for row in graph.attr(item, "CoordIndex") or ():
            if isinstance(row, tuple) and len(row) == 3:
                a, b, c = (int(v) - 1 for v in row)
                if 0 <= a < len(coords) and 0 <= b < len(coords) \
                        and 0 <= c < len(coords):
                    tris.append((a, b, c))
        out.add(verts, tris)
    elif cls == "IFCMAPPEDITEM":
        source = graph.deref(graph.attr(item, "MappingSource"))
        if source is None:
            return
        origin = graph.deref(graph.attr(source, "MappingOrigin"))
        origin_mat = np.eye(4)
        if origin is not None and origin.ifc_class == "IFCAXIS2PLACEMENT3D":
            origin_mat = axis2placement3d_matrix(graph, origin)
        target = graph.deref(graph.attr(item, "MappingTarget"))
        target_mat = np.eye(4)
        if target is not None and target.ifc_class == \
                "IFCCARTESIANTRANSFORMATIONOPERATOR3D":
            ax1 = _direction3(graph, graph.attr(target, "Axis1"), (1, 0, 0))
            ax2 = _direction3(graph, graph.attr(target, "Axis2"), (0, 1, 0))
            ax3 = _direction3(graph, graph.attr(target, "Axis3"), (0, 0, 1))
            origin_pt = _point3(graph, graph.attr(target, "LocalOrigin"))
            scale = graph.attr(target, "Scale")
            s = float(scale) if isinstance(scale, (int, float)) else 1.0
            target_mat[:3, 0] = ax1 * s
            target_mat[:3, 1] = ax2 * s
            target_mat[:3, 2] = ax3 * s
            target_mat[:3, 3] = origin_pt
        mapped = graph.deref(graph.attr(source, "MappedRepresentation"))
        if mapped is None:
            return
        sub = matrix @ target_mat @ origin_mat
        for iref in graph.attr(mapped, "Items") or ():
            inner = graph.deref(iref)
            if inner is not None:
                _tess_item(graph, inner, sub, out, depth + 1)
    elif cls == "IFCBOOLEANCLIPPINGRESULT":
        first = graph.deref(graph.attr(item, "FirstOperand"))
        if first is None:
            raise UnsupportedRepresentation("clipping without first operand")
        out.approximate = True
        _tess_item(graph, first, matrix, out, depth + 1)
    else:
        raise UnsupportedRepresentation(cls)


def tessellate(graph, element, scale=None):
    """Triangle mesh of one product in the model frame, meters.

    Returns None when the product carries no shape representation.
    Raises UnsupportedRepresentation when it has one but no supported
    solid items.
    """
    from .step_parser import (
        product_placement_ref,
        product_representation_ref,
        _require_units,
    )

    if scale is None:
        scale = _require_units(graph)
    rep_ref = product_representation_ref(element)
    if rep_ref is None:
        return None
    shape = graph.deref(rep_ref)
    if shape is None:
        return None
    matrix = np.eye(4)
    pl_ref = product_placement_ref(element)
    if pl_ref is not None:
        matrix = placement_matrix(graph, pl_ref.id)

    reps = []
    if shape.ifc_class == "IFCPRODUCTDEFINITIONSHAPE":
        for rref in graph.attr(shape, "Representations") or ():
            rep = graph.deref(rref)
            if rep is not None and rep.ifc_class == "IFCSHAPEREPRESENTATION":
                reps.append(rep)
    elif shape.ifc_class == "IFCSHAPEREPRESENTATION":
        reps.append(shape)
    bodies = [r for r in reps
              if str(graph.attr(r, "RepresentationIdentifier") or "").upper()
              == "BODY"]
    solids = [r for r in (bodies or reps)
              if str(_rep_type(graph, r)).upper() in _SOLID_REP_TYPES]
    if not solids:
        kinds = {str(_rep_type(graph, r)) for r in reps} or {"none"}
        raise UnsupportedRepresentation(sorted(kinds)[0], element.id)

    out = _MeshBuilder()
    for rep in solids:
        for iref in graph.attr(rep, "Items") or ():
            item = graph.deref(iref)
            if item is not None:
                _tess_item(graph, item, matrix, out)
    if not out.triangles:
        raise UnsupportedRepresentation("empty representation", element.id)
    mesh = weld_mesh(np.array(out.vertices) * scale,
                     np.array(out.triangles, dtype=np.int32))
    mesh.approximate = out.approximate
    mesh.element_id = element.id
    return mesh


def _rep_type(graph, rep):
    return graph.attr(rep, "RepresentationType") or ""


# ---------------------------------------------------------------------------
# slicing
# ---------------------------------------------------------------------------

def _coplanar_boundary_segments(vertices, tris_coplanar):
    """Outline of a coplanar triangle patch = edges used exactly once."""
    counts = {}
    for a, b, c in tris_coplanar:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            counts[key] = counts.get(key, 0) + 1
    segs = []
    for (u, v), cnt in counts.items():
        if cnt == 1:
            segs.append((vertices[u][0], vertices[u][1],
                         vertices[v][0], vertices[v][1]))
    return segs


def _dedupe_segments(segments, tol=1e-9):
    seen = set()
    out = []
    for ax, ay, bx, by in segments:
        a = (round(ax / tol), round(ay / tol))
        b = (round(bx / tol), round(by / tol))
        key = (a, b) if a <= b else (b, a)
        if key in seen or a == b:
            continue
        seen.add(key)
        out.append((ax, ay, bx, by))
    return out


def _merge_collinear(segments, tol=1e-9):
    """Join chains of collinear segments into maximal segments."""
    if not segments:
        return []
    # endpoint adjacency on a snapped grid
    def key(x, y):
        return (round(x / PLANE_SNAP), round(y / PLANE_SNAP))

    segs = [list(s) for s in segments]
    changed = True
    while changed:
        changed = False
        incident = {}
        for idx in range(len(segs)):
            if segs[idx] is None:
                continue
            ax, ay, bx, by = segs[idx]
            incident.setdefault(key(ax, ay), []).append((idx, 0))
            incident.setdefault(key(bx, by), []).append((idx, 1))
        for pt, users in incident.items():
            if len(users) != 2:
                continue
            (i, end_i), (j, end_j) = users
            if i == j or segs[i] is None or segs[j] is None:
                continue
            ax, ay = (segs[i][0], segs[i][1]) if end_i == 1 else (segs[i][2], segs[i][3])
            mx, my = (segs[i][2], segs[i][3]) if end_i == 1 else (segs[i][0], segs[i][1])
            bx, by = (segs[j][2], segs[j][3]) if end_j == 0 else (segs[j][0], segs[j][1])
            ux, uy = mx - ax, my - ay
            vx, vy = bx - mx, by - my
            cross = ux * vy - uy * vx
            dot = ux * vx + uy * vy
            scale = max(abs(ux) + abs(uy), abs(vx) + abs(vy), 1e-30)
            if abs(cross) <= tol * scale and dot > 0:
                segs[i] = [ax, ay, bx, by]
                segs[j] = None
                changed = True
                break
    return [tuple(s) for s in segs if s is not None]


def slice_mesh(mesh, z, snap=PLANE_SNAP):
    """Horizontal cross-section outline segments of one mesh.

    Returns an (k, 4) array of [ax, ay, bx, by]. Coplanar patches
    contribute their boundary outlines; collinear chains are merged so
    an axis-aligned cube cut mid-height yields exactly four segments.
    """
    verts = np.ascontiguousarray(mesh.vertices, dtype=np.float64)
    tris = np.ascontiguousarray(mesh.triangles, dtype=np.int64)
    if len(verts) == 0 or len(tris) == 0:
        return np.zeros((0, 4))
    dz = verts[:, 2] - z
    on_plane = np.abs(dz) <= snap
    coplanar_mask = on_plane[tris].all(axis=1)

    segments = []
    crossing = _kernels.slice_crossing(verts, tris[~coplanar_mask], z, snap)
    segments.extend(map(tuple, crossing))
    if coplanar_mask.any():
        segments.extend(
            _coplanar_boundary_segments(verts, tris[coplanar_mask]))

    segments = [(ax, ay, bx, by) for ax, ay, bx, by in segments
                if math.hypot(bx - ax, by - ay) > MIN_SEGMENT]
    segments = _dedupe_segments(segments)
    segments = _merge_collinear(segments)
    if not segments:
        return np.zeros((0, 4))
    # canonical direction + ordering so downstream results do not depend
    # on kernel emission order (numba and numpy backends differ there)
    segments = [s if (s[0], s[1]) <= (s[2], s[3])
                else (s[2], s[3], s[0], s[1]) for s in segments]
    segments.sort()
    return np.array(segments, dtype=float)


def slice_meshes(meshes, z, snap=PLANE_SNAP):
    """Concatenated cross-section segments of several meshes."""
    parts = [slice_mesh(m, z, snap) for m in meshes]
    parts = [p for p in parts if len(p)]
    if not parts:
        return np.zeros((0, 4))
    return np.vstack(parts)


def model_bbox(meshes):
    mins, maxs = [], []
    for mesh in meshes:
        if len(mesh.vertices):
            lo, hi = mesh.bbox
            mins.append(lo)
            maxs.append(hi)
    if not mins:
        raise DegenerateInput("no geometry to bound")
    return np.min(mins, axis=0), np.max(maxs, axis=0)


def dump_obj(mesh, path):
    """Wavefront OBJ export for visual debugging."""
    with open(path, "w", encoding="ascii") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.6f} {v[1]:.6f} {v[2]:.6f}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")
