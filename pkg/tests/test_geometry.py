import math

import numpy as np
import pytest

from bimcheck.errors import CyclicPlacement, UnsupportedRepresentation
from bimcheck.geometry import (
    Mesh,
    model_bbox,
    placement_matrix,
    slice_mesh,
    slice_meshes,
    tessellate,
    triangulate_polygon,
    weld_mesh,
)
from bimcheck.step_parser import parse_step

import ifcbuild
from oracles import convex_hull, shoelace


def build_one(method, *args, **kwargs):
    """Fixture with one storey holding one element; returns its mesh."""
    fx = ifcbuild.IfcFixture()
    s = fx.storey("00", 0.0)
    element = getattr(fx, method)(s, *args, **kwargs)
    graph = parse_step(fx.text())
    return tessellate(graph, graph.inst(element.i))


def canon(segments):
    rows = []
    for ax, ay, bx, by in np.asarray(segments).reshape(-1, 4):
        a = (round(ax, 7), round(ay, 7))
        b = (round(bx, 7), round(by, 7))
        rows.append((a, b) if a <= b else (b, a))
    return sorted(rows)


def seg_lengths(segments):
    arr = np.asarray(segments).reshape(-1, 4)
    return np.hypot(arr[:, 2] - arr[:, 0], arr[:, 3] - arr[:, 1])


def unit_cube():
    verts = np.array([[x, y, z] for z in (0, 1) for y in (0, 1)
                      for x in (0, 1)], dtype=float)
    tris = np.array([
        [0, 2, 1], [1, 2, 3],          # bottom (z=0)
        [4, 5, 6], [5, 7, 6],          # top (z=1)
        [0, 1, 4], [1, 5, 4],          # y=0
        [2, 6, 3], [3, 6, 7],          # y=1
        [0, 4, 2], [2, 4, 6],          # x=0
        [1, 3, 5], [3, 7, 5],          # x=1
    ], dtype=np.int32)
    return Mesh(verts, tris)


# ---------------------------------------------------------------------------
# placements
# ---------------------------------------------------------------------------

def test_placement_chain_composes_translations():
    fx = ifcbuild.IfcFixture()
    p1 = fx.local_placement(None, 0.0, 0.0, 3.0)
    p2 = fx.local_placement(p1, 1.0, 0.0, 0.0)
    graph = parse_step(fx.text())
    mat = placement_matrix(graph, p2.i)
    assert mat[:3, 3] == pytest.approx([1.0, 0.0, 3.0])
    assert mat[:3, :3] == pytest.approx(np.eye(3))


def test_placement_default_axes_identity():
    fx = ifcbuild.IfcFixture()
    p = fx.local_placement(None)
    graph = parse_step(fx.text())
    assert placement_matrix(graph, p.i) == pytest.approx(np.eye(4))


def test_placement_rotated_frame_transforms_corners():
    # storey frame: x-axis along world +Y; local (1,2,0) -> world (-2,1,0)
    fx = ifcbuild.IfcFixture()
    refdir = fx.direction(0.0, 1.0, 0.0)
    frame = fx.add("IFCAXIS2PLACEMENT3D", fx.pt(10.0, 0.0, 0.0), None, refdir)
    p = fx.add("IFCLOCALPLACEMENT", None, frame)
    graph = parse_step(fx.text())
    mat = placement_matrix(graph, p.i)
    local = np.array([1.0, 2.0, 0.0, 1.0])
    assert (mat @ local)[:3] == pytest.approx([8.0, 1.0, 0.0])


def test_placement_cycle_detected():
    fx = ifcbuild.IfcFixture()
    ax1 = fx.axis2_3d()
    ax2 = fx.axis2_3d()
    a = fx.add("IFCLOCALPLACEMENT", ifcbuild.Ref(fx._n + 2), ax1)
    b = fx.add("IFCLOCALPLACEMENT", a, ax2)
    graph = parse_step(fx.text())
    with pytest.raises(CyclicPlacement):
        placement_matrix(graph, b.i)


# ---------------------------------------------------------------------------
# tessellation of every supported representation kind
# ---------------------------------------------------------------------------

REPRESENTATION_BUILDERS = [
    ("box", dict(cls="IFCWALL")),              # extruded rectangle profile
    ("box", dict(cls="IFCWALL", profile="poly")),
    ("brep_box", {}),
    ("mapped_box", {}),
    ("clipped_box", {}),
    ("polyset_box", {}),
    ("triset_box", {}),
]


@pytest.mark.parametrize("method,kwargs", REPRESENTATION_BUILDERS)
def test_box_representations_agree_on_bbox(method, kwargs):
    mesh = build_one(method, 2.0, 3.0, 0.0, 4.0, 5.0, 6.0, **kwargs)
    lo, hi = mesh.bbox
    assert lo == pytest.approx([2.0, 3.0, 0.0], abs=1e-9)
    assert hi == pytest.approx([6.0, 8.0, 6.0], abs=1e-9)


@pytest.mark.parametrize("method,kwargs", REPRESENTATION_BUILDERS)
def test_box_representations_slice_to_rectangle(method, kwargs):
    mesh = build_one(method, 2.0, 3.0, 0.0, 4.0, 5.0, 6.0, **kwargs)
    segments = slice_mesh(mesh, 3.0)
    assert seg_lengths(segments).sum() == pytest.approx(18.0, abs=1e-6)
    assert canon(segments) == [
        (((2.0, 3.0)), (2.0, 8.0)),
        ((2.0, 3.0), (6.0, 3.0)),
        ((2.0, 8.0), (6.0, 8.0)),
        ((6.0, 3.0), (6.0, 8.0)),
    ]


def test_clipping_result_marks_mesh_approximate():
    mesh = build_one("clipped_box", 0.0, 0.0, 0.0, 1.0, 1.0, 1.0)
    assert mesh.approximate
    exact = build_one("box", 0.0, 0.0, 0.0, 1.0, 1.0, 1.0)
    assert not exact.approximate


def test_shell_based_surface_model_slices():
    # open shell: 4 side faces only, still cuts to the rectangle outline
    mesh = build_one("shell_box", 0.0, 0.0, 0.0, 2.0, 3.0, 4.0)
    segments = slice_mesh(mesh, 2.0)
    assert seg_lengths(segments).sum() == pytest.approx(10.0, abs=1e-6)


def test_mapped_item_translation_shifts_mesh():
    base = build_one("box", 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, cls="IFCWALL")
    moved = build_one("mapped_box", 5.0, 0.0, 0.0, 1.0, 1.0, 1.0)
    lo_b, hi_b = base.bbox
    lo_m, hi_m = moved.bbox
    assert lo_m - lo_b == pytest.approx([5.0, 0.0, 0.0], abs=1e-9)
    assert hi_m - hi_b == pytest.approx([5.0, 0.0, 0.0], abs=1e-9)


def test_circle_profile_area_and_perimeter():
    fx = ifcbuild.IfcFixture()
    s = fx.storey("00", 0.0)
    col = fx.circle_column(s, 0.0, 0.0, 0.0, 1.0, 3.0)
    graph = parse_step(fx.text())
    mesh = tessellate(graph, graph.inst(col.i))
    segments = slice_mesh(mesh, 1.5)
    assert len(segments) == 32
    perimeter = seg_lengths(segments).sum()
    assert abs(perimeter - 2 * math.pi) / (2 * math.pi) < 0.005
    corners = np.asarray(segments).reshape(-1, 4)[:, :2]
    ring = convex_hull([tuple(p) for p in corners])
    area = abs(shoelace(ring))
    assert abs(area - math.pi) / math.pi < 0.005


def test_unit_scaling_millimetres():
    fx = ifcbuild.IfcFixture(unit="mm")
    s = fx.storey("00", 0.0)
    wall = fx.box(s, 0.0, 0.0, 0.0, 1.0, 2.0, 3.0)
    graph = parse_step(fx.text())
    mesh = tessellate(graph, graph.inst(wall.i))
    lo, hi = mesh.bbox
    assert hi - lo == pytest.approx([1.0, 2.0, 3.0])


def test_no_representation_returns_none():
    fx = ifcbuild.IfcFixture()
    s = fx.storey("00", 0.0)
    ghost = fx.no_geometry_element(s)
    graph = parse_step(fx.text())
    assert tessellate(graph, graph.inst(ghost.i)) is None


def test_unsupported_representation_kind_raises():
    fx = ifcbuild.IfcFixture()
    s = fx.storey("00", 0.0)
    placement = fx.local_placement(s["placement"])
    curve = fx.add("IFCPOLYLINE", (fx.pt(0, 0, 0), fx.pt(1, 0, 0)))
    rep = fx.add("IFCSHAPEREPRESENTATION", fx.context, "Axis", "Curve2D",
                 (curve,))
    shape = fx.add("IFCPRODUCTDEFINITIONSHAPE", None, None, (rep,))
    wall = fx._product("IFCWALL", "axis-only", placement, shape, (None,))
    graph = parse_step(fx.text())
    with pytest.raises(UnsupportedRepresentation) as err:
        tessellate(graph, graph.inst(wall.i))
    assert "Curve2D" in str(err.value)
    assert err.value.element_id == wall.i


# ---------------------------------------------------------------------------
# triangulation
# ---------------------------------------------------------------------------

def test_triangulate_l_shape_area_preserved():
    ring = np.array([[0, 0], [4, 0], [4, 1], [1, 1], [1, 3], [0, 3]],
                    dtype=float)
    tris = triangulate_polygon(ring)
    assert len(tris) == len(ring) - 2
    total = sum(abs(shoelace([ring[a], ring[b], ring[c]]))
                for a, b, c in tris)
    assert total == pytest.approx(abs(shoelace(ring)))


def test_triangulate_handles_collinear_vertices():
    ring = np.array([[0, 0], [1, 0], [2, 0], [2, 2], [0, 2]], dtype=float)
    tris = triangulate_polygon(ring)
    total = sum(abs(shoelace([ring[a], ring[b], ring[c]]))
                for a, b, c in tris)
    assert total == pytest.approx(4.0)


def test_weld_collapses_duplicate_vertices():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0],
                      [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    tris = np.array([[0, 1, 2], [3, 4, 5]], dtype=np.int32)
    mesh = weld_mesh(verts, tris)
    assert len(mesh.vertices) == 4
    assert len(mesh.triangles) == 2


# ---------------------------------------------------------------------------
# slicing
# ---------------------------------------------------------------------------

def test_unit_cube_slices_to_four_segments():
    segments = slice_mesh(unit_cube(), 0.5)
    assert len(segments) == 4
    assert seg_lengths(segments).sum() == pytest.approx(4.0, abs=1e-6)
    assert canon(segments) == [
        ((0.0, 0.0), (0.0, 1.0)),
        ((0.0, 0.0), (1.0, 0.0)),
        ((0.0, 1.0), (1.0, 1.0)),
        ((1.0, 0.0), (1.0, 1.0)),
    ]


def test_unit_cube_slice_above_is_empty():
    assert len(slice_mesh(unit_cube(), 2.0)) == 0


def test_unit_cube_coplanar_top_face():
    segments = slice_mesh(unit_cube(), 1.0)
    assert len(segments) == 4
    assert seg_lengths(segments).sum() == pytest.approx(4.0, abs=1e-6)


def brute_clip(verts, tris, z):
    """Per-triangle plane clipper used as an independent oracle."""
    segs = []
    for tri in tris:
        pts = [verts[i] for i in tri]
        d = [p[2] - z for p in pts]
        hits = []
        for i in range(3):
            a, b = pts[i], pts[(i + 1) % 3]
            da, db = d[i], d[(i + 1) % 3]
            if abs(da) < 1e-12:
                hits.append((a[0], a[1]))
            elif (da > 0) != (db > 0):
                t = da / (da - db)
                hits.append((a[0] + (b[0] - a[0]) * t,
                             a[1] + (b[1] - a[1]) * t))
        uniq = sorted(set((round(x, 9), round(y, 9)) for x, y in hits))
        if len(uniq) == 2:
            segs.append(uniq[0] + uniq[1])
    return segs


def test_tetrahedron_matches_brute_force_clipper():
    a = 1.0
    verts = np.array([
        [0, 0, 0], [a, 0, 0], [a / 2, a * math.sqrt(3) / 2, 0],
        [a / 2, a * math.sqrt(3) / 6, a * math.sqrt(2 / 3)],
    ])
    tris = np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]],
                    dtype=np.int32)
    z = a * math.sqrt(2 / 3) / 2
    segments = slice_mesh(Mesh(verts, tris), z)
    assert len(segments) == 3
    assert canon(segments) == pytest.approx(canon(brute_clip(verts, tris, z)))
    # mid-height cross-section of a tetrahedron is the half-scale triangle
    assert seg_lengths(segments).sum() == pytest.approx(1.5 * a, abs=1e-9)


def test_slice_transform_equivariance():
    mesh = unit_cube()
    base = slice_mesh(mesh, 0.5)
    rng = np.random.default_rng(23)
    for _ in range(100):
        theta = rng.uniform(0, 2 * math.pi)
        shift = rng.uniform(-50, 50, 3)
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])
        moved = Mesh(mesh.vertices @ rot.T + shift, mesh.triangles)
        got = np.asarray(slice_mesh(moved, 0.5 + shift[2])).reshape(-1, 4)
        expected = np.asarray(base).reshape(-1, 4)
        ea = expected[:, :2] @ rot[:2, :2].T + shift[:2]
        eb = expected[:, 2:] @ rot[:2, :2].T + shift[:2]
        assert canon(got) == pytest.approx(
            canon(np.hstack([ea, eb])), abs=1e-6)


def test_convex_cross_section_perimeter_within_half_percent():
    mesh = build_one("box", 0.0, 0.0, 0.0, 3.0, 4.0, 5.0, cls="IFCWALL")
    rng = np.random.default_rng(5)
    for _ in range(20):
        theta = rng.uniform(0, 2 * math.pi)
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])
        moved = Mesh(mesh.vertices @ rot.T, mesh.triangles)
        total = seg_lengths(slice_mesh(moved, 2.5)).sum()
        assert abs(total - 14.0) / 14.0 < 0.005


# ---------------------------------------------------------------------------
# model bbox
# ---------------------------------------------------------------------------

def test_model_bbox_unit_cube():
    lo, hi = model_bbox([unit_cube()])
    assert lo == pytest.approx([0, 0, 0])
    assert hi == pytest.approx([1, 1, 1])


def test_model_bbox_stacked():
    top = unit_cube()
    top = Mesh(top.vertices + np.array([0.0, 0.0, 5.0]), top.triangles)
    lo, hi = model_bbox([unit_cube(), top])
    assert hi[2] == pytest.approx(6.0)


def test_bbox_invariant_under_triangle_reordering():
    mesh = unit_cube()
    rng = np.random.default_rng(2)
    perm = rng.permutation(len(mesh.triangles))
    shuffled = Mesh(mesh.vertices.copy(), mesh.triangles[perm])
    lo1, hi1 = model_bbox([mesh])
    lo2, hi2 = model_bbox([shuffled])
    assert lo1 == pytest.approx(lo2)
    assert hi1 == pytest.approx(hi2)


def test_slice_meshes_concatenates():
    other = unit_cube()
    other = Mesh(other.vertices + np.array([10.0, 0.0, 0.0]),
                 other.triangles)
    segments = slice_meshes([unit_cube(), other], 0.5)
    assert len(segments) == 8
    assert seg_lengths(segments).sum() == pytest.approx(8.0, abs=1e-6)
