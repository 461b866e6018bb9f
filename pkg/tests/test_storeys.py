import pytest

from bimcheck.errors import EmptyModel, FrameMismatch, NoStoreys
from bimcheck.step_parser import parse_step
from bimcheck.storeys import federate, max_height, repair_storeys

import ifcbuild


def parse_fx(fx):
    return parse_step(fx.text(), source_name=fx.name)


def make_model(fx, **kwargs):
    return federate([parse_fx(fx)], **kwargs)


# ---------------------------------------------------------------------------
# federation
# ---------------------------------------------------------------------------

def test_single_file_storeys_sorted_and_ground_nearest_zero():
    model = make_model(ifcbuild.parking_fixture())
    assert [s.name for s in model.storeys] == ["-2", "-1", "00"]
    assert model.ground_storey == 2
    assert model.storeys[2].elevation == 0.0


def test_two_files_merge_storeys_by_name():
    arch = parse_fx(ifcbuild.architectural_file())
    struct = parse_fx(ifcbuild.structural_file())
    model = federate([arch, struct])
    assert [s.name for s in model.storeys] == ["00", "01"]
    graph_indices = {key[0] for s in model.storeys for key in s.element_ids}
    assert graph_indices == {0, 1}
    # 6 arch elements + 6 columns per storey
    assert all(len(s.element_ids) == 12 for s in model.storeys)


def test_merge_by_elevation_when_names_differ():
    arch = ifcbuild.architectural_file()
    other = ifcbuild.IfcFixture(name="x.ifc")
    s = other.storey("BEGANE GROND", 0.02)
    for i in range(5):
        other.box(s, 1.0 * i, 0.0, 0.0, 0.5, 0.5, 2.0, name=f"c{i}")
    model = federate([parse_fx(arch), parse_fx(other)])
    assert [s.name for s in model.storeys] == ["00", "01"]
    assert len(model.storeys[0].element_ids) == 11


def test_frame_mismatch_between_files():
    arch = parse_fx(ifcbuild.architectural_file())
    shifted = parse_fx(ifcbuild.structural_file(site_origin=(5.0, 0.0, 0.0)))
    with pytest.raises(FrameMismatch):
        federate([arch, shifted])


def test_matching_nonzero_origins_accepted():
    origin = (91400.0, 437500.0, 0.0)
    arch = parse_fx(ifcbuild.architectural_file(site_origin=origin))
    struct = parse_fx(ifcbuild.structural_file(site_origin=origin))
    model = federate([arch, struct])
    assert model.georef.level == 30


def test_ground_override_by_name():
    model = make_model(ifcbuild.stepped_tower(), ground="02")
    assert model.ground_storey == 2


def test_no_storeys():
    fx = ifcbuild.IfcFixture()
    with pytest.raises(NoStoreys):
        make_model(fx)


def test_empty_federation():
    with pytest.raises(EmptyModel):
        federate([])


def test_unsupported_representation_warns_and_skips():
    fx = ifcbuild.single_box_building()
    s = fx._storeys[0]
    placement = fx.local_placement(s["placement"])
    curve = fx.add("IFCPOLYLINE", (fx.pt(0, 0, 0), fx.pt(1, 0, 0)))
    rep = fx.add("IFCSHAPEREPRESENTATION", fx.context, "Axis", "Curve2D",
                 (curve,))
    shape = fx.add("IFCPRODUCTDEFINITIONSHAPE", None, None, (rep,))
    beam = fx._product("IFCBEAM", "curve-only", placement, shape, (None,))
    fx.contain(s, beam)
    model = make_model(fx)
    key = (0, beam.i)
    assert key not in model.meshes
    assert model.element_class[key] == "IFCBEAM"
    assert any("unsupported representation" in w for w in model.warnings)


def test_storey_meshes_exclude_furniture():
    fx = ifcbuild.single_box_building()
    s = fx._storeys[0]
    chair = fx.box(s, 5.0, 5.0, 0.0, 0.5, 0.5, 1.0,
                   cls="IFCFURNISHINGELEMENT", name="chair")
    model = make_model(fx)
    assert (0, chair.i) in model.meshes
    ids = {m.element_id for m in model.storey_meshes(0)}
    assert chair.i not in ids
    assert len(ids) == 6


def test_storey_index_selectors():
    model = make_model(ifcbuild.stepped_tower())
    assert model.storey_index(3) == 3
    assert model.storey_index("3") == 3
    assert model.storey_index("07") == 7
    assert model.storey_index("ground") == model.ground_storey
    with pytest.raises(KeyError):
        model.storey_index("99")
    with pytest.raises(KeyError):
        model.storey_index("attic")


def test_mm_file_elevations_and_meshes_in_meters():
    model = make_model(ifcbuild.stepped_tower(unit="mm"))
    assert [s.elevation for s in model.storeys] == pytest.approx(
        [3.0 * i for i in range(10)])
    mesh = model.storey_meshes(0)[0]
    assert mesh.vertices[:, 2].max() <= 3.0 + 1e-9


# ---------------------------------------------------------------------------
# repair
# ---------------------------------------------------------------------------

def test_repair_moves_misplaced_column():
    model = repair_storeys(make_model(ifcbuild.repair_fixture()))
    names = [s.name for s in model.storeys]
    by_name = {s.name: s for s in model.storeys}
    column_key = next(
        (key for key, cls in model.element_class.items()
         if cls == "IFCCOLUMN" and key in by_name["07"].element_ids),
        None)
    assert column_key is not None
    assert column_key not in by_name["05"].element_ids
    assert any(n["action"] == "evicted"
               for n in by_name["05"].repair_notes)
    assert any(n["action"] == "imported"
               for n in by_name["07"].repair_notes)
    assert "mezzanine" not in names


def test_repair_dissolves_small_storey_and_rehomes_elements():
    model = make_model(ifcbuild.repair_fixture())
    assert any(s.name == "mezzanine" for s in model.storeys)
    mezz = next(s for s in model.storeys if s.name == "mezzanine")
    mezz_keys = set(mezz.element_ids)
    assert len(mezz_keys) == 2
    repair_storeys(model)
    assert all(s.name != "mezzanine" for s in model.storeys)
    host = next(s for s in model.storeys if s.name == "01")
    assert mezz_keys <= host.element_ids
    assert any("dissolved" in w for w in model.warnings)


def test_repair_keeps_spanning_element_with_flag():
    model = repair_storeys(make_model(ifcbuild.repair_fixture()))
    by_name = {s.name: s for s in model.storeys}
    shaft = next(key for key, cls in model.element_class.items()
                 if cls == "IFCCOLUMN"
                 and key in by_name["02"].element_ids)
    assert shaft in by_name["02"].multi_span
    assert any(n["action"] == "kept" for n in by_name["02"].repair_notes
               if n["element_id"] == f"{shaft[0]}:{shaft[1]}")


def test_repair_no_notes_on_clean_model():
    model = repair_storeys(make_model(ifcbuild.stepped_tower()))
    assert model.repaired
    assert all(not s.repair_notes for s in model.storeys)
    assert not model.unassigned


def test_repair_geometry_untouched():
    model = make_model(ifcbuild.repair_fixture())
    before = max_height(model)
    repair_storeys(model)
    assert max_height(model) == pytest.approx(before)


# ---------------------------------------------------------------------------
# height
# ---------------------------------------------------------------------------

def test_max_height_single_storey_box():
    assert max_height(make_model(ifcbuild.single_box_building())) \
        == pytest.approx(3.0)


def test_max_height_measured_from_ground_storey():
    model = make_model(ifcbuild.parking_fixture())
    # highest vertex 3.0, ground storey at 0.0; basements don't subtract
    assert max_height(model) == pytest.approx(3.0)


def test_max_height_tall_tower():
    model = make_model(ifcbuild.tower_of_height(103.47))
    assert max_height(model) == pytest.approx(103.47, abs=1e-9)


def test_max_height_needs_geometry():
    fx = ifcbuild.IfcFixture()
    s = fx.storey("00", 0.0)
    fx.no_geometry_element(s)
    model = make_model(fx)
    with pytest.raises(EmptyModel):
        max_height(model)
