import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bimcheck.errors import (
    DanglingReference,
    MissingHeader,
    NoLengthUnit,
    StepSyntaxError,
)
from bimcheck.step_parser import (
    DERIVED,
    EntityRef,
    EnumToken,
    TypedValue,
    decode_step_string,
    element_property,
    encode_step_string,
    extract_georeference,
    extract_spatial_structure,
    parse_step,
    property_sets,
    resolve_units,
    serialize_graph,
)

import ifcbuild
from oracles import count_records, record_ids


def wrap(*records, schema="IFC2X3"):
    """Minimal file around hand-written data records."""
    return (
        "ISO-10303-21;\nHEADER;\n"
        "FILE_DESCRIPTION((''),'2;1');\n"
        "FILE_NAME('t','',(''),(''),'','','');\n"
        f"FILE_SCHEMA(('{schema}'));\nENDSEC;\nDATA;\n"
        + "\n".join(records)
        + "\nENDSEC;\nEND-ISO-10303-21;\n"
    )


# ---------------------------------------------------------------------------
# scanning / record structure
# ---------------------------------------------------------------------------

def test_instance_count_matches_line_scan():
    text = ifcbuild.stepped_tower().text()
    graph = parse_step(text)
    assert len(graph.instances) == count_records(text)
    assert sorted(graph.instances) == sorted(record_ids(text))


def test_schema_capture():
    assert parse_step(wrap()).schema_id == "IFC2X3"
    assert parse_step(wrap(schema="IFC4")).schema_id == "IFC4"


def test_banner_required():
    with pytest.raises(MissingHeader):
        parse_step("HEADER;\nENDSEC;\n")


def test_value_kinds():
    graph = parse_step(wrap(
        "#1=IFCTHING($,*,.FOO.,#2,IFCLABEL('x'),(1,2.5,-3.E-1),'a''b');",
        "#2=IFCOTHER();",
    ))
    attrs = graph.instances[1].attrs
    assert attrs[0] is None
    assert attrs[1] is DERIVED
    assert attrs[2] == EnumToken("FOO")
    assert attrs[3] == EntityRef(2)
    assert attrs[4] == TypedValue("IFCLABEL", "x")
    assert attrs[5] == (1, 2.5, -0.3)
    assert isinstance(attrs[5][0], int) and isinstance(attrs[5][1], float)
    assert attrs[6] == "a'b"
    assert graph.instances[2].attrs == ()


def test_block_comments_and_whitespace():
    graph = parse_step(wrap(
        "#1 = IFCTHING( /* inline */ 1 , /* multi\nline */ 2);"))
    assert graph.instances[1].attrs == (1, 2)


def test_duplicate_id_rejected():
    with pytest.raises(StepSyntaxError):
        parse_step(wrap("#1=IFCA();", "#1=IFCB();"))


def test_syntax_error_carries_position():
    with pytest.raises(StepSyntaxError) as err:
        parse_step(wrap("#1=IFCTHING(1,);"))
    assert err.value.line == 8
    assert err.value.col >= 15
    assert err.value.code == "syntax_error"


def test_unterminated_string_is_syntax_error():
    with pytest.raises(StepSyntaxError):
        parse_step(wrap("#1=IFCTHING('oops);"))


def test_dangling_reference_lenient_warns_and_substitutes():
    graph = parse_step(wrap("#1=IFCTHING(#99,(#2,#98));", "#2=IFCOTHER();"))
    assert graph.instances[1].attrs[0] is None
    assert graph.instances[1].attrs[1] == (EntityRef(2), None)
    assert sum("dangling" in w for w in graph.warnings) == 2


def test_dangling_reference_strict_raises():
    with pytest.raises(DanglingReference) as err:
        parse_step(wrap("#1=IFCTHING(#99);"), strict=True)
    assert err.value.ref_id == 99
    assert err.value.record_id == 1


def test_bytes_input_accepted():
    data = ifcbuild.single_box_building().data()
    assert isinstance(data, bytes)
    graph = parse_step(data)
    assert graph.by_type("IfcBuildingStorey")


# ---------------------------------------------------------------------------
# string escapes
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("raw,expected", [
    ("plain", "plain"),
    ("a\\\\b", "a\\b"),
    ("\\S\\)", chr(0xA9)),                      # latin-1 upper half
    ("\\X\\C4", "Ä"),
    ("\\X2\\00E9\\X0\\", "é"),
    ("\\X2\\0041004200430044\\X0\\", "ABCD"),
    ("\\X4\\0001F600\\X0\\", "\U0001f600"),
])
def test_decode_escapes(raw, expected):
    assert decode_step_string(raw) == expected


def test_decode_bad_escape_warns_and_keeps_text():
    warnings = []
    out = decode_step_string("a\\Q\\b", warnings.append)
    assert "a" in out and "b" in out
    assert warnings


def test_quote_doubling_in_records():
    graph = parse_step(wrap("#1=IFCTHING('it''s');"))
    assert graph.instances[1].attrs[0] == "it's"


@given(st.text(max_size=60))
@settings(max_examples=200, deadline=None)
def test_encode_parse_round_trip(text):
    record = f"#1=IFCTHING('{encode_step_string(text)}');"
    graph = parse_step(wrap(record))
    assert graph.instances[1].attrs[0] == text


def test_unicode_survives_full_parse():
    name = "Große Bühne — café"
    record = f"#1=IFCTHING('{encode_step_string(name)}');"
    graph = parse_step(wrap(record))
    assert graph.instances[1].attrs[0] == name


# ---------------------------------------------------------------------------
# serialization round trip
# ---------------------------------------------------------------------------

def test_serialize_reparse_identical():
    fx = ifcbuild.parking_fixture()
    graph = parse_step(fx.text())
    text2 = serialize_graph(graph)
    graph2 = parse_step(text2)
    assert graph2.schema_id == graph.schema_id
    assert set(graph2.instances) == set(graph.instances)
    for key, inst in graph.instances.items():
        other = graph2.instances[key]
        assert other.ifc_class == inst.ifc_class
        assert other.attrs == inst.attrs


# ---------------------------------------------------------------------------
# units
# ---------------------------------------------------------------------------

def test_length_unit_metre():
    graph = parse_step(ifcbuild.single_box_building().text())
    assert resolve_units(graph) == 1.0


def test_length_unit_millimetre():
    graph = parse_step(ifcbuild.single_box_building(unit="mm").text())
    assert resolve_units(graph) == pytest.approx(1e-3)


def test_length_unit_conversion_based():
    graph = parse_step(wrap(
        "#1=IFCSIUNIT(*,.LENGTHUNIT.,$,.METRE.);",
        "#2=IFCMEASUREWITHUNIT(IFCRATIOMEASURE(0.3048),#1);",
        "#3=IFCCONVERSIONBASEDUNIT($,.LENGTHUNIT.,'FOOT',#2);",
        "#4=IFCUNITASSIGNMENT((#3));",
        "#5=IFCPROJECT('g',$,'P',$,$,$,$,$,#4);",
    ))
    assert resolve_units(graph) == pytest.approx(0.3048)


def test_no_length_unit():
    graph = parse_step(wrap(
        "#1=IFCUNITASSIGNMENT(());",
        "#2=IFCPROJECT('g',$,'P',$,$,$,$,$,#1);",
    ))
    with pytest.raises(NoLengthUnit):
        resolve_units(graph)


# ---------------------------------------------------------------------------
# spatial structure
# ---------------------------------------------------------------------------

def test_spatial_tree_storeys_in_declaration_order():
    fx = ifcbuild.stepped_tower()
    graph = parse_step(fx.text())
    tree = extract_spatial_structure(graph)
    assert tree.project is not None
    assert len(tree.storeys) == 10
    assert [s.name for s in tree.storeys] == [f"{i:02d}" for i in range(10)]
    assert [s.elevation for s in tree.storeys] == pytest.approx(
        [3.0 * i for i in range(10)])
    # every storey carries body + slab + 4 walls
    assert all(len(s.contained) == 6 for s in tree.storeys)


def test_storey_elevation_scaled_from_mm():
    graph = parse_step(ifcbuild.stepped_tower(unit="mm").text())
    tree = extract_spatial_structure(graph)
    assert [s.elevation for s in tree.storeys] == pytest.approx(
        [3.0 * i for i in range(10)])


def test_referenced_elements_flagged_multi_storey():
    fx = ifcbuild.single_box_building()
    s0 = fx._storeys[0]
    s1 = fx.storey("01", 3.0)
    shaft = fx.box(s1, 5.0, 5.0, 3.0, 1.0, 1.0, 3.0, cls="IFCCOLUMN",
                   name="shaft")
    fx.reference_into(s0, [shaft])
    tree = extract_spatial_structure(parse_step(fx.text()))
    by_name = {s.name: s for s in tree.storeys}
    assert shaft.i in by_name["01"].contained
    assert shaft.i in by_name["00"].referenced
    assert shaft.i in by_name["00"].multi_storey
    assert shaft.i in by_name["01"].multi_storey
    # element_ids never lists an element twice
    assert by_name["00"].element_ids.count(shaft.i) == 1


def test_orphan_storey_recovered_with_warning():
    fx = ifcbuild.single_box_building()
    fx.add("IFCBUILDINGSTOREY", fx.guid(), None, "orphan", None, None,
           None, None, None, ifcbuild.Enum("ELEMENT"), 12.0)
    graph = parse_step(fx.text())
    tree = extract_spatial_structure(graph)
    assert {s.name for s in tree.storeys} == {"00", "orphan"}
    assert any("not reachable" in w for w in graph.warnings)


# ---------------------------------------------------------------------------
# georeference
# ---------------------------------------------------------------------------

def test_georef_level_0_without_signals():
    graph = parse_step(ifcbuild.single_box_building().text())
    assert extract_georeference(graph).level == 0


def test_georef_level_20_lat_long():
    fx = ifcbuild.IfcFixture(lat=(51, 55, 21), lon=(4, 29, 12))
    georef = extract_georeference(parse_step(fx.text()))
    assert georef.level == 20
    assert georef.ref_latitude == pytest.approx(51 + 55 / 60 + 21 / 3600)
    assert georef.ref_longitude == pytest.approx(4 + 29 / 60 + 12 / 3600)


def test_georef_level_30_site_origin():
    fx = ifcbuild.IfcFixture(site_origin=(91400.0, 437500.0, 0.0))
    georef = extract_georeference(parse_step(fx.text()))
    assert georef.level == 30
    assert georef.site_origin == pytest.approx([91400.0, 437500.0, 0.0])


def test_georef_level_40_context_wcs():
    fx = ifcbuild.IfcFixture(wcs_origin=(85000.0, 446000.0, 0.0))
    assert extract_georeference(parse_step(fx.text())).level == 40


def test_georef_level_50_map_conversion():
    fx = ifcbuild.IfcFixture(map_conversion=True,
                             site_origin=(91400.0, 437500.0, 0.0))
    assert extract_georeference(parse_step(fx.text())).level == 50


def test_compound_angle_negative_and_microseconds():
    fx = ifcbuild.IfcFixture(lat=(-52, 30, 0), lon=(4, 0, 0, 500000))
    georef = extract_georeference(parse_step(fx.text()))
    assert georef.ref_latitude == pytest.approx(-52.5)
    assert georef.ref_longitude == pytest.approx(4.0 + 0.5 / 3600)


def test_true_north_normalized():
    fx = ifcbuild.IfcFixture(true_north=(3.0, 4.0))
    georef = extract_georeference(parse_step(fx.text()))
    assert georef.true_north == pytest.approx([0.6, 0.8])
    assert math.hypot(*georef.true_north) == pytest.approx(1.0)


def test_georef_site_origin_scaled_from_mm():
    fx = ifcbuild.IfcFixture(unit="mm", site_origin=(91.4, 437.5, 0.0))
    georef = extract_georeference(parse_step(fx.text()))
    assert georef.level == 30
    assert georef.site_origin == pytest.approx([91.4, 437.5, 0.0])


# ---------------------------------------------------------------------------
# property sets
# ---------------------------------------------------------------------------

def test_property_sets_and_lookup():
    fx = ifcbuild.single_box_building()
    proxy = fx.proxy_box(fx._storeys[0], 2.0, 2.0, 0.0, category="Parking")
    graph = parse_step(fx.text())
    psets = property_sets(graph, proxy.i)
    assert psets == {"Pset_ProductRequirements": {"Category": "Parking"}}
    assert element_property(graph, proxy.i, "pset_productrequirements",
                            "category") == "Parking"
    assert element_property(graph, proxy.i, "Pset_Nope", "Category") is None
    assert element_property(graph, proxy.i, "Pset_ProductRequirements",
                            "Nope") is None
