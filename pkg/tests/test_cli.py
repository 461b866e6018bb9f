import json
import os

import pytest

from bimcheck.checks import run_checks
from bimcheck.cli import main
from bimcheck.export import report_serialize
from bimcheck.step_parser import parse_step
from bimcheck.storeys import federate, repair_storeys

import ifcbuild

NORTH_LINE = "0,20,30,20,left,north,10"


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    root = tmp_path_factory.mktemp("models")
    out = {}
    for key, fx in (
        ("stepped", ifcbuild.stepped_tower()),
        ("box", ifcbuild.single_box_building()),
        ("overhang", ifcbuild.overhang_fixture()),
        ("peak", ifcbuild.peak_height_tower()),
        ("repair", ifcbuild.repair_fixture()),
        ("parking", ifcbuild.parking_fixture()),
    ):
        path = root / f"{key}.ifc"
        path.write_text(fx.text(), encoding="utf-8")
        out[key] = str(path)
    garbage = root / "garbage.ifc"
    garbage.write_text("ISO-10303-21;\nHEADER;\nENDSEC;\nDATA;\n#1=BROKEN(",
                       encoding="utf-8")
    out["garbage"] = str(garbage)
    nosite = ifcbuild.IfcFixture(name="nosite.ifc", with_site=False)
    s = nosite.storey("00", 0.0)
    nosite.box(s, 0.0, 0.0, 0.0, 20.0, 30.0, 3.0, cls="IFCSLAB", name="deck")
    path = root / "nosite.ifc"
    path.write_text(nosite.text(), encoding="utf-8")
    out["nosite"] = str(path)
    return out


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------

def test_usage_errors(capsys, files):
    assert run(capsys, [])[0] == 64                      # no command
    assert run(capsys, ["check"])[0] == 64               # missing --model
    assert run(capsys, ["nonsense"])[0] == 64
    code, _, err = run(capsys, ["check", "--model", files["stepped"],
                                "--line", "1,2,3"])
    assert code == 64
    assert "expects" in err


def test_parse_error_exits_1(capsys, files):
    code, _, err = run(capsys, ["parse", "--model", files["garbage"]])
    assert code == 1
    assert "error" in err


def test_missing_files(capsys, files):
    assert run(capsys, ["parse", "--model", "/no/such.ifc"])[0] == 1
    code, _, _ = run(capsys, ["check", "--model", files["stepped"],
                              "--config", "/no/such.yaml"])
    assert code == 64


def test_check_exit_code_matrix(capsys, files):
    assert run(capsys, ["check", "--model", files["stepped"]])[0] == 0
    assert run(capsys, ["check", "--model", files["peak"]])[0] == 3
    assert run(capsys, ["check", "--model", files["overhang"],
                        "--line", NORTH_LINE])[0] == 2


# ---------------------------------------------------------------------------
# inspection commands
# ---------------------------------------------------------------------------

def test_parse_command(capsys, files):
    code, out, _ = run(capsys, ["parse", "--model", files["box"]])
    assert code == 0
    payload = json.loads(out)
    assert payload[0]["file"] == "box.ifc"
    assert payload[0]["schema"] == "IFC2X3"
    assert payload[0]["instances"] > 50


def test_storeys_command(capsys, files):
    code, out, _ = run(capsys, ["storeys", "--model", files["stepped"]])
    assert code == 0
    payload = json.loads(out)
    assert payload["ground_storey"] == "00"
    assert [s["name"] for s in payload["storeys"]] \
        == [f"{i:02d}" for i in range(10)]


def test_storeys_text_format(capsys, files):
    code, out, _ = run(capsys, ["storeys", "--model", files["stepped"],
                                "--format", "text"])
    assert code == 0
    assert "ground_storey: 00" in out


def test_no_repair_keeps_phantom_storey(capsys, files):
    _, out, _ = run(capsys, ["storeys", "--model", files["repair"]])
    repaired = [s["name"] for s in json.loads(out)["storeys"]]
    assert "mezzanine" not in repaired
    _, out, _ = run(capsys, ["storeys", "--model", files["repair"],
                             "--no-repair"])
    raw = [s["name"] for s in json.loads(out)["storeys"]]
    assert "mezzanine" in raw


def test_footprints_command(capsys, files):
    code, out, _ = run(capsys, ["footprints", "--model", files["box"]])
    assert code == 0
    payload = json.loads(out)
    assert payload["params"]["sample_spacing_m"] == 0.2
    ring = payload["storeys"][0]["polygons"][0]
    assert len(ring) >= 4
    assert all(len(pt) == 2 for pt in ring)


def test_overlaps_command_and_artifact(capsys, files, tmp_path):
    code, out, _ = run(capsys, ["overlaps", "--model", files["stepped"],
                                "--out-dir", str(tmp_path)])
    assert code == 0
    payload = json.loads(out)
    assert payload["reference_storey"] == "00"
    assert payload["rows"][2] == ["02", 6.0, 1, 25.0]
    assert (tmp_path / "stepped_overlaps.csv").exists()


def test_overhang_command(capsys, files):
    code, out, _ = run(capsys, ["overhang", "--model", files["overhang"],
                                "--line", NORTH_LINE])
    assert code == 2
    entry = json.loads(out)
    assert entry["measured"]["north"]["max_overhang_m"] == 10.5
    code, _, _ = run(capsys, ["overhang", "--model", files["overhang"],
                              "--line", "0,20,30,20,left,north,11"])
    assert code == 0
    code, _, err = run(capsys, ["overhang", "--model", files["overhang"]])
    assert code == 64
    assert "--line" in err


def test_lint_command(capsys, files):
    code, out, _ = run(capsys, ["lint", "--model", files["parking"]])
    assert code == 0
    payload = json.loads(out)
    assert payload["parking"]["car_count"] == 57
    assert any(f["code"] == "L3" for f in payload["lint"])


# ---------------------------------------------------------------------------
# check output parity
# ---------------------------------------------------------------------------

def test_check_stdout_matches_artifact_and_library(capsys, files, tmp_path):
    code, out, _ = run(capsys, ["check", "--model", files["stepped"],
                                "--out-dir", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "stepped_report.json", "rb") as fh:
        written = fh.read()
    assert out.encode("utf-8") == written

    graph = parse_step(open(files["stepped"], "rb").read(),
                       source_name="stepped.ifc")
    model = repair_storeys(federate([graph]))
    assert written == report_serialize(run_checks(model), "json")


def test_check_text_format(capsys, files):
    code, out, _ = run(capsys, ["check", "--model", files["stepped"],
                                "--format", "text"])
    assert code == 0
    assert "max-height: pass" in out
    assert "overall: pass" in out


def test_check_config_file(capsys, files, tmp_path):
    cfg = tmp_path / "rules.yaml"
    cfg.write_text("regulation:\n  max_height: 20\n", encoding="utf-8")
    code, out, _ = run(capsys, ["check", "--model", files["stepped"],
                                "--config", str(cfg)])
    assert code == 2          # stepped tower is 30 m tall
    report = json.loads(out)
    assert report["rules"][0]["measured"]["limit_m"] == 20.0


# ---------------------------------------------------------------------------
# wkt export
# ---------------------------------------------------------------------------

def test_export_wkt_stdout(capsys, files):
    code, out, _ = run(capsys, ["export-wkt", "--model", files["box"]])
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("storey,frame,wkt")
    assert "POLYGON" in lines[1]


def test_export_wkt_artifact(capsys, files, tmp_path):
    code, _, _ = run(capsys, ["export-wkt", "--model", files["box"],
                              "--out-dir", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "box_footprints.wkt.csv").exists()


def test_export_wkt_projected_frames(capsys, files):
    # a zero site origin is still a declared georeference
    code, out, _ = run(capsys, ["export-wkt", "--model", files["box"],
                                "--frame", "site-projected"])
    assert code == 0
    assert "site-projected" in out
    code, _, err = run(capsys, ["export-wkt", "--model", files["nosite"],
                                "--frame", "site-projected"])
    assert code == 1
    assert "no_georeference" in err
