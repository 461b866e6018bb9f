"""WKT footprint export and JSON/CSV report serialization.

WKT is emitted at millimeter precision with CCW rings, either in model
coordinates or projected through the site georeference (true-north
rotation, then site-origin translation) so footprints drop onto a city
map. Report serialization is canonical: identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import NoGeoreference

logger = logging.getLogger(__name__)

FRAME_LOCAL = "model-local"
FRAME_PROJECTED = "site-projected"


@dataclass(slots=True)
class WktRecord:
    storey_name: str
    wkt: str
    frame: str
    base_elevation_m: float
    top_elevation_m: float


def _north_rotation(true_north):
    """2x2 matrix rotating the model so true north points along +Y."""
    if true_north is None:
        return np.eye(2)
    tx, ty = float(true_north[0]), float(true_north[1])
    norm = (tx * tx + ty * ty) ** 0.5
    if norm < 1e-12:
        return np.eye(2)
    tx, ty = tx / norm, ty / norm
    return np.array([[ty, -tx], [tx, ty]])


def _format_ring(ring, precision=3):
    closed = list(ring) + [ring[0]]
    return "(" + ", ".join(
        f"{x:.{precision}f} {y:.{precision}f}" for x, y in closed) + ")"


def polygon_wkt(rings_or_ring, precision=3):
    """POLYGON for one ring, MULTIPOLYGON for several (outer rings only)."""
    rings = rings_or_ring
    if len(rings) and np.ndim(rings[0]) == 1:
        rings = [rings_or_ring]
    if len(rings) == 1:
        return "POLYGON (" + _format_ring(rings[0], precision) + ")"
    parts = ", ".join("(" + _format_ring(r, precision) + ")" for r in rings)
    return "MULTIPOLYGON (" + parts + ")"


def to_wkt(footprints, georef=None, frame=FRAME_LOCAL, building_top=None):
    """WktRecord per non-empty storey of a FootprintSet."""
    if frame not in (FRAME_LOCAL, FRAME_PROJECTED):
        raise ValueError(f"unknown frame {frame!r}")
    offset = np.zeros(2)
    rotation = np.eye(2)
    if frame == FRAME_PROJECTED:
        if georef is None or georef.site_origin is None:
            raise NoGeoreference(
                "site-projected frame needs a georeference with a site origin")
        rotation = _north_rotation(georef.true_north)
        offset = np.asarray(georef.site_origin[:2], dtype=float)

    records = []
    n = len(footprints.storey_names)
    for i in range(n):
        polys = footprints.polygons[i]
        if not polys:
            continue
        rings = []
        for poly in polys:
            ring = np.asarray(poly.ring, dtype=float)
            rings.append(ring @ rotation.T + offset)
        if i + 1 < n:
            top = footprints.elevations[i + 1]
        elif building_top is not None:
            top = building_top
        else:
            top = footprints.elevations[i]
        records.append(WktRecord(
            storey_name=footprints.storey_names[i],
            wkt=polygon_wkt(rings),
            frame=frame,
            base_elevation_m=round(footprints.elevations[i], 3),
            top_elevation_m=round(float(top), 3),
        ))
    return records


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------

def report_serialize(report, fmt="json"):
    """Canonical bytes for a report dict: 'json' or 'csv'."""
    if fmt == "json":
        text = json.dumps(report, sort_keys=True, indent=2,
                          ensure_ascii=False)
        return (text + "\n").encode("utf-8")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["storey_name", "elevation_m", "polygon_count",
                         "overlap_pct"])
        for row in report.get("overlaps", []):
            writer.writerow(row)
        writer.writerow([])
        writer.writerow(["rule", "verdict"])
        for rule in report.get("rules", []):
            writer.writerow([rule["rule"], rule["verdict"]])
        writer.writerow(["overall", report.get("overall", "")])
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}")


def overlaps_csv(footprints):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["storey_name", "elevation_m", "polygon_count",
                     "overlap_pct"])
    for row in footprints.rows():
        writer.writerow(row)
    return buf.getvalue().encode("utf-8")


def wkt_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["storey", "frame", "wkt", "base_elevation_m",
                     "top_elevation_m"])
    for rec in records:
        writer.writerow([rec.storey_name, rec.frame, rec.wkt,
                         rec.base_elevation_m, rec.top_elevation_m])
    return buf.getvalue().encode("utf-8")


def write_outputs(out_dir, model_name, report=None, footprints=None,
                  wkt_records=None):
    """Write the standard artifact files; returns the written paths."""
    import os
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.splitext(os.path.basename(model_name))[0] or "model"
    written = []
    if report is not None:
        path = os.path.join(out_dir, f"{stem}_report.json")
        with open(path, "wb") as fh:
            fh.write(report_serialize(report, "json"))
        written.append(path)
    if footprints is not None:
        path = os.path.join(out_dir, f"{stem}_overlaps.csv")
        with open(path, "wb") as fh:
            fh.write(overlaps_csv(footprints))
        written.append(path)
    if wkt_records is not None:
        path = os.path.join(out_dir, f"{stem}_footprints.wkt.csv")
        with open(path, "wb") as fh:
            fh.write(wkt_csv(wkt_records))
        written.append(path)
    return written
