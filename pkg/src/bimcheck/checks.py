"""Executable dimension-regulation checks over footprints and heights.

Verdicts are pass / fail / needs-review; needs-review marks situations
the regulation resolves through derogation or manual judgement, never
auto-passed. All measured lengths are reported in meters at millimeter
precision, percentages at one decimal, so repeated runs serialize
byte-identically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCut, NoVertices, ZeroReference
from .footprint import FootprintParams, overlap_percentage, overlap_table
from .step_parser import element_property
from .storeys import max_height

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
NEEDS_REVIEW = "needs-review"

PROXY_RATIO_LIMIT = 0.2
BBOX_OVERLAP_TOL = 0.01      # m^3, lint L4
SPACE_DUP_RADIUS = 0.5       # m, lint L6
ENSEMBLE_WINDOW = (0.5, 0.6)  # m, plausible ceiling-ensemble thickness


@dataclass(slots=True)
class OverhangLine:
    label: str
    p1: tuple                 # (x, y) meters
    p2: tuple
    side: str = "left"        # street side relative to p1->p2 heading
    limit_m: float = 5.0

    def __post_init__(self):
        if tuple(self.p1) == tuple(self.p2):
            raise ValueError("overhang line endpoints must be distinct")
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        if self.limit_m <= 0:
            raise ValueError("overhang limit must be > 0")

    def to_dict(self):
        return {
            "label": self.label,
            "p1": [round(float(v), 3) for v in self.p1],
            "p2": [round(float(v), 3) for v in self.p2],
            "side": self.side,
            "limit_m": round(float(self.limit_m), 3),
        }


@dataclass(slots=True)
class RegulationParams:
    max_height_m: float = 100.0
    derogation_margin_m: float = 5.0
    base_max_height_m: float = 17.0
    top_to_base_max_ratio: float = 0.5
    ceiling_ensemble_offset_m: float = 0.55
    part_split_threshold_pct: float = 5.0
    overhang_limits: list = field(default_factory=list)  # OverhangLine
    bike_keywords: tuple = ("fietsenstalling",)

    def __post_init__(self):
        if min(self.max_height_m, self.base_max_height_m) <= 0:
            raise ValueError("height limits must be > 0")
        if not 0 < self.top_to_base_max_ratio <= 1:
            raise ValueError("top_to_base_max_ratio must be in (0, 1]")

    def to_dict(self):
        return {
            "max_height_m": round(float(self.max_height_m), 3),
            "derogation_margin_m": round(float(self.derogation_margin_m), 3),
            "base_max_height_m": round(float(self.base_max_height_m), 3),
            "top_to_base_max_ratio": round(float(self.top_to_base_max_ratio), 3),
            "ceiling_ensemble_offset_m":
                round(float(self.ceiling_ensemble_offset_m), 3),
            "part_split_threshold_pct":
                round(float(self.part_split_threshold_pct), 1),
            "overhang_limits": [l.to_dict() for l in self.overhang_limits],
            "bike_keywords": list(self.bike_keywords),
        }


@dataclass(slots=True)
class PartSegmentation:
    parts: list   # {start, end, area_m2, role}

    def base(self):
        return self.parts[0] if self.parts else None

    def tops(self):
        return self.parts[1:]

    def to_dict(self):
        return {"parts": [
            {"start": p["start"], "end": p["end"],
             "area_m2": round(p["area_m2"], 3), "role": p["role"]}
            for p in self.parts]}


def _rel_change_pct(a, b):
    denom = max(abs(a), abs(b))
    if denom <= 0:
        return 0.0
    return 100.0 * abs(a - b) / denom


def segment_building_parts(areas, threshold_pct=5.0):
    """Group consecutive storeys into parts by footprint-area change.

    A storey joins the running part when its area differs from the
    previous storey by less than the threshold, or from the running
    part mean by less than the threshold (so long staggered series
    collapse into one block). The lowest part is the base.
    """
    areas = [float(a) for a in areas]
    if not areas:
        return PartSegmentation([])
    parts = []
    start = 0
    acc = [areas[0]]
    for i in range(1, len(areas)):
        pairwise = _rel_change_pct(areas[i], areas[i - 1])
        to_mean = _rel_change_pct(areas[i], sum(acc) / len(acc))
        if pairwise < threshold_pct or to_mean < threshold_pct:
            acc.append(areas[i])
            continue
        parts.append({"start": start, "end": i - 1,
                      "area_m2": sum(acc) / len(acc), "role": "top"})
        start = i
        acc = [areas[i]]
    parts.append({"start": start, "end": len(areas) - 1,
                  "area_m2": sum(acc) / len(acc), "role": "top"})
    parts[0]["role"] = "base"
    return PartSegmentation(parts)


def _entry(rule, verdict, measured, evidence, notes):
    return {"rule": rule, "verdict": verdict, "measured": measured,
            "evidence": evidence, "notes": notes}


def check_max_height(model, params):
    """Global height against the regulation limit, with derogation band."""
    height = max_height(model)
    limit = params.max_height_m
    margin = params.derogation_margin_m
    measured = {"max_height_m": round(height, 3), "limit_m": round(limit, 3),
                "ground_storey": model.storeys[model.ground_storey].name}
    notes = []
    if height <= limit:
        verdict = PASS
    elif height <= limit + margin:
        verdict = NEEDS_REVIEW
        notes.append(
            f"exceeds limit by {height - limit:.3f} m, within the "
            f"{margin:.1f} m derogation margin; derogation applies only "
            "when the excess is mainly occupied by installations "
            "(manual review)")
    else:
        verdict = FAIL
        notes.append(f"exceeds limit by {height - limit:.3f} m, beyond "
                     f"the {margin:.1f} m derogation margin")
    return _entry("max-height", verdict, measured,
                  [model.storeys[model.ground_storey].name], notes)


def ceiling_ensemble_thickness(model, storey_index, search_window=1.0):
    """Depth of the ceiling build-up hanging below a storey's elevation.

    Measured as elevation minus the lowest bbox face of the storey's
    elements within `search_window` below it; None without candidates.
    """
    storey = model.storeys[storey_index]
    elev = storey.elevation
    lowest = None
    for key in sorted(storey.element_ids):
        mesh = model.meshes.get(key)
        if mesh is None or not len(mesh.vertices):
            continue
        zmin = float(mesh.vertices[:, 2].min())
        if elev - search_window <= zmin < elev:
            lowest = zmin if lowest is None else min(lowest, zmin)
    if lowest is None:
        return None
    return elev - lowest


def check_base_height(model, segmentation, params):
    """Lower-building-body height vs limit, via the top part's lowest
    storey elevation corrected by the ceiling-ensemble offset."""
    ground_elev = model.storeys[model.ground_storey].elevation
    tops = segmentation.tops()
    if not tops:
        return _entry(
            "base-height", PASS,
            {"limit_m": round(params.base_max_height_m, 3)}, [],
            ["single-part building: no top construction, rule "
             "vacuously satisfied"])
    lowest_top = tops[0]
    storey = model.storeys[lowest_top["start"]]
    raw = storey.elevation - ground_elev
    corrected = raw - params.ceiling_ensemble_offset_m
    measured = {
        "top_part_lowest_storey": storey.name,
        "storey_elevation_delta_m": round(raw, 3),
        "ceiling_ensemble_offset_m":
            round(params.ceiling_ensemble_offset_m, 3),
        "base_height_m": round(corrected, 3),
        "limit_m": round(params.base_max_height_m, 3),
    }
    notes = []
    thickness = ceiling_ensemble_thickness(model, lowest_top["start"])
    if thickness is not None:
        measured["measured_ensemble_thickness_m"] = round(thickness, 3)
        lo, hi = ENSEMBLE_WINDOW
        if lo <= thickness <= hi:
            notes.append(
                f"measured ceiling ensemble {thickness:.2f} m lies in the "
                f"expected {lo:.1f}-{hi:.1f} m window")
        else:
            notes.append(
                f"measured ceiling ensemble {thickness:.2f} m outside the "
                f"expected {lo:.1f}-{hi:.1f} m window; offset estimate "
                "may be off")
    verdict = PASS if corrected <= params.base_max_height_m else FAIL
    return _entry("base-height", verdict, measured, [storey.name], notes)


def check_top_overlap(model, footprints, segmentation, params):
    """Top-part footprints vs the base's top storey, 50%-type rule."""
    tops = segmentation.tops()
    if not tops:
        return _entry(
            "top-overlap", PASS,
            {"limit_pct": round(100 * params.top_to_base_max_ratio, 1)}, [],
            ["single-part building: no top construction"])
    base_ref = segmentation.base()["end"]
    reference_polys = footprints.polygons[base_ref]
    limit_pct = 100.0 * params.top_to_base_max_ratio
    rows = []
    violations = []
    for part in tops:
        for idx in range(part["start"], part["end"] + 1):
            name = footprints.storey_names[idx]
            polys = footprints.polygons[idx]
            if not polys:
                rows.append((name, 0.0))
                continue
            pct = overlap_percentage(polys, reference_polys)
            rows.append((name, pct))
            if pct > limit_pct:
                violations.append((name, pct))
    measured = {
        "reference_storey": footprints.storey_names[base_ref],
        "limit_pct": round(limit_pct, 1),
        "per_storey_pct": {name: round(pct, 1) for name, pct in rows},
    }
    notes = []
    if violations:
        worst = max(v[1] for v in violations)
        notes.append(f"{len(violations)} top storey(s) exceed "
                     f"{limit_pct:.1f}% (worst {worst:.1f}%)")
    verdict = FAIL if violations else PASS
    return _entry("top-overlap", verdict, measured,
                  [name for name, _ in violations], notes)


def overhang_distances(model, lines, target_storeys=None):
    """Per-line, per-storey maximum protrusion past a facade line.

    Only vertices on the declared street side count; a building fully
    inboard scores 0.
    """
    explicit = target_storeys is not None
    if target_storeys is None:
        target_storeys = list(range(len(model.storeys)))
    results = {}
    for line in lines:
        p1 = np.asarray(line.p1, dtype=float)
        p2 = np.asarray(line.p2, dtype=float)
        direction = p2 - p1
        length = float(np.linalg.norm(direction))
        per_storey = {}
        for idx in target_storeys:
            storey = model.storeys[idx]
            best = 0.0
            seen = 0
            for key in sorted(storey.element_ids):
                mesh = model.meshes.get(key)
                if mesh is None or not len(mesh.vertices):
                    continue
                seen += len(mesh.vertices)
                rel = mesh.vertices[:, :2] - p1
                signed = (direction[0] * rel[:, 1]
                          - direction[1] * rel[:, 0]) / length
                if line.side == "right":
                    signed = -signed
                outward = float(signed.max())
                if outward > best:
                    best = outward
            if seen == 0:
                if explicit:
                    raise NoVertices(
                        f"storey {storey.name!r} has no geometry")
                continue
            per_storey[storey.name] = best
        if not per_storey:
            raise NoVertices("no target storey has geometry")
        results[line.label] = per_storey
    return results


def check_overhang(distances, lines, cut_params=None):
    """Per-line maxima against their limits."""
    by_label = {line.label: line for line in lines}
    measured = {}
    evidence = []
    notes = []
    verdict = PASS
    for label in sorted(distances):
        line = by_label[label]
        per_storey = distances[label]
        worst_storey = max(sorted(per_storey), key=lambda s: per_storey[s])
        worst = per_storey[worst_storey]
        measured[label] = {
            "max_overhang_m": round(worst, 3),
            "limit_m": round(line.limit_m, 3),
            "worst_storey": worst_storey,
            "per_storey_m": {name: round(v, 3)
                             for name, v in sorted(per_storey.items())},
        }
        if worst > line.limit_m:
            verdict = FAIL
            evidence.append(f"{label}:{worst_storey}")
            notes.append(f"{label}: {worst:.3f} m exceeds "
                         f"{line.limit_m:.1f} m by {worst - line.limit_m:.3f} m")
    if cut_params is not None:
        notes.append(
            "balconies included at the current cut/filter parameters; "
            "exclude them by raising cut_offset or filtering classes")
    return _entry("overhang", verdict, measured, evidence, notes)


def count_parking_spaces(graphs, bike_keywords=("fietsenstalling",)):
    """Car parking proxies with Category=Parking, plus bike-room evidence.

    Bike capacity itself is not machine-readable; matching space names
    are returned as evidence only.
    """
    if not isinstance(graphs, (list, tuple)):
        graphs = [graphs]
    car_count = 0
    bike_evidence = []
    for graph in graphs:
        for inst in (graph.by_type("IFCBUILDINGELEMENTPROXY")
                     + graph.by_type("IFCSPACE")):
            category = element_property(
                graph, inst.id, "Pset_ProductRequirements", "Category")
            if isinstance(category, str) \
                    and category.strip().lower() == "parking":
                car_count += 1
        for inst in graph.by_type("IFCSPACE"):
            name = inst.attrs[2] if len(inst.attrs) > 2 else None
            if not isinstance(name, str):
                continue
            lowered = name.lower()
            if any(kw.lower() in lowered for kw in bike_keywords):
                bike_evidence.append(name)
    return {"car_count": car_count,
            "bike_space_evidence": sorted(bike_evidence)}


# ---------------------------------------------------------------------------
# model lint
# ---------------------------------------------------------------------------

def _finding(code, message, evidence=()):
    return {"code": code, "message": message, "evidence": sorted(evidence)}


def lint_model(model, parking=None):
    """Modelling-guideline findings (informational, never a verdict)."""
    findings = []

    centroids = {}
    for key, mesh in model.meshes.items():
        if len(mesh.vertices):
            centroids[key] = mesh.vertices.mean(axis=0)

    # L1: elements far outside the building footprint (site furniture etc.)
    if len(centroids) >= 3:
        pts = np.array([c[:2] for c in centroids.values()])
        median = np.median(pts, axis=0)
        spread = float(np.percentile(
            np.linalg.norm(pts - median, axis=1), 95))
        threshold = max(4 * spread, 50.0)
        far = [key for key, c in centroids.items()
               if float(np.linalg.norm(c[:2] - median)) > threshold]
        if far:
            findings.append(_finding(
                "L1",
                f"{len(far)} element(s) more than {threshold:.0f} m from "
                "the building; site objects may be mixed into the building",
                [f"{k[0]}:{k[1]}" for k in far]))

    # L2: storey grouping needed repair
    repaired = [s.name for s in model.storeys if s.repair_notes]
    if repaired or model.unassigned_notes:
        count = sum(len(s.repair_notes) for s in model.storeys) \
            + len(model.unassigned_notes)
        findings.append(_finding(
            "L2", f"{count} storey-grouping anomalies corrected or flagged",
            repaired))

    # L3: proxy usage ratio
    total = len(model.element_class)
    proxies = sum(1 for cls in model.element_class.values()
                  if cls == "IFCBUILDINGELEMENTPROXY")
    if total and proxies / total > PROXY_RATIO_LIMIT:
        findings.append(_finding(
            "L3",
            f"IfcBuildingElementProxy ratio {proxies / total:.2f} exceeds "
            f"{PROXY_RATIO_LIMIT:.2f}; semantic checks degrade on proxies"))

    # L4: pairwise bbox overlap within storeys (sampled)
    overlap_pairs = 0
    examples = []
    for storey in model.storeys:
        keys = [k for k in sorted(storey.element_ids) if k in model.meshes]
        keys = keys[:200]
        boxes = [(k, *model.meshes[k].bbox) for k in keys]
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                _, lo1, hi1 = boxes[i]
                _, lo2, hi2 = boxes[j]
                inter = np.minimum(hi1, hi2) - np.maximum(lo1, lo2)
                if (inter > 0).all() and float(np.prod(inter)) > BBOX_OVERLAP_TOL:
                    overlap_pairs += 1
                    if len(examples) < 10:
                        examples.append(
                            f"{boxes[i][0][0]}:{boxes[i][0][1]}~"
                            f"{boxes[j][0][0]}:{boxes[j][0][1]}")
    if overlap_pairs:
        findings.append(_finding(
            "L4",
            f"{overlap_pairs} element pair(s) with bounding-box overlap "
            f"above {BBOX_OVERLAP_TOL} m^3 (intersection proxy, sampled)",
            examples))

    # L5: georeferencing level
    level = model.georef.level if model.georef else 0
    if level < 30:
        findings.append(_finding(
            "L5", f"georeferencing level {level} below the recommended 30 "
            "(no usable site placement)"))

    # L6: duplicate or conflicting co-located spaces
    from .geometry import placement_matrix
    from .step_parser import product_placement_ref
    dup_evidence = []
    for gi, graph in enumerate(model.graphs):
        scale = graph.length_to_meters or 1.0
        spaces = []
        for inst in graph.by_type("IFCSPACE"):
            ref = product_placement_ref(inst)
            if ref is None:
                continue
            origin = placement_matrix(graph, ref.id)[:3, 3] * scale
            name = inst.attrs[2] if len(inst.attrs) > 2 else None
            spaces.append((inst.id, str(name), origin))
        for i in range(len(spaces)):
            for j in range(i + 1, len(spaces)):
                gap = float(np.linalg.norm(spaces[i][2] - spaces[j][2]))
                if gap < SPACE_DUP_RADIUS:
                    kind = ("duplicate" if spaces[i][1] == spaces[j][1]
                            else "conflicting labels")
                    dup_evidence.append(
                        f"{gi}:{spaces[i][0]}~{gi}:{spaces[j][0]} ({kind})")
    if dup_evidence:
        findings.append(_finding(
            "L6", f"{len(dup_evidence)} co-located space pair(s) with "
            "duplicate or conflicting labels", dup_evidence))

    # L8: parking machine-readability
    if parking is not None and parking["car_count"] == 0:
        findings.append(_finding(
            "L8", "no parking semantics found "
            "(Pset_ProductRequirements Category=Parking); parking "
            "compliance is not machine-checkable"))

    # L9: cross-file registration evidence
    if len(model.graphs) > 1:
        origins = [g.georef.site_origin for g in model.graphs
                   if g.georef is not None]
        have = [o for o in origins if o is not None]
        if len(have) < len(model.graphs):
            findings.append(_finding(
                "L9", "not every file carries a site placement; "
                "cross-file registration cannot be verified"))
        elif len(have) >= 2:
            gap = max(float(np.linalg.norm(a - b))
                      for i, a in enumerate(have) for b in have[i + 1:])
            if gap > 1e-3:
                findings.append(_finding(
                    "L9", f"site origins differ by {gap * 1000:.1f} mm "
                    "across files (within tolerance, but not identical)"))

    findings.sort(key=lambda f: (f["code"], f["message"]))
    return findings


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

def storey_summaries(model):
    return [
        {"name": s.name, "elevation_m": round(s.elevation, 3),
         "element_count": len(s.element_ids),
         "multi_span_count": len(s.multi_span),
         "repair_notes": s.repair_notes}
        for s in model.storeys
    ]


def run_checks(model, reg_params=None, fp_params=None, footprints=None,
               reference_storey=None):
    """Full rule suite over one federated model; returns the report dict."""
    reg_params = reg_params or RegulationParams()
    fp_params = fp_params or FootprintParams()

    report_notes = []
    if footprints is None:
        try:
            footprints = overlap_table(model, fp_params, reference_storey)
        except (ZeroReference, EmptyCut) as exc:
            footprints = None
            report_notes.append(f"footprints unavailable: {exc}")

    rules = [check_max_height(model, reg_params)]

    segmentation = PartSegmentation([])
    if footprints is not None:
        areas = [sum(p.area for p in polys) for polys in footprints.polygons]
        segmentation = segment_building_parts(
            areas, reg_params.part_split_threshold_pct)
        rules.append(check_base_height(model, segmentation, reg_params))
        rules.append(check_top_overlap(model, footprints, segmentation,
                                       reg_params))
    else:
        report_notes.append("base-height and top-overlap checks skipped: "
                            "no footprints")

    if reg_params.overhang_limits:
        distances = overhang_distances(model, reg_params.overhang_limits)
        rules.append(check_overhang(distances, reg_params.overhang_limits,
                                    cut_params=fp_params))
    else:
        report_notes.append("overhang check skipped: no facade lines "
                            "configured")

    parking = count_parking_spaces(model.graphs, reg_params.bike_keywords)
    lint = lint_model(model, parking)

    verdicts = [r["verdict"] for r in rules]
    overall = FAIL if FAIL in verdicts else (
        NEEDS_REVIEW if NEEDS_REVIEW in verdicts else PASS)

    report = {
        "model": model.name,
        "overall": overall,
        "rules": rules,
        "segmentation": segmentation.to_dict(),
        "overlaps": ([list(row) for row in footprints.rows()]
                     if footprints is not None else []),
        "reference_storey": (footprints.storey_names[footprints.reference]
                             if footprints is not None else None),
        "parking": parking,
        "lint": lint,
        "storeys": storey_summaries(model),
        "unassigned": model.unassigned_notes,
        "params": {"regulation": reg_params.to_dict(),
                   "footprint": fp_params.to_dict()},
        "georef": model.georef.to_dict() if model.georef else None,
        "notes": report_notes,
        "warnings": sorted(set(model.warnings)),
    }
    return report
