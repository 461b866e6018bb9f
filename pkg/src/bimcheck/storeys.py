"""Federation of disciplinary IFC files, storey grouping repair, height.

Elements are keyed by (graph index, entity id) so ids may repeat across
the architectural/structural/facade files of one building.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInput,
    EmptyModel,
    FrameMismatch,
    NoStoreys,
    UnsupportedRepresentation,
)
from .geometry import Mesh, tessellate
from .step_parser import (
    OPENING_OR_FURNITURE,
    SPATIAL_CLASSES,
    IfcGraph,
    extract_georeference,
    extract_spatial_structure,
    resolve_units,
)

logger = logging.getLogger(__name__)

MERGE_TOL = 0.05          # m, storey elevation merge across files
FRAME_TOL = 0.01          # m, max site-origin discrepancy between files
ELEV_BUFFER = 0.5         # m, repair eviction buffer
MIN_ELEMENTS = 5          # storeys below this head count are dissolved

ElementKey = tuple  # (graph index, entity id)


@dataclass(slots=True)
class Storey:
    name: str
    elevation: float                      # meters
    element_ids: set = field(default_factory=set)
    repair_notes: list = field(default_factory=list)
    multi_span: set = field(default_factory=set)

    def note(self, key, action, reason):
        self.repair_notes.append(
            {"element_id": f"{key[0]}:{key[1]}", "action": action,
             "reason": reason})


@dataclass(slots=True)
class FederatedModel:
    graphs: list
    storeys: list                          # sorted by elevation
    ground_storey: int
    meshes: dict = field(default_factory=dict)     # ElementKey -> Mesh
    element_class: dict = field(default_factory=dict)
    unassigned: set = field(default_factory=set)
    unassigned_notes: list = field(default_factory=list)
    georef: object = None
    name: str = "model"
    warnings: list = field(default_factory=list)
    repaired: bool = False

    def storey_index(self, selector):
        """Storey index from an int index or a name (case-insensitive)."""
        if isinstance(selector, int) or (isinstance(selector, str)
                                         and selector.lstrip("-").isdigit()):
            idx = int(selector)
            if not 0 <= idx < len(self.storeys):
                raise KeyError(f"storey index {idx} out of range")
            return idx
        wanted = str(selector).lower()
        for i, storey in enumerate(self.storeys):
            if storey.name.lower() == wanted:
                return i
        if wanted == "ground":
            return self.ground_storey
        raise KeyError(f"no storey named {selector!r}")

    def storey_meshes(self, index, exclude_classes=OPENING_OR_FURNITURE):
        storey = self.storeys[index]
        out = []
        for key in sorted(storey.element_ids):
            if self.element_class.get(key) in exclude_classes:
                continue
            mesh = self.meshes.get(key)
            if mesh is not None:
                out.append(mesh)
        return out

    def warn(self, message):
        self.warnings.append(message)
        logger.warning("%s: %s", self.name, message)


def federate(graphs, merge_tol=MERGE_TOL, ground=None, name=None):
    """Merge parsed graphs into one model with a unified storey list.

    Storeys sharing a name or sitting within `merge_tol` in elevation are
    merged. The ground storey defaults to the one nearest elevation 0.
    """
    if not graphs:
        raise EmptyModel("no graphs to federate")
    if isinstance(graphs, IfcGraph):
        graphs = [graphs]

    georefs = []
    for graph in graphs:
        resolve_units(graph)
        georefs.append(extract_georeference(graph))
    origins = [g.site_origin for g in georefs if g.site_origin is not None]
    for i in range(len(origins)):
        for j in range(i + 1, len(origins)):
            gap = float(np.linalg.norm(origins[i] - origins[j]))
            if gap > FRAME_TOL:
                raise FrameMismatch(
                    f"site origins differ by {gap:.3f} m (> {FRAME_TOL} m)")

    storeys: list[Storey] = []
    multi_flags: dict = {}
    for gi, graph in enumerate(graphs):
        tree = extract_spatial_structure(graph)
        for node in tree.storeys:
            target = None
            for storey in storeys:
                if storey.name == node.name \
                        or abs(storey.elevation - node.elevation) < merge_tol:
                    target = storey
                    break
            if target is None:
                target = Storey(node.name, node.elevation)
                storeys.append(target)
            for eid in node.element_ids:
                target.element_ids.add((gi, eid))
            for eid in node.multi_storey:
                multi_flags.setdefault((gi, eid), True)
    if not storeys:
        raise NoStoreys("no IfcBuildingStorey found in any file")

    storeys.sort(key=lambda s: (s.elevation, s.name))
    for key in multi_flags:
        for storey in storeys:
            if key in storey.element_ids:
                storey.multi_span.add(key)

    model = FederatedModel(
        graphs=list(graphs),
        storeys=storeys,
        ground_storey=0,
        georef=next((g for g in georefs if g.level > 0), georefs[0]),
        name=name or (graphs[0].source_name or "model"),
    )
    model.warnings.extend(w for g in graphs for w in g.warnings)

    for gi, graph in enumerate(graphs):
        scale = graph.length_to_meters
        for inst in graph.instances.values():
            if inst.ifc_class in SPATIAL_CLASSES:
                continue
            key = (gi, inst.id)
            if not any(key in s.element_ids for s in storeys):
                continue
            model.element_class[key] = inst.ifc_class
            try:
                mesh = tessellate(graph, inst, scale)
            except UnsupportedRepresentation as exc:
                model.warn(f"element #{inst.id} ({inst.ifc_class}): "
                           f"unsupported representation {exc.kind}")
                continue
            except DegenerateInput as exc:
                model.warn(f"element #{inst.id} ({inst.ifc_class}): {exc}")
                continue
            if mesh is not None and len(mesh.triangles):
                model.meshes[key] = mesh

    if ground is not None:
        model.ground_storey = model.storey_index(ground)
    else:
        model.ground_storey = int(np.argmin(
            [abs(s.elevation) for s in storeys]))
    return model


def _interval_index(elevations, z, eps=1e-9):
    """Index of the storey interval [elev_i, elev_{i+1}) containing z.

    Returns -1 below the lowest storey; the top interval is unbounded.
    """
    idx = -1
    for i, elev in enumerate(elevations):
        if z >= elev - eps:
            idx = i
        else:
            break
    return idx


def repair_storeys(model, elev_buffer=ELEV_BUFFER, min_elements=MIN_ELEMENTS,
                   span_policy="keep"):
    """Regroup elements whose geometry disagrees with the authored storey.

    (a) elements whose vertical centroid falls outside the buffered
    authored interval move to the interval that contains it; (b) storeys
    with fewer than `min_elements` elements dissolve; (c) elements
    spanning two or more storey intervals stay put, flagged multi-span.
    Geometry is untouched, so max_height is unaffected.
    """
    storeys = model.storeys
    if len(storeys) <= 1:
        model.repaired = True
        return model
    elevations = [s.elevation for s in storeys]

    def centroid_z(key):
        mesh = model.meshes.get(key)
        if mesh is None or not len(mesh.vertices):
            return None
        return float(mesh.vertices[:, 2].mean())

    def span_count(key):
        mesh = model.meshes.get(key)
        if mesh is None or not len(mesh.vertices):
            return 1
        zmin = float(mesh.vertices[:, 2].min())
        zmax = float(mesh.vertices[:, 2].max())
        lo = max(_interval_index(elevations, zmin + 1e-6), 0)
        hi = max(_interval_index(elevations, zmax - 1e-6), 0)
        return hi - lo + 1

    # (c) span flags first: spanning elements are exempt from eviction
    for storey in storeys:
        for key in sorted(storey.element_ids):
            if span_count(key) >= 2:
                storey.multi_span.add(key)
                if span_policy == "keep":
                    storey.note(key, "kept",
                                "spans multiple storey intervals")

    # (a) centroid-based eviction
    moves = []
    for si, storey in enumerate(storeys):
        low = storey.elevation - elev_buffer
        high = (elevations[si + 1] + elev_buffer
                if si + 1 < len(storeys) else float("inf"))
        for key in sorted(storey.element_ids):
            if key in storey.multi_span:
                continue
            cz = centroid_z(key)
            if cz is None or low <= cz <= high:
                continue
            moves.append((si, key, cz))
    for si, key, cz in moves:
        storey = storeys[si]
        target_idx = _interval_index(elevations, cz)
        storey.element_ids.discard(key)
        if target_idx < 0:
            model.unassigned.add(key)
            model.unassigned_notes.append(
                {"element_id": f"{key[0]}:{key[1]}", "action": "evicted",
                 "reason": f"centroid {cz:.2f} m below lowest storey"})
            storey.note(key, "evicted", "centroid below lowest storey")
            continue
        target = storeys[target_idx]
        storey.note(key, "evicted",
                    f"centroid {cz:.2f} m in {target.name!r} interval")
        target.element_ids.add(key)
        target.note(key, "imported",
                    f"centroid {cz:.2f} m, moved from {storey.name!r}")

    # (b) dissolve under-populated storeys
    keep = []
    for si, storey in enumerate(storeys):
        if len(storey.element_ids) >= min_elements:
            keep.append(storey)
            continue
        for key in sorted(storey.element_ids):
            cz = centroid_z(key)
            target_idx = _interval_index(elevations, cz) if cz is not None else -1
            placed = None
            if target_idx >= 0 and storeys[target_idx] is not storey \
                    and len(storeys[target_idx].element_ids) >= min_elements:
                placed = storeys[target_idx]
            else:
                # nearest surviving neighbor by elevation
                candidates = [s for s in storeys
                              if s is not storey
                              and len(s.element_ids) >= min_elements]
                if candidates:
                    placed = min(candidates,
                                 key=lambda s: abs(s.elevation - storey.elevation))
            if placed is None:
                model.unassigned.add(key)
                model.unassigned_notes.append(
                    {"element_id": f"{key[0]}:{key[1]}", "action": "evicted",
                     "reason": f"storey {storey.name!r} dissolved, no host"})
                continue
            placed.element_ids.add(key)
            placed.note(key, "imported",
                        f"storey {storey.name!r} dissolved "
                        f"({len(storey.element_ids)} < {min_elements})")
        model.warn(f"storey {storey.name!r} dissolved "
                   f"(fewer than {min_elements} elements)")
    if keep:
        ground_storey = model.storeys[model.ground_storey]
        model.storeys = keep
        if ground_storey in keep:
            model.ground_storey = keep.index(ground_storey)
        else:
            model.ground_storey = int(np.argmin(
                [abs(s.elevation) for s in keep]))
    model.repaired = True
    return model


def max_height(model):
    """Highest mesh vertex over all files minus ground storey elevation."""
    if not model.meshes:
        raise EmptyModel("no tessellated geometry in model")
    top = max(float(mesh.vertices[:, 2].max())
              for mesh in model.meshes.values() if len(mesh.vertices))
    return top - model.storeys[model.ground_storey].elevation
