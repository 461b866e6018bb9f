"""IFC-based dimension checks for building-permit review.

Parses ISO 10303-21 IFC files, reconstructs per-storey footprint
polygons by section cut, sampling, clustering, and concave-hull
reconstruction, and evaluates parameterized urban-planning dimension
rules (building height, base height, top/base overlap, street
overhang), emitting JSON/CSV reports and WKT geometry.
"""

from ._kernels import backend, set_backend, warmup
from .checks import (
    OverhangLine,
    PartSegmentation,
    RegulationParams,
    check_base_height,
    check_max_height,
    check_overhang,
    check_top_overlap,
    count_parking_spaces,
    lint_model,
    overhang_distances,
    run_checks,
    segment_building_parts,
)
from .errors import BimcheckError
from .export import WktRecord, report_serialize, to_wkt, write_outputs
from .footprint import (
    FootprintParams,
    FootprintSet,
    Polygon2D,
    concave_hull,
    dbscan,
    overlap_percentage,
    overlap_table,
    sample_segments,
    storey_footprint,
)
from .geometry import Mesh, model_bbox, slice_mesh, slice_meshes, tessellate
from .step_parser import (
    IfcGraph,
    extract_georeference,
    extract_spatial_structure,
    parse_step,
    resolve_units,
)
from .storeys import FederatedModel, Storey, federate, max_height, repair_storeys

__version__ = "0.1.0"

__all__ = [
    "BimcheckError",
    "FederatedModel",
    "FootprintParams",
    "FootprintSet",
    "IfcGraph",
    "Mesh",
    "OverhangLine",
    "PartSegmentation",
    "Polygon2D",
    "RegulationParams",
    "Storey",
    "WktRecord",
    "backend",
    "check_base_height",
    "check_max_height",
    "check_overhang",
    "check_top_overlap",
    "concave_hull",
    "count_parking_spaces",
    "dbscan",
    "extract_georeference",
    "extract_spatial_structure",
    "federate",
    "lint_model",
    "max_height",
    "model_bbox",
    "overhang_distances",
    "overlap_percentage",
    "overlap_table",
    "parse_step",
    "repair_storeys",
    "report_serialize",
    "resolve_units",
    "run_checks",
    "sample_segments",
    "segment_building_parts",
    "set_backend",
    "slice_mesh",
    "slice_meshes",
    "storey_footprint",
    "tessellate",
    "to_wkt",
    "warmup",
    "write_outputs",
]
