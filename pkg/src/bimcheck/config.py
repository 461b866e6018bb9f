"""YAML configuration for footprint and regulation parameters.

One file carries both parameter groups plus run options:

    footprint:
      cut_offset: 1.0
      sample_spacing: 0.2
      dbscan_eps: 1.0
      dbscan_min_pts: 4
      hull_k: 7
    regulation:
      max_height: 100
      derogation_margin: 5
      base_max_height: 17
      top_to_base_max_ratio: 0.5
      ceiling_ensemble_offset: 0.55
      part_split_threshold_pct: 5
      bike_keywords: [fietsenstalling]
      overhang_lines:
        - label: Hertekade side
          p1: [0.0, 30.0]
          p2: [30.0, 30.0]
          side: left
          limit: 10
    ground_storey: "00"
    reference_storey: ground

Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import logging

import yaml

from .checks import OverhangLine, RegulationParams
from .footprint import FootprintParams

logger = logging.getLogger(__name__)

_FOOTPRINT_KEYS = {"cut_offset", "sample_spacing", "dbscan_eps",
                   "dbscan_min_pts", "hull_k"}
# accept the plain key or the unit-suffixed variant used in reports
_REGULATION_ALIASES = {
    "max_height": "max_height_m",
    "max_height_m": "max_height_m",
    "derogation_margin": "derogation_margin_m",
    "derogation_margin_m": "derogation_margin_m",
    "base_max_height": "base_max_height_m",
    "base_max_height_m": "base_max_height_m",
    "top_to_base_max_ratio": "top_to_base_max_ratio",
    "ceiling_ensemble_offset": "ceiling_ensemble_offset_m",
    "ceiling_ensemble_offset_m": "ceiling_ensemble_offset_m",
    "part_split_threshold_pct": "part_split_threshold_pct",
    "bike_keywords": "bike_keywords",
}

DEFAULT_LINE_LIMITS = {"boompjes": 5.0, "hertekade": 10.0}


def _build_line(raw):
    if not isinstance(raw, dict):
        raise ValueError(f"overhang line must be a mapping, got {raw!r}")
    label = str(raw.get("label", "line"))
    limit = raw.get("limit", raw.get("limit_m"))
    if limit is None:
        for key, value in DEFAULT_LINE_LIMITS.items():
            if key in label.lower():
                limit = value
                break
    if limit is None:
        raise ValueError(f"overhang line {label!r} needs a limit")
    return OverhangLine(
        label=label,
        p1=tuple(float(v) for v in raw["p1"]),
        p2=tuple(float(v) for v in raw["p2"]),
        side=str(raw.get("side", "left")),
        limit_m=float(limit),
    )


def config_from_dict(data):
    """(FootprintParams, RegulationParams, options dict) from raw config."""
    data = data or {}
    if not isinstance(data, dict):
        raise ValueError("config root must be a mapping")
    unknown = set(data) - {"footprint", "regulation", "ground_storey",
                           "reference_storey"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")

    fp_raw = data.get("footprint") or {}
    bad = set(fp_raw) - _FOOTPRINT_KEYS
    if bad:
        raise ValueError(f"unknown footprint keys: {sorted(bad)}")
    fp = FootprintParams(**{k: fp_raw[k] for k in fp_raw})

    reg_raw = dict(data.get("regulation") or {})
    lines_raw = reg_raw.pop("overhang_lines", [])
    kwargs = {}
    for key, value in reg_raw.items():
        target = _REGULATION_ALIASES.get(key)
        if target is None:
            raise ValueError(f"unknown regulation key: {key}")
        kwargs[target] = tuple(value) if target == "bike_keywords" else value
    reg = RegulationParams(**kwargs)
    reg.overhang_limits = [_build_line(raw) for raw in lines_raw or []]

    options = {
        "ground_storey": data.get("ground_storey"),
        "reference_storey": data.get("reference_storey"),
    }
    return fp, reg, options


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    return config_from_dict(data)


def parse_line_flag(text):
    """OverhangLine from the CLI flag 'x1,y1,x2,y2,side,label,limit'."""
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 7:
        raise ValueError(
            "--line expects 'x1,y1,x2,y2,side,label,limit', got "
            f"{len(parts)} field(s)")
    x1, y1, x2, y2 = (float(v) for v in parts[:4])
    return OverhangLine(label=parts[5], p1=(x1, y1), p2=(x2, y2),
                        side=parts[4], limit_m=float(parts[6]))
