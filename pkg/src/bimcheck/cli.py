"""Command-line interface.

Exit codes: 0 all checks pass, 2 at least one fail verdict, 3
needs-review verdicts only, 1 processing error, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .checks import (
    NEEDS_REVIEW,
    FAIL,
    PASS,
    RegulationParams,
    check_overhang,
    count_parking_spaces,
    lint_model,
    overhang_distances,
    run_checks,
    storey_summaries,
)
from .config import load_config, parse_line_flag
from .errors import BimcheckError
from .export import report_serialize, to_wkt, wkt_csv, write_outputs
from .footprint import FootprintParams, overlap_table
from .step_parser import parse_step
from .storeys import federate, repair_storeys

logger = logging.getLogger(__name__)

_VERDICT_EXIT = {PASS: 0, FAIL: 2, NEEDS_REVIEW: 3}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(64)


def _build_parser():
    parser = _Parser(prog="bimcheck",
                     description="IFC building-permit dimension checks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, models=True):
        if models:
            p.add_argument("--model", action="append", required=True,
                           metavar="FILE",
                           help="IFC file; repeat to federate several files")
        p.add_argument("--config", metavar="FILE",
                       help="YAML parameter file")
        p.add_argument("--out-dir", default=None,
                       help="directory for artifact files")
        p.add_argument("--format", choices=("json", "text"), default="json",
                       help="stdout format")
        p.add_argument("--ground", default=None,
                       help="ground storey name or index (default: nearest 0)")
        p.add_argument("--no-repair", action="store_true",
                       help="skip storey-grouping repair")

    def footprint_flags(p):
        p.add_argument("--reference-storey", default=None,
                       help="reference storey name or index")
        p.add_argument("--cut-offset", type=float, default=None)
        p.add_argument("--eps", type=float, default=None,
                       help="DBSCAN neighborhood radius (m)")
        p.add_argument("--min-pts", type=int, default=None)
        p.add_argument("--hull-k", type=int, default=None)

    p = sub.add_parser("parse", help="parse files, report counts/warnings")
    common(p)

    p = sub.add_parser("storeys", help="storey table after repair")
    common(p)

    p = sub.add_parser("footprints", help="per-storey footprint polygons")
    common(p)
    footprint_flags(p)

    p = sub.add_parser("overlaps", help="overlap table vs reference storey")
    common(p)
    footprint_flags(p)

    p = sub.add_parser("overhang", help="protrusion past facade lines")
    common(p)
    footprint_flags(p)
    p.add_argument("--line", action="append", default=[],
                   metavar="x1,y1,x2,y2,side,label,limit",
                   help="facade line; repeatable")

    p = sub.add_parser("check", help="full regulation check suite")
    common(p)
    footprint_flags(p)
    p.add_argument("--line", action="append", default=[],
                   metavar="x1,y1,x2,y2,side,label,limit")

    p = sub.add_parser("lint", help="modelling-guideline findings")
    common(p)

    p = sub.add_parser("export-wkt", help="footprints as WKT records")
    common(p)
    footprint_flags(p)
    p.add_argument("--frame", choices=("model-local", "site-projected"),
                   default="model-local")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("BIMCHECK_PORT", "8000")))
    p.add_argument("--upload-cap-mb", type=float, default=None)
    return parser


def _load_params(args):
    fp, reg, options = (FootprintParams(), RegulationParams(),
                        {"ground_storey": None, "reference_storey": None})
    if args.config:
        fp, reg, options = load_config(args.config)
    for attr, field in (("cut_offset", "cut_offset"), ("eps", "dbscan_eps"),
                        ("min_pts", "dbscan_min_pts"), ("hull_k", "hull_k")):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(fp, field, value)
    fp = FootprintParams(**{k: getattr(fp, k) for k in (
        "cut_offset", "sample_spacing", "dbscan_eps", "dbscan_min_pts",
        "hull_k")})
    for text in getattr(args, "line", []) or []:
        try:
            reg.overhang_limits.append(parse_line_flag(text))
        except ValueError as exc:
            raise SystemExit(_usage_error(str(exc)))
    if getattr(args, "ground", None) is not None:
        options["ground_storey"] = args.ground
    if getattr(args, "reference_storey", None) is not None:
        options["reference_storey"] = args.reference_storey
    return fp, reg, options


def _usage_error(message):
    sys.stderr.write(f"error: {message}\n")
    return 64


def _load_model(args, options):
    graphs = []
    for path in args.model:
        with open(path, "rb") as fh:
            data = fh.read()
        graphs.append(parse_step(data, source_name=os.path.basename(path)))
    model = federate(graphs, ground=options.get("ground_storey"))
    if not args.no_repair:
        repair_storeys(model)
    return model


def _emit(args, payload):
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        _print_text(payload)


def _print_text(payload, indent=0):
    pad = "  " * indent
    if isinstance(payload, dict):
        for key in payload:
            value = payload[key]
            if isinstance(value, (dict, list)):
                print(f"{pad}{key}:")
                _print_text(value, indent + 1)
            else:
                print(f"{pad}{key}: {value}")
    elif isinstance(payload, list):
        for value in payload:
            if isinstance(value, (dict, list)):
                _print_text(value, indent)
                print()
            else:
                print(f"{pad}{value}")
    else:
        print(f"{pad}{payload}")


def main(argv=None):
    logging.basicConfig(level=os.environ.get("BIMCHECK_LOG", "WARNING"))
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code or 0

    if args.command == "serve":
        return _cmd_serve(args)

    try:
        fp, reg, options = _load_params(args)
    except SystemExit as exc:
        return exc.code
    except (ValueError, OSError) as exc:
        return _usage_error(str(exc))

    try:
        if args.command == "parse":
            return _cmd_parse(args)
        model = _load_model(args, options)
        if args.command == "storeys":
            _emit(args, {"model": model.name,
                         "ground_storey":
                             model.storeys[model.ground_storey].name,
                         "storeys": storey_summaries(model),
                         "unassigned": model.unassigned_notes})
            return 0
        if args.command == "lint":
            parking = count_parking_spaces(model.graphs, reg.bike_keywords)
            _emit(args, {"model": model.name, "parking": parking,
                         "lint": lint_model(model, parking)})
            return 0
        if args.command == "footprints":
            return _cmd_footprints(args, model, fp, options)
        if args.command == "overlaps":
            return _cmd_overlaps(args, model, fp, options)
        if args.command == "overhang":
            return _cmd_overhang(args, model, reg)
        if args.command == "check":
            return _cmd_check(args, model, fp, reg, options)
        if args.command == "export-wkt":
            return _cmd_export_wkt(args, model, fp, options)
        raise AssertionError(f"unhandled command {args.command}")
    except BimcheckError as exc:
        sys.stderr.write(f"error [{exc.code}]: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


def _cmd_parse(args):
    out = []
    for path in args.model:
        with open(path, "rb") as fh:
            data = fh.read()
        graph = parse_step(data, source_name=os.path.basename(path))
        out.append({
            "file": os.path.basename(path),
            "schema": graph.schema_id,
            "instances": len(graph.instances),
            "warnings": graph.warnings,
        })
    print(json.dumps(out, sort_keys=True, indent=2))
    return 0


def _cmd_footprints(args, model, fp, options):
    table = overlap_table(model, fp, options.get("reference_storey"))
    payload = {
        "model": model.name,
        "params": fp.to_dict(),
        "storeys": [
            {"name": table.storey_names[i],
             "elevation_m": round(table.elevations[i], 3),
             "polygons": [p.to_coords() for p in table.polygons[i]]}
            for i in range(len(table.storey_names))
        ],
    }
    _emit(args, payload)
    return 0


def _cmd_overlaps(args, model, fp, options):
    table = overlap_table(model, fp, options.get("reference_storey"))
    if args.out_dir:
        write_outputs(args.out_dir, model.name, footprints=table)
    _emit(args, {
        "model": model.name,
        "reference_storey": table.storey_names[table.reference],
        "rows": [list(r) for r in table.rows()],
    })
    return 0


def _cmd_overhang(args, model, reg):
    if not reg.overhang_limits:
        return _usage_error("overhang needs at least one --line "
                            "(or overhang_lines in the config)")
    distances = overhang_distances(model, reg.overhang_limits)
    entry = check_overhang(distances, reg.overhang_limits)
    _emit(args, entry)
    return _VERDICT_EXIT[entry["verdict"]]


def _cmd_check(args, model, fp, reg, options):
    report = run_checks(model, reg, fp,
                        reference_storey=options.get("reference_storey"))
    if args.out_dir:
        table = None
        try:
            table = overlap_table(model, fp, options.get("reference_storey"))
        except BimcheckError:
            pass
        write_outputs(args.out_dir, model.name, report=report,
                      footprints=table)
    if args.format == "json":
        sys.stdout.write(report_serialize(report, "json").decode("utf-8"))
    else:
        for rule in report["rules"]:
            print(f"{rule['rule']}: {rule['verdict']}")
        print(f"overall: {report['overall']}")
    return _VERDICT_EXIT[report["overall"]]


def _cmd_export_wkt(args, model, fp, options):
    table = overlap_table(model, fp, options.get("reference_storey"))
    top = None
    if model.meshes:
        top = max(float(m.vertices[:, 2].max())
                  for m in model.meshes.values() if len(m.vertices))
    records = to_wkt(table, model.georef, args.frame, building_top=top)
    if args.out_dir:
        write_outputs(args.out_dir, model.name, wkt_records=records)
    else:
        sys.stdout.write(wkt_csv(records).decode("utf-8"))
    return 0


def _cmd_serve(args):
    import uvicorn

    from .service import create_app

    cap = args.upload_cap_mb
    if cap is None:
        cap = float(os.environ.get("BIMCHECK_UPLOAD_CAP_MB", "256"))
    app = create_app(upload_cap_bytes=int(cap * 1024 * 1024))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
