"""HTTP service exposing the pipeline for the web UI and scripts.

Sessions are in-memory and short-lived (one permit review). Responses
for identical parameters are served from a per-session byte cache, so
repeated requests are byte-identical and fast. Computations that exceed
a small inline budget return 202 with a poll token instead of blocking.

Error mapping: 400 invalid parameters, 404 unknown session/job, 413
upload too large, 422 model defect (payload carries the module error
code).
"""

from __future__ import annotations

import asyncio
import concurrent.futures
import hashlib
import json
import logging
import os
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .checks import (
    check_overhang,
    overhang_distances,
    run_checks,
    storey_summaries,
)
from .config import _build_line, config_from_dict
from .errors import BimcheckError
from .export import report_serialize, to_wkt, wkt_csv
from .footprint import FootprintParams, overlap_table
from .step_parser import parse_step
from .storeys import federate, repair_storeys

logger = logging.getLogger(__name__)

DEFAULT_UPLOAD_CAP = 256 * 1024 * 1024
INLINE_BUDGET_S = 2.0


@dataclass(slots=True)
class Session:
    id: str
    model: object
    file_names: list
    fingerprint: str
    created: float = field(default_factory=time.time)
    cache: dict = field(default_factory=dict)      # key -> response bytes
    jobs: dict = field(default_factory=dict)       # job id -> Future


def _canonical(payload):
    return json.dumps(payload, sort_keys=True, indent=2,
                      ensure_ascii=False).encode("utf-8") + b"\n"


def _error(status, code, message, detail=None):
    return JSONResponse(status_code=status, content={
        "code": code, "message": message, "detail": detail})


def create_app(upload_cap_bytes=DEFAULT_UPLOAD_CAP):
    app = FastAPI(title="bimcheck", version="0.1.0")
    origins = os.environ.get("BIMCHECK_CORS_ORIGIN", "*")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[o.strip() for o in origins.split(",")],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, Session] = {}
    executor = concurrent.futures.ThreadPoolExecutor(max_workers=4)

    def _session(session_id):
        session = sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def _compute(session, key, fn):
        """Cached bytes inline, or a job id when over the inline budget."""
        if key in session.cache:
            return "done", session.cache[key]

        def run():
            payload = fn()
            session.cache[key] = payload
            return payload

        future = executor.submit(run)
        try:
            return "done", future.result(timeout=INLINE_BUDGET_S)
        except concurrent.futures.TimeoutError:
            job_id = uuid.uuid4().hex[:12]
            session.jobs[job_id] = future
            return "job", job_id

    def _respond(session, status, payload_or_job, session_id):
        if status == "done":
            return Response(content=payload_or_job,
                            media_type="application/json")
        return JSONResponse(status_code=202, content={
            "status": "accepted",
            "job": payload_or_job,
            "poll": f"/models/{session_id}/jobs/{payload_or_job}",
        })

    def _parse_body_params(body):
        body = body or {}
        if not isinstance(body, dict):
            raise ValueError("request body must be a JSON object")
        allowed = {"footprint", "regulation", "reference_storey",
                   "ground_storey"}
        unknown = set(body) - allowed
        if unknown:
            raise ValueError(f"unknown keys: {sorted(unknown)}")
        return config_from_dict(body)

    def _resolve_storey(model, selector):
        """Name-first storey lookup for request bodies.

        HTTP clients echo back names they got from our own responses, so
        a digit-like name ("12") must match the storey called "12", not
        be read as position twelve. Anything that is not a known name
        falls through to the positional/alias rules of storey_index.
        """
        if isinstance(selector, str):
            wanted = selector.lower()
            for i, storey in enumerate(model.storeys):
                if storey.name.lower() == wanted:
                    return i
        return model.storey_index(selector)

    def _exc_message(exc):
        """Error text without repr quoting (str(KeyError) adds quotes)."""
        if len(exc.args) == 1 and isinstance(exc.args[0], str):
            return exc.args[0]
        return str(exc)

    @app.post("/models")
    async def upload_models(request: Request, ground: str | None = None):
        content_type = request.headers.get("content-type", "")
        blobs = []
        if content_type.startswith("multipart/"):
            form = await request.form()
            for _, value in form.multi_items():
                if hasattr(value, "read"):
                    blobs.append((value.filename or "model.ifc",
                                  await value.read()))
        else:
            body = await request.body()
            if body:
                name = request.headers.get("x-filename", "model.ifc")
                blobs.append((name, body))
        if not blobs:
            return _error(400, "invalid-params", "no IFC payload uploaded")
        total = sum(len(b) for _, b in blobs)
        if total > upload_cap_bytes:
            return _error(413, "too-large",
                          f"upload {total} bytes exceeds cap "
                          f"{upload_cap_bytes}")

        def build():
            graphs = [parse_step(data, source_name=name)
                      for name, data in blobs]
            model = federate(graphs, ground=ground)
            repair_storeys(model)
            return model

        try:
            model = await asyncio.to_thread(build)
        except BimcheckError as exc:
            return _error(422, exc.code, str(exc))
        fingerprint = hashlib.sha256(
            b"".join(data for _, data in sorted(blobs))).hexdigest()
        session = Session(
            id=uuid.uuid4().hex,
            model=model,
            file_names=[name for name, _ in blobs],
            fingerprint=fingerprint,
        )
        sessions[session.id] = session
        return JSONResponse(status_code=201, content={
            "session_id": session.id,
            "model": model.name,
            "files": session.file_names,
            "fingerprint": fingerprint,
            "storey_count": len(model.storeys),
        })

    @app.get("/models/{session_id}/storeys")
    def get_storeys(session_id: str):
        try:
            session = _session(session_id)
        except KeyError:
            return _error(404, "not-found", f"unknown session {session_id}")
        model = session.model
        return Response(content=_canonical({
            "model": model.name,
            "ground_storey": model.storeys[model.ground_storey].name,
            "storeys": storey_summaries(model),
            "unassigned": model.unassigned_notes,
        }), media_type="application/json")

    @app.post("/models/{session_id}/footprints")
    async def post_footprints(session_id: str, request: Request):
        try:
            session = _session(session_id)
        except KeyError:
            return _error(404, "not-found", f"unknown session {session_id}")
        try:
            fp, _, options = _parse_body_params(await _json_body(request))
            reference = options.get("reference_storey")
            ref_idx = (_resolve_storey(session.model, reference)
                       if reference is not None else None)
        except (ValueError, KeyError) as exc:
            return _error(400, "invalid-params", _exc_message(exc))
        key = ("footprints", fp.digest(), ref_idx)

        def compute():
            table = overlap_table(session.model, fp, ref_idx)
            return _canonical({
                "model": session.model.name,
                "params": fp.to_dict(),
                "storeys": [
                    {"name": table.storey_names[i],
                     "elevation_m": round(table.elevations[i], 3),
                     "overlap_pct": round(table.overlaps[i], 1),
                     "area_m2": round(sum(p.area
                                          for p in table.polygons[i]), 2),
                     "polygons": [p.to_coords()
                                  for p in table.polygons[i]]}
                    for i in range(len(table.storey_names))
                ],
                "reference_storey":
                    table.storey_names[table.reference],
            })

        try:
            status, payload = _compute(session, key, compute)
        except BimcheckError as exc:
            return _error(422, exc.code, str(exc))
        return _respond(session, status, payload, session_id)

    @app.post("/models/{session_id}/overlaps")
    async def post_overlaps(session_id: str, request: Request):
        try:
            session = _session(session_id)
        except KeyError:
            return _error(404, "not-found", f"unknown session {session_id}")
        try:
            fp, _, options = _parse_body_params(await _json_body(request))
            reference = options.get("reference_storey")
            ref_idx = (_resolve_storey(session.model, reference)
                       if reference is not None
                       else session.model.ground_storey)
        except (ValueError, KeyError) as exc:
            return _error(400, "invalid-params", _exc_message(exc))
        key = ("overlaps", fp.digest(), ref_idx)

        def compute():
            table = overlap_table(session.model, fp, ref_idx)
            return _canonical({
                "model": session.model.name,
                "params": fp.to_dict(),
                "reference_storey": table.storey_names[table.reference],
                "rows": [list(r) for r in table.rows()],
            })

        try:
            status, payload = _compute(session, key, compute)
        except BimcheckError as exc:
            return _error(422, exc.code, str(exc))
        return _respond(session, status, payload, session_id)

    @app.post("/models/{session_id}/overhang")
    async def post_overhang(session_id: str, request: Request):
        try:
            session = _session(session_id)
        except KeyError:
            return _error(404, "not-found", f"unknown session {session_id}")
        try:
            body = await _json_body(request) or {}
        except ValueError as exc:
            return _error(400, "invalid-params", str(exc))
        if not isinstance(body, dict) or not body.get("lines"):
            return _error(400, "invalid-params",
                          "body must carry a non-empty 'lines' array")
        try:
            lines = [_build_line(raw) for raw in body["lines"]]
        except (ValueError, KeyError, TypeError) as exc:
            return _error(400, "invalid-params", _exc_message(exc))
        targets = body.get("target_storeys")
        try:
            target_idx = ([_resolve_storey(session.model, t)
                           for t in targets]
                          if targets is not None else None)
        except KeyError as exc:
            return _error(400, "invalid-params", _exc_message(exc))
        key = ("overhang", _canonical(body))

        def compute():
            distances = overhang_distances(session.model, lines, target_idx)
            entry = check_overhang(distances, lines)
            return _canonical(entry)

        try:
            status, payload = _compute(session, key, compute)
        except BimcheckError as exc:
            return _error(422, exc.code, str(exc))
        return _respond(session, status, payload, session_id)

    @app.post("/models/{session_id}/checks")
    async def post_checks(session_id: str, request: Request):
        try:
            session = _session(session_id)
        except KeyError:
            return _error(404, "not-found", f"unknown session {session_id}")
        try:
            body = await _json_body(request)
            fp, reg, options = _parse_body_params(body)
        except ValueError as exc:
            return _error(400, "invalid-params", str(exc))
        key = ("checks", _canonical(body or {}))

        def compute():
            report = run_checks(session.model, reg, fp,
                                reference_storey=
                                options.get("reference_storey"))
            return report_serialize(report, "json")

        try:
            status, payload = _compute(session, key, compute)
        except BimcheckError as exc:
            return _error(422, exc.code, str(exc))
        return _respond(session, status, payload, session_id)

    @app.get("/models/{session_id}/jobs/{job_id}")
    def poll_job(session_id: str, job_id: str):
        try:
            session = _session(session_id)
        except KeyError:
            return _error(404, "not-found", f"unknown session {session_id}")
        future = session.jobs.get(job_id)
        if future is None:
            return _error(404, "not-found", f"unknown job {job_id}")
        if not future.done():
            return JSONResponse(status_code=202,
                                content={"status": "running"})
        session.jobs.pop(job_id, None)
        try:
            payload = future.result()
        except BimcheckError as exc:
            return _error(422, exc.code, str(exc))
        return Response(content=payload, media_type="application/json")

    @app.get("/models/{session_id}/export/wkt")
    def export_wkt(session_id: str, frame: str = "model-local",
                   cut_offset: float | None = None):
        try:
            session = _session(session_id)
        except KeyError:
            return _error(404, "not-found", f"unknown session {session_id}")
        try:
            fp = FootprintParams() if cut_offset is None \
                else FootprintParams(cut_offset=cut_offset)
        except ValueError as exc:
            return _error(400, "invalid-params", str(exc))
        if frame not in ("model-local", "site-projected"):
            return _error(400, "invalid-params", f"unknown frame {frame!r}")
        key = ("wkt", fp.digest(), frame)
        model = session.model

        def compute():
            table = overlap_table(model, fp)
            top = None
            if model.meshes:
                top = max(float(m.vertices[:, 2].max())
                          for m in model.meshes.values()
                          if len(m.vertices))
            records = to_wkt(table, model.georef, frame, building_top=top)
            return wkt_csv(records)

        try:
            status, payload = _compute(session, key, compute)
        except BimcheckError as exc:
            return _error(422, exc.code, str(exc))
        if status == "done":
            return Response(content=payload, media_type="text/csv")
        return JSONResponse(status_code=202, content={
            "status": "accepted", "job": payload,
            "poll": f"/models/{session_id}/jobs/{payload}"})

    @app.delete("/models/{session_id}")
    def delete_model(session_id: str):
        if sessions.pop(session_id, None) is None:
            return _error(404, "not-found", f"unknown session {session_id}")
        return Response(status_code=204)

    async def _json_body(request: Request):
        raw = await request.body()
        if not raw:
            return {}
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValueError(f"invalid JSON body: {exc}") from exc

    return app
