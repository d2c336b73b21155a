"""HTTP annotation service: project management, task queues, pass capture, reports.

All report and export endpoints return bytes produced by the same library
functions the offline CLI uses, so a service report is byte-identical to the
offline pipeline run on the exported files. Errors use a JSON envelope
{code, message, details}; 4xx for validation, 409 for state conflicts.
"""

import os
from typing import Optional

from fastapi import Body, FastAPI, Request, Response
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .agreement import agreement_report_bytes, agreement_report_obj
from .analytics import stats_report_bytes
from .ingestion import Corpus, pass_from_obj, pass_to_obj, segment_from_obj, segment_to_obj
from .model import EmotionLabel
from .render import json_bytes
from .sampling import AgreementPlan, SamplePlan
from .scoring import scores_report_bytes
from .store import (
    Annotator,
    ConflictError,
    IncompleteProjectError,
    NotFoundError,
    ProjectStore,
    StoreError,
)

DEFAULT_ADDR = "127.0.0.1:8765"
ENV_ADDR = "EMOTEVAL_ADDR"
ENV_DATA = "EMOTEVAL_DATA"
ENV_TOKEN = "EMOTEVAL_TOKEN"
ENV_ROUND2_DELAY = "EMOTEVAL_ROUND2_DELAY"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details=None):
        self.status = status
        self.code = code
        self.message = message
        self.details = details if details is not None else {}
        super().__init__(message)


def _bad_request(message, details=None):
    return ApiError(422, "validation", message, details)


def _parse_plan_fields(obj: dict, what: str, fields: dict) -> dict:
    if not isinstance(obj, dict):
        raise _bad_request(f"{what} must be an object")
    unknown = [k for k in obj if k not in fields]
    if unknown:
        raise _bad_request(f"{what}: unknown field(s) {', '.join(sorted(unknown))}")
    return obj


def create_app(data_dir, token: Optional[str] = None, round2_delay: float = 0.0) -> FastAPI:
    store = ProjectStore(data_dir)
    app = FastAPI(title="emoteval annotation service", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "details": exc.details},
        )

    @app.exception_handler(RequestValidationError)
    async def handle_request_validation(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"code": "validation", "message": "malformed request",
                     "details": {"errors": jsonable_encoder(exc.errors())}},
        )

    def _authorize(request: Request):
        if token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise ApiError(401, "unauthorized", "missing or invalid bearer token")

    def _project(project_id: str):
        try:
            return store.get(project_id)
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc)) from exc

    def _json(data: bytes) -> Response:
        return Response(content=data, media_type="application/json")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/projects", status_code=201)
    def create_project(request: Request, payload: dict = Body(...)):
        """Create a project: ingest corpus, run filter/sample/carve, build queues."""
        _authorize(request)
        known = ("name", "provenance", "corpus", "sample_plan", "agreement_plan", "roster")
        unknown = [k for k in payload if k not in known]
        if unknown:
            raise _bad_request(f"unknown field(s): {', '.join(sorted(unknown))}")
        for required in ("corpus", "sample_plan", "agreement_plan", "roster"):
            if required not in payload:
                raise _bad_request(f"missing field {required!r}")
        corpus_raw = payload["corpus"]
        if not isinstance(corpus_raw, list) or not corpus_raw:
            raise _bad_request("corpus must be a non-empty array of segments")
        try:
            segments = [segment_from_obj(obj) for obj in corpus_raw]
            corpus = Corpus(
                name=str(payload.get("name", "corpus")),
                segments=tuple(segments),
                provenance=str(payload.get("provenance", "")),
            )
        except ValueError as exc:
            raise _bad_request(f"corpus: {exc}") from exc

        sp = _parse_plan_fields(payload["sample_plan"], "sample_plan",
                                {"seed": 1, "fraction": 1, "exclude": 1})
        ap = _parse_plan_fields(payload["agreement_plan"], "agreement_plan",
                                {"seed": 1, "inter_fraction": 1, "intra_count": 1})
        try:
            sample_plan = SamplePlan(
                seed=sp.get("seed", 0),
                fraction=_fraction_field(sp, "fraction", required=True),
                exclude_labels=frozenset(
                    EmotionLabel.parse(l) for l in sp.get("exclude", [])),
            )
            agreement_plan = AgreementPlan(
                seed=ap.get("seed", 0),
                inter_fraction=_fraction_field(ap, "inter_fraction", default="0.1"),
                intra_count=ap.get("intra_count", 100),
            )
        except (ValueError, TypeError) as exc:
            raise _bad_request(str(exc)) from exc

        roster_raw = payload["roster"]
        if not isinstance(roster_raw, list):
            raise _bad_request("roster must be an array")
        roster = []
        for entry in roster_raw:
            if not isinstance(entry, dict) or not isinstance(entry.get("id"), str):
                raise _bad_request("roster entries must be objects with a string id")
            roster.append(Annotator(id=entry["id"], name=str(entry.get("name", ""))))

        try:
            state = store.create_project(
                name=corpus.name, corpus=corpus, sample_plan=sample_plan,
                agreement_plan=agreement_plan, roster=roster, provenance=corpus.provenance)
        except StoreError as exc:
            raise _bad_request(str(exc)) from exc
        except ValueError as exc:
            raise _bad_request(str(exc)) from exc
        return state.describe()

    @app.get("/projects/{project_id}")
    def get_project(project_id: str, request: Request):
        _authorize(request)
        return _project(project_id).describe()

    @app.get("/projects/{project_id}/queue/{annotator_id}/{round}/next")
    def next_task(project_id: str, annotator_id: str, round: int, request: Request):
        """First pending segment in the queue; a read, never a claim."""
        _authorize(request)
        state = _project(project_id)
        try:
            sid, progress = state.queue_progress(annotator_id, round, round2_delay)
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc)) from exc
        segment = None if sid is None else segment_to_obj(state.eval_corpus.segment(sid))
        return {"segment": segment, "progress": progress}

    @app.post("/projects/{project_id}/queue/{annotator_id}/{round}/skip")
    def skip_segment(project_id: str, annotator_id: str, round: int, request: Request,
                     payload: dict = Body(...)):
        _authorize(request)
        state = _project(project_id)
        sid = payload.get("segment_id")
        if not isinstance(sid, str):
            raise _bad_request("body must carry a string segment_id")
        try:
            state.skip_segment(annotator_id, round, sid)
        except ConflictError as exc:
            raise ApiError(409, "conflict", str(exc)) from exc
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc)) from exc
        _, progress = state.queue_progress(annotator_id, round, round2_delay)
        return {"skipped": sid, "progress": progress}

    @app.post("/projects/{project_id}/segments/{segment_id}/passes", status_code=201)
    def submit_pass(project_id: str, segment_id: str, request: Request,
                    payload: dict = Body(...), expected_revision: Optional[int] = None):
        """Persist a completed pass durably; resubmission replaces (audit retained)."""
        _authorize(request)
        state = _project(project_id)
        try:
            pass_ = pass_from_obj(payload, corpus=state.eval_corpus)
        except ValueError as exc:
            raise _bad_request(str(exc)) from exc
        if pass_.segment_id != segment_id:
            raise _bad_request(
                f"path segment {segment_id!r} does not match body segment_id {pass_.segment_id!r}")
        try:
            revision = state.submit_pass(pass_, expected_revision=expected_revision)
        except ConflictError as exc:
            raise ApiError(409, "conflict", str(exc)) from exc
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc)) from exc
        except StoreError as exc:
            raise _bad_request(str(exc)) from exc
        _, progress = state.queue_progress(pass_.annotator_id, pass_.round, round2_delay)
        return {"stored": True, "revision": revision, "progress": progress}

    @app.get("/projects/{project_id}/passes/{annotator_id}/{round}/{segment_id}")
    def get_pass(project_id: str, annotator_id: str, round: int, segment_id: str,
                 request: Request):
        """Fetch one annotator's own stored pass, with server-extracted span texts."""
        _authorize(request)
        state = _project(project_id)
        try:
            pass_, revision = state.get_pass(annotator_id, round, segment_id)
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc)) from exc
        segment = state.eval_corpus.segment(segment_id)
        span_texts = [[span.extract(segment) for span in error.spans] for error in pass_.errors]
        return {"pass": pass_to_obj(pass_), "revision": revision, "span_texts": span_texts}

    @app.get("/projects/{project_id}/reports/scores")
    def report_scores(project_id: str, request: Request):
        _authorize(request)
        state = _project(project_id)
        try:
            return _json(scores_report_bytes(state.scores_report()))
        except IncompleteProjectError as exc:
            raise ApiError(409, "incomplete", str(exc), {"missing": [list(k) for k in exc.missing]})

    @app.get("/projects/{project_id}/reports/agreement")
    def report_agreement(project_id: str, request: Request, mode: str = "both"):
        _authorize(request)
        state = _project(project_id)
        try:
            if mode in ("inter", "intra"):
                return _json(agreement_report_bytes(state.agreement_report(mode)))
            if mode == "both":
                combined = {
                    "report": "agreement",
                    "inter": agreement_report_obj(state.agreement_report("inter")),
                    "intra": agreement_report_obj(state.agreement_report("intra")),
                }
                return _json(json_bytes(combined))
        except IncompleteProjectError as exc:
            raise ApiError(409, "incomplete", str(exc), {"missing": [list(k) for k in exc.missing]})
        except StoreError as exc:
            raise _bad_request(str(exc)) from exc
        raise _bad_request(f"unknown agreement mode {mode!r}")

    @app.get("/projects/{project_id}/reports/stats")
    def report_stats(project_id: str, request: Request):
        _authorize(request)
        state = _project(project_id)
        try:
            return _json(stats_report_bytes(state.stats_report()))
        except IncompleteProjectError as exc:
            raise ApiError(409, "incomplete", str(exc), {"missing": [list(k) for k in exc.missing]})

    @app.get("/projects/{project_id}/export/corpus")
    def export_corpus_endpoint(project_id: str, request: Request):
        _authorize(request)
        state = _project(project_id)
        return Response(content=state.export_corpus_bytes(), media_type="application/x-ndjson")

    @app.get("/projects/{project_id}/export/annotations")
    def export_annotations_endpoint(project_id: str, request: Request):
        _authorize(request)
        state = _project(project_id)
        return Response(content=state.export_annotations_bytes(), media_type="application/x-ndjson")

    return app


def _fraction_field(obj: dict, key: str, required: bool = False, default=None):
    if key not in obj:
        if required:
            raise ValueError(f"missing field {key!r}")
        return default
    value = obj[key]
    if isinstance(value, (int, float, str)):
        return value
    raise ValueError(f"field {key!r} must be a number or a numeric string")


def parse_addr(addr: str):
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"address must look like host:port, got {addr!r}")
    return host, int(port)


def serve(addr: Optional[str] = None, data_dir: Optional[str] = None,
          token: Optional[str] = None, round2_delay: Optional[float] = None):
    """Run the service with settings from flags, falling back to environment variables."""
    import uvicorn

    addr = addr or os.environ.get(ENV_ADDR, DEFAULT_ADDR)
    data_dir = data_dir or os.environ.get(ENV_DATA, "./emoteval-data")
    token = token if token is not None else os.environ.get(ENV_TOKEN)
    if round2_delay is None:
        round2_delay = float(os.environ.get(ENV_ROUND2_DELAY, "0"))
    if round2_delay == 0:
        import logging
        logging.getLogger(__name__).warning(
            "round-2 delay gate is disabled; repeat annotations can happen immediately")
    host, port = parse_addr(addr)
    app = create_app(data_dir, token=token, round2_delay=round2_delay)
    uvicorn.run(app, host=host, port=port, log_level="warning")
