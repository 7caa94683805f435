"""HTTP service: community read endpoints, planner edits, layouts, telemetry.

Every GET is open and side-effect-free; routes that mutate the dataset
require the planner bearer token (AUTH_PLANNER_TOKEN). Telemetry and
feedback POSTs stay open by design: they are append-only submissions from
anonymous community browsers, not dataset mutations.
"""

from __future__ import annotations

import datetime as dt
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import analytics, geo, query, schemas
from .analytics import AnalyticsLog
from .model import (
    Corpus,
    NotFoundError,
    OutputKind,
    Voice,
    citation_index,
)
from .query import SortOrder, VoiceFilter
from .service import CorpusValidationError, DatasetService
from .store import BundleError, DocumentStore, RevisionConflict, dump_bundle, parse_bundle
from .geo import BoundingBox, GeocodingService, LayoutScheme, geocoder_from_env

DEFAULT_PAGE_LIMIT = 25
MAX_PAGE_LIMIT = 200


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: Optional[list[str]] = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail or []


@dataclass
class Principal:
    role: str
    token: Optional[str] = None


def _problem(status: int, code: str, message: str, detail: Optional[list[str]] = None) -> JSONResponse:
    body = schemas.Problem(code=code, message=message, status=status, detail=detail or [])
    return JSONResponse(status_code=status, content=body.model_dump())


def create_app(
    data_dir: Optional[Path] = None,
    planner_token: Optional[str] = None,
    geocoder: Optional[GeocodingService] = None,
    frontend_dir: Optional[Path] = None,
) -> FastAPI:
    """Build the service around a data directory (None = in-memory)."""
    env = os.environ
    if data_dir is None and env.get("DATA_DIR"):
        data_dir = Path(env["DATA_DIR"])
    if planner_token is None:
        planner_token = env.get("AUTH_PLANNER_TOKEN", "")

    store = DocumentStore(data_dir)
    service = DatasetService(store)
    log = AnalyticsLog(data_dir / "analytics" / "records.ndjson" if data_dir else None)
    if geocoder is None:
        geocoder = geocoder_from_env(env, store=store)

    app = FastAPI(title="voice-to-vision", docs_url="/api/docs", openapi_url="/api/openapi.json")
    app.state.service = service
    app.state.log = log
    app.state.geocoder = geocoder
    app.state.planner_token = planner_token

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    # -- error mapping ---------------------------------------------------

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return _problem(exc.status, exc.code, exc.message, exc.detail)

    @app.exception_handler(RequestValidationError)
    async def _request_validation(request: Request, exc: RequestValidationError):
        detail = []
        in_body = False
        for err in exc.errors():
            loc = err.get("loc", ())
            if loc and loc[0] == "body":
                in_body = True
            detail.append(".".join(str(p) for p in loc) + ": " + err.get("msg", ""))
        status = 422 if in_body else 400
        code = "invalid_body" if in_body else "bad_request"
        return _problem(status, code, "request validation failed", detail)

    @app.exception_handler(RevisionConflict)
    async def _conflict(request: Request, exc: RevisionConflict):
        return _problem(409, "revision_conflict", str(exc))

    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError):
        return _problem(404, "not_found", str(exc.args[0]) if exc.args else "not found")

    @app.exception_handler(CorpusValidationError)
    async def _invalid(request: Request, exc: CorpusValidationError):
        detail = [f"{e.code}: {e.message}" for e in exc.report.errors]
        return _problem(422, "validation_failed", "edit would break corpus invariants", detail)

    @app.exception_handler(BundleError)
    async def _bundle_error(request: Request, exc: BundleError):
        return _problem(400, "bad_bundle", str(exc), exc.details)

    # -- auth --------------------------------------------------------------

    def require_planner(authorization: Optional[str] = Header(default=None)) -> Principal:
        if not authorization:
            raise ApiError(401, "unauthorized", "planner token required")
        scheme, _, token = authorization.partition(" ")
        if scheme.lower() != "bearer" or not token:
            raise ApiError(401, "unauthorized", "expected a bearer token")
        if not app.state.planner_token or token != app.state.planner_token:
            raise ApiError(403, "forbidden", "invalid planner token")
        return Principal(role="planner", token=token)

    # -- shared lookups ----------------------------------------------------

    def corpus_or_503() -> Corpus:
        if not service.dataset_loaded():
            raise ApiError(503, "no_dataset", "no dataset imported yet")
        return service.corpus()

    def voice_card(corpus: Corpus, voice: Voice, revision: int) -> schemas.VoiceCard:
        event = corpus.events.get(voice.event_id)
        phases = corpus.phases()
        phase = phases.get(voice.phase_id)
        geo_ref = corpus.sub_geographies.get(voice.sub_geography_id) if voice.sub_geography_id else None
        cited_outputs = [
            schemas.OutputRef(id=o.id, kind=o.kind, title=o.title)
            for oid in voice.output_ids
            if (o := corpus.outputs.get(oid)) is not None
        ]
        return schemas.VoiceCard(
            id=voice.id,
            text=voice.text,
            event=schemas.EventChip(id=event.id, name=event.name, kind=event.kind) if event else None,
            phase=schemas.RefChip(id=phase.id, name=phase.name) if phase else None,
            topics=[
                schemas.TopicChip(id=t.id, name=t.name, color_index=t.color_index)
                for tid in voice.topic_ids
                if (t := corpus.topics.get(tid)) is not None
            ],
            cited=voice.cited,
            cited_outputs=cited_outputs,
            uncited_rationale=voice.uncited_rationale,
            uncited_note=voice.uncited_note,
            sub_geography=schemas.RefChip(id=geo_ref.id, name=geo_ref.name) if geo_ref else None,
            location_text=voice.location_text,
            coordinates={"lat": voice.coordinates.lat, "lon": voice.coordinates.lon}
            if voice.coordinates
            else None,
            audio_ref=voice.audio_ref,
            collected_at=voice.collected_at,
            revision=revision,
        )

    def output_card(corpus: Corpus, output_id: str, cited_counts: dict[str, set[str]], revision: int) -> schemas.OutputCard:
        output = corpus.outputs[output_id]

        def refs(ids: list[str]) -> list[schemas.OutputRef]:
            return [
                schemas.OutputRef(id=o.id, kind=o.kind, title=o.title)
                for oid in ids
                if (o := corpus.outputs.get(oid)) is not None
            ]

        return schemas.OutputCard(
            id=output.id,
            kind=output.kind,
            title=output.title,
            description=output.description,
            voice_summary=output.voice_summary,
            cited_voice_count=len(cited_counts.get(output.id, ())),
            topic_distribution=query.topic_distribution(corpus, output.id),
            sparked_by=refs(output.sparked_by),
            next_steps=refs(output.next_steps),
            phase_id=output.phase_id,
            revision=revision,
        )

    def parse_voice_filter(
        event_id: list[str],
        sub_geography_id: list[str],
        topic_id: list[str],
        output_id: list[str],
        cited: Optional[bool],
        search: Optional[str],
    ) -> VoiceFilter:
        return VoiceFilter(
            event_ids=set(event_id),
            sub_geography_ids=set(sub_geography_id),
            topic_ids=set(topic_id),
            output_ids=set(output_id),
            cited=cited,
            query_text=search,
        )

    def expected_revision(if_match: Optional[str]) -> int:
        if if_match is None:
            raise ApiError(400, "missing_revision", "If-Match header with the expected revision is required")
        try:
            return int(if_match.strip().strip('"'))
        except ValueError:
            raise ApiError(400, "bad_revision", f"If-Match must be an integer revision, got {if_match!r}")

    # -- read endpoints ------------------------------------------------------

    @app.get("/healthz", response_model=schemas.HealthResponse)
    def healthz():
        return schemas.HealthResponse(status="ok", dataset_loaded=service.dataset_loaded())

    @app.get("/api/project", response_model=schemas.ProjectView)
    def get_project():
        corpus = corpus_or_503()
        project = corpus.project
        assert project is not None
        groups = []
        for phase in project.phases:
            events = [
                schemas.EventChip(id=e.id, name=e.name, kind=e.kind)
                for e in corpus.events.values()
                if e.phase_id == phase.id
            ]
            groups.append(
                schemas.PhaseEvents(phase_id=phase.id, phase_name=phase.name, events=events)
            )
        return schemas.ProjectView(
            id=project.id,
            name=project.name,
            description=project.description,
            goals_overview=project.goals_overview,
            phases=[
                schemas.PhaseView(
                    id=p.id,
                    name=p.name,
                    start_date=p.start_date,
                    end_date=p.end_date,
                    status=p.status.value,
                    description=p.description,
                )
                for p in project.phases
            ],
            events_by_phase=groups,
        )

    @app.get("/api/facets", response_model=schemas.FacetOptions)
    def get_facets():
        corpus = corpus_or_503()
        return schemas.FacetOptions(
            events=[
                schemas.EventChip(id=e.id, name=e.name, kind=e.kind, description=e.description)
                for e in corpus.events.values()
            ],
            topics=[
                schemas.TopicChip(
                    id=t.id, name=t.name, color_index=t.color_index, description=t.description
                )
                for t in corpus.topics.values()
            ],
            sub_geographies=[
                schemas.RefChip(id=g.id, name=g.name) for g in corpus.sub_geographies.values()
            ],
            outputs=[
                schemas.OutputRef(id=o.id, kind=o.kind, title=o.title)
                for o in corpus.outputs.values()
            ],
        )

    @app.get("/api/voices", response_model=schemas.VoicePage)
    def list_voices(
        event_id: list[str] = Query(default=[]),
        sub_geography_id: list[str] = Query(default=[]),
        topic_id: list[str] = Query(default=[]),
        output_id: list[str] = Query(default=[]),
        cited: Optional[bool] = Query(default=None),
        search: Optional[str] = Query(default=None),
        sort: SortOrder = Query(default=SortOrder.PHASE_CHRONOLOGICAL),
        offset: int = Query(default=0, ge=0),
        limit: int = Query(default=DEFAULT_PAGE_LIMIT, ge=1, le=MAX_PAGE_LIMIT),
    ):
        corpus = corpus_or_503()
        flt = parse_voice_filter(event_id, sub_geography_id, topic_id, output_id, cited, search)
        voices, total = query.filter_voices(corpus, flt, sort=sort, offset=offset, limit=limit)
        revisions = service.revisions("voices")
        return schemas.VoicePage(
            items=[voice_card(corpus, v, revisions.get(v.id, 0)) for v in voices],
            total=total,
            offset=offset,
            limit=limit,
        )

    @app.get("/api/voices/{voice_id}", response_model=schemas.VoiceCard)
    def get_voice(voice_id: str):
        corpus = corpus_or_503()
        voice = corpus.voices.get(voice_id)
        if voice is None:
            raise ApiError(404, "not_found", f"voice {voice_id!r} does not exist")
        envelope = store.get("voices", voice_id)
        return voice_card(corpus, voice, envelope.revision if envelope else 0)

    @app.get("/api/outputs", response_model=list[schemas.OutputCard])
    def list_outputs(
        kind: Optional[OutputKind] = Query(default=None),
        goal_id: Optional[str] = Query(default=None),
    ):
        corpus = corpus_or_503()
        index = citation_index(corpus)
        revisions = service.revisions("outputs")
        if goal_id is not None:
            try:
                pool = query.strategies_for_goal(corpus, goal_id)
            except ValueError as exc:
                raise ApiError(400, "wrong_kind", str(exc))
        else:
            pool = sorted(corpus.outputs.values(), key=lambda o: (o.kind.value, o.title, o.id))
        if kind is not None:
            pool = [o for o in pool if o.kind is kind]
        return [output_card(corpus, o.id, index, revisions.get(o.id, 0)) for o in pool]

    @app.get("/api/outputs/{output_id}", response_model=schemas.OutputCard)
    def get_output(output_id: str):
        corpus = corpus_or_503()
        if output_id not in corpus.outputs:
            raise ApiError(404, "not_found", f"output {output_id!r} does not exist")
        envelope = store.get("outputs", output_id)
        return output_card(corpus, output_id, citation_index(corpus), envelope.revision if envelope else 0)

    @app.get("/api/map/clusters", response_model=schemas.ClusterResponse)
    def map_clusters(
        zoom: int = Query(...),
        bbox: Optional[str] = Query(default=None),
        event_id: list[str] = Query(default=[]),
        sub_geography_id: list[str] = Query(default=[]),
        topic_id: list[str] = Query(default=[]),
        output_id: list[str] = Query(default=[]),
        cited: Optional[bool] = Query(default=None),
        search: Optional[str] = Query(default=None),
    ):
        corpus = corpus_or_503()
        viewport = None
        if bbox is not None:
            parts = bbox.split(",")
            if len(parts) != 4:
                raise ApiError(400, "bad_bbox", "bbox must be west,south,east,north")
            try:
                viewport = BoundingBox(*(float(p) for p in parts))
                viewport.validate()
            except ValueError as exc:
                raise ApiError(400, "bad_bbox", str(exc))
        flt = parse_voice_filter(event_id, sub_geography_id, topic_id, output_id, cited, search)
        voices, _ = query.filter_voices(corpus, flt, limit=None)
        points = geo.corpus_map_points(corpus, voices)
        colors = {
            t.id: t.color_index for t in corpus.topics.values() if t.color_index is not None
        }
        try:
            clusters = geo.cluster_map_points(points, zoom, viewport, colors)
        except ValueError as exc:
            raise ApiError(400, "bad_request", str(exc))
        return schemas.ClusterResponse(zoom=zoom, total_points=len(points), clusters=clusters)

    @app.get("/api/cluster-layout", response_model=schemas.LayoutResponse)
    def layout(scheme: LayoutScheme = Query(...)):
        corpus = corpus_or_503()
        circles = geo.cluster_layout(corpus, scheme)
        return schemas.LayoutResponse(scheme=scheme.value, circles=circles)

    # -- planner edits -------------------------------------------------------

    @app.patch("/api/voices/{voice_id}", response_model=schemas.VoiceCard)
    def patch_voice(
        voice_id: str,
        body: schemas.PatchVoiceRequest,
        principal: Principal = Depends(require_planner),
        if_match: Optional[str] = Header(default=None),
    ):
        revision = expected_revision(if_match)
        changes = body.model_dump(exclude_unset=True)
        envelope, _ = service.patch_voice(voice_id, changes, revision)
        corpus = service.corpus()
        return voice_card(corpus, corpus.voices[voice_id], envelope.revision)

    @app.patch("/api/outputs/{output_id}", response_model=schemas.OutputCard)
    def patch_output(
        output_id: str,
        body: schemas.PatchOutputRequest,
        principal: Principal = Depends(require_planner),
        if_match: Optional[str] = Header(default=None),
    ):
        revision = expected_revision(if_match)
        changes = body.model_dump(exclude_unset=True)
        envelope, _ = service.patch_output(output_id, changes, revision)
        corpus = service.corpus()
        return output_card(corpus, output_id, citation_index(corpus), envelope.revision)

    @app.post("/api/outputs", response_model=schemas.OutputCard, status_code=201)
    def create_output(
        body: schemas.CreateOutputRequest,
        principal: Principal = Depends(require_planner),
    ):
        fields = body.model_dump(exclude_unset=True)
        output_id = fields.pop("id", None)
        try:
            envelope, created = service.create_output(fields, output_id)
        except ValueError as exc:
            raise ApiError(409, "already_exists", str(exc))
        corpus = service.corpus()
        return output_card(corpus, created.id, citation_index(corpus), envelope.revision)

    # -- bulk data -------------------------------------------------------------

    @app.post("/api/admin/import", response_model=schemas.ImportResponse)
    async def admin_import(
        request: Request,
        mode: str = Query(default="replace"),
        principal: Principal = Depends(require_planner),
    ):
        if mode not in ("replace", "merge"):
            raise ApiError(400, "bad_request", f"mode must be replace or merge, got {mode!r}")
        raw = await request.body()
        bundle = parse_bundle(raw.decode("utf-8"))
        report = service.import_bundle(bundle, mode=mode, geocoder=app.state.geocoder)
        return schemas.ImportResponse(
            mode=report.mode, counts=report.counts, total=report.total, warnings=report.warnings
        )

    @app.get("/api/admin/export")
    def admin_export():
        if not service.dataset_loaded():
            raise ApiError(503, "no_dataset", "no dataset imported yet")
        return Response(content=dump_bundle(service.export_bundle()), media_type="application/json")

    # -- telemetry ---------------------------------------------------------------

    @app.post("/api/analytics/events", response_model=schemas.IngestResponse)
    async def ingest_events(request: Request):
        text = (await request.body()).decode("utf-8")
        report = log.ingest_ndjson(text, record_type="event")
        return schemas.IngestResponse(accepted=report.accepted, rejected=report.rejected)

    @app.post("/api/analytics/heartbeats", response_model=schemas.IngestResponse)
    async def ingest_heartbeats(request: Request):
        text = (await request.body()).decode("utf-8")
        report = log.ingest_ndjson(text, record_type="heartbeat")
        return schemas.IngestResponse(accepted=report.accepted, rejected=report.rejected)

    @app.get("/api/analytics/report", response_model=analytics.UsageReport)
    def analytics_report(
        principal: Principal = Depends(require_planner),
        date_from: Optional[str] = Query(default=None, alias="from"),
        date_to: Optional[str] = Query(default=None, alias="to"),
        outlier_filter: bool = Query(default=True),
    ):
        start = _parse_range_bound(date_from, end=False)
        end = _parse_range_bound(date_to, end=True)
        records = log.records_between(start, end)
        corpus = service.corpus() if service.dataset_loaded() else None
        return analytics.usage_report(
            records, corpus=corpus, top_fraction=0.05 if outlier_filter else None
        )

    @app.post("/api/feedback", response_model=schemas.FeedbackResponse, status_code=201)
    async def submit_feedback(request: Request):
        payload = await request.json()
        if not isinstance(payload, dict):
            raise ApiError(400, "bad_request", "feedback body must be a JSON object")
        feedback_id = service.add_feedback(payload)
        return schemas.FeedbackResponse(id=feedback_id)

    # -- static assets -----------------------------------------------------------

    if data_dir is not None and (data_dir / "media").is_dir():
        app.mount("/media", StaticFiles(directory=data_dir / "media"), name="media")
    if frontend_dir is None and env.get("FRONTEND_DIST"):
        frontend_dir = Path(env["FRONTEND_DIST"])
    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="frontend")

    return app


def _parse_range_bound(value: Optional[str], end: bool) -> Optional[dt.datetime]:
    """Dates widen to whole days: `from` means midnight, `to` the next midnight."""
    if value is None:
        return None
    try:
        if len(value) == 10:
            day = dt.date.fromisoformat(value)
            stamp = dt.datetime.combine(day, dt.time.min, tzinfo=dt.timezone.utc)
            return stamp + dt.timedelta(days=1) if end else stamp
        stamp = dt.datetime.fromisoformat(value)
        if stamp.tzinfo is None:
            stamp = stamp.replace(tzinfo=dt.timezone.utc)
        return stamp
    except ValueError:
        raise ApiError(400, "bad_request", f"invalid date {value!r}; use YYYY-MM-DD or ISO-8601")
