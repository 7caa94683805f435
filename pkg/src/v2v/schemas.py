"""Request/response models for the HTTP API."""

from __future__ import annotations

import datetime as dt
from typing import Optional

from pydantic import BaseModel, Field

from .geo import CategoryCircle, MapCluster
from .model import OutputKind, UncitedRationale
from .query import TopicDistribution


class Problem(BaseModel):
    """Machine-readable error document."""

    code: str
    message: str
    status: int
    detail: list[str] = Field(default_factory=list)


class RefChip(BaseModel):
    id: str
    name: str


class EventChip(BaseModel):
    id: str
    name: str
    kind: str = ""
    description: str = ""


class TopicChip(BaseModel):
    id: str
    name: str
    color_index: Optional[int] = None
    description: str = ""


class OutputRef(BaseModel):
    id: str
    kind: OutputKind
    title: str


class PhaseView(BaseModel):
    id: str
    name: str
    start_date: dt.date
    end_date: Optional[dt.date] = None
    status: str
    description: str = ""


class PhaseEvents(BaseModel):
    phase_id: str
    phase_name: str
    events: list[EventChip] = Field(default_factory=list)


class ProjectView(BaseModel):
    id: str
    name: str
    description: str = ""
    goals_overview: str = ""
    phases: list[PhaseView] = Field(default_factory=list)
    events_by_phase: list[PhaseEvents] = Field(default_factory=list)


class VoiceCard(BaseModel):
    id: str
    text: str
    event: Optional[EventChip] = None
    phase: Optional[RefChip] = None
    topics: list[TopicChip] = Field(default_factory=list)
    cited: bool
    cited_outputs: list[OutputRef] = Field(default_factory=list)
    uncited_rationale: Optional[UncitedRationale] = None
    uncited_note: Optional[str] = None
    sub_geography: Optional[RefChip] = None
    location_text: Optional[str] = None
    coordinates: Optional[dict[str, float]] = None
    audio_ref: Optional[str] = None
    collected_at: dt.datetime
    revision: int


class VoicePage(BaseModel):
    items: list[VoiceCard]
    total: int
    offset: int
    limit: int


class OutputCard(BaseModel):
    id: str
    kind: OutputKind
    title: str
    description: str = ""
    voice_summary: str = ""
    cited_voice_count: int
    topic_distribution: TopicDistribution
    sparked_by: list[OutputRef] = Field(default_factory=list)
    next_steps: list[OutputRef] = Field(default_factory=list)
    phase_id: str = ""
    revision: int


class FacetOptions(BaseModel):
    """Everything the filter sidebar needs in one call."""

    events: list[EventChip]
    topics: list[TopicChip]
    sub_geographies: list[RefChip]
    outputs: list[OutputRef]


class ClusterResponse(BaseModel):
    zoom: int
    total_points: int
    clusters: list[MapCluster]


class LayoutResponse(BaseModel):
    scheme: str
    circles: list[CategoryCircle]


class PatchVoiceRequest(BaseModel):
    topic_ids: Optional[list[str]] = None
    output_ids: Optional[list[str]] = None
    uncited_rationale: Optional[UncitedRationale] = None
    uncited_note: Optional[str] = None


class PatchOutputRequest(BaseModel):
    kind: Optional[OutputKind] = None
    title: Optional[str] = None
    description: Optional[str] = None
    voice_summary: Optional[str] = None
    phase_id: Optional[str] = None
    sparked_by: Optional[list[str]] = None
    next_steps: Optional[list[str]] = None


class CreateOutputRequest(BaseModel):
    id: Optional[str] = None
    kind: OutputKind
    title: str
    description: str = ""
    voice_summary: str = ""
    phase_id: str = ""
    sparked_by: list[str] = Field(default_factory=list)
    next_steps: list[str] = Field(default_factory=list)


class IngestResponse(BaseModel):
    accepted: int
    rejected: list[str] = Field(default_factory=list)


class ImportResponse(BaseModel):
    mode: str
    counts: dict[str, int]
    total: int
    warnings: list[str] = Field(default_factory=list)


class FeedbackResponse(BaseModel):
    id: str


class HealthResponse(BaseModel):
    status: str = "ok"
    dataset_loaded: bool = False


class ValidationIssueOut(BaseModel):
    code: str
    collection: str
    id: str
    message: str


class ValidationResponse(BaseModel):
    ok: bool
    errors: list[ValidationIssueOut] = Field(default_factory=list)
    warnings: list[ValidationIssueOut] = Field(default_factory=list)
